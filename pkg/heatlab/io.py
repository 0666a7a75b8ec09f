"""CSV and sidecar outputs"""

__all__ = ["write_timeseries", "write_study", "write_frame"]

import os
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .log import make_log


log = make_log("io")

FLOAT_FORMAT = "%.12g"


def _plain(value):
    """Turn numpy scalars and arrays into plain Python values yaml can dump"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_frame(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_timeseries(series, out_dir, stem: str = "run") -> Path:
    """Write ``<stem>.csv`` (columns t, probe_0, ...) and ``<stem>.meta.yaml``"""
    out_dir = Path(out_dir)
    path = write_frame(series.to_frame(), out_dir / f"{stem}.csv")
    meta = dict(series.metadata)
    meta["probes"] = series.probes
    with open(out_dir / f"{stem}.meta.yaml", "w") as f:
        yaml.safe_dump(_plain(meta), f, sort_keys=True)
    log(f"Wrote {path}")
    return path


def write_study(report, out_dir) -> Path:
    """Trajectory CSV, text report and one appended row in ``summary.csv``"""
    out_dir = Path(out_dir)
    path = write_frame(report.to_frame(), out_dir / f"{report.name}.csv")
    with open(out_dir / f"{report.name}.txt", "w") as f:
        f.write(report.render() + "\n")

    summary = out_dir / "summary.csv"
    row = pd.DataFrame([report.summary()])
    row.to_csv(
        summary,
        mode="a",
        header=not os.path.exists(summary),
        index=False,
        lineterminator="\n",
    )
    log(f"Wrote {path} and appended to {summary}")
    return path
