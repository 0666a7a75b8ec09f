from pathlib import Path

import pandas as pd

from heatlab.analytic import quadrature_u0_constant_sigma, series_u0_constant_sigma
from heatlab.io import write_frame
from launcher.config import prepare
from launcher.exit_codes import exits_with_status
from tools.status import status


@exits_with_status
def series(config=None, out=None, threads=1, tol=None, **overrides):
    """Exact u(0, t) on a shell domain for constant σ

    `threads` and `tol` are accepted with every command; nothing here is solved.
    """
    settings = prepare("series", config, overrides)
    spec, sigma = settings["domain"].spec, settings["sigma"]

    frame = pd.DataFrame({"t": settings["times"]})
    frame["series"] = [series_u0_constant_sigma(spec, sigma, t) for t in frame["t"]]
    if settings["quadrature"]:
        with status("Cross-checking with 2-D quadrature"):
            frame["quadrature"] = [
                quadrature_u0_constant_sigma(spec, sigma, t) for t in frame["t"]
            ]
        frame["difference"] = (frame["series"] - frame["quadrature"]).abs()

    print(frame.to_string(index=False, float_format=lambda v: f"{v:.12g}"))
    if out is not None:
        write_frame(frame, Path(out) / f"{settings['stem']}.csv")
