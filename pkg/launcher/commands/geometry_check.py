from pathlib import Path

import numpy as np
import pandas as pd

from heatlab.errors import InvalidSpec
from heatlab.geometry import (
    arc_measure,
    is_starshaped,
    sample_disc,
    sandwich_check,
    translate_inclusion_check,
)
from heatlab.io import write_frame
from launcher.config import prepare
from launcher.exit_codes import exits_with_status
from tools.status import status


def _check_cone(cone, apex_dir, sample_count):
    print(f"cone base measure {arc_measure(cone.base):.10f}")
    if apex_dir is None:
        return
    starshaped = is_starshaped(cone.base, apex_dir)
    print(f"starshaped with respect to p = {apex_dir:.6g}: {starshaped}")
    if not starshaped:
        raise InvalidSpec("The cone base is not starshaped with respect to p")
    samples = sample_disc(sample_count, 10.0)
    if not translate_inclusion_check(cone, apex_dir, 1.0, samples):
        raise InvalidSpec("Translating along p leaves the cone")
    print("cone is invariant under translation along p")


@exits_with_status
def geometry_check(config=None, out=None, threads=1, tol=None, **overrides):
    """Validate a phase domain: measures, starshapedness, sandwich condition

    `threads` and `tol` are accepted with every command; nothing here is solved.
    """
    settings = prepare("geometry", config, overrides)
    domain = settings["domain"]
    print(f"domain kind: {domain.kind}")

    if domain.kind == "cone":
        _check_cone(domain.spec, settings["apex_dir"], settings["sample_count"])
    elif domain.kind == "sandwich":
        spec = domain.spec
        with status(f"Checking the sandwich condition on {settings['sample_count']} samples"):
            report = sandwich_check(spec, settings["sample_count"], settings["radius_cap"])
        print(f"checked {report.checked} samples, {len(report.witnesses)} violations")
        if not report.passed:
            if out is not None:
                write_frame(
                    pd.DataFrame(report.witnesses, columns=["x1", "x2"]),
                    Path(out) / "witnesses.csv",
                )
            raise InvalidSpec("The sandwich condition fails")
    elif domain.kind == "oscillatory":
        spec = domain.spec
        print(f"alpha {spec.alpha:.10f}, beta {spec.beta:.10f}")
        print("shell radii " + np.array2string(spec.radii, precision=6))
    else:
        print(f"shape: {domain.spec}")
