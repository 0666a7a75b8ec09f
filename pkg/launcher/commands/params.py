from pathlib import Path

import pandas as pd

from heatlab.analytic import OscillationParams, epsilon_threshold, oscillation_bounds
from heatlab.errors import Infeasible, NotSatisfiable
from heatlab.io import write_frame
from launcher.config import prepare
from launcher.exit_codes import exits_with_status


@exits_with_status
def params(config=None, out=None, threads=1, tol=None, **overrides):
    """Derive (ε, δ) and the asymptotic bounds; exit 0 iff the gap is certified

    `threads` and `tol` are accepted with every command; nothing here is solved.
    """
    settings = prepare("params", config, overrides)
    envelope = settings["envelope"]
    alpha, beta = settings["alpha"], settings["beta"]

    try:
        threshold = epsilon_threshold(alpha, beta, envelope)
    except NotSatisfiable:
        threshold = None
    derived = OscillationParams.build(
        alpha, beta, settings["ratio"], envelope, epsilon=settings["epsilon"]
    )
    bounds = oscillation_bounds(derived)

    print(f"{'N':<34}{derived.dimension:>18d}")
    for label, value in (
        ("alpha", derived.alpha),
        ("beta", derived.beta),
        ("R", derived.ratio),
        ("epsilon", derived.epsilon),
        ("epsilon threshold", threshold),
        ("delta", derived.delta),
        ("lambda", envelope.lam),
        ("Lambda", envelope.Lam),
    ):
        text = "n/a" if value is None else f"{value:.10f}"
        print(f"{label:<34}{text:>18}")
    print(bounds.render())

    if out is not None:
        row = pd.concat([pd.DataFrame([derived.as_dict()]), bounds.to_frame()], axis=1)
        write_frame(row, Path(out) / "params.csv")

    if not bounds.gap_certified:
        raise Infeasible("The key inequality fails, so the oscillation gap is not certified")
