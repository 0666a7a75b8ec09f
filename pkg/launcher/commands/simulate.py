from heatlab import solver
from heatlab.io import write_timeseries
from launcher.config import prepare
from launcher.exit_codes import exits_with_status
from tools.status import status


@exits_with_status
def simulate(config=None, out="heatlab_output", threads=1, tol=None, **overrides):
    """Solve from the indicator of Ω and write the probe time series

    :param threads: unused, a single solve
    :param tol: refuse runs whose truncation budget exceeds this
    """
    settings = prepare("simulate", config, overrides)
    grid = settings["grid"]
    with status(f"Solving on {grid.cells_per_side}x{grid.cells_per_side} cells"):
        series = solver.run(
            settings["domain"],
            settings["field"],
            grid,
            settings["t_end"],
            probes=settings["probes"],
            sample_times=settings["sample_times"],
            config=settings["solver"],
            envelope=settings["envelope"],
            tol=tol,
        )
    print(series.to_frame().to_string(index=False, float_format=lambda v: f"{v:.12g}"))
    print(f"truncation budget {series.metadata['truncation_budget']:.3g}")
    write_timeseries(series, out, settings["stem"])
