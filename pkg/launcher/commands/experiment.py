from heatlab import experiments
from heatlab.errors import StudyFailed
from heatlab.io import write_study
from launcher.config import prepare
from launcher.exit_codes import exits_with_status
from tools.status import status


def _finish(report, out):
    write_study(report, out)
    print(report.render())
    if not report.passed:
        failed = [check for check, ok in report.checks.items() if not ok]
        raise StudyFailed(f"{report.name} failed: {', '.join(failed)}")


@exits_with_status
def selfsim(config=None, out="heatlab_output", threads=1, tol=None, **overrides):
    """Deviation of u^k(0, 1) from u(0, 1) on a cone"""
    s = prepare("experiment.selfsim", config, overrides)
    with status("Running the self-similarity study"):
        report = experiments.selfsimilarity_study(
            s["domain"],
            s["field"],
            s["ks"],
            s["grid"],
            refinements=s["refinements"],
            t=s["t"],
            config=s["solver"],
            threads=threads,
            tol=tol,
            deviation_tol=s["deviation_tol"],
        )
    _finish(report, out)


@exits_with_status
def stabilize(config=None, out="heatlab_output", threads=1, tol=None, **overrides):
    """Gap between a sandwich domain and its cone as t grows"""
    s = prepare("experiment.stabilize", config, overrides)
    with status("Running the stabilization study"):
        report = experiments.stabilization_study(
            s["domain"].spec,
            s["field"],
            s["grid"],
            s["t_end"],
            schedule=s["schedule"],
            config=s["solver"],
            threads=threads,
            tol=tol,
            gap_tol=s["gap_tol"],
            sample_count=s["sample_count"],
            holder_radii=s["holder_radii"],
        )
    _finish(report, out)


@exits_with_status
def oscillate(config=None, out="heatlab_output", threads=1, tol=None, **overrides):
    """u(0, t) at the pushed-up and pushed-down probe times of a shell domain

    :param threads: unused, the study is a single solve
    :param tol: largest truncation budget, overriding ``budget_tol``
    """
    s = prepare("experiment.oscillate", config, overrides)
    with status("Running the oscillation study"):
        report = experiments.oscillation_study(
            s["domain"].spec,
            s["field"],
            s["params"],
            s["grid"],
            n_probes=s["n_probes"],
            probe_width=s["probe_width"],
            config=s["solver"],
            tol=s["budget_tol"] if tol is None else tol,
            oracle_tol=s["oracle_tol"],
        )
    _finish(report, out)


experiment = {"selfsim": selfsim, "stabilize": stabilize, "oscillate": oscillate}
