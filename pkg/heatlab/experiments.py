"""The three studies: self-similarity of cones, stabilization of sandwich
domains and oscillation on shell domains.

Each study fans its independent solver runs out to a thread pool and
assembles the report on the calling thread, so the numbers do not depend
on the worker count.
"""

__all__ = [
    "StudyReport",
    "SelfSimilarityReport",
    "StabilizationReport",
    "OscillationReport",
    "geometric_schedule",
    "selfsimilarity_study",
    "stabilization_study",
    "oscillation_study",
]

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field, replace
import json
import math
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .analytic import (
    BoundReport,
    OscillationParams,
    oscillation_bounds,
    probe_times,
    schedule_times,
    series_bounds_at,
    series_u0_constant_sigma,
    shell_cap_for,
)
from .errors import BudgetExceeded, InvalidSpec
from .geometry import (
    ConductivityField,
    OscillatoryDomainSpec,
    PhaseDomain,
    SandwichSpec,
    sandwich_check,
)
from .solver import (
    GridSpec,
    SolverConfig,
    holder_exponent,
    holder_modulus,
    rescaled_run,
    run,
    truncation_budget,
)
from .log import make_log


log = make_log("experiments")

DEFAULT_BUDGET_TOL = 1e-2


def _fan_out(jobs: Dict[str, Callable], threads: int = 1) -> dict:
    """Run independent jobs; results are keyed, so their order never matters"""
    if threads < 1:
        raise ValueError("threads must be at least 1")
    if threads == 1:
        return {key: job() for key, job in jobs.items()}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {key: pool.submit(job) for key, job in jobs.items()}
        return {key: future.result() for key, future in futures.items()}


@dataclass
class StudyReport(ABC):
    name: str
    parameters: dict
    checks: Dict[str, bool] = dataclass_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        """One row with the same columns for every study"""
        return {
            "study": self.name,
            "parameters": json.dumps(self.parameters, sort_keys=True, default=str),
            "checks": json.dumps({k: bool(v) for k, v in self.checks.items()}),
            "passed": self.passed,
        }

    @abstractmethod
    def to_frame(self) -> pd.DataFrame:
        """The study's main table, written as <study>.csv"""

    def body(self) -> str:
        return self.to_frame().to_string(index=False, float_format=lambda v: f"{v:.6f}")

    def render(self) -> str:
        lines = [f"Study: {self.name}", ""]
        lines += [f"  {key} = {value}" for key, value in sorted(self.parameters.items())]
        lines += ["", self.body(), ""]
        lines += [f"[{'✓' if ok else '✗'}] {check}" for check, ok in self.checks.items()]
        lines.append(f"\n{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


@dataclass
class SelfSimilarityReport(StudyReport):
    table: pd.DataFrame = None

    def to_frame(self) -> pd.DataFrame:
        return self.table

    def halving_ratios(self) -> Dict[float, float]:
        """deviation(h/2)/deviation(h) per k, for successive refinements"""
        ratios = {}
        for k, rows in self.table.groupby("k"):
            deviations = rows.sort_values("spacing", ascending=False)["deviation"].to_numpy()
            if len(deviations) >= 2 and deviations[0] > 0:
                ratios[float(k)] = float(deviations[1] / deviations[0])
        return ratios


def selfsimilarity_study(
    domain: PhaseDomain,
    field: ConductivityField,
    ks: Sequence[float],
    grid: GridSpec,
    refinements: Sequence[float] = (1,),
    t: float = 1.0,
    config: Optional[SolverConfig] = None,
    threads: int = 1,
    tol: Optional[float] = None,
    deviation_tol: float = 0.02,
) -> SelfSimilarityReport:
    """|u^k(0, t) − u(0, t)| for each k, with u^k resolved on spacing h/k

    In the original variables both runs then use the same spacing h, so
    the deviation measures how far the discrete solution is from being
    self-similar. Each entry of `refinements` divides h once more.
    """
    if domain.kind != "cone":
        raise InvalidSpec(f"Self-similarity needs a cone domain, got {domain.kind!r}")
    if any(k <= 0 for k in ks):
        raise ValueError("Rescaling factors must be positive")
    field = field.with_domain(domain)

    jobs = {}
    for r in refinements:
        base = grid.refined(r)
        jobs[(r, None)] = lambda base=base: rescaled_run(
            domain, field, base, 1.0, t, config=config, tol=tol
        )
        for k in ks:
            fine = base.refined(k)
            jobs[(r, k)] = lambda fine=fine, k=k: rescaled_run(
                domain, field, fine, k, t, config=config, tol=tol
            )
    log(f"Self-similarity: {len(jobs)} runs on {threads} thread(s)")
    values = _fan_out(jobs, threads)

    rows = []
    for r in refinements:
        base_value = values[(r, None)]
        for k in ks:
            rows.append(
                {
                    "refinement": float(r),
                    "spacing": grid.spacing / r,
                    "k": float(k),
                    "base_value": base_value,
                    "rescaled_value": values[(r, k)],
                    "deviation": abs(values[(r, k)] - base_value),
                }
            )
    table = pd.DataFrame(rows)

    finest = table[table["refinement"] == max(refinements)]
    inside = np.concatenate([table["base_value"], table["rescaled_value"]])
    checks = {
        "values_inside_unit_interval": bool(np.all((inside > 0) & (inside < 1))),
        "deviation_within_tol": bool(np.all(finest["deviation"] <= deviation_tol)),
    }
    finest_grid = grid.refined(max(refinements) * max([1.0, *ks]))
    budget = truncation_budget(finest_grid, field, t, [(0.0, 0.0)])
    parameters = {
        "ks": [float(k) for k in ks],
        "refinements": [float(r) for r in refinements],
        "spacing": grid.spacing,
        "half_extent": grid.half_extent,
        "t": t,
        "sigma_plus": field.sigma_plus,
        "sigma_minus": field.sigma_minus,
        "deviation_tol": deviation_tol,
        "truncation_budget": budget,
    }
    return SelfSimilarityReport("selfsim", parameters, checks, table)


def geometric_schedule(t0: float, t_end: float) -> np.ndarray:
    """t0, 2·t0, 4·t0, ... below t_end, then t_end itself"""
    if not 0 < t0 <= t_end:
        raise ValueError("Need 0 < t0 ≤ t_end")
    count = int(math.floor(math.log2(t_end / t0) + 1e-12))
    times = t0 * 2.0 ** np.arange(count + 1)
    times = times[times < t_end * (1 - 1e-12)]
    return np.append(times, t_end)


@dataclass
class StabilizationReport(StudyReport):
    cone_value: float = math.nan
    trajectory: pd.DataFrame = None
    terminal_gap: float = math.nan
    trend: float = math.nan
    holder_table: pd.DataFrame = None
    truncation_budget: float = math.nan

    def to_frame(self) -> pd.DataFrame:
        return self.trajectory

    def body(self) -> str:
        fmt = lambda v: f"{v:.6f}"  # noqa: E731
        return "\n".join(
            [
                f"cone value u_A(0,1) = {self.cone_value:.6f}",
                f"terminal gap        = {self.terminal_gap:.6f}"
                f" (truncation budget {self.truncation_budget:.3g})",
                f"gap trend (tail)    = {self.trend:+.3g} per doubling",
                "",
                self.trajectory.to_string(index=False, float_format=fmt),
                "",
                "Hölder moduli",
                self.holder_table.to_string(index=False, float_format=fmt),
            ]
        )


def stabilization_study(
    spec: SandwichSpec,
    field: ConductivityField,
    grid: GridSpec,
    t_end: float,
    schedule: Optional[Sequence[float]] = None,
    config: Optional[SolverConfig] = None,
    threads: int = 1,
    tol: Optional[float] = None,
    gap_tol: float = 0.02,
    sample_count: int = 100_000,
    holder_radii: Optional[Sequence[float]] = None,
) -> StabilizationReport:
    """Compare u(0, t) on Ω with the cone value u_A(0, 1)

    :param schedule: sample times, geometric from h² up to t_end by default
    :param holder_radii: radii of the modulus table, (h, 2h, 4h) by default
    """
    check = sandwich_check(spec, sample_count=sample_count)
    if not check.passed:
        raise InvalidSpec(
            f"Sandwich condition fails at {len(check.witnesses)} of {check.checked} samples, "
            f"e.g. x = {check.witnesses[0].tolist()}"
        )
    times = (
        geometric_schedule(spec.offset**2, t_end)
        if schedule is None
        else np.asarray(schedule, dtype=float)
    )
    radii = (
        spec.offset * np.array([1.0, 2.0, 4.0]) if holder_radii is None else holder_radii
    )
    cone = PhaseDomain.cone(spec.cone)
    sandwich = PhaseDomain.sandwich(spec)

    jobs = {
        "cone": lambda: run(
            cone, field.with_domain(cone), grid, 1.0, config=config, tol=tol
        ),
        "sandwich": lambda: run(
            sandwich,
            field.with_domain(sandwich),
            grid,
            float(times[-1]),
            sample_times=times,
            config=config,
            tol=tol,
            snapshot_times=times,
        ),
    }
    log(f"Stabilization: cone and sandwich runs on {threads} thread(s)")
    results = _fan_out(jobs, threads)
    cone_value = float(results["cone"].values[-1, 0])
    series = results["sandwich"]

    values = series.column(0)
    gaps = np.abs(values - cone_value)
    trajectory = pd.DataFrame({"t": series.times, "u": values, "gap": gaps})

    holder_rows = []
    for snap in series.snapshots:
        moduli = holder_modulus(snap, radii=radii)
        for r, modulus in moduli:
            holder_rows.append(
                {"t": snap.t, "r": r, "modulus": modulus, "exponent": holder_exponent(moduli)}
            )
    holder_table = pd.DataFrame(holder_rows)

    tail = gaps[len(gaps) // 2 :]
    trend = float(np.polyfit(np.arange(len(tail)), tail, 1)[0]) if len(tail) >= 2 else 0.0

    checks = {
        "cone_value_inside_unit_interval": 0.0 < cone_value < 1.0,
        "values_inside_unit_interval": bool(np.all((values > 0) & (values < 1))),
        "terminal_gap_within_tol": bool(gaps[-1] <= gap_tol),
    }
    if not field.two_phase:
        checks["gap_tail_nonincreasing"] = bool(np.all(np.diff(tail) <= 1e-3))

    budget = truncation_budget(grid, field, float(times[-1]), [(0.0, 0.0)])
    parameters = {
        "base": [[a.center.angle, a.half_width] for a in spec.base.arcs],
        "apex_dir": spec.apex_dir.angle,
        "offset": spec.offset,
        "recipe": spec.recipe,
        "t_end": float(times[-1]),
        "spacing": grid.spacing,
        "half_extent": grid.half_extent,
        "sigma_plus": field.sigma_plus,
        "sigma_minus": field.sigma_minus,
        "gap_tol": gap_tol,
    }
    return StabilizationReport(
        "stabilize",
        parameters,
        checks,
        cone_value=cone_value,
        trajectory=trajectory,
        terminal_gap=float(gaps[-1]),
        trend=trend,
        holder_table=holder_table,
        truncation_budget=budget,
    )


@dataclass
class OscillationReport(StudyReport):
    params: Optional[OscillationParams] = None
    samples: pd.DataFrame = None
    running_min: float = math.nan
    running_max: float = math.nan
    bounds: Optional[BoundReport] = None

    @property
    def oscillation(self) -> float:
        return self.running_max - self.running_min

    def to_frame(self) -> pd.DataFrame:
        return self.samples

    def body(self) -> str:
        fmt = lambda v: f"{v:.6f}"  # noqa: E731
        lines = [
            self.samples.to_string(index=False, float_format=fmt),
            "",
            f"observed min {self.running_min:.6f}, max {self.running_max:.6f}, "
            f"oscillation {self.oscillation:.6f}",
        ]
        if self.bounds is not None:
            lines += ["", "Asymptotic bounds (t → ∞)", self.bounds.render()]
        return "\n".join(lines)


def oscillation_study(
    spec: OscillatoryDomainSpec,
    field: ConductivityField,
    params: Optional[OscillationParams],
    grid: GridSpec,
    n_probes: int = 1,
    probe_width: Optional[float] = None,
    config: Optional[SolverConfig] = None,
    tol: float = DEFAULT_BUDGET_TOL,
    oracle_tol: float = 0.03,
) -> OscillationReport:
    """Sample u(0, ·) at t_1 … t_n (pushed up) and T_2 … T_{n+1} (pushed down)

    :param params: certificate parameters; without them (e.g. A = B) no
        bounds are reported and `probe_width` sets the clock
    :param probe_width: exponent scale used to place the probe times, 4σ for
        the exact kernel of constant σ; the envelope constants otherwise
    :param tol: largest admissible truncation budget at the last probe time
    """
    if n_probes < 1:
        raise ValueError("At least one probe pair is required")
    if params is None:
        width = 4.0 * field.sigma_max if probe_width is None else probe_width
        schedule = schedule_times(spec.ratio, width, width, n_probes + 1)
    else:
        schedule = probe_times(params, n_probes + 1, width=probe_width)
    labelled = [
        item
        for item in schedule.interleaved()
        if item[0] in {f"t_{n}" for n in range(1, n_probes + 1)}
        or item[0] in {f"T_{n}" for n in range(2, n_probes + 2)}
    ]
    labels = [label for label, _ in labelled]
    times = np.array([t for _, t in labelled])

    cap = shell_cap_for(spec.delta, spec.ratio, 4.0 * field.sigma_max, float(times[-1]))
    if spec.n_max is None or spec.n_max > cap:
        log(f"Keeping {cap} shells: the rest carry < 1e-6 of the kernel at t = {times[-1]:.4g}")
        spec = replace(spec, n_max=cap)
    domain = PhaseDomain.oscillatory(spec)
    field = field.with_domain(domain)
    budget = truncation_budget(grid, field, float(times[-1]), [(0.0, 0.0)])
    if budget > tol:
        raise BudgetExceeded(
            f"Probe time {times[-1]:.4g} needs a larger box: truncation budget "
            f"{budget:.3g} > {tol:g} at L={grid.half_extent:g}"
        )
    series = run(domain, field, grid, float(times[-1]), sample_times=times, config=config)
    values = series.column(0)

    samples = pd.DataFrame({"label": labels, "t": times, "u": values})
    checks = {"inside_unit_interval": bool(values.min() > 0.0 and values.max() < 1.0)}

    if not field.two_phase:
        oracle = np.array([series_u0_constant_sigma(spec, field.sigma_plus, t) for t in times])
        samples["oracle"] = oracle
        checks["oracle_agreement"] = bool(
            np.all(np.abs(values - oracle) <= oracle_tol * np.abs(oracle))
        )

    bounds = None
    if params is not None:
        bounds = oscillation_bounds(params)
        envelope_bounds = [series_bounds_at(params, t) for t in times]
        samples["lower_bound"] = [low for low, _ in envelope_bounds]
        samples["upper_bound"] = [high for _, high in envelope_bounds]
        if bounds.gap_certified:
            value = dict(zip(labels, values))
            pairs = [(f"t_{n}", f"T_{n + 1}") for n in range(1, n_probes + 1)]
            pairs += [(f"t_{n}", f"T_{n}") for n in range(2, n_probes + 1)]
            checks["pushed_up_exceeds_pushed_down"] = all(
                value[up] > value[down] for up, down in pairs
            )

    parameters = {
        "alpha": spec.alpha,
        "beta": spec.beta,
        "delta": spec.delta,
        "ratio": spec.ratio,
        "shells": spec.shells,
        "n_probes": n_probes,
        "probe_width": probe_width,
        "spacing": grid.spacing,
        "half_extent": grid.half_extent,
        "sigma_plus": field.sigma_plus,
        "sigma_minus": field.sigma_minus,
        "truncation_budget": budget,
    }
    if params is not None:
        parameters["epsilon"] = params.epsilon
    return OscillationReport(
        "oscillate",
        parameters,
        checks,
        params=params,
        samples=samples,
        running_min=float(values.min()),
        running_max=float(values.max()),
        bounds=bounds,
    )
