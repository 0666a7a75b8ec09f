"""Cell-centred finite volumes for u_t = div(σ∇u) on a square box.

The box [-L, L]² is cut into n × n cells of side h with n even, so the
origin is a cell corner. Cells are indexed ``u[i, j]`` with ``i`` along
x₁ and ``j`` along x₂. The edge of the box is insulated (zero flux),
which makes the scheme exactly conservative; the error made by cutting
ℝ² down to the box is reported as a truncation budget instead.

Time integration is the θ-scheme

    (I − θ·dt·K) u⁺ = (I + (1 − θ)·dt·K) u

solved with preconditioned conjugate gradients. Each run is
single-threaded and bitwise deterministic; parallelism happens between
runs (see `heatlab.experiments`).
"""

__all__ = [
    "GridSpec",
    "FaceConductivity",
    "SolverConfig",
    "SolverState",
    "Snapshot",
    "TimeSeries",
    "ORIGIN",
    "harmonic_mean",
    "discretize",
    "assemble_operator",
    "init_state",
    "step",
    "advance",
    "probe_values",
    "truncation_budget",
    "run",
    "rescaled_run",
    "energy_integral",
    "holder_modulus",
    "holder_exponent",
]

from dataclasses import dataclass, field as dataclass_field
import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate, interpolate, sparse
from scipy.sparse import linalg

from .analytic import GaussianEnvelope, gaussian_tail, kernel_tail
from .errors import BudgetExceeded, NonConvergence
from .geometry import ConductivityField, PhaseDomain, conductivity_at, rescale_domain
from .log import make_log


log = make_log("solver")

ORIGIN = (0.0, 0.0)
MIN_CELLS_PER_HALF = 20
TIME_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Square box of half extent `half_extent`, cells of side `spacing`"""

    half_extent: float
    spacing: float

    def __post_init__(self):
        if self.half_extent <= 0 or self.spacing <= 0:
            raise ValueError("Grid extent and spacing must be positive")
        if self.half_extent / self.spacing < MIN_CELLS_PER_HALF - 1e-9:
            raise ValueError(
                f"Need L/h ≥ {MIN_CELLS_PER_HALF}, got {self.half_extent / self.spacing:.3g}"
            )

    @property
    def cells_per_side(self) -> int:
        # L/h is often a float a hair above an integer, e.g. 6.4/0.08
        return 2 * math.ceil(self.half_extent / self.spacing - 1e-9)

    @property
    def extent(self) -> float:
        """Half extent actually covered, n·h/2 ≥ L"""
        return self.cells_per_side * self.spacing / 2

    @property
    def shape(self):
        return (self.cells_per_side, self.cells_per_side)

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells_per_side) + 0.5) * self.spacing - self.extent

    def cell_centers(self) -> np.ndarray:
        """Array of shape (n, n, 2)"""
        x1, x2 = np.meshgrid(self.centers, self.centers, indexing="ij")
        return np.stack([x1, x2], axis=-1)

    def refined(self, factor: float) -> "GridSpec":
        return GridSpec(self.half_extent, self.spacing / factor)

    def as_dict(self) -> dict:
        return {
            "half_extent": self.half_extent,
            "spacing": self.spacing,
            "cells_per_side": self.cells_per_side,
        }


def harmonic_mean(a, b):
    return 2.0 * a * b / (a + b)


@dataclass(frozen=True)
class FaceConductivity:
    """σ on the cells and on the faces between them

    ``x_faces[i, j]`` sits between cells (i, j) and (i + 1, j),
    ``y_faces[i, j]`` between (i, j) and (i, j + 1).
    """

    cells: np.ndarray
    x_faces: np.ndarray
    y_faces: np.ndarray

    @property
    def sigma_max(self) -> float:
        return float(self.cells.max())


def discretize(field: ConductivityField, grid: GridSpec) -> FaceConductivity:
    cells = conductivity_at(field, grid.cell_centers())
    return FaceConductivity(
        cells=cells,
        x_faces=harmonic_mean(cells[:-1, :], cells[1:, :]),
        y_faces=harmonic_mean(cells[:, :-1], cells[:, 1:]),
    )


def assemble_operator(faces: FaceConductivity, grid: GridSpec) -> sparse.csr_matrix:
    """K with (K u)_c = h⁻² Σ_f σ_f (u_neighbour − u_c); no faces on the box edge"""
    n = grid.cells_per_side
    index = np.arange(n * n).reshape(n, n)
    a = np.concatenate([index[:-1, :].ravel(), index[:, :-1].ravel()])
    b = np.concatenate([index[1:, :].ravel(), index[:, 1:].ravel()])
    w = np.concatenate([faces.x_faces.ravel(), faces.y_faces.ravel()]) / grid.cell_area

    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([b, a, a, b])
    values = np.concatenate([w, w, -w, -w])
    return sparse.coo_matrix((values, (rows, cols)), shape=(n * n, n * n)).tocsr()


@dataclass(frozen=True)
class SolverConfig:
    """θ-scheme and time-step policy

    dt = clip(dt_rel·t, dt_min, dt_max); dt_min defaults to h²/(4·max σ).
    For θ < 1 every step is also capped at h²/(4(1 − θ)·max σ), which is
    h²/(2·max σ) for the trapezoidal rule, to keep the scheme monotone.
    """

    theta: float = 1.0
    dt_rel: float = 0.02
    dt_min: Optional[float] = None
    dt_max: float = math.inf
    rtol: float = 1e-10
    maxiter: int = 10_000

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("θ must lie in [1/2, 1]")
        if self.dt_rel <= 0 or self.rtol <= 0 or self.maxiter < 1:
            raise ValueError("dt_rel, rtol and maxiter must be positive")
        if self.dt_min is not None and not 0 < self.dt_min <= self.dt_max:
            raise ValueError("Need 0 < dt_min ≤ dt_max")

    def monotone_cap(self, grid: GridSpec, sigma_max: float) -> float:
        if self.theta == 1.0:
            return math.inf
        return grid.cell_area / (4.0 * (1.0 - self.theta) * sigma_max)

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "dt_rel": self.dt_rel,
            "dt_min": self.dt_min,
            "dt_max": self.dt_max,
            "rtol": self.rtol,
            "maxiter": self.maxiter,
        }


@dataclass
class SolverState:
    u: np.ndarray
    t: float
    grid: GridSpec
    faces: FaceConductivity
    config: SolverConfig = dataclass_field(default_factory=SolverConfig)
    steps: int = 0
    iterations: int = 0
    _operator: Optional[sparse.csr_matrix] = dataclass_field(default=None, repr=False)
    _system: Optional[tuple] = dataclass_field(default=None, repr=False)

    @property
    def operator(self) -> sparse.csr_matrix:
        if self._operator is None:
            self._operator = assemble_operator(self.faces, self.grid)
        return self._operator

    @property
    def mass(self) -> float:
        return float(self.u.sum() * self.grid.cell_area)

    def system(self, dt: float):
        """(I − θ·dt·K, Jacobi preconditioner), cached for the last dt"""
        if self._system is None or self._system[0] != dt:
            K = self.operator
            A = (sparse.identity(K.shape[0], format="csr") - self.config.theta * dt * K).tocsr()
            M = sparse.diags(1.0 / A.diagonal())
            self._system = (dt, A, M)
        return self._system[1], self._system[2]

    def snapshot(self) -> "Snapshot":
        return Snapshot(self.t, self.u.copy(), self.grid)


@dataclass(frozen=True)
class Snapshot:
    t: float
    u: np.ndarray
    grid: GridSpec


def init_state(
    domain: PhaseDomain,
    grid: GridSpec,
    field: Optional[ConductivityField] = None,
    config: Optional[SolverConfig] = None,
) -> SolverState:
    """u = indicator of Ω at cell centres, t = 0

    :param field: conductivity, σ ≡ 1 with `domain` as the phase by default
    """
    field = ConductivityField.uniform(domain) if field is None else field
    u = np.asarray(domain(grid.cell_centers()), dtype=float)
    return SolverState(
        u=u, t=0.0, grid=grid, faces=discretize(field, grid), config=config or SolverConfig()
    )


def step(state: SolverState, dt: float) -> SolverState:
    """Advance `state` in place by one θ-step of length dt"""
    if dt <= 0:
        raise ValueError("Time step must be positive")
    config = state.config
    cap = config.monotone_cap(state.grid, state.faces.sigma_max)
    if dt > cap * (1 + TIME_TOL):
        raise ValueError(
            f"dt = {dt:.3g} exceeds the monotone limit {cap:.3g} for θ = {config.theta}"
        )

    u = state.u.ravel()
    rhs = u
    if config.theta < 1.0:
        rhs = u + (1.0 - config.theta) * dt * (state.operator @ u)
    A, M = state.system(dt)

    count = [0]

    def callback(_):
        count[0] += 1

    solution, info = linalg.cg(
        A, rhs, x0=u, rtol=config.rtol, atol=0.0, maxiter=config.maxiter, M=M, callback=callback
    )
    if info != 0:
        raise NonConvergence(
            f"CG did not reach rtol={config.rtol:g} within {config.maxiter} iterations "
            f"at t={state.t:.6g}, dt={dt:.3g}"
        )
    state.u = solution.reshape(state.grid.shape)
    state.t += dt
    state.steps += 1
    state.iterations += count[0]
    return state


def next_dt(state: SolverState) -> float:
    config, grid = state.config, state.grid
    sigma_max = state.faces.sigma_max
    dt_min = grid.cell_area / (4.0 * sigma_max) if config.dt_min is None else config.dt_min
    dt = min(max(config.dt_rel * state.t, dt_min), config.dt_max)
    return min(dt, config.monotone_cap(grid, sigma_max))


def advance(state: SolverState, target: float) -> SolverState:
    """Step until `state.t` equals `target` exactly"""
    if target < state.t - TIME_TOL:
        raise ValueError(f"Cannot advance backwards from t={state.t} to t={target}")
    while target - state.t > TIME_TOL * max(1.0, target):
        remaining = target - state.t
        dt = next_dt(state)
        step(state, remaining if remaining <= dt * (1 + 1e-9) else dt)
    state.t = float(target)
    return state


def probe_values(state: SolverState, probes) -> np.ndarray:
    """Bilinear interpolation between cell centres

    At the origin this is the mean of the 4 adjacent cells.
    """
    centers = state.grid.centers
    interpolant = interpolate.RegularGridInterpolator(
        (centers, centers), state.u, method="linear", bounds_error=True
    )
    return interpolant(np.asarray(probes, dtype=float).reshape(-1, 2))


def truncation_budget(
    grid: GridSpec,
    field: ConductivityField,
    t: float,
    probes,
    envelope: Optional[GaussianEnvelope] = None,
) -> float:
    """Kernel mass that could cross the box edge before time t, worst probe

    Uses the upper envelope Λt⁻¹e^{−|x|²/(Λt)} if given, otherwise the
    exact kernel of the largest conductivity; the radius is the distance
    from the probe to the edge less a 2h safety margin.
    """
    probes = np.asarray(probes, dtype=float).reshape(-1, 2)
    worst = 0.0
    for probe in probes:
        radius = grid.extent - float(np.hypot(*probe)) - 2.0 * grid.spacing
        if radius <= 0:
            return 1.0
        if envelope is None:
            tail = kernel_tail(field.sigma_max, radius, t)
        else:
            tail = gaussian_tail(envelope.dimension, envelope.Lam, envelope.Lam, radius, t)
        worst = max(worst, tail)
    return min(worst, 1.0)


@dataclass(frozen=True)
class TimeSeries:
    """u(probe_i, t_j) in ``values[j, i]``"""

    probes: np.ndarray
    times: np.ndarray
    values: np.ndarray
    metadata: dict = dataclass_field(default_factory=dict)
    snapshots: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Sample times must be strictly increasing")

    def column(self, probe: int = 0) -> np.ndarray:
        return self.values[:, probe]

    def at(self, t: float, probe: int = 0) -> float:
        matches = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=0.0))
        if not len(matches):
            raise KeyError(f"t={t} was not sampled")
        return float(self.values[matches[0], probe])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            self.values, columns=[f"probe_{i}" for i in range(len(self.probes))]
        )
        frame.insert(0, "t", self.times)
        return frame


def _check_times(sample_times, t_end):
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or not len(times):
        raise ValueError("At least one sample time is required")
    if np.any(np.diff(times) <= 0):
        raise ValueError("Sample times must be strictly increasing")
    if times[0] <= 0 or times[-1] > t_end * (1 + TIME_TOL):
        raise ValueError("Sample times must lie in (0, t_end]")
    return times


def run(
    domain: PhaseDomain,
    field: ConductivityField,
    grid: GridSpec,
    t_end: float,
    probes: Sequence = (ORIGIN,),
    sample_times: Optional[Sequence[float]] = None,
    config: Optional[SolverConfig] = None,
    envelope: Optional[GaussianEnvelope] = None,
    tol: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
) -> TimeSeries:
    """Solve from the indicator of `domain` and sample the probes

    :param sample_times: increasing times in (0, t_end], [t_end] by default
    :param tol: refuse the run (`BudgetExceeded`) if the truncation budget at
        t_end is larger
    :param snapshot_times: times at which full copies of u are kept
    """
    times = _check_times([t_end] if sample_times is None else sample_times, t_end)
    probes = np.asarray(probes, dtype=float).reshape(-1, 2)
    budget = truncation_budget(grid, field, t_end, probes, envelope)
    if tol is not None and budget > tol:
        raise BudgetExceeded(
            f"Truncation budget {budget:.3g} at t={t_end:g} exceeds tol={tol:g}; "
            f"enlarge the box (L={grid.half_extent:g}) or shorten the run"
        )

    state = init_state(domain, grid, field, config)
    n = grid.cells_per_side
    log(f"Running {n}x{n} cells to t={t_end:g} (θ={state.config.theta}, budget {budget:.3g})")

    wanted = set(float(s) for s in snapshot_times)
    stops = sorted(set(times.tolist()) | wanted)
    values, snapshots = [], []
    sampled = set(times.tolist())
    for stop in stops:
        advance(state, stop)
        if stop in sampled:
            values.append(probe_values(state, probes))
        if stop in wanted:
            snapshots.append(state.snapshot())

    log(f"Finished {state.steps} steps, {state.iterations} CG iterations")
    metadata = {
        "grid": grid.as_dict(),
        "scheme": state.config.as_dict(),
        "t_end": float(t_end),
        "steps": state.steps,
        "cg_iterations": state.iterations,
        "truncation_budget": budget,
        "sigma_plus": field.sigma_plus,
        "sigma_minus": field.sigma_minus,
    }
    return TimeSeries(probes, times, np.array(values), metadata, tuple(snapshots))


def rescaled_run(
    domain: PhaseDomain,
    field: ConductivityField,
    grid: GridSpec,
    k: float,
    t: float,
    **kwargs,
) -> float:
    """u^k(0, t) = u(0, k²t), solved directly on Ω^k with σ^k"""
    if k <= 0:
        raise ValueError("The rescaling factor must be positive")
    series = run(rescale_domain(domain, k), field.rescaled(k), grid, t, **kwargs)
    return float(series.values[-1, 0])


def energy_integral(snapshots: Sequence, rho: float) -> float:
    """∫_0^T ∫_{B_ρ} |∇u|² dx dt, trapezoidal in time

    :param snapshots: states (anything with ``t``, ``u`` and ``grid``) in time order
    """
    if len(snapshots) < 2:
        raise ValueError("Need at least two snapshots for time quadrature")
    grid = snapshots[0].grid
    centers = grid.cell_centers()
    ball = np.hypot(centers[..., 0], centers[..., 1]) < rho
    densities = []
    for snap in snapshots:
        du1, du2 = np.gradient(snap.u, grid.spacing, grid.spacing)
        densities.append(float(np.sum((du1**2 + du2**2)[ball]) * grid.cell_area))
    return float(integrate.trapezoid(densities, [snap.t for snap in snapshots]))


def holder_modulus(state, base=ORIGIN, radii: Sequence[float] = (), samples: int = 360):
    """[(r, sup_{|x − base| = r} |u(x) − u(base)|)], sup over `samples` directions"""
    grid = state.grid
    base = np.asarray(base, dtype=float)
    low, high = grid.centers[0], grid.centers[-1]
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    ring = np.column_stack([np.cos(theta), np.sin(theta)])
    at_base = probe_values(state, base)[0]

    moduli = []
    for r in radii:
        points = base + r * ring
        if points.min() < low or points.max() > high:
            raise ValueError(f"Circle of radius {r} around {base.tolist()} leaves the grid")
        moduli.append((float(r), float(np.max(np.abs(probe_values(state, points) - at_base)))))
    return moduli


def holder_exponent(moduli) -> float:
    """Least-squares slope of log(modulus) against log(r)

    nan with fewer than two positive moduli
    """
    table = np.asarray(moduli, dtype=float).reshape(-1, 2)
    keep = table[:, 1] > 0
    if np.count_nonzero(keep) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(table[keep, 0]), np.log(table[keep, 1]), 1)
    return float(slope)
