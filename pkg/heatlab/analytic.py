"""Closed-form side of the oscillation construction.

Everything here is a pure function of immutable records. Radial moments
∫_a^b e^{-s²} s^{N-1} ds are evaluated through the regularized incomplete
gamma function; for N = 2 they reduce to differences of exponentials,
which the constant-conductivity series uses directly.
"""

__all__ = [
    "GaussianEnvelope",
    "OscillationParams",
    "BoundReport",
    "ProbeSchedule",
    "sphere_measure",
    "moment_integral",
    "truncated_moment",
    "truncated_moment_quad",
    "check_medium_inequality",
    "key_inequality",
    "epsilon_threshold",
    "solve_delta",
    "probe_times",
    "schedule_times",
    "shell_moment_series",
    "shell_cap_for",
    "series_u0_constant_sigma",
    "quadrature_u0_constant_sigma",
    "heat_kernel",
    "envelope_check",
    "gaussian_tail",
    "kernel_tail",
    "oscillation_bounds",
    "series_bounds_at",
]

from dataclasses import asdict, dataclass
import math
from typing import Optional

import numpy as np
import pandas as pd
from scipy import integrate, optimize, special

from .errors import Infeasible, NotSatisfiable
from .geometry import OscillatoryDomainSpec
from .log import make_log


log = make_log("analytic")

SERIES_TOL = 1e-12
ESSENCE_TOL = 1e-9
# relative slack when comparing a kernel value against an envelope bound
ENVELOPE_SLACK = 1e-12
MAX_SHELLS = 10_000


def sphere_measure(N: int) -> float:
    """ℋ^{N-1}(S^{N-1}) = 2π^{N/2} / Γ(N/2)"""
    return 2.0 * math.pi ** (N / 2) / special.gamma(N / 2)


def moment_integral(N: int) -> float:
    """I_N = ∫_0^∞ e^{-s²} s^{N-1} ds = Γ(N/2)/2"""
    if N < 2:
        raise ValueError("Dimension must be at least 2")
    return 0.5 * float(special.gamma(N / 2))


def truncated_moment(N: int, a: float, b: float) -> float:
    """∫_a^b e^{-s²} s^{N-1} ds; `b` may be ``math.inf``"""
    if a < 0 or b < a:
        raise ValueError(f"Need 0 ≤ a ≤ b, got a={a}, b={b}")
    if a == b:
        return 0.0
    s = N / 2
    lower, upper = a * a, b * b
    if lower > s:
        # both ends in the tail: difference of complements keeps precision
        value = special.gammaincc(s, lower) - special.gammaincc(s, upper)
    else:
        value = special.gammainc(s, upper) - special.gammainc(s, lower)
    return 0.5 * float(special.gamma(s)) * float(value)


def truncated_moment_quad(N: int, a: float, b: float) -> float:
    """Adaptive-quadrature version of `truncated_moment`, for cross-checks"""
    value, _ = integrate.quad(
        lambda s: math.exp(-s * s) * s ** (N - 1), a, b, epsabs=0.0, epsrel=1e-12, limit=200
    )
    return value


@dataclass(frozen=True)
class GaussianEnvelope:
    """λ t^{-N/2} e^{-|x-ξ|²/(λt)} ≤ g(x, ξ, t) ≤ Λ t^{-N/2} e^{-|x-ξ|²/(Λt)}"""

    lam: float
    Lam: float
    dimension: int = 2

    def __post_init__(self):
        if self.lam <= 0 or self.Lam <= 0:
            raise ValueError("Envelope constants must be positive")
        if self.lam > self.Lam:
            raise ValueError("Envelope constants must satisfy λ ≤ Λ")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError("Dimension must be an integer ≥ 2")

    @classmethod
    def for_constant(cls, sigma: float = 1.0, dimension: int = 2) -> "GaussianEnvelope":
        """Tightest one-parameter pair enclosing the exact kernel of constant σ

        For σ = 1 and N = 2 this is (1/(4π), 4).
        """
        prefactor = (4.0 * math.pi * sigma) ** (-dimension / 2)
        width = 4.0 * sigma
        return cls(min(prefactor, width), max(prefactor, width), dimension)

    @property
    def q(self) -> float:
        return (self.dimension + 2) / 2

    def lower(self, distance_sq, t):
        n = self.dimension
        return self.lam * t ** (-n / 2) * np.exp(-distance_sq / (self.lam * t))

    def upper(self, distance_sq, t):
        n = self.dimension
        return self.Lam * t ** (-n / 2) * np.exp(-distance_sq / (self.Lam * t))


def check_medium_inequality(alpha: float, beta: float, envelope: GaussianEnvelope) -> bool:
    """β λ^q > α Λ^q with q = (N+2)/2"""
    if alpha <= 0 or beta <= 0:
        raise ValueError("Spherical measures must be positive")
    q = envelope.q
    return beta * envelope.lam**q > alpha * envelope.Lam**q


def key_inequality(
    alpha: float, beta: float, epsilon: float, envelope: GaussianEnvelope
) -> bool:
    """[(1-ε)β + εα] λ^q > [(1-ε)α + εβ] Λ^q"""
    q = envelope.q
    high = ((1 - epsilon) * beta + epsilon * alpha) * envelope.lam**q
    low = ((1 - epsilon) * alpha + epsilon * beta) * envelope.Lam**q
    return high > low


def epsilon_threshold(alpha: float, beta: float, envelope: GaussianEnvelope) -> float:
    """ε* such that the key inequality holds exactly for 0 < ε < ε*"""
    if beta <= alpha or not check_medium_inequality(alpha, beta, envelope):
        raise NotSatisfiable(
            f"β λ^q > α Λ^q fails for α={alpha:.6g}, β={beta:.6g}, "
            f"λ={envelope.lam:.6g}, Λ={envelope.Lam:.6g}"
        )
    q = envelope.q
    lam_q, Lam_q = envelope.lam**q, envelope.Lam**q
    return (beta * lam_q - alpha * Lam_q) / ((beta - alpha) * (lam_q + Lam_q))


def solve_delta(N: int, epsilon: float, ratio: float) -> float:
    """δ ∈ (0, 1) with ∫_δ^{δR} e^{-s²}s^{N-1} ds = (1-ε) I_N

    δ ↦ ∫_δ^{δR} rises to a single peak at δ_p = √(N ln R / (R²-1)) and
    then decays; the root is taken on the decaying branch, which is the
    one tending to √(-ln(1-ε)) as R → ∞ when N = 2. When that root would
    need δ ≥ 1 the rising branch supplies it instead.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("ε must lie in (0, 1)")
    if ratio <= 1.0:
        raise ValueError("R must exceed 1")
    target = (1.0 - epsilon) * moment_integral(N)

    def excess(delta):
        return truncated_moment(N, delta, delta * ratio) - target

    peak = min(math.sqrt(N * math.log(ratio) / (ratio * ratio - 1.0)), 1.0)
    if excess(peak) < 0.0:
        raise Infeasible(
            f"No δ < 1 solves the shell equation for N={N}, ε={epsilon}, R={ratio}: "
            f"the window integral stays below (1-ε)·I_N"
        )
    if peak < 1.0 and excess(1.0) < 0.0:
        return float(optimize.bisect(excess, peak, 1.0, xtol=1e-15, maxiter=200))
    # excess → -target < 0 as δ → 0, so the rising branch brackets a root
    return float(optimize.bisect(excess, 0.0, peak, xtol=1e-15, maxiter=200))


@dataclass(frozen=True)
class OscillationParams:
    dimension: int
    alpha: float
    beta: float
    epsilon: float
    delta: float
    ratio: float
    envelope: GaussianEnvelope

    def __post_init__(self):
        if self.dimension != self.envelope.dimension:
            raise ValueError("Envelope dimension does not match")
        if not 0.0 < self.alpha < self.beta:
            raise ValueError("Spherical measures must satisfy 0 < α < β")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("ε must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0 < self.ratio:
            raise ValueError("Need 0 < δ < 1 < R")
        window = truncated_moment(self.dimension, self.delta, self.delta * self.ratio)
        if abs(window - (1.0 - self.epsilon) * moment_integral(self.dimension)) > ESSENCE_TOL:
            raise ValueError("δ and R do not solve the shell equation for this ε")

    @classmethod
    def build(
        cls,
        alpha: float,
        beta: float,
        ratio: float,
        envelope: GaussianEnvelope,
        epsilon: Optional[float] = None,
    ) -> "OscillationParams":
        """Fill in ε (ε*/2 unless given) and δ from the shell equation"""
        if epsilon is None:
            epsilon = 0.5 * epsilon_threshold(alpha, beta, envelope)
            log(f"Chose ε = ε*/2 = {epsilon:.6g}")
        delta = solve_delta(envelope.dimension, epsilon, ratio)
        return cls(envelope.dimension, alpha, beta, epsilon, delta, ratio, envelope)

    @property
    def key_inequality(self) -> bool:
        return key_inequality(self.alpha, self.beta, self.epsilon, self.envelope)

    def radius(self, n: int) -> float:
        return 0.0 if n == 0 else self.delta * float(self.ratio) ** (n - 1)

    def as_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "envelope"}
        out.update(lam=self.envelope.lam, Lam=self.envelope.Lam)
        return out


@dataclass(frozen=True)
class BoundReport:
    floor: float
    ceiling: float
    limsup_lower: float
    liminf_upper: float
    gap_certified: bool

    def as_dict(self) -> dict:
        return asdict(self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.as_dict()])

    def render(self) -> str:
        rows = [
            ("floor (u(0,t) for all t)", self.floor),
            ("limsup lower bound", self.limsup_lower),
            ("liminf upper bound", self.liminf_upper),
            ("ceiling (1 - complement floor)", self.ceiling),
        ]
        lines = [f"{label:<34}{value:>18.10f}" for label, value in rows]
        lines.append(f"{'gap certified':<34}{str(self.gap_certified):>18}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ProbeSchedule:
    """t_n (n = 1, 2, ...) where u(0, ·) is pushed up, T_n (n = 2, 3, ...) where it is
    pushed down"""

    t_n: np.ndarray
    T_n: np.ndarray

    def interleaved(self):
        labelled = [(f"t_{n + 1}", float(t)) for n, t in enumerate(self.t_n)]
        labelled += [(f"T_{n + 2}", float(t)) for n, t in enumerate(self.T_n)]
        return sorted(labelled, key=lambda item: item[1])


def probe_times(
    params: OscillationParams, n_max: int, width: Optional[float] = None
) -> ProbeSchedule:
    """t_n = R^{4(n-1)}/λ and T_n = R^{2(2n-3)}/Λ

    :param width: use this exponent scale instead of λ and Λ, e.g. 4σ to
        place the probes on the clock of the exact constant-σ kernel
    """
    lam = params.envelope.lam if width is None else width
    Lam = params.envelope.Lam if width is None else width
    return schedule_times(params.ratio, lam, Lam, n_max)


def schedule_times(ratio: float, lam: float, Lam: float, n_max: int) -> ProbeSchedule:
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    n = np.arange(1, n_max + 1)
    m = np.arange(2, n_max + 1)
    R = float(ratio)
    return ProbeSchedule(R ** (4.0 * (n - 1)) / lam, R ** (2.0 * (2 * m - 3)) / Lam)


def shell_moment_series(
    N: int,
    alpha: float,
    beta: float,
    delta: float,
    ratio: float,
    width: float,
    t: float,
    n_shells: Optional[int] = None,
    tol: float = SERIES_TOL,
) -> float:
    """Σ_n measure(n) ∫_{r_n/√(wt)}^{r_{n+1}/√(wt)} e^{-s²}s^{N-1} ds

    measure(n) is α on even shells and β on odd shells; summation stops
    after `n_shells` shells or once the remaining tail is below `tol`.
    """
    if t <= 0 or width <= 0:
        raise ValueError("Time and width must be positive")
    scale = math.sqrt(width * t)
    heavier = max(alpha, beta)
    total, n = 0.0, 0
    inner = 0.0
    while n < (MAX_SHELLS if n_shells is None else n_shells):
        outer = delta * float(ratio) ** n / scale
        total += (alpha if n % 2 == 0 else beta) * truncated_moment(N, inner, outer)
        n += 1
        if heavier * truncated_moment(N, outer, math.inf) < tol:
            break
        inner = outer
    return total


def shell_cap_for(
    delta: float, ratio: float, width: float, t: float, threshold: float = 1e-6
) -> int:
    """Fewest shells such that the kernel e^{-r²/(wt)} has dropped below `threshold`"""
    n = 1
    while math.exp(-((delta * float(ratio) ** (n - 1)) ** 2) / (width * t)) >= threshold:
        n += 1
    return n


def series_u0_constant_sigma(
    spec: OscillatoryDomainSpec, sigma: float, t: float, tol: float = SERIES_TOL
) -> float:
    """Exact u(0, t) on the shell domain for constant conductivity (N = 2)

    The kernel is radial, so each sector contributes its angular fraction
    times the radial mass e^{-a²/4σt} - e^{-b²/4σt} of its shell.
    """
    if sigma <= 0 or t <= 0:
        raise ValueError("Conductivity and time must be positive")
    radii = spec.radii
    spread = 4.0 * sigma * t
    total = 0.0
    for n in range(len(radii) - 1):
        inner = math.exp(-radii[n] ** 2 / spread)
        if inner < tol:
            break
        outer = math.exp(-radii[n + 1] ** 2 / spread)
        total += spec.base_of(n).measure * (inner - outer)
    return total / (2.0 * math.pi)


def quadrature_u0_constant_sigma(
    spec: OscillatoryDomainSpec, sigma: float, t: float
) -> float:
    """Same quantity as `series_u0_constant_sigma`, by 2-D quadrature shell by shell"""
    spread = 4.0 * sigma * t
    reach = 12.0 * math.sqrt(spread)

    def integrand(r, theta):
        return math.exp(-r * r / spread) * r / (math.pi * spread)

    radii = spec.radii
    total = 0.0
    for n in range(len(radii) - 1):
        if radii[n] > reach and math.exp(-radii[n] ** 2 / spread) < 1e-16:
            break
        arc = spec.base_of(n)
        lo, hi = radii[n], min(radii[n + 1], radii[n] + reach)
        value, _ = integrate.dblquad(
            integrand,
            arc.center.angle - arc.half_width,
            arc.center.angle + arc.half_width,
            lo,
            hi,
            epsabs=1e-13,
            epsrel=1e-11,
        )
        total += value
    return total


def heat_kernel(x, xi, t, sigma: float = 1.0, dimension: int = 2):
    """Fundamental solution of u_t = σΔu in ℝ^N"""
    diff = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    distance_sq = np.sum(diff * diff, axis=-1)
    spread = 4.0 * sigma * np.asarray(t, dtype=float)
    return (math.pi * spread) ** (-dimension / 2) * np.exp(-distance_sq / spread)


def envelope_check(g_value, x, xi, t, envelope: GaussianEnvelope):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("Time must be positive")
    diff = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    distance_sq = np.sum(diff * diff, axis=-1)
    g = np.asarray(g_value, dtype=float)
    ok = (envelope.lower(distance_sq, t) <= g * (1 + ENVELOPE_SLACK)) & (
        g <= envelope.upper(distance_sq, t) * (1 + ENVELOPE_SLACK)
    )
    return bool(ok) if np.ndim(ok) == 0 else ok


def gaussian_tail(
    N: int, prefactor: float, width: float, radius: float, t: float
) -> float:
    """Mass of prefactor·t^{-N/2}·e^{-|ξ|²/(width·t)} outside the ball of given radius"""
    radius = max(radius, 0.0)
    scaled = radius / math.sqrt(width * t)
    return (
        prefactor
        * width ** (N / 2)
        * sphere_measure(N)
        * truncated_moment(N, scaled, math.inf)
    )


def kernel_tail(sigma: float, radius: float, t: float, dimension: int = 2) -> float:
    """Mass of the exact constant-σ kernel outside a ball; e^{-ρ²/4σt} in the plane"""
    prefactor = (4.0 * math.pi * sigma) ** (-dimension / 2)
    return gaussian_tail(dimension, prefactor, 4.0 * sigma, radius, t)


def oscillation_bounds(params: OscillationParams) -> BoundReport:
    env = params.envelope
    q, moment = env.q, moment_integral(params.dimension)
    a, b, eps = params.alpha, params.beta, params.epsilon
    lam_q, Lam_q = env.lam**q, env.Lam**q

    limsup_lower = lam_q * ((1 - eps) * b + eps * a) * moment
    liminf_upper = Lam_q * ((1 - eps) * a + eps * b) * moment
    return BoundReport(
        floor=lam_q * a * moment,
        ceiling=1.0 - lam_q * (sphere_measure(params.dimension) - b) * moment,
        limsup_lower=limsup_lower,
        liminf_upper=liminf_upper,
        gap_certified=bool(limsup_lower > liminf_upper),
    )


def series_bounds_at(params: OscillationParams, t: float, tol: float = SERIES_TOL):
    """(λ-series, Λ-series) bracketing u(0, t) for every σ the envelope admits"""
    env = params.envelope
    q = env.q

    def series(width):
        return shell_moment_series(
            params.dimension,
            params.alpha,
            params.beta,
            params.delta,
            params.ratio,
            width,
            t,
            tol=tol,
        )

    return env.lam**q * series(env.lam), env.Lam**q * series(env.Lam)
