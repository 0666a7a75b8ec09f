"""Phase domains in the plane, represented by vectorized indicator functions.

Directions live on the unit circle and are stored as angles in [0, 2π).
Every indicator accepts a single point of shape ``(2,)`` (and returns a
``bool``) or an array of points of shape ``(..., 2)`` (and returns a
boolean array of shape ``(...)``).
"""

__all__ = [
    "Direction",
    "ArcRegion",
    "RegionSet",
    "ConeDomain",
    "SandwichSpec",
    "SandwichReport",
    "OscillatoryDomainSpec",
    "PhaseDomain",
    "ConductivityField",
    "arc_measure",
    "is_starshaped",
    "cone_indicator",
    "translate_inclusion_check",
    "sandwich_check",
    "sandwich_domain",
    "shell_radius",
    "oscillatory_indicator",
    "conductivity_at",
    "rescale_domain",
    "complement",
    "half_plane",
    "ball",
    "everywhere",
    "nowhere",
    "sample_disc",
]

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence, Tuple, Union
import warnings

import numpy as np
from scipy.stats import qmc

from .errors import AntipodeInRegion, InvalidSpec, PNotInRegion
from .log import make_log


log = make_log("geometry")

TWO_PI = 2.0 * np.pi
ANGLE_TOL = 1e-12
DEFAULT_SHELL_CAP = 32
KINDS = ("cone", "sandwich", "oscillatory", "custom")


def canonical_angle(angle):
    a = np.mod(angle, TWO_PI)
    # np.mod can round a tiny negative angle up to exactly 2π
    return np.where(a >= TWO_PI, a - TWO_PI, a)


def angular_distance(a, b):
    """Length of the shorter arc between two angles, in [0, π]"""
    return np.abs(np.mod(np.asarray(a) - b + np.pi, TWO_PI) - np.pi)


def as_points(x) -> np.ndarray:
    points = np.asarray(x, dtype=float)
    if points.ndim == 0 or points.shape[-1] != 2:
        raise ValueError(f"Expected planar points of shape (..., 2), got {points.shape}")
    return points


def point_angles(points: np.ndarray) -> np.ndarray:
    return canonical_angle(np.arctan2(points[..., 1], points[..., 0]))


def _scalar_or_array(result, points):
    return bool(result) if points.ndim == 1 else result


@dataclass(frozen=True, eq=False)
class Direction:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(canonical_angle(float(self.angle))))

    def __eq__(self, other):
        if not isinstance(other, Direction):
            return NotImplemented
        return bool(angular_distance(self.angle, other.angle) <= ANGLE_TOL)

    __hash__ = None

    @property
    def vector(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def antipode(self) -> "Direction":
        return Direction(self.angle + np.pi)

    def perpendicular(self) -> "Direction":
        return Direction(self.angle + np.pi / 2)


def _direction(value) -> Direction:
    return value if isinstance(value, Direction) else Direction(value)


@dataclass(frozen=True)
class ArcRegion:
    """Open arc of the unit circle, `half_width` radians on each side of `center`"""

    center: Direction
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", _direction(self.center))
        if not 0.0 < self.half_width <= np.pi:
            raise ValueError(f"Arc half width must lie in (0, π], got {self.half_width}")

    @property
    def measure(self) -> float:
        return 2.0 * self.half_width

    def contains(self, angles):
        return angular_distance(angles, self.center.angle) < self.half_width

    def overlaps(self, other: "ArcRegion") -> bool:
        gap = angular_distance(self.center.angle, other.center.angle)
        return bool(gap < self.half_width + other.half_width - ANGLE_TOL)

    def covers(self, other: "ArcRegion") -> bool:
        offset = angular_distance(self.center.angle, other.center.angle)
        return bool(offset + other.half_width <= self.half_width + ANGLE_TOL)


@dataclass(frozen=True)
class RegionSet:
    """Finite union of pairwise disjoint open arcs, sorted by center angle"""

    arcs: Tuple[ArcRegion, ...] = ()

    def __post_init__(self):
        arcs = tuple(
            sorted(
                (a if isinstance(a, ArcRegion) else ArcRegion(*a) for a in self.arcs),
                key=lambda a: a.center.angle,
            )
        )
        for i, first in enumerate(arcs):
            for second in arcs[i + 1 :]:
                if first.overlaps(second):
                    raise ValueError("Arcs of a region set must be pairwise disjoint")
        if sum(a.measure for a in arcs) > TWO_PI + ANGLE_TOL:
            raise ValueError("Total arc measure exceeds 2π")
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def of(cls, *arcs: Union[ArcRegion, Sequence[float]]) -> "RegionSet":
        return cls(tuple(arcs))

    @property
    def measure(self) -> float:
        return float(sum(a.measure for a in self.arcs))

    def contains(self, angles):
        angles = np.asarray(angles, dtype=float)
        inside = np.zeros(angles.shape, dtype=bool)
        for arc in self.arcs:
            inside |= arc.contains(angles)
        return inside


def _region(value) -> RegionSet:
    if isinstance(value, RegionSet):
        return value
    if isinstance(value, ArcRegion):
        return RegionSet((value,))
    return RegionSet(tuple(value))


def arc_measure(region: Union[RegionSet, ArcRegion]) -> float:
    """Total arc length; this is ℋ¹ of the region"""
    return float(region.measure)


def is_starshaped(region, p) -> bool:
    """Whether every shortest geodesic from a point of `region` to `p` stays in `region`

    On the circle this holds iff the region is one arc containing `p` but
    not its antipode: the sub-arc from ω to p then avoids −p and is
    therefore the shorter one. A region of several arcs is never
    starshaped, whether or not it contains −p.
    """
    region, p = _region(region), _direction(p)
    if not region.contains(p.angle):
        raise PNotInRegion(f"p = {p.angle:.6g} does not belong to the region")
    if len(region.arcs) > 1:
        return False
    if region.contains(p.antipode().angle):
        raise AntipodeInRegion(f"-p = {p.antipode().angle:.6g} belongs to the region")
    return True


@dataclass(frozen=True)
class ConeDomain:
    base: RegionSet

    def __post_init__(self):
        base = _region(self.base)
        if any(a.half_width >= np.pi for a in base.arcs):
            raise ValueError("A cone base must have a nonempty boundary (half width < π)")
        object.__setattr__(self, "base", base)


def cone_indicator(cone: ConeDomain, x):
    points = as_points(x)
    radius = np.hypot(points[..., 0], points[..., 1])
    inside = (radius > 0.0) & cone.base.contains(point_angles(points))
    return _scalar_or_array(inside, points)


def translate_inclusion_check(cone: ConeDomain, p, s: float, samples) -> bool:
    """Check x ∈ Ω_A ⟹ x + s·p ∈ Ω_A at every sample, i.e. Ω_A ⊂ Ω_A − s·p"""
    if s <= 0:
        raise ValueError("The translation length must be positive")
    points = as_points(samples).reshape(-1, 2)
    inside = cone_indicator(cone, points)
    moved = points[inside] + s * _direction(p).vector
    return bool(np.all(cone_indicator(cone, moved)))


def sample_disc(count: int, radius: float) -> np.ndarray:
    """Deterministic quasi-uniform points in the disc of given radius (Halton sequence)"""
    if count < 1:
        raise ValueError("At least one sample is required")
    u = qmc.Halton(d=2, scramble=False).random(count)
    r = radius * np.sqrt(u[:, 0])
    theta = TWO_PI * u[:, 1]
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class SandwichSpec:
    """Ω with Ω_A ⊂ Ω ⊂ Ω_A − h·p; `recipe` records how `omega` was built"""

    base: RegionSet
    apex_dir: Direction
    offset: float
    omega: Callable[[np.ndarray], np.ndarray]
    recipe: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "base", _region(self.base))
        object.__setattr__(self, "apex_dir", _direction(self.apex_dir))
        if self.offset <= 0:
            raise ValueError("The sandwich offset h must be positive")

    @property
    def cone(self) -> ConeDomain:
        return ConeDomain(self.base)


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    witnesses: np.ndarray
    checked: int


def sandwich_check(
    spec: SandwichSpec, sample_count: int = 100_000, radius_cap: Optional[float] = None
) -> SandwichReport:
    """Verify Ω_A ⊂ Ω ⊂ Ω_A − h·p on quasi-uniform samples of a disc

    :param spec: the sandwich domain
    :param sample_count: number of Halton points
    :param radius_cap: disc radius, 50·h by default
    """
    if not is_starshaped(spec.base, spec.apex_dir):
        raise InvalidSpec("The cone base is not starshaped with respect to p")
    radius_cap = 50.0 * spec.offset if radius_cap is None else radius_cap
    points = sample_disc(sample_count, radius_cap)

    cone = spec.cone
    in_cone = cone_indicator(cone, points)
    in_omega = np.asarray(spec.omega(points), dtype=bool)
    in_slab = cone_indicator(cone, points + spec.offset * spec.apex_dir.vector)

    violations = (in_cone & ~in_omega) | (in_omega & ~in_slab)
    witnesses = points[violations]
    if len(witnesses):
        log(f"Sandwich condition violated at {len(witnesses)} of {sample_count} samples")
    return SandwichReport(
        passed=not len(witnesses), witnesses=witnesses, checked=sample_count
    )


def sandwich_domain(
    base,
    p,
    h: float,
    fraction: float = 0.5,
    bump_center: Optional[Sequence[float]] = None,
    bump_radius: float = 0.0,
) -> SandwichSpec:
    """Ω = (Ω_A − fraction·h·p) ∪ (bump ∩ (Ω_A − h·p))

    Clipping the bump to the outer translate keeps the sandwich condition
    true whatever the bump is.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("The translate fraction must lie in [0, 1]")
    cone, p = ConeDomain(_region(base)), _direction(p)
    shift = fraction * h * p.vector
    outer = h * p.vector
    center = None if bump_center is None else np.asarray(bump_center, dtype=float)

    def omega(x):
        points = as_points(x)
        inside = np.asarray(cone_indicator(cone, points + shift))
        if center is not None and bump_radius > 0:
            near = np.hypot(*np.moveaxis(points - center, -1, 0)) < bump_radius
            inside = inside | (near & np.asarray(cone_indicator(cone, points + outer)))
        return _scalar_or_array(inside, points)

    recipe = {
        "fraction": fraction,
        "bump_center": None if center is None else center.tolist(),
        "bump_radius": bump_radius,
    }
    return SandwichSpec(cone.base, p, h, omega, recipe)


@dataclass(frozen=True)
class OscillatoryDomainSpec:
    """Alternating sectors over A (even shells) and B (odd shells)

    Shell E_n spans radii [r_n, r_{n+1}] with r_0 = 0, r_n = δR^{n−1};
    `n_max` shells E_0, ..., E_{n_max−1} are kept and Ω is empty beyond
    r_{n_max}. ``n_max=None`` asks for all shells and is truncated.
    """

    inner: ArcRegion
    outer: ArcRegion
    delta: float
    ratio: float
    n_max: Optional[int] = DEFAULT_SHELL_CAP

    def __post_init__(self):
        for name in ("inner", "outer"):
            value = getattr(self, name)
            if not isinstance(value, ArcRegion):
                object.__setattr__(self, name, ArcRegion(*value))
        if not 0.0 < self.delta < 1.0 < self.ratio:
            raise ValueError("Shell radii need 0 < δ < 1 < R")
        if not self.outer.covers(self.inner):
            raise ValueError("The inner arc A must lie inside the outer arc B")
        if self.outer.half_width >= np.pi:
            raise ValueError("The outer arc B must be a proper subset of the circle")
        if self.n_max is not None:
            if self.n_max < 1:
                raise ValueError("At least one shell is required")
            if not np.isfinite(self.delta * float(self.ratio) ** (self.n_max - 1)):
                raise ValueError("Shell radii overflow; lower n_max")

    @property
    def alpha(self) -> float:
        return self.inner.measure

    @property
    def beta(self) -> float:
        return self.outer.measure

    @property
    def shells(self) -> int:
        if self.n_max is None:
            warnings.warn(
                f"Unbounded shell sequence truncated to {DEFAULT_SHELL_CAP} shells",
                UserWarning,
            )
            return DEFAULT_SHELL_CAP
        return self.n_max

    @property
    def radii(self) -> np.ndarray:
        """r_0, ..., r_{shells}"""
        return np.array([shell_radius(self, n) for n in range(self.shells + 1)])

    def base_of(self, n: int) -> ArcRegion:
        return self.inner if n % 2 == 0 else self.outer


def shell_radius(spec: OscillatoryDomainSpec, n: int) -> float:
    if n < 0:
        raise ValueError("Shell index must be nonnegative")
    if n == 0:
        return 0.0
    return spec.delta * float(spec.ratio) ** (n - 1)


def oscillatory_indicator(spec: OscillatoryDomainSpec, x):
    """Interior of the union of shells

    On a separating circle r = r_n both neighbouring shells cover A, so
    points there are interior exactly when their direction is in A.
    """
    points = as_points(x)
    radius = np.hypot(points[..., 0], points[..., 1])
    angles = point_angles(points)
    radii = spec.radii
    shells = len(radii) - 1

    index = np.searchsorted(radii, radius, side="right") - 1
    in_inner = spec.inner.contains(angles)
    in_outer = spec.outer.contains(angles)
    inside = np.where(index % 2 == 0, in_inner, in_outer)
    on_circle = (index >= 1) & (radius == radii[np.minimum(index, shells)])
    inside = np.where(on_circle, in_inner, inside)
    inside = inside & (radius > 0.0) & (index < shells)
    return _scalar_or_array(inside, points)


@dataclass(frozen=True)
class PhaseDomain:
    """Ω as an indicator; `spec` and `scale` keep it serializable"""

    kind: str
    indicator: Callable[[np.ndarray], np.ndarray]
    spec: Any = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Unknown domain kind {self.kind!r}; expected one of {KINDS}")

    def __call__(self, x):
        points = as_points(x)
        flat = points.reshape(-1, 2)
        inside = np.asarray(self.indicator(flat), dtype=bool).reshape(points.shape[:-1])
        return _scalar_or_array(inside, points)

    @classmethod
    def cone(cls, base) -> "PhaseDomain":
        cone = base if isinstance(base, ConeDomain) else ConeDomain(_region(base))
        return cls("cone", lambda x: cone_indicator(cone, x), cone)

    @classmethod
    def sandwich(cls, spec: SandwichSpec) -> "PhaseDomain":
        return cls("sandwich", spec.omega, spec)

    @classmethod
    def oscillatory(cls, spec: OscillatoryDomainSpec) -> "PhaseDomain":
        return cls("oscillatory", lambda x: oscillatory_indicator(spec, x), spec)

    @classmethod
    def custom(cls, indicator, spec=None) -> "PhaseDomain":
        return cls("custom", indicator, spec)


def half_plane(normal_angle: float = 0.0) -> PhaseDomain:
    """{x : x·n > 0}"""
    normal = Direction(normal_angle).vector
    return PhaseDomain.custom(
        lambda x: as_points(x) @ normal > 0.0,
        {"shape": "half_plane", "normal": float(normal_angle)},
    )


def ball(center: Sequence[float] = (0.0, 0.0), radius: float = 1.0) -> PhaseDomain:
    if radius <= 0:
        raise ValueError("Ball radius must be positive")
    c = np.asarray(center, dtype=float)
    return PhaseDomain.custom(
        lambda x: np.hypot(*np.moveaxis(as_points(x) - c, -1, 0)) < radius,
        {"shape": "ball", "center": c.tolist(), "radius": float(radius)},
    )


def everywhere() -> PhaseDomain:
    return PhaseDomain.custom(
        lambda x: np.ones(as_points(x).shape[:-1], dtype=bool), {"shape": "everywhere"}
    )


def nowhere() -> PhaseDomain:
    return PhaseDomain.custom(
        lambda x: np.zeros(as_points(x).shape[:-1], dtype=bool), {"shape": "nowhere"}
    )


def complement(domain: PhaseDomain) -> PhaseDomain:
    """ℝ² ∖ Ω; the solution started from it is 1 − u"""
    return PhaseDomain.custom(
        lambda x: ~np.asarray(domain(as_points(x)), dtype=bool),
        {"shape": "complement", "of": domain},
    )


def rescale_domain(domain: PhaseDomain, k: float) -> PhaseDomain:
    """Ω^k = {x : kx ∈ Ω}"""
    if k <= 0:
        raise ValueError("The rescaling factor must be positive")
    indicator = domain.indicator
    return replace(
        domain,
        indicator=lambda x: indicator(k * as_points(x)),
        scale=domain.scale * k,
    )


@dataclass(frozen=True)
class ConductivityField:
    """σ = σ₊ on Ω and σ₋ elsewhere, with global bounds m ≤ σ ≤ M"""

    sigma_plus: float
    sigma_minus: float
    domain: PhaseDomain
    m: Optional[float] = field(default=None)
    M: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.sigma_plus <= 0 or self.sigma_minus <= 0:
            raise ValueError("Conductivities must be positive")
        low = min(self.sigma_plus, self.sigma_minus)
        high = max(self.sigma_plus, self.sigma_minus)
        if self.m is None:
            object.__setattr__(self, "m", low)
        if self.M is None:
            object.__setattr__(self, "M", high)
        if not 0 < self.m <= low <= high <= self.M:
            raise ValueError(f"Bounds must satisfy 0 < m ≤ {low} ≤ {high} ≤ M")

    @classmethod
    def uniform(cls, domain: PhaseDomain, sigma: float = 1.0) -> "ConductivityField":
        return cls(sigma, sigma, domain)

    @property
    def two_phase(self) -> bool:
        return self.sigma_plus != self.sigma_minus

    @property
    def sigma_max(self) -> float:
        return max(self.sigma_plus, self.sigma_minus)

    def with_domain(self, domain: PhaseDomain) -> "ConductivityField":
        return replace(self, domain=domain)

    def rescaled(self, k: float) -> "ConductivityField":
        """σ^k, the conductivity of the rescaled problem"""
        return replace(self, domain=rescale_domain(self.domain, k))


def conductivity_at(field: ConductivityField, x):
    points = as_points(x)
    sigma = np.where(field.domain(points), field.sigma_plus, field.sigma_minus)
    return float(sigma) if points.ndim == 1 else sigma
