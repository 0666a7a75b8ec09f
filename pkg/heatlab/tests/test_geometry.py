from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from heatlab.errors import AntipodeInRegion, InvalidSpec, PNotInRegion
from heatlab.geometry import (
    ArcRegion,
    ConductivityField,
    ConeDomain,
    Direction,
    OscillatoryDomainSpec,
    PhaseDomain,
    RegionSet,
    SandwichSpec,
    arc_measure,
    ball,
    complement,
    cone_indicator,
    conductivity_at,
    everywhere,
    half_plane,
    is_starshaped,
    oscillatory_indicator,
    rescale_domain,
    sample_disc,
    sandwich_check,
    sandwich_domain,
    shell_radius,
    translate_inclusion_check,
)
from heatlab.tests.conftest import QUADRANT


def polar(r, angle):
    return np.array([r * np.cos(angle), r * np.sin(angle)])


def test_direction_is_canonical():
    assert Direction(2 * np.pi).angle == 0.0
    assert Direction(-np.pi / 2).angle == pytest.approx(3 * np.pi / 2)
    assert Direction(0.3) == Direction(0.3 + 2 * np.pi)
    assert Direction(np.pi / 4).antipode() == Direction(5 * np.pi / 4)


def test_arc_measure():
    assert arc_measure(ArcRegion(0.0, np.pi / 4)) == pytest.approx(np.pi / 2)
    two = RegionSet.of((np.pi / 2, np.pi / 8), (-np.pi / 2, np.pi / 8))
    assert arc_measure(two) == pytest.approx(np.pi / 2)
    assert arc_measure(RegionSet()) == 0.0


def test_region_set_rejects_overlaps():
    with pytest.raises(ValueError):
        RegionSet.of((0.0, 0.5), (0.8, 0.5))
    with pytest.raises(ValueError):
        ArcRegion(0.0, 0.0)


def test_is_starshaped():
    assert is_starshaped(ArcRegion(0.0, np.pi / 3), 0.0)
    assert is_starshaped(ArcRegion(0.0, 3 * np.pi / 4), 0.0)
    two = RegionSet.of((np.pi / 2, np.pi / 8), (-np.pi / 2, np.pi / 8))
    assert not is_starshaped(two, np.pi / 2)


def test_is_starshaped_errors():
    with pytest.raises(PNotInRegion):
        is_starshaped(ArcRegion(0.0, np.pi / 4), np.pi)
    with pytest.raises(AntipodeInRegion):
        is_starshaped(ArcRegion(0.0, 3 * np.pi / 4), np.pi / 2)


def test_wide_arc_geodesics_stay_inside():
    # every shortest geodesic from a point of the arc to p = 0 stays in the arc
    arc = ArcRegion(0.0, 3 * np.pi / 4)
    for omega in np.linspace(-3 * np.pi / 4 + 1e-6, 3 * np.pi / 4 - 1e-6, 301):
        path = np.linspace(omega, 0.0, 50)
        assert np.all(arc.contains(path))


def test_cone_indicator():
    cone = ConeDomain(RegionSet.of((0.0, np.pi / 4)))
    assert cone_indicator(cone, (1.0, 0.0)) is True
    assert cone_indicator(cone, (0.0, 1.0)) is False
    assert cone_indicator(cone, (0.0, 0.0)) is False
    inside = cone_indicator(cone, [[1.0, 0.0], [0.0, 1.0], [2.0, 0.5]])
    assert inside.tolist() == [True, False, True]


coordinates = st.floats(min_value=-50, max_value=50).filter(lambda v: v == 0 or abs(v) > 1e-6)


@settings(max_examples=50, deadline=None)
@given(coordinates, coordinates, st.floats(min_value=1e-3, max_value=1e3))
def test_cone_is_scale_invariant(x1, x2, k):
    cone = PhaseDomain.cone(QUADRANT)
    x = np.array([x1, x2])
    assert cone(x) == cone(k * x)


def test_translate_inclusion_check():
    cone = ConeDomain(QUADRANT)
    samples = sample_disc(2000, 5.0)
    for s in (0.1, 1.0, 10.0):
        assert translate_inclusion_check(cone, np.pi / 4, s, samples)

    not_starshaped = ConeDomain(RegionSet.of((0.0, np.pi / 8), (np.pi, np.pi / 8)))
    assert not translate_inclusion_check(not_starshaped, 0.0, 1.0, [[-1.0, 0.3]])

    with pytest.raises(ValueError):
        translate_inclusion_check(cone, np.pi / 4, 0.0, samples)


def test_sandwich_check_accepts_the_cone_itself():
    cone = ConeDomain(QUADRANT)
    spec = SandwichSpec(QUADRANT, np.pi / 4, 0.5, lambda x: cone_indicator(cone, x))
    report = sandwich_check(spec, sample_count=20_000)
    assert report.passed
    assert len(report.witnesses) == 0
    assert report.checked == 20_000


def test_sandwich_check_accepts_half_translate():
    spec = sandwich_domain(QUADRANT, np.pi / 4, 0.5)
    assert sandwich_check(spec, sample_count=20_000).passed

    bumped = sandwich_domain(QUADRANT, np.pi / 4, 0.5, bump_center=(1.0, 0.0), bump_radius=0.5)
    assert sandwich_check(bumped, sample_count=20_000).passed


def test_sandwich_check_finds_witness_in_stray_ball():
    cone = ConeDomain(QUADRANT)
    p = Direction(np.pi / 4)
    center = 10.0 * p.perpendicular().vector

    def omega(x):
        x = np.asarray(x)
        return cone_indicator(cone, x) | (np.hypot(*(x - center).T) < 1.0)

    report = sandwich_check(SandwichSpec(QUADRANT, p, 0.5, omega), sample_count=20_000)
    assert not report.passed
    assert len(report.witnesses) > 0
    assert np.all(np.hypot(*(report.witnesses - center).T) < 1.0)


def test_sandwich_check_rejects_non_starshaped_base():
    base = RegionSet.of((0.0, np.pi / 8), (np.pi, np.pi / 8))
    cone = ConeDomain(base)
    spec = SandwichSpec(base, 0.0, 0.5, lambda x: cone_indicator(cone, x))
    with pytest.raises(InvalidSpec):
        sandwich_check(spec, sample_count=1000)


@pytest.fixture
def example_spec():
    return OscillatoryDomainSpec(ArcRegion(0.0, np.pi / 8), ArcRegion(0.0, np.pi / 2), 0.3, 4.0)


def test_shell_radius(example_spec):
    assert shell_radius(example_spec, 0) == 0.0
    assert shell_radius(example_spec, 1) == pytest.approx(0.3)
    assert shell_radius(example_spec, 3) == pytest.approx(4.8)


def test_oscillatory_indicator(example_spec):
    assert oscillatory_indicator(example_spec, polar(0.1, 0.0))
    # in B but not in A, inside E_1
    assert oscillatory_indicator(example_spec, polar(0.6, 0.4))
    assert not oscillatory_indicator(example_spec, polar(0.6, 2.0))
    # E_2 is over A again
    assert not oscillatory_indicator(example_spec, polar(2.0, 0.4))
    assert oscillatory_indicator(example_spec, polar(2.0, 0.1))
    assert not oscillatory_indicator(example_spec, (0.0, 0.0))


def test_oscillatory_indicator_on_separating_circle():
    # A = arc(π/2, 0.1) sits inside B = arc(π/4, π/4 + 0.2); r_2 = 1.2
    spec = OscillatoryDomainSpec(
        ArcRegion(np.pi / 2, 0.1), ArcRegion(np.pi / 4, np.pi / 4 + 0.2), 0.3, 4.0
    )
    assert oscillatory_indicator(spec, (1.0, 0.0))
    assert not oscillatory_indicator(spec, (1.2, 0.0))
    assert not oscillatory_indicator(spec, (1.5, 0.0))
    assert oscillatory_indicator(spec, (0.0, 1.2))


def test_oscillatory_shell_cap():
    spec = OscillatoryDomainSpec(
        ArcRegion(0.0, np.pi / 8), ArcRegion(0.0, np.pi / 2), 0.3, 4.0, n_max=2
    )
    # E_0 and E_1 only; empty beyond r_2 = 1.2
    assert oscillatory_indicator(spec, polar(1.0, 0.4))
    assert not oscillatory_indicator(spec, polar(2.0, 0.1))

    unbounded = OscillatoryDomainSpec(
        ArcRegion(0.0, np.pi / 8), ArcRegion(0.0, np.pi / 2), 0.3, 4.0, n_max=None
    )
    with pytest.warns(UserWarning):
        assert unbounded.shells == 32


def test_oscillatory_spec_validation():
    with pytest.raises(ValueError):
        OscillatoryDomainSpec(ArcRegion(0.0, np.pi / 2), ArcRegion(0.0, np.pi / 8), 0.3, 4.0)
    with pytest.raises(ValueError):
        OscillatoryDomainSpec(ArcRegion(0.0, np.pi / 8), ArcRegion(0.0, np.pi / 2), 1.3, 4.0)
    with pytest.raises(ValueError):
        OscillatoryDomainSpec(ArcRegion(0.0, np.pi / 8), ArcRegion(0.0, np.pi), 0.3, 4.0)


def test_conductivity_at():
    field = ConductivityField(2.0, 1.0, PhaseDomain.cone(QUADRANT))
    assert conductivity_at(field, (1.0, 1.0)) == 2.0
    assert conductivity_at(field, (-1.0, 1.0)) == 1.0
    assert field.m == 1.0 and field.M == 2.0

    uniform = ConductivityField.uniform(everywhere(), 3.0)
    assert np.all(conductivity_at(uniform, sample_disc(100, 4.0)) == 3.0)

    with pytest.raises(ValueError):
        ConductivityField(2.0, 1.0, everywhere(), m=1.5)


def test_rescale_domain():
    cone = PhaseDomain.cone(QUADRANT)
    points = sample_disc(500, 3.0)
    for k in (0.5, 2.0, 7.0):
        assert np.array_equal(rescale_domain(cone, k)(points), cone(points))

    half = rescale_domain(ball((0.0, 0.0), 1.0), 2.0)
    assert half((0.45, 0.0))
    assert not half((0.55, 0.0))
    assert half.scale == 2.0


def test_rescaled_sandwich_tends_to_cone():
    spec = sandwich_domain(QUADRANT, np.pi / 4, 0.5)
    domain = PhaseDomain.sandwich(spec)
    x = np.array([-0.01, 0.3])
    assert domain(x)
    values = [rescale_domain(domain, k)(x) for k in (1.0, 10.0, 100.0)]
    assert values == [True, True, False]
    assert not PhaseDomain.cone(QUADRANT)(x)


def test_custom_shapes():
    assert half_plane(0.0)((1.0, 5.0))
    assert not half_plane(0.0)((-1.0, 5.0))
    outside = complement(ball((0.0, 0.0), 1.0))
    assert outside((2.0, 0.0)) and not outside((0.5, 0.0))
    assert everywhere()(np.zeros((3, 4, 2))).shape == (3, 4)
