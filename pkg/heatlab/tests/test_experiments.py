import math
import warnings

import numpy as np
import pandas as pd
import pytest

from heatlab.analytic import (
    GaussianEnvelope,
    OscillationParams,
    quadrature_u0_constant_sigma,
    shell_cap_for,
    solve_delta,
)
from heatlab.errors import BudgetExceeded, InvalidSpec
from heatlab.experiments import (
    SelfSimilarityReport,
    StudyReport,
    geometric_schedule,
    oscillation_study,
    selfsimilarity_study,
    stabilization_study,
)
from heatlab.geometry import (
    ArcRegion,
    ConductivityField,
    ConeDomain,
    OscillatoryDomainSpec,
    PhaseDomain,
    SandwichSpec,
    cone_indicator,
    everywhere,
    half_plane,
    sandwich_domain,
)
from heatlab.solver import GridSpec, SolverConfig
from heatlab.tests.conftest import QUADRANT


def test_selfsim_identity_rescaling(quadrant, small_grid):
    field = ConductivityField(2.0, 1.0, quadrant)
    report = selfsimilarity_study(quadrant, field, [1.0], small_grid, t=0.2)
    assert report.passed
    assert report.table["deviation"].tolist() == [0.0]
    assert report.parameters["truncation_budget"] == pytest.approx(math.exp(-(1.8**2) / 1.6))
    assert report.summary()["study"] == "selfsim"
    assert "deviation_within_tol" in report.render()


def test_selfsim_is_thread_count_independent(quadrant, small_grid):
    field = ConductivityField(2.0, 1.0, quadrant)
    kwargs = dict(ks=[1.0, 2.0], grid=small_grid, refinements=(1,), t=0.2)
    serial = selfsimilarity_study(quadrant, field, threads=1, **kwargs)
    pooled = selfsimilarity_study(quadrant, field, threads=3, **kwargs)
    pd.testing.assert_frame_equal(serial.table, pooled.table)
    assert len(serial.table) == 2
    assert serial.table["deviation"].max() < 0.05


def test_selfsim_needs_a_cone(small_grid):
    domain = half_plane(0.0)
    with pytest.raises(InvalidSpec):
        selfsimilarity_study(domain, ConductivityField.uniform(domain), [2.0], small_grid)


def test_halving_ratios():
    table = pd.DataFrame(
        {
            "refinement": [1.0, 2.0, 1.0, 2.0],
            "spacing": [0.1, 0.05, 0.1, 0.05],
            "k": [2.0, 2.0, 4.0, 4.0],
            "deviation": [0.02, 0.01, 0.04, 0.0],
        }
    )
    report = SelfSimilarityReport("selfsim", {}, {}, table)
    assert report.halving_ratios() == {2.0: pytest.approx(0.5), 4.0: 0.0}


def test_study_report_is_abstract():
    with pytest.raises(TypeError):
        StudyReport("selfsim", {})


@pytest.mark.slow
def test_two_phase_cone_is_self_similar(quadrant):
    report = selfsimilarity_study(
        quadrant,
        ConductivityField(2.0, 1.0, quadrant),
        [2.0],
        GridSpec(3.0, 0.1),
        refinements=[1.0, 2.0],
        t=1.0,
        threads=3,
    )
    assert report.passed
    assert report.table["deviation"].max() <= 0.02
    # deviation(h/2) ≈ deviation(h)/2
    assert report.halving_ratios()[2.0] == pytest.approx(0.5, rel=0.3)


def test_geometric_schedule():
    np.testing.assert_allclose(geometric_schedule(0.25, 1.0), [0.25, 0.5, 1.0])
    times = geometric_schedule(0.01, 1.0)
    assert len(times) == 8
    assert times[-2] == pytest.approx(0.64) and times[-1] == 1.0
    with pytest.raises(ValueError):
        geometric_schedule(2.0, 1.0)


def test_stabilization_study():
    spec = sandwich_domain(QUADRANT, np.pi / 4, 0.1)
    report = stabilization_study(
        spec,
        ConductivityField.uniform(everywhere()),
        GridSpec(2.0, 0.05),
        1.0,
        config=SolverConfig(rtol=1e-12),
        sample_count=20_000,
    )
    # σ constant: the quadrant sits at 1/4
    assert report.cone_value == pytest.approx(0.25, abs=1e-6)
    gaps = report.trajectory["gap"].to_numpy()
    assert len(gaps) == 8
    assert gaps[-1] < gaps[0]
    assert report.terminal_gap == gaps[-1]
    assert report.checks["values_inside_unit_interval"]
    assert "gap_tail_nonincreasing" in report.checks
    assert len(report.holder_table) == 8 * 3
    assert "Hölder moduli" in report.render()


def test_stabilization_rejects_bad_sandwich(small_grid):
    cone = ConeDomain(QUADRANT)
    stray = np.array([-10.0, 10.0]) / np.sqrt(2)

    def omega(x):
        x = np.asarray(x)
        return cone_indicator(cone, x) | (np.hypot(*(x - stray).T) < 1.0)

    spec = SandwichSpec(QUADRANT, np.pi / 4, 0.5, omega)
    with pytest.raises(InvalidSpec):
        stabilization_study(
            spec, ConductivityField.uniform(everywhere()), small_grid, 1.0, sample_count=20_000
        )


@pytest.mark.slow
def test_two_phase_sandwich_with_bump_stabilizes():
    spec = sandwich_domain(QUADRANT, np.pi / 4, 0.1, bump_center=(1.0, 0.0), bump_radius=0.1)
    report = stabilization_study(
        spec,
        ConductivityField(2.0, 1.0, PhaseDomain.sandwich(spec)),
        GridSpec(5.0, 0.05),
        4.0,
        threads=2,
    )
    # √t_end = 2 ≥ 8·offset
    assert report.trajectory["t"].iloc[-1] == pytest.approx(4.0)
    assert report.terminal_gap <= 0.02
    assert "gap_tail_nonincreasing" not in report.checks
    assert report.passed


@pytest.fixture
def flat_spec():
    """A = B = the right half-plane, cut off at r_3 = 8"""
    half = ArcRegion(0.0, np.pi / 2)
    return OscillatoryDomainSpec(half, half, 0.5, 4.0, n_max=3)


def test_flat_shells_do_not_oscillate(flat_spec):
    report = oscillation_study(
        flat_spec,
        ConductivityField.uniform(everywhere()),
        None,
        GridSpec(10.0, 0.2),
        probe_width=4.0,
    )
    assert report.samples["label"].tolist() == ["t_1", "T_2"]
    np.testing.assert_allclose(report.samples["t"], [0.25, 4.0])
    np.testing.assert_allclose(report.samples["oracle"], [0.5, 0.5 * (1 - np.exp(-4.0))])
    assert report.oscillation < 0.02
    assert report.bounds is None
    assert report.passed


def test_oscillation_fits_shells_to_last_probe():
    half = ArcRegion(0.0, np.pi / 2)
    spec = OscillatoryDomainSpec(half, half, 0.5, 4.0, n_max=None)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = oscillation_study(
            spec,
            ConductivityField.uniform(everywhere()),
            None,
            GridSpec(10.0, 0.2),
            probe_width=4.0,
        )
    assert not [w for w in caught if issubclass(w.category, UserWarning)]
    # r_4 = 32 is far beyond the kernel at T_2 = 4
    assert shell_cap_for(0.5, 4.0, 4.0, 4.0) == 4
    assert report.parameters["shells"] == 4
    np.testing.assert_allclose(report.samples["oracle"], [0.5, 0.5], atol=1e-9)


def test_oscillation_refuses_small_box(flat_spec, small_grid):
    with pytest.raises(BudgetExceeded):
        oscillation_study(
            flat_spec, ConductivityField.uniform(everywhere()), None, small_grid, probe_width=4.0
        )


@pytest.mark.slow
def test_oscillation_matches_oracle(shell_spec):
    params = OscillationParams.build(
        shell_spec.alpha, shell_spec.beta, 4.0, GaussianEnvelope(1.0, 1.0), epsilon=0.3
    )
    report = oscillation_study(
        shell_spec,
        ConductivityField.uniform(everywhere()),
        params,
        GridSpec(10.0, 0.1),
        probe_width=4.0,
        config=SolverConfig(dt_rel=0.01),
    )
    np.testing.assert_allclose(report.samples["oracle"], [0.387, 0.227], atol=2e-3)
    np.testing.assert_allclose(report.samples["u"], [0.387, 0.227], rtol=0.03)
    assert report.checks["oracle_agreement"]
    assert report.bounds.gap_certified
    assert report.checks["pushed_up_exceeds_pushed_down"]
    assert {"lower_bound", "upper_bound"} <= set(report.samples.columns)
    assert report.oscillation > 0.1
    assert report.passed


@pytest.mark.slow
def test_oscillation_matches_oracle_at_ratio_ten():
    """A = arc(0, π/8), B = arc(0, π/2), R = 10, ε = 0.1, σ = 1"""
    spec = OscillatoryDomainSpec(
        ArcRegion(0.0, np.pi / 8),
        ArcRegion(0.0, np.pi / 2),
        solve_delta(2, 0.1, 10.0),
        10.0,
        n_max=4,
    )
    params = OscillationParams.build(
        spec.alpha, spec.beta, 10.0, GaussianEnvelope(1.0, 1.0), epsilon=0.1
    )
    t_1, T_2 = 0.25, 25.0
    margin = quadrature_u0_constant_sigma(spec, 1.0, t_1) - quadrature_u0_constant_sigma(
        spec, 1.0, T_2
    )
    assert margin > 0.25

    report = oscillation_study(
        spec,
        ConductivityField.uniform(everywhere()),
        params,
        GridSpec(22.0, 0.1),
        probe_width=4.0,
        config=SolverConfig(dt_rel=0.01),
    )
    assert report.samples["label"].tolist() == ["t_1", "T_2"]
    np.testing.assert_allclose(report.samples["t"], [t_1, T_2])
    oracle = report.samples["oracle"].to_numpy()
    np.testing.assert_allclose(oracle, [0.4625, 0.1621], atol=1e-3)
    assert oracle[0] - oracle[1] == pytest.approx(margin, abs=1e-6)
    np.testing.assert_allclose(report.samples["u"], oracle, rtol=0.03)
    assert report.parameters["truncation_budget"] <= 0.01
    assert report.checks["pushed_up_exceeds_pushed_down"]
    assert report.passed
