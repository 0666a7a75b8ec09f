import math

from marshmallow import ValidationError
import numpy as np
import pytest
import yaml

from heatlab.analytic import OscillationParams
from heatlab.config import (
    SECTIONS,
    DomainSchema,
    SolverSchema,
    domain_from_config,
    domain_to_config,
    load_section,
)
from heatlab.errors import ConfigError
from heatlab.geometry import ConductivityField, PhaseDomain, sample_disc
from heatlab.solver import GridSpec, SolverConfig
from launcher.config import load_config, prepare, section_of


QUARTER = math.pi / 4


@pytest.fixture
def defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return load_config()


@pytest.mark.parametrize("section", sorted(SECTIONS))
def test_default_sections_load(defaults, section):
    data = load_section(section, section_of(defaults, section))
    assert isinstance(data, dict)


def test_run_sections_build_objects(defaults):
    data = load_section("simulate", section_of(defaults, "simulate"))
    assert isinstance(data["domain"], PhaseDomain)
    assert isinstance(data["field"], ConductivityField)
    assert isinstance(data["grid"], GridSpec)
    assert isinstance(data["solver"], SolverConfig)
    assert data["solver"].dt_max == math.inf
    assert "conductivity" not in data


def test_oscillate_section_builds_params(defaults):
    data = load_section("experiment.oscillate", section_of(defaults, "experiment.oscillate"))
    params = data["params"]
    assert isinstance(params, OscillationParams)
    assert params.epsilon == pytest.approx(0.3, abs=1e-9)
    assert params.delta == data["domain"].spec.delta


def test_unknown_keys_are_rejected(defaults):
    section = dict(section_of(defaults, "simulate"), t_final=3.0)
    with pytest.raises(ConfigError, match="t_final"):
        load_section("simulate", section)
    with pytest.raises(ConfigError):
        load_section("nonsense", {})


@pytest.mark.parametrize(
    "domain",
    [
        {"kind": "cone", "base": [[0.0, 0.5]], "offset": 1.0},
        {"kind": "cone"},
        {"kind": "oscillatory", "inner": [0.0, 0.2], "outer": [0.0, 1.0], "ratio": 4.0},
        {"kind": "custom", "shape": "complement"},
        {"kind": "custom", "shape": "square"},
        {"kind": "hyperbolic"},
    ],
)
def test_bad_domains(domain):
    with pytest.raises(ConfigError):
        load_section("geometry", {"domain": domain})


def test_bad_objects_surface_as_config_errors():
    with pytest.raises(ConfigError, match="grid"):
        load_section(
            "simulate",
            {
                "domain": {"kind": "custom", "shape": "everywhere"},
                "conductivity": {"sigma_plus": 1.0, "sigma_minus": 1.0},
                "grid": {"half_extent": 1.0, "spacing": 0.1},
                "t_end": 1.0,
            },
        )
    with pytest.raises(ConfigError):
        load_section("experiment.selfsim", {})


def test_oscillatory_domain_from_epsilon():
    domain = DomainSchema().load(
        dict(kind="oscillatory", inner=[0.0, 0.2], outer=[0.0, 1.0], ratio=4.0, epsilon=0.3)
    )
    assert domain.spec.delta == pytest.approx(0.593, abs=2e-3)
    assert domain.spec.n_max == 32


@pytest.mark.parametrize(
    "config",
    [
        {"kind": "cone", "base": [[QUARTER, QUARTER]]},
        dict(
            kind="sandwich",
            base=[[QUARTER, QUARTER]],
            apex_dir=QUARTER,
            offset=0.2,
            bump_center=[1.0, 0.0],
            bump_radius=0.1,
        ),
        dict(kind="oscillatory", inner=[0.0, 0.2], outer=[0.0, 1.0], delta=0.4, ratio=3.0, n_max=4),
        dict(
            kind="custom",
            shape="complement",
            of={"kind": "custom", "shape": "ball", "center": [0.5, 0.0], "radius": 2.0},
        ),
        {"kind": "custom", "shape": "half_plane", "normal": 1.0, "scale": 2.0},
    ],
)
def test_domain_config_round_trip(config):
    domain = DomainSchema().load(config)
    again = domain_from_config(domain_to_config(domain))
    points = sample_disc(500, 6.0)
    assert np.array_equal(domain(points), again(points))
    assert again.kind == config["kind"]


def test_unnamed_custom_domain_cannot_be_saved():
    with pytest.raises(ConfigError):
        domain_to_config(PhaseDomain.custom(lambda x: x[..., 0] > 0))


def test_solver_defaults():
    config = SolverSchema().load({})
    assert config == SolverConfig()
    with pytest.raises(ValidationError):
        SolverSchema().load({"theta": 0.2})


def test_load_config_merges_file_and_overrides(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    user = tmp_path / "mine.yaml"
    user.write_text(yaml.safe_dump({"simulate": {"grid": {"spacing": 0.1}}}))
    config = load_config(user, {"simulate.t_end": 2.0, "logging.level": "DEBUG"})
    assert config["simulate"]["grid"] == {"half_extent": 8.0, "spacing": 0.1}
    assert config["simulate"]["t_end"] == 2.0
    assert config["logging"]["level"] == "DEBUG"


def test_load_config_picks_up_local_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "heatlab.yaml").write_text("params:\n  ratio: 20.0\n")
    assert load_config()["params"]["ratio"] == 20.0


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("params: [unclosed\n")
    with pytest.raises(ConfigError, match="Could not parse"):
        load_config(broken)
    with pytest.raises(ConfigError):
        section_of({"experiment": {}}, "experiment.selfsim")


def test_prepare_applies_flag_overrides(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    data = prepare("simulate", overrides={"t_end": 1.5, "stem": "short"})
    assert data["t_end"] == 1.5
    assert data["stem"] == "short"
    assert isinstance(data["field"], ConductivityField)
