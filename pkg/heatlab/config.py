"""Marshmallow schemas for every configuration section.

Unknown keys are rejected everywhere. Loading a section returns a dict in
which the domain, grid, solver settings and conductivity have already
been turned into their heatlab objects.
"""

__all__ = [
    "DomainSchema",
    "GridSchema",
    "SolverSchema",
    "ConductivitySchema",
    "EnvelopeSchema",
    "ParamsSchema",
    "GeometrySchema",
    "SeriesSchema",
    "SimulateSchema",
    "SelfSimSchema",
    "StabilizeSchema",
    "OscillateSchema",
    "SECTIONS",
    "load_section",
    "domain_from_config",
    "domain_to_config",
]

import math

from marshmallow import (
    RAISE,
    Schema,
    ValidationError,
    fields,
    post_load,
    validate,
    validates_schema,
)

from .analytic import (
    GaussianEnvelope,
    OscillationParams,
    moment_integral,
    solve_delta,
    truncated_moment,
)
from .errors import ConfigError
from .geometry import (
    KINDS,
    ArcRegion,
    ConductivityField,
    OscillatoryDomainSpec,
    PhaseDomain,
    RegionSet,
    ball,
    complement,
    everywhere,
    half_plane,
    nowhere,
    rescale_domain,
    sandwich_domain,
)
from .solver import GridSpec, SolverConfig


SHAPES = ("half_plane", "ball", "everywhere", "nowhere", "complement")
KIND_KEYS = {
    "cone": {"base"},
    "sandwich": {"base", "apex_dir", "offset", "fraction", "bump_center", "bump_radius"},
    "oscillatory": {"inner", "outer", "delta", "epsilon", "ratio", "n_max"},
    "custom": {"shape", "normal", "center", "radius", "of"},
}
REQUIRED_KEYS = {
    "cone": {"base"},
    "sandwich": {"base", "apex_dir", "offset"},
    "oscillatory": {"inner", "outer", "ratio"},
    "custom": {"shape"},
}


def pair_field(**kwargs):
    return fields.List(fields.Float(), validate=validate.Length(equal=2), **kwargs)


def _as_validation_error(build, *args, **kwargs):
    try:
        return build(*args, **kwargs)
    except ValueError as e:
        raise ValidationError(str(e))


class StrictSchema(Schema):
    class Meta:
        unknown = RAISE


def domain_from_config(config: dict) -> PhaseDomain:
    """Build a PhaseDomain from its (already validated) dict description"""
    kind = config["kind"]
    if kind == "cone":
        domain = PhaseDomain.cone(RegionSet(tuple(tuple(arc) for arc in config["base"])))
    elif kind == "sandwich":
        spec = sandwich_domain(
            tuple(tuple(arc) for arc in config["base"]),
            config["apex_dir"],
            config["offset"],
            fraction=config.get("fraction", 0.5),
            bump_center=config.get("bump_center"),
            bump_radius=config.get("bump_radius", 0.0),
        )
        domain = PhaseDomain.sandwich(spec)
    elif kind == "oscillatory":
        ratio = config["ratio"]
        delta = config.get("delta")
        if delta is None:
            delta = solve_delta(2, config["epsilon"], ratio)
        spec = OscillatoryDomainSpec(
            ArcRegion(*config["inner"]),
            ArcRegion(*config["outer"]),
            delta,
            ratio,
            config.get("n_max", 32),
        )
        domain = PhaseDomain.oscillatory(spec)
    else:
        domain = _custom_from_config(config)
    scale = config.get("scale", 1.0)
    return domain if scale == 1.0 else rescale_domain(domain, scale)


def _custom_from_config(config: dict) -> PhaseDomain:
    shape = config["shape"]
    if shape == "half_plane":
        return half_plane(config.get("normal", 0.0))
    if shape == "ball":
        return ball(config.get("center", (0.0, 0.0)), config.get("radius", 1.0))
    if shape == "everywhere":
        return everywhere()
    if shape == "nowhere":
        return nowhere()
    of = config["of"]
    return complement(of if isinstance(of, PhaseDomain) else domain_from_config(of))


def domain_to_config(domain: PhaseDomain) -> dict:
    """Inverse of `domain_from_config`; custom indicators without a shape spec cannot be saved"""
    if domain.kind == "cone":
        config = {"kind": "cone", "base": _arcs(domain.spec.base)}
    elif domain.kind == "sandwich":
        spec = domain.spec
        config = {
            "kind": "sandwich",
            "base": _arcs(spec.base),
            "apex_dir": spec.apex_dir.angle,
            "offset": spec.offset,
        }
        config.update(spec.recipe or {})
        if config.get("bump_center") is None:
            config.pop("bump_center", None)
    elif domain.kind == "oscillatory":
        spec = domain.spec
        config = {
            "kind": "oscillatory",
            "inner": [spec.inner.center.angle, spec.inner.half_width],
            "outer": [spec.outer.center.angle, spec.outer.half_width],
            "delta": spec.delta,
            "ratio": spec.ratio,
            "n_max": spec.n_max,
        }
    else:
        if not isinstance(domain.spec, dict) or domain.spec.get("shape") not in SHAPES:
            raise ConfigError("This custom domain has no serializable shape")
        config = {"kind": "custom"}
        for key, value in domain.spec.items():
            config[key] = domain_to_config(value) if key == "of" else value
    if domain.scale != 1.0:
        config["scale"] = domain.scale
    return config


def _arcs(region: RegionSet):
    return [[arc.center.angle, arc.half_width] for arc in region.arcs]


class DomainSchema(StrictSchema):
    kind = fields.String(required=True, validate=validate.OneOf(KINDS))
    scale = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    base = fields.List(pair_field(), validate=validate.Length(min=1))
    apex_dir = fields.Float()
    offset = fields.Float()
    fraction = fields.Float()
    bump_center = pair_field(allow_none=True)
    bump_radius = fields.Float()
    inner = pair_field()
    outer = pair_field()
    delta = fields.Float(allow_none=True)
    epsilon = fields.Float(allow_none=True)
    ratio = fields.Float()
    n_max = fields.Integer(allow_none=True)
    shape = fields.String(validate=validate.OneOf(SHAPES))
    normal = fields.Float()
    center = pair_field()
    radius = fields.Float()
    of = fields.Nested(lambda: DomainSchema())

    @validates_schema
    def check_kind_keys(self, data, **kwargs):
        kind = data.get("kind")
        if kind not in KIND_KEYS:
            return
        given = set(data) - {"kind", "scale"}
        stray = given - KIND_KEYS[kind]
        if stray:
            raise ValidationError(f"Keys {sorted(stray)} do not apply to {kind} domains")
        missing = REQUIRED_KEYS[kind] - given
        if missing:
            raise ValidationError(f"{kind} domains need {sorted(missing)}")
        if kind == "oscillatory" and data.get("delta") is None and data.get("epsilon") is None:
            raise ValidationError("Oscillatory domains need delta or epsilon")
        if kind == "custom" and data["shape"] == "complement" and "of" not in data:
            raise ValidationError("A complement needs the domain it complements under 'of'")

    @post_load
    def make_domain(self, data, **kwargs):
        return _as_validation_error(domain_from_config, data)


class GridSchema(StrictSchema):
    half_extent = fields.Float(required=True)
    spacing = fields.Float(required=True)

    @post_load
    def make_grid(self, data, **kwargs):
        return _as_validation_error(GridSpec, **data)


class SolverSchema(StrictSchema):
    theta = fields.Float(load_default=1.0)
    dt_rel = fields.Float(load_default=0.02)
    dt_min = fields.Float(allow_none=True, load_default=None)
    dt_max = fields.Float(allow_nan=True, load_default=math.inf)
    rtol = fields.Float(load_default=1e-10)
    maxiter = fields.Integer(load_default=10_000)

    @post_load
    def make_config(self, data, **kwargs):
        return _as_validation_error(SolverConfig, **data)


class ConductivitySchema(StrictSchema):
    sigma_plus = fields.Float(required=True)
    sigma_minus = fields.Float(required=True)
    m = fields.Float(allow_none=True, load_default=None)
    M = fields.Float(allow_none=True, load_default=None)


class EnvelopeSchema(StrictSchema):
    lam = fields.Float(required=True)
    Lam = fields.Float(required=True)
    dimension = fields.Integer(load_default=2)

    @post_load
    def make_envelope(self, data, **kwargs):
        return _as_validation_error(GaussianEnvelope, **data)


class ParamsSchema(StrictSchema):
    dimension = fields.Integer(load_default=2)
    alpha = fields.Float(required=True)
    beta = fields.Float(required=True)
    ratio = fields.Float(required=True)
    epsilon = fields.Float(allow_none=True, load_default=None)
    envelope = fields.Nested(EnvelopeSchema, required=True)

    @validates_schema
    def check_dimension(self, data, **kwargs):
        if "envelope" in data and data["envelope"].dimension != data["dimension"]:
            raise ValidationError("envelope.dimension must match dimension")


class GeometrySchema(StrictSchema):
    domain = fields.Nested(DomainSchema, required=True)
    apex_dir = fields.Float(allow_none=True, load_default=None)
    sample_count = fields.Integer(load_default=100_000, validate=validate.Range(min=1))
    radius_cap = fields.Float(allow_none=True, load_default=None)


class SeriesSchema(StrictSchema):
    domain = fields.Nested(DomainSchema, required=True)
    sigma = fields.Float(load_default=1.0)
    times = fields.List(fields.Float(), required=True, validate=validate.Length(min=1))
    quadrature = fields.Boolean(load_default=False)
    stem = fields.String(load_default="series")

    @validates_schema
    def check_domain(self, data, **kwargs):
        if "domain" in data and data["domain"].kind != "oscillatory":
            raise ValidationError("The series needs an oscillatory domain")


def _make_field(data):
    conductivity = data.pop("conductivity")
    data["field"] = _as_validation_error(
        ConductivityField,
        conductivity["sigma_plus"],
        conductivity["sigma_minus"],
        data["domain"],
        conductivity["m"],
        conductivity["M"],
    )
    return data


class RunSchema(StrictSchema):
    domain = fields.Nested(DomainSchema, required=True)
    conductivity = fields.Nested(ConductivitySchema, required=True)
    grid = fields.Nested(GridSchema, required=True)
    solver = fields.Nested(SolverSchema, load_default=SolverConfig)

    @post_load
    def make_field(self, data, **kwargs):
        return _make_field(data)


class SimulateSchema(RunSchema):
    t_end = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    probes = fields.List(pair_field(), load_default=lambda: [[0.0, 0.0]])
    sample_times = fields.List(fields.Float(), allow_none=True, load_default=None)
    envelope = fields.Nested(EnvelopeSchema, allow_none=True, load_default=None)
    stem = fields.String(load_default="run")


class SelfSimSchema(RunSchema):
    ks = fields.List(fields.Float(), required=True, validate=validate.Length(min=1))
    refinements = fields.List(fields.Float(), load_default=lambda: [1.0])
    t = fields.Float(load_default=1.0)
    deviation_tol = fields.Float(load_default=0.02)

    @validates_schema
    def check_domain(self, data, **kwargs):
        if "domain" in data and data["domain"].kind != "cone":
            raise ValidationError("Self-similarity needs a cone domain")


class StabilizeSchema(RunSchema):
    t_end = fields.Float(required=True)
    schedule = fields.List(fields.Float(), allow_none=True, load_default=None)
    gap_tol = fields.Float(load_default=0.02)
    sample_count = fields.Integer(load_default=100_000)
    holder_radii = fields.List(fields.Float(), allow_none=True, load_default=None)

    @validates_schema
    def check_domain(self, data, **kwargs):
        if "domain" in data and data["domain"].kind != "sandwich":
            raise ValidationError("Stabilization needs a sandwich domain")


class OscillateSchema(RunSchema):
    envelope = fields.Nested(EnvelopeSchema, allow_none=True, load_default=None)
    n_probes = fields.Integer(load_default=1, validate=validate.Range(min=1))
    probe_width = fields.Float(allow_none=True, load_default=None)
    oracle_tol = fields.Float(load_default=0.03)
    budget_tol = fields.Float(load_default=1e-2)

    @validates_schema
    def check_domain(self, data, **kwargs):
        if "domain" in data and data["domain"].kind != "oscillatory":
            raise ValidationError("Oscillation needs an oscillatory domain")

    @post_load
    def make_field(self, data, **kwargs):
        data = _make_field(data)
        spec, envelope = data["domain"].spec, data.pop("envelope")
        data["params"] = None
        if envelope is not None and spec.alpha < spec.beta:
            # ε is whatever the shell window leaves out
            window = truncated_moment(2, spec.delta, spec.delta * spec.ratio)
            epsilon = 1.0 - window / moment_integral(2)
            data["params"] = _as_validation_error(
                OscillationParams,
                2,
                spec.alpha,
                spec.beta,
                epsilon,
                spec.delta,
                spec.ratio,
                envelope,
            )
        return data


SECTIONS = {
    "params": ParamsSchema,
    "geometry": GeometrySchema,
    "series": SeriesSchema,
    "simulate": SimulateSchema,
    "experiment.selfsim": SelfSimSchema,
    "experiment.stabilize": StabilizeSchema,
    "experiment.oscillate": OscillateSchema,
}


def load_section(section: str, data: dict) -> dict:
    """Validate one configuration section and build its objects"""
    if section not in SECTIONS:
        raise ConfigError(f"Unknown configuration section {section!r}")
    try:
        return SECTIONS[section]().load(data or {})
    except ValidationError as e:
        raise ConfigError(f"Invalid/missing parameters in {section}: {e.normalized_messages()}")
