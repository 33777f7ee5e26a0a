"""Experiment configuration and its INI representation.

An experiment file has exactly the sections ``[objective] [optim] [spectral]
[data] [log]``; every key is one field of the matching dataclass below.
Unknown sections or keys are rejected, and so are missing required keys
(only ``optim.eta`` has no default).
"""

import configparser
import dataclasses
from dataclasses import dataclass, field

from samedge.errors import ConfigError, ContractViolation
from samedge.optim import OptimConfig

SOURCES = ("synthetic_gaussian_mixture", "idx_files")
OBJECTIVE_KINDS = ("mlp", "quadratic")
CLOCKS = ("work", "wall")


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = "mlp"
    hidden: tuple = (64, 64)
    activation: str = "tanh"
    # quadratic only: dimension, optional explicit spectrum, scale of the start point
    dim: int = 10
    eigenvalues: tuple = ()
    init_scale: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class SpectralSpec:
    k: int = 3
    tol: float = 1e-6
    max_iters: int = 200
    period: int = 10


@dataclass(frozen=True)
class DatasetSpec:
    source: str = "synthetic_gaussian_mixture"
    n: int = 1000
    center: bool = True
    one_hot: bool = True
    classes: int = 5
    input_dim: int = 20
    separation: float = 1.0
    noise: float = 1.0
    images: str = ""
    labels: str = ""
    batch_size: int = 0


@dataclass(frozen=True)
class LogSpec:
    path: str = ""
    clock: str = "work"


@dataclass(frozen=True)
class ExperimentConfig:
    optim: OptimConfig
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    spectral: SpectralSpec = field(default_factory=SpectralSpec)
    data: DatasetSpec = field(default_factory=DatasetSpec)
    log: LogSpec = field(default_factory=LogSpec)

    @property
    def seed(self):
        return self.objective.seed

    def replace(self, **sections):
        return dataclasses.replace(self, **sections)

    def with_optim(self, **changes):
        return dataclasses.replace(self, optim=dataclasses.replace(self.optim, **changes))


SECTIONS = {
    "objective": ObjectiveSpec,
    "optim": OptimConfig,
    "spectral": SpectralSpec,
    "data": DatasetSpec,
    "log": LogSpec,
}

# per-key parsers; anything not listed is parsed from the dataclass annotation
_TUPLE_INT = ("objective.hidden",)
_TUPLE_FLOAT = ("objective.eigenvalues",)
_OPTIONAL_FLOAT = ("optim.divergence_threshold",)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_tuple(text, kind):
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(kind(p) for p in parts)


def parse_value(section, key, text):
    name = f"{section}.{key}"
    try:
        if name in _TUPLE_INT:
            return _parse_tuple(text, int)
        if name in _TUPLE_FLOAT:
            return _parse_tuple(text, float)
        if name in _OPTIONAL_FLOAT:
            return None if text.strip().lower() in ("", "auto", "none") else float(text)
        ftype = {f.name: f.type for f in dataclasses.fields(SECTIONS[section])}[key]
        if ftype in (bool, "bool"):
            return _parse_bool(text)
        if ftype in (int, "int"):
            return int(text)
        if ftype in (float, "float"):
            return float(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}", key=name) from None


def format_value(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def field_names(section):
    return [f.name for f in dataclasses.fields(SECTIONS[section])]


def _validate(config):
    obj, spec, data, log = config.objective, config.spectral, config.data, config.log
    checks = [
        (obj.kind in OBJECTIVE_KINDS, "objective.kind", f"must be one of {OBJECTIVE_KINDS}"),
        (obj.activation in ("relu", "tanh"), "objective.activation", "must be relu or tanh"),
        (all(h >= 1 for h in obj.hidden), "objective.hidden", "widths must be positive"),
        (obj.dim >= 1, "objective.dim", "must be >= 1"),
        (not obj.eigenvalues or len(obj.eigenvalues) == obj.dim, "objective.eigenvalues",
         "needs exactly objective.dim entries"),
        (spec.k >= 1, "spectral.k", "must be >= 1"),
        (spec.tol > 0, "spectral.tol", "must be positive"),
        (spec.max_iters >= 2, "spectral.max_iters", "must be >= 2"),
        (spec.period >= 1, "spectral.period", "must be >= 1"),
        (data.source in SOURCES, "data.source", f"must be one of {SOURCES}"),
        (data.n >= 1, "data.n", "must be >= 1"),
        (data.classes >= 1, "data.classes", "must be >= 1"),
        (data.input_dim >= 1, "data.input_dim", "must be >= 1"),
        (data.noise >= 0, "data.noise", "must be non-negative"),
        (data.batch_size >= 0, "data.batch_size", "must be non-negative"),
        (log.clock in CLOCKS, "log.clock", f"must be one of {CLOCKS}"),
    ]
    for ok, key, message in checks:
        if not ok:
            raise ConfigError(f"{key} {message}", key=key)


def config_from_mapping(mapping):
    """Build a config from ``{section: {key: text}}``, validating names and values."""
    kwargs = {}
    for section, items in mapping.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", key=section)
        known = field_names(section)
        values = {}
        for key, text in items.items():
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key}", key=f"{section}.{key}")
            values[key] = parse_value(section, key, text)
        kwargs[section] = values
    optim = kwargs.pop("optim", {})
    if "eta" not in optim:
        raise ConfigError("missing required key optim.eta", key="optim.eta")
    try:
        optim_config = OptimConfig(**optim)
        sections = {name: SECTIONS[name](**values) for name, values in kwargs.items()}
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from None
    config = ExperimentConfig(optim=optim_config, **sections)
    _validate(config)
    return config


def read_ini(path):
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load_config(path, overrides=None):
    """Read an INI file; ``overrides`` maps ``"section.key"`` to text and wins over the file."""
    try:
        mapping = read_ini(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    for dotted, text in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        mapping.setdefault(section, {})[key] = text
    return config_from_mapping(mapping)


def config_to_mapping(config):
    return {name: {f.name: format_value(getattr(getattr(config, name), f.name))
                   for f in dataclasses.fields(cls)}
            for name, cls in SECTIONS.items()}


def config_to_ini(config):
    lines = []
    for section, items in config_to_mapping(config).items():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {value}" for key, value in items.items())
        lines.append("")
    return "\n".join(lines)
