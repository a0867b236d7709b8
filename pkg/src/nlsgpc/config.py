"""INI run configuration: sections, defaults, validation and presets."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ValidationError
from .quadrature import FAMILIES, MAX_NODES
from .ssfm import SPLITTINGS

KINDS = ("single", "ensemble", "critical", "sweep", "convergence", "oracle")
SCHEMA_VERSION = 1
# "step" swaps the PDE for a sharp trapped/transmitted threshold, for checking the estimators
MODELS = ("pde", "step")


class ConfigError(ValidationError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _words(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.replace(",", " ").split())


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentSection:
    kind: str = "single"


@dataclass
class ModelSection:
    kind: str = "pde"
    threshold: float | None = None


@dataclass
class GridSection:
    half_width: float = 40.0
    n_points: int = 2048


@dataclass
class SolverSection:
    dt: float = 5e-3
    splitting: str = "strang"
    t_final: float | None = None
    checkpoint_stride: int = 0


@dataclass
class PhysicsSection:
    epsilon: float = 0.0
    amplitude: float = 1.0
    phase: float = 0.0
    x0: float = -20.0
    velocity: float = 0.0
    check_influence: bool = True


@dataclass
class ChaosSection:
    family: str = "legendre"
    nodes: int = 16
    v_a: float | None = None
    v_b: float | None = None
    sd: float = 0.1
    n_list: tuple[int, ...] = (2, 4, 8, 12, 16, 20, 24)
    l_prime: float | None = None
    threshold: float = 1e-3
    min_gap: float = 2.0


@dataclass
class ClassifySection:
    window: float = 5.0
    margin: float = 5.0


@dataclass
class OracleSection:
    tol: float = 1e-4
    v_lo: float | None = None
    v_hi: float | None = None


@dataclass
class SweepSection:
    epsilons: tuple[float, ...] = (0.3, 0.5, 1.0, 2.7, 3.0, 4.5)
    bracket_width: float = 0.25
    scan_min: float = 1e-4
    scan_max: float = 1.0
    scan_points: int = 12


@dataclass
class OutputSection:
    directory: str = "results"
    formats: tuple[str, ...] = ("csv", "json")
    trajectory: bool = False
    record_timing: bool = False


@dataclass
class RunSection:
    workers: int = 1


_PARSERS = {
    float: float,
    int: int,
    str: str,
    bool: _bool,
    "float | None": _opt_float,
    "tuple[int, ...]": _ints,
    "tuple[float, ...]": _floats,
    "tuple[str, ...]": _words,
}


@dataclass
class RunConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    model: ModelSection = field(default_factory=ModelSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    chaos: ChaosSection = field(default_factory=ChaosSection)
    classify: ClassifySection = field(default_factory=ClassifySection)
    oracle: OracleSection = field(default_factory=OracleSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)
    run: RunSection = field(default_factory=RunSection)

    @property
    def kind(self) -> str:
        return self.experiment.kind

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for sec in fields(self):
            parser[sec.name] = {k: _fmt(v) for k, v in asdict(getattr(self, sec.name)).items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def set(self, section: str, key: str, text: str):
        """Assign one value from its text form, rejecting unknown names."""
        sec = getattr(self, section, None)
        if sec is None or section not in {f.name for f in fields(self)}:
            raise ConfigError(f"unknown config section [{section}]")
        types = {f.name: f.type for f in fields(sec)}
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        parse = _PARSERS.get(types[key]) or _PARSERS[{"float": float, "int": int, "str": str,
                                                       "bool": bool}[types[key]]]
        try:
            setattr(sec, key, parse(text))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from None

    def validate(self) -> "RunConfig":
        e = []
        if self.kind not in KINDS:
            e.append(f"experiment.kind must be one of {KINDS}, got {self.kind!r}")
        if self.model.kind not in MODELS:
            e.append(f"model.kind must be one of {MODELS}")
        elif self.model.kind == "step":
            if self.model.threshold is None or self.model.threshold <= 0:
                e.append("model.threshold must be positive for the step model")
            if self.kind == "single":
                e.append("single runs need model.kind = pde")
        m = self.grid.n_points
        if m < 8 or m & (m - 1):
            e.append(f"grid.n_points={m} must be a power of two >= 8")
        if self.grid.half_width <= 0:
            e.append("grid.half_width must be positive")
        if self.solver.dt <= 0:
            e.append("solver.dt must be positive")
        if self.solver.splitting not in SPLITTINGS:
            e.append(f"solver.splitting must be one of {SPLITTINGS}")
        if self.solver.t_final is not None and self.solver.t_final < 0:
            e.append("solver.t_final must be non-negative")
        if self.solver.checkpoint_stride < 0:
            e.append("solver.checkpoint_stride must be >= 0")
        if self.physics.amplitude <= 0:
            e.append("physics.amplitude must be positive")
        elif 2 * self.grid.half_width / m > 1 / (4 * self.physics.amplitude):
            e.append("grid spacing does not resolve the soliton (need dx <= 1/(4A))")
        if self.chaos.family not in FAMILIES:
            e.append(f"chaos.family must be one of {FAMILIES}")
        if not 1 <= self.chaos.nodes <= MAX_NODES:
            e.append(f"chaos.nodes must be in [1, {MAX_NODES}]")
        if any(not 1 <= n <= MAX_NODES for n in self.chaos.n_list):
            e.append(f"chaos.n_list entries must be in [1, {MAX_NODES}]")
        if any(b <= a for a, b in zip(self.chaos.n_list, self.chaos.n_list[1:])):
            e.append("chaos.n_list must be strictly increasing")
        if self.kind in ("ensemble", "critical", "convergence"):
            va, vb = self.chaos.v_a, self.chaos.v_b
            if va is None or vb is None or not 0 < va < vb:
                e.append("chaos.v_a and chaos.v_b must satisfy 0 < v_a < v_b")
        if self.kind == "oracle":
            lo, hi = self.oracle.v_lo, self.oracle.v_hi
            if lo is None or hi is None or not 0 < lo < hi:
                e.append("oracle.v_lo and oracle.v_hi must satisfy 0 < v_lo < v_hi")
            if self.oracle.tol <= 0:
                e.append("oracle.tol must be positive")
        if self.kind == "single" and self.solver.t_final is None and self.physics.velocity <= 0:
            e.append("single runs need solver.t_final or a positive physics.velocity")
        if self.run.workers < 1:
            e.append("run.workers must be >= 1")
        unknown = set(self.output.formats) - {"csv", "json"}
        if unknown:
            e.append(f"output.formats has unknown entries {sorted(unknown)}")
        if e:
            raise ConfigError("; ".join(e))
        return self


def _apply(cfg: RunConfig, parser: configparser.ConfigParser):
    for section in parser.sections():
        for key, text in parser.items(section):
            cfg.set(section, key, text)


def parse_config(text: str, base: RunConfig | None = None, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"cannot parse {source}: line {exc.lineno}: "
                          f"{exc.line.strip()!r} appears before any [section]") from None
    except configparser.ParsingError as exc:
        where = "; ".join(f"line {n}: {line.strip()!r}" for n, line in exc.errors)
        raise ConfigError(f"cannot parse {source}: {where}") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        what = (f"key {exc.option!r} in [{exc.section}]" if hasattr(exc, "option")
                else f"section [{exc.section}]")
        raise ConfigError(f"cannot parse {source}: line {exc.lineno}: duplicate {what}") from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc.message}") from None
    cfg = base if base is not None else RunConfig()
    _apply(cfg, parser)
    return cfg


def load_config(path=None, *, preset: str | None = None,
                overrides: dict[str, str] | None = None, kind: str | None = None) -> RunConfig:
    """Build a validated configuration.

    Layers, later ones winning: defaults, ``preset``, the file at ``path``,
    ``kind``, then ``overrides`` given as ``{"section.key": "value"}``.
    """
    cfg = RunConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
        cfg = parse_config(PRESETS[preset], cfg, source=f"preset {preset}")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        cfg = parse_config(path.read_text(), cfg, source=str(path))
    if kind is not None:
        cfg.experiment.kind = kind
    for dotted, text in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        cfg.set(section, key, text)
    return cfg.validate()


PRESETS = {
    # Convergence tables in the style of the Legendre-chaos study.
    "table1-eps0.3": """
[experiment]
kind = convergence
[physics]
epsilon = 0.3
[solver]
t_final = 12000
[chaos]
family = legendre
v_a = 0.0015
v_b = 0.0021
n_list = 2, 4, 8, 12, 16, 20, 24
l_prime = 12
""",
    "table1-eps1.0": """
[experiment]
kind = convergence
[physics]
epsilon = 1.0
[chaos]
family = legendre
v_a = 0.02
v_b = 0.028
n_list = 2, 4, 8, 12, 16, 20, 24
""",
    "table1-eps4.5": """
[experiment]
kind = convergence
[physics]
epsilon = 4.5
[chaos]
family = legendre
v_a = 0.22
v_b = 0.24
n_list = 2, 4, 8, 12, 16, 20, 24
""",
    "critical-eps2.7": """
[experiment]
kind = critical
[physics]
epsilon = 2.7
[chaos]
family = legendre
nodes = 24
v_a = 0.1
v_b = 0.14
l_prime = 10
""",
    "hermite-eps0.3": """
[experiment]
kind = critical
[physics]
epsilon = 0.3
[solver]
t_final = 12000
[chaos]
family = hermite
sd = 0.1
nodes = 24
v_a = 0.0015
v_b = 0.0021
l_prime = 12
""",
    "fig3-trapped": """
[experiment]
kind = single
[physics]
epsilon = 4.5
velocity = 0.220048
""",
    "fig3-transmitted": """
[experiment]
kind = single
[physics]
epsilon = 4.5
velocity = 0.23995187
""",
    "fig6-sweep": """
[experiment]
kind = sweep
[sweep]
epsilons = 0.3, 0.5, 1.0, 2.7, 3.0, 4.5
[chaos]
nodes = 16
""",
}
