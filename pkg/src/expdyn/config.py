"""Run configuration files: flat ``key = value`` pairs under ``[section]`` headers.

Example::

    [mesh]
    lengths = 1.0 0.1 0.1
    divisions = 4 1 1

    [material]
    model = svk
    young = 1e4
    poisson = 0.3
    rho = 1.0

    [integrator]
    scheme = ep
    dt = 1e-3
    t_final = 0.1
    krylov_tol = 1e-10

Blank lines and lines starting with ``#`` are ignored. Every error message
carries the line number it refers to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .material import LinearElastic, StVenantKirchhoff, Yeoh, lame_from_young

SECTIONS = ("mesh", "material", "integrator", "load", "initial", "output", "converge", "subspace")
REQUIRED = ("mesh", "material", "integrator")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class Section:
    """Values of one ``[section]`` with the line each came from."""

    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.values: dict[str, tuple[str, int]] = {}
        self._used: set[str] = set()

    def __contains__(self, key):
        return key in self.values

    def raw(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}", self.line)
            return default, self.line
        self._used.add(key)
        return self.values[key]

    def str(self, key, default=None) -> str:
        return self.raw(key, default)[0]

    def float(self, key, default=None) -> float:
        text, line = self.raw(key, None if default is None else repr(default))
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {text!r}", line) from None
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite", line)
        return value

    def int(self, key, default=None) -> int:
        text, line = self.raw(key, None if default is None else str(default))
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {text!r}", line) from None

    def bool(self, key, default=None) -> bool:
        text, line = self.raw(key, None if default is None else str(default).lower())
        lowered = text.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key} must be true or false, got {text!r}", line)

    def floats(self, key, count=None, default=None) -> tuple[float, ...]:
        text, line = self.raw(key, None if default is None else " ".join(map(repr, default)))
        try:
            values = tuple(float(x) for x in text.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{key} must be a list of numbers, got {text!r}", line) from None
        if count is not None and len(values) != count:
            raise ConfigError(f"{key} needs {count} values, got {len(values)}", line)
        return values

    def ints(self, key, count=None, default=None) -> tuple[int, ...]:
        text, line = self.raw(key, None if default is None else " ".join(map(str, default)))
        try:
            values = tuple(int(x) for x in text.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{key} must be a list of integers, got {text!r}", line) from None
        if count is not None and len(values) != count:
            raise ConfigError(f"{key} needs {count} values, got {len(values)}", line)
        return values

    def line_of(self, key) -> int:
        return self.values[key][1] if key in self.values else self.line

    def check_unused(self):
        for key, (_, line) in self.values.items():
            if key not in self._used:
                raise ConfigError(f"unknown key {key!r} in [{self.name}]", line)


def parse_sections(text: str) -> dict[str, Section]:
    sections: dict[str, Section] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"section [{name}] appears twice", lineno)
            current = sections[name] = Section(name, lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not key:
            raise ConfigError("empty key", lineno)
        if key in current.values:
            raise ConfigError(f"duplicate key {key!r} in [{current.name}]", lineno)
        current.values[key] = (value, lineno)
    for name in REQUIRED:
        if name not in sections:
            raise ConfigError(f"missing required [{name}] block")
    return sections


@dataclass
class MeshSpec:
    lengths: tuple = (1.0, 0.1, 0.1)
    divisions: tuple = (4, 1, 1)
    file: Path | None = None


@dataclass
class IntegratorSpec:
    scheme: str
    dt: float
    t_final: float
    variant: str = "fully_implicit"
    krylov_tol: float | None = 1e-10
    krylov_m: int | None = None
    calibrate: bool = False
    alpha: float = -0.33
    beta: float | None = None
    gamma: float | None = None
    max_iters: int = 50
    picard_tol: float = 1e-10


@dataclass
class LoadSpec:
    traction: tuple = (0.0, 0.0, 0.0)
    body_force: tuple = (0.0, 0.0, 0.0)
    presolve: bool = True
    active: bool = False


@dataclass
class InitialSpec:
    velocity: tuple = (0.0, 0.0, 0.0)
    # "uniform" or "quadratic" (scaled by (s / L)^2 along the beam axis)
    profile: str = "uniform"


@dataclass
class OutputSpec:
    csv: Path
    every: int = 1
    vtk: bool = False
    vtk_prefix: Path | None = None
    probe: int | None = None


@dataclass
class ConvergeSpec:
    dts: tuple
    reference_dt: float
    schemes: tuple = ("ep",)
    reference_scheme: str = "ep"
    csv: Path | None = None


@dataclass
class SubspaceSpec:
    dts: tuple
    m_values: tuple
    initial: str = "static"
    seed: int = 0
    csv: Path | None = None


@dataclass
class RunConfig:
    mesh: MeshSpec
    material: object
    integrator: IntegratorSpec
    load: LoadSpec = field(default_factory=LoadSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    output: OutputSpec | None = None
    converge: ConvergeSpec | None = None
    subspace: SubspaceSpec | None = None
    base_dir: Path = Path(".")


def _positive(sec: Section, key: str, value: float):
    if not value > 0:
        raise ConfigError(f"{key} must be positive", sec.line_of(key))
    return value


def _material(sec: Section):
    model = sec.str("model").lower()
    rho = _positive(sec, "rho", sec.float("rho", 1.0))
    try:
        if model in ("linear", "svk"):
            if "lambda" in sec or "mu" in sec:
                lam, mu = sec.float("lambda"), sec.float("mu")
            else:
                lam, mu = lame_from_young(sec.float("young"), sec.float("poisson"))
            cls = LinearElastic if model == "linear" else StVenantKirchhoff
            return cls(lam, mu, rho)
        if model == "yeoh":
            return Yeoh(sec.float("c10", 100.0), sec.float("c20", -1.0), sec.float("c30", 0.01),
                        sec.float("d1", 0.001), rho)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), sec.line) from None
    raise ConfigError(f"unknown material model {model!r}", sec.line_of("model"))


def _path(base: Path, text: str) -> Path:
    p = Path(text)
    return p if p.is_absolute() else base / p


def _integrator(sec: Section) -> IntegratorSpec:
    scheme = sec.str("scheme").lower()
    if scheme not in ("ep", "newmark", "hht"):
        raise ConfigError(f"unknown scheme {scheme!r} (expected ep, newmark or hht)",
                          sec.line_of("scheme"))
    dt = _positive(sec, "dt", sec.float("dt"))
    t_final = _positive(sec, "t_final", sec.float("t_final"))
    if t_final < dt * (1 - 1e-12):
        raise ConfigError("t_final must be at least one time step", sec.line_of("t_final"))
    spec = IntegratorSpec(scheme, dt, t_final)
    spec.variant = sec.str("variant", "fully_implicit").lower()
    if spec.variant not in ("fully_implicit", "linearly_implicit"):
        raise ConfigError(f"unknown variant {spec.variant!r}", sec.line_of("variant"))
    if "krylov_m" in sec:
        if "krylov_tol" in sec:
            raise ConfigError("give krylov_m or krylov_tol, not both", sec.line_of("krylov_m"))
        spec.krylov_m = sec.int("krylov_m")
        spec.krylov_tol = None
        if spec.krylov_m < 1:
            raise ConfigError("krylov_m must be positive", sec.line_of("krylov_m"))
    else:
        spec.krylov_tol = _positive(sec, "krylov_tol", sec.float("krylov_tol", 1e-10))
    spec.calibrate = sec.bool("calibrate", False)
    spec.alpha = sec.float("alpha", -0.33)
    if "beta" in sec:
        spec.beta = _positive(sec, "beta", sec.float("beta"))
    if "gamma" in sec:
        spec.gamma = sec.float("gamma")
    spec.max_iters = sec.int("max_iters", 50)
    spec.picard_tol = _positive(sec, "picard_tol", sec.float("picard_tol", 1e-10))
    return spec


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)


def parse_config(text: str, base_dir=Path(".")) -> RunConfig:
    base = Path(base_dir)
    secs = parse_sections(text)

    m = secs["mesh"]
    mesh = MeshSpec()
    if "file" in m:
        mesh.file = _path(base, m.str("file"))
    else:
        mesh.lengths = m.floats("lengths", 3, (1.0, 0.1, 0.1))
        mesh.divisions = m.ints("divisions", 3, (4, 1, 1))
        if any(x <= 0 for x in mesh.lengths):
            raise ConfigError("lengths must be positive", m.line_of("lengths"))
        if any(x < 1 for x in mesh.divisions):
            raise ConfigError("divisions must be at least 1", m.line_of("divisions"))

    cfg = RunConfig(mesh, _material(secs["material"]), _integrator(secs["integrator"]), base_dir=base)

    if "load" in secs:
        s = secs["load"]
        cfg.load = LoadSpec(s.floats("traction", 3, (0.0, 0.0, 0.0)),
                            s.floats("body_force", 3, (0.0, 0.0, 0.0)),
                            s.bool("presolve", True), s.bool("active", False))
        if cfg.load.active and cfg.load.presolve:
            raise ConfigError("presolve and active load are exclusive", s.line_of("active"))

    if "initial" in secs:
        s = secs["initial"]
        cfg.initial = InitialSpec(s.floats("velocity", 3, (0.0, 0.0, 0.0)),
                                  s.str("profile", "uniform").lower())
        if cfg.initial.profile not in ("uniform", "quadratic"):
            raise ConfigError(f"unknown velocity profile {cfg.initial.profile!r}", s.line_of("profile"))

    s = secs.get("output")
    if s is not None:
        cfg.output = OutputSpec(_path(base, s.str("csv", "trajectory.csv")), s.int("every", 1),
                                s.bool("vtk", False))
        if cfg.output.every < 1:
            raise ConfigError("every must be at least 1", s.line_of("every"))
        if cfg.output.vtk:
            cfg.output.vtk_prefix = _path(base, s.str("vtk_prefix", "step"))
        if "probe" in s and s.str("probe").lower() != "auto":
            cfg.output.probe = s.int("probe")
    else:
        cfg.output = OutputSpec(_path(base, "trajectory.csv"))

    if "converge" in secs:
        s = secs["converge"]
        schemes = tuple(x.lower() for x in s.str("schemes", "ep").replace(",", " ").split())
        for x in schemes + (s.str("reference_scheme", "ep").lower(),):
            if x not in ("ep", "newmark", "hht"):
                raise ConfigError(f"unknown scheme {x!r}", s.line_of("schemes"))
        dts = s.floats("dts")
        if not dts or any(d <= 0 for d in dts):
            raise ConfigError("dts must be positive", s.line_of("dts"))
        cfg.converge = ConvergeSpec(dts, _positive(s, "reference_dt", s.float("reference_dt")),
                                    schemes, s.str("reference_scheme", "ep").lower(),
                                    _path(base, s.str("csv", "converge.csv")))

    if "subspace" in secs:
        s = secs["subspace"]
        dts = s.floats("dts")
        if not dts or any(d <= 0 for d in dts):
            raise ConfigError("dts must be positive", s.line_of("dts"))
        if "m_values" in s:
            ms = s.ints("m_values")
        else:
            ms = tuple(range(s.int("m_step", 5), s.int("m_max", 100) + 1, s.int("m_step", 5)))
        if not ms or any(x < 1 for x in ms):
            raise ConfigError("subspace sizes must be positive", s.line)
        initial = s.str("initial", "static").lower()
        if initial not in ("static", "random"):
            raise ConfigError(f"unknown initial state {initial!r}", s.line_of("initial"))
        cfg.subspace = SubspaceSpec(dts, ms, initial, s.int("seed", 0),
                                    _path(base, s.str("csv", "subspace.csv")))

    for sec in secs.values():
        sec.check_unused()
    return cfg
