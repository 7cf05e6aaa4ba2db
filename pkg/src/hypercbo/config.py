"""Experiment configuration: one INI section, flags override file values."""
import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional

from .dynamics import SimConfig, StopRule
from .errors import CBOError, ParseError, ValidationError
from .manifold import parse_manifold
from .meanfield import parse_test_function
from .objective import parse_objective

SECTION = "hypercbo"
COMMANDS = ("run", "rates-lln", "rates-coupled", "rates-weak", "defect-scan", "bench")

RATE_DEFAULTS = {
    "rates-lln": dict(n_values=[16, 64, 256, 1024], n_repeats=200, m_reference=10**6),
    "rates-coupled": dict(n_values=[16, 64, 256], n_repeats=100, m_reference=50_000),
    "rates-weak": dict(n_values=[16, 64, 256], n_repeats=100, m_reference=50_000),
}


@dataclass
class ExperimentConfig:
    command: str = "run"
    manifold: str = "sphere:radius=1,dim=3"
    objective: str = "ackley:vstar=0,0,1"
    n: int = 20
    dt: float = 0.05
    sigma: float = 0.25
    alpha: float = 50.0
    lam: float = 1.0
    tmax: float = 5.0
    seed: int = 0
    stop_rule: str = "fixed"
    out: Optional[str] = None
    summary: Optional[str] = None
    n_values: Optional[List[int]] = None
    n_repeats: Optional[int] = None
    m_reference: Optional[int] = None
    t_check: float = 1.0
    test_function: str = "coord:2"
    dt_list: List[float] = field(default_factory=lambda: [0.05, 0.025, 0.0125])
    unprojected: bool = False
    preset: str = "all"
    n_seeds: int = 100
    threshold: float = 0.1
    n_jobs: Optional[int] = None
    """Worker threads for repeats and seeds; ``None`` means all cores."""

    def sim_config(self):
        m = parse_manifold(self.manifold)
        obj = parse_objective(self.objective, m.dim)
        return SimConfig(
            m, obj, lam=self.lam, sigma=self.sigma, alpha=self.alpha, dt=self.dt, t_max=self.tmax,
            n_particles=self.n, seed=self.seed, stop_rule=StopRule.parse(self.stop_rule),
        )

    def rate_params(self):
        base = RATE_DEFAULTS.get(self.command, {})
        return {
            "n_values": self.n_values if self.n_values is not None else base.get("n_values"),
            "n_repeats": self.n_repeats if self.n_repeats is not None else base.get("n_repeats"),
            "m_reference": self.m_reference if self.m_reference is not None else base.get("m_reference"),
        }

    def echo(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_ALIASES = {"lambda": "lam", "t_max": "tmax", "n_particles": "n", "stop": "stop_rule", "repeats": "n_repeats"}


def _convert(name, raw):
    """Turn a raw string (file) or already-typed value (flags) into the field type."""
    if raw is None:
        return None
    default = _FIELDS[name].default
    kind = _FIELDS[name].type
    try:
        if name in ("n_values", "dt_list"):
            cast = int if name == "n_values" else float
            if isinstance(raw, str):
                return [cast(x) for x in raw.replace(" ", "").split(",") if x]
            return [cast(x) for x in raw]
        if isinstance(default, bool) or kind is bool:
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if name in ("n", "seed", "n_repeats", "m_reference", "n_seeds", "n_jobs"):
            if isinstance(raw, str):
                val = float(raw) if any(c in raw for c in ".eE") else int(raw)
            else:
                val = raw
            if int(val) != val:
                raise ValueError(f"not an integer: {raw!r}")
            return int(val)
        if name in ("dt", "sigma", "alpha", "lam", "tmax", "t_check", "threshold"):
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field=name) from None


def _read_text(text):
    """Parse INI text into {field: raw string}. A section header is optional."""
    offset = 0
    if not any(line.lstrip().startswith("[") for line in text.splitlines()):
        text = f"[{SECTION}]\n" + text
        offset = 1
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("missing section header", line=exc.lineno - offset) from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r}", line=exc.lineno - offset, field=exc.option) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - offset if exc.errors else None
        raise ParseError("malformed line (expected key = value)", line=lineno) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    extra = [s for s in parser.sections() if s != SECTION]
    if extra:
        raise ParseError(f"unknown section(s) {extra}; expected [{SECTION}]")
    if not parser.has_section(SECTION):
        return {}
    lines = text.splitlines()
    values = {}
    for key, raw in parser.items(SECTION):
        name = _ALIASES.get(key, key).replace("-", "_")
        if name not in _FIELDS:
            lineno = next((i + 1 - offset for i, ln in enumerate(lines) if ln.strip().startswith(key)), None)
            raise ParseError(f"unknown key {key!r}", line=lineno, field=key)
        values[name] = raw
    return values


def parse_config(text=None, flags=None, validate=True):
    """Build an :class:`ExperimentConfig` from INI ``text`` and a ``flags`` dict.

    Flag values that are ``None`` are ignored; others override the file.
    Raises :class:`ParseError` for malformed input and
    :class:`ValidationError` listing every violated constraint.
    """
    values = _read_text(text) if text else {}
    for key, val in (flags or {}).items():
        if val is None:
            continue
        name = _ALIASES.get(key, key).replace("-", "_")
        if name not in _FIELDS:
            raise ParseError(f"unknown option {key!r}", field=key)
        values[name] = val
    converted = {name: _convert(name, raw) for name, raw in values.items()}
    cfg = ExperimentConfig(**converted)
    if validate:
        validate_config(cfg)
    return cfg


def validate_config(cfg):
    errors = []
    if cfg.command not in COMMANDS:
        errors.append(f"command must be one of {', '.join(COMMANDS)}")
    if not cfg.dt > 0:
        errors.append("dt must be positive")
    if not cfg.tmax > 0:
        errors.append("tmax must be positive")
    elif cfg.dt > 0 and cfg.dt > cfg.tmax:
        errors.append("dt must not exceed tmax")
    if not cfg.sigma >= 0:
        errors.append("sigma must be nonnegative")
    if not cfg.alpha > 0:
        errors.append("alpha must be positive")
    if not cfg.lam > 0:
        errors.append("lambda must be positive")
    if cfg.n < 1:
        errors.append("n must be at least 1")
    if cfg.n_jobs is not None and cfg.n_jobs < 1:
        errors.append("n_jobs must be at least 1")
    if cfg.n_values is not None and (len(cfg.n_values) < 2 or any(b <= a for a, b in zip(cfg.n_values, cfg.n_values[1:]))):
        errors.append("n_values must be strictly increasing with at least two entries")
    if cfg.n_repeats is not None and cfg.n_repeats < 10:
        errors.append("n_repeats must be at least 10")
    if not cfg.t_check > 0:
        errors.append("t_check must be positive")
    if any(b >= a for a, b in zip(cfg.dt_list, cfg.dt_list[1:])) or any(x <= 0 for x in cfg.dt_list):
        errors.append("dt_list must be positive and strictly decreasing")
    try:
        m = parse_manifold(cfg.manifold)
        parse_objective(cfg.objective, m.dim)
        StopRule.parse(cfg.stop_rule)
        parse_test_function(cfg.test_function)
    except CBOError as exc:
        errors.append(str(exc))
    except ValueError as exc:
        errors.append(str(exc))
    if errors:
        raise ValidationError(errors)
    return cfg


def serialize_config(cfg):
    """INI text that :func:`parse_config` maps back to an equal config."""
    lines = [f"[{SECTION}]"]
    for name, val in cfg.echo().items():
        if isinstance(val, list):
            val = ",".join(repr(x) for x in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{name} = {val}")
    return "\n".join(lines) + "\n"
