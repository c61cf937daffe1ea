"""Flat key=value run-configuration grammar.

Example::

    # transversal lattice, cubic-window scan
    regime = kdv
    N1_list = [8, 12, 16]
    sigma_target = 3.0
    C0 = 1.0
    T0 = 0.5

Bare words (regime names, scheme names) need no quotes; arrays use
square brackets with comma separators; `#` starts a comment.  Unknown
keys are rejected, and every parse/validation message carries the line
number it came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .bridge import GAMMA_TARGETS, REGIME_MODEL, RegimeSpec, WindowError
from .lattice import LatticeParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "validate_config"]

_REGIME_ALIASES = {
    "kdv": "kdv",
    "kp": "kp",
    "kp2": "kp",
    "mkdv": "mkdv",
    "nls1d": "nls1d",
    "nls2d": "nls2d",
}


class ConfigError(ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class RunConfig:
    """All knobs of a `metastab run` invocation."""

    regime: str = "kdv"
    N1_list: list = field(default_factory=lambda: [8, 12, 16])
    sigma_target: float = 3.0
    C0: float = 1.0
    T0: float = 0.5
    alpha: float = None
    beta: float = None
    gamma: float = None
    rho: float = 1.0
    delta: float = 0.5
    samples: int = 9
    seed: int = 0
    k0: list = field(default_factory=lambda: [1, 1])
    phase: float = 0.0
    pde_n1: int = 64
    pde_n2: int = 17
    dt_lattice: float = 0.0
    dt_pde: float = 0.0
    scheme: str = "yoshida4"
    snapshot_times: list = field(default_factory=list)
    output_dir: str = "runs"
    workers: int = 1
    runtime_cap_s: float = 0.0

    def resolve_defaults(self):
        """Fill regime-dependent defaults for alpha, beta, gamma in place."""
        if self.alpha is None:
            self.alpha = 1.0 if self.regime in ("kdv", "kp") else 0.0
        if self.beta is None:
            self.beta = 1.0 if self.regime in ("mkdv", "nls1d", "nls2d") else 0.0
        if self.gamma is None:
            self.gamma = GAMMA_TARGETS.get(self.regime, 0.5)
        return self

    def regime_spec(self):
        return RegimeSpec(self.regime, self.gamma, self.rho, self.delta)

    def lattice_params(self, N1):
        return LatticeParams.from_aspect(
            REGIME_MODEL[self.regime], N1, self.sigma_target, self.alpha, self.beta
        )


_INT_KEYS = {"samples", "seed", "pde_n1", "pde_n2", "workers"}
_FLOAT_KEYS = {
    "sigma_target", "C0", "T0", "alpha", "beta", "gamma", "rho", "delta",
    "phase", "dt_lattice", "dt_pde", "runtime_cap_s",
}
_STR_KEYS = {"regime", "scheme", "output_dir"}
_INT_LIST_KEYS = {"N1_list", "k0"}
_FLOAT_LIST_KEYS = {"snapshot_times"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _INT_LIST_KEYS | _FLOAT_LIST_KEYS


def _parse_scalar(raw, caster, lineno, key):
    try:
        return caster(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {raw!r} for key {key!r}") from None


def _parse_list(raw, caster, lineno, key):
    raw = raw.strip()
    if not (raw.startswith("[") and raw.endswith("]")):
        raise ConfigError(f"line {lineno}: key {key!r} expects an array like [1, 2]")
    inner = raw[1:-1].strip()
    if not inner:
        return []
    return [_parse_scalar(tok.strip(), caster, lineno, key) for tok in inner.split(",")]


def parse_config(text):
    """Parse configuration text into a RunConfig (defaults resolved)."""
    cfg = RunConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line.strip()!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if not raw:
            raise ConfigError(f"line {lineno}: empty value for key {key!r}")
        if key in _INT_KEYS:
            value = _parse_scalar(raw, int, lineno, key)
        elif key in _FLOAT_KEYS:
            value = _parse_scalar(raw, float, lineno, key)
        elif key in _INT_LIST_KEYS:
            value = _parse_list(raw, int, lineno, key)
        elif key in _FLOAT_LIST_KEYS:
            value = _parse_list(raw, float, lineno, key)
        else:
            value = raw.lower() if key == "regime" else raw
            if key == "regime":
                if value not in _REGIME_ALIASES:
                    raise ConfigError(f"line {lineno}: unknown regime {raw!r}")
                value = _REGIME_ALIASES[value]
        setattr(cfg, key, value)
    return cfg.resolve_defaults()


def serialize_config(cfg):
    """Canonical text form; parse_config(serialize_config(cfg)) == cfg."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, list):
            body = "[" + ", ".join(repr(v) for v in value) + "]"
        else:
            body = repr(value) if not isinstance(value, str) else value
        lines.append(f"{f.name} = {body}")
    return "\n".join(lines) + "\n"


def validate_config(cfg):
    """Collect all semantic problems; raise ConfigError if any."""
    errors = []
    if cfg.regime not in REGIME_MODEL:
        errors.append(f"unknown regime {cfg.regime!r}")
        raise ConfigError(errors)
    if not cfg.N1_list:
        errors.append("N1_list must not be empty")
    if any(n < 1 for n in cfg.N1_list):
        errors.append("N1_list entries must be positive")
    if sorted(cfg.N1_list) != list(cfg.N1_list):
        errors.append("N1_list must be ascending")
    if cfg.C0 <= 0.0:
        errors.append("C0 must be positive")
    if cfg.T0 <= 0.0:
        errors.append("T0 must be positive")
    if cfg.samples < 2:
        errors.append("samples must be at least 2")
    if cfg.pde_n1 < 8 or cfg.pde_n2 < 4:
        errors.append("pde grid too small (need pde_n1 >= 8, pde_n2 >= 4)")
    if cfg.workers < 1:
        errors.append("workers must be at least 1")
    if cfg.scheme not in ("leapfrog", "yoshida4"):
        errors.append(f"unknown scheme {cfg.scheme!r}")
    if len(cfg.k0) != 2:
        errors.append("k0 must have two entries")
    if cfg.regime in ("kdv", "kp") and cfg.alpha == 0.0:
        errors.append(f"{cfg.regime} requires alpha != 0")
    if cfg.regime in ("mkdv", "nls1d", "nls2d") and cfg.beta <= 0.0:
        errors.append(f"{cfg.regime} requires beta > 0")
    try:
        spec = cfg.regime_spec()
        spec.validate_sigma(cfg.sigma_target)
    except (WindowError, ValueError) as exc:
        errors.append(str(exc))
    for n1 in cfg.N1_list:
        try:
            p = cfg.lattice_params(n1)
        except ValueError as exc:
            errors.append(f"N1 = {n1}: {exc}")
            continue
        if abs(cfg.k0[0]) > p.N1 or abs(cfg.k0[1]) > p.N2:
            errors.append(f"N1 = {n1}: seeded mode {tuple(cfg.k0)} out of range")
    if errors:
        raise ConfigError(errors)
    return cfg
