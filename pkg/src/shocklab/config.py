"""Plain-text run configuration.

One `key = value` per line, `#` starts a comment, blank lines are skipped.
Every key is optional (defaults give the reference shock run); unknown or
repeated keys are hard errors so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .gas import GasParams


class ConfigError(ValueError):
    """Raised for unparseable text, unknown keys, or invalid values."""


@dataclass(frozen=True)
class SimConfig:
    """Validated run parameters (attribute names mirror the file keys)."""

    a: float = 1.0
    gamma: float = 2.0
    mu: float = 0.1
    lam: float = 0.0
    rho_minus: float = 1.0
    delta: float = 0.1
    length: float = 50.0
    n1: int = 400
    n2: int = 16
    n3: int = 16
    k_mean: float = 0.5
    k_amp: float = 0.2
    cfl: float = 0.8
    t_end: float = 20.0
    output_every: float = 0.5
    zero_mass: float = -0.02
    transverse_amp: float = 1e-2
    seed: int = 12345

    def gas_params(self) -> GasParams:
        return GasParams(a=self.a, gamma=self.gamma, mu=self.mu, lam=self.lam)

    def to_key_values(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _KEYS.items()}

    def to_text(self) -> str:
        lines = [f"{key} = {value!r}" for key, value in self.to_key_values().items()]
        return "\n".join(lines) + "\n"


# file key -> (attribute, python type)
_KEYS = {
    "gas.a": "a",
    "gas.gamma": "gamma",
    "visc.mu": "mu",
    "visc.lambda": "lam",
    "wave.rho_minus": "rho_minus",
    "wave.delta": "delta",
    "grid.L": "length",
    "grid.N1": "n1",
    "grid.N2": "n2",
    "grid.N3": "n3",
    "bc.k_mean": "k_mean",
    "bc.k_amp": "k_amp",
    "run.cfl": "cfl",
    "run.t_end": "t_end",
    "run.output_every": "output_every",
    "pert.zero_mass": "zero_mass",
    "pert.transverse_amp": "transverse_amp",
    "pert.seed": "seed",
}

_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def _convert(key: str, attr: str, raw: str, lineno: int):
    want_int = _FIELD_TYPES[attr] in (int, "int")
    if want_int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key} needs an integer, got {raw!r}"
            ) from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"line {lineno}: {key} needs a number, got {raw!r}"
        ) from None


def _validate(cfg: SimConfig) -> None:
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    need(cfg.a > 0.0, "gas.a must be positive")
    need(cfg.gamma > 1.0, "gas.gamma must exceed 1")
    need(cfg.mu > 0.0, "visc.mu must be positive")
    need(cfg.mu + cfg.lam >= 0.0, "visc.mu + visc.lambda must be nonnegative")
    need(cfg.rho_minus > 0.0, "wave.rho_minus must be positive")
    need(0.0 < cfg.delta < cfg.rho_minus,
         "wave.delta must lie in (0, wave.rho_minus)")
    need(cfg.length > 0.0, "grid.L must be positive")
    need(cfg.n1 >= 8, "grid.N1 must be at least 8")
    need(cfg.n2 >= 1 and cfg.n3 >= 1, "grid.N2 and grid.N3 must be positive")
    need(cfg.k_mean - abs(cfg.k_amp) > 0.0,
         "slip length bc.k_mean - |bc.k_amp| must stay positive")
    need(0.0 < cfg.cfl <= 1.0, "run.cfl must lie in (0, 1]")
    need(cfg.t_end > 0.0, "run.t_end must be positive")
    need(cfg.output_every > 0.0, "run.output_every must be positive")
    need(cfg.transverse_amp >= 0.0, "pert.transverse_amp must be nonnegative")
    need(cfg.seed >= 0, "pert.seed must be nonnegative")


def parse_config(text: str) -> SimConfig:
    """Parse configuration text; defaults fill in what the text omits."""
    values = {}
    seen = set()
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {rawline!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if not raw:
            raise ConfigError(f"line {lineno}: {key} has no value")
        attr = _KEYS[key]
        values[attr] = _convert(key, attr, raw, lineno)
    cfg = SimConfig(**values)
    _validate(cfg)
    return cfg


def read_config(path) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read())
