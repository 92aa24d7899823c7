"""Run configuration: a small line-oriented ``key = value`` format.

Grammar::

    file     := line*
    line     := blank | comment | header | entry
    comment  := '#' anything
    header   := '[' section ']'
    entry    := key '=' value [comment]
    section  := problem | grid | contour | tolerances

Every entry must follow a header.  Unknown sections, unknown keys, repeated
keys, entries before any header and out-of-range values raise
:class:`ConfigError` carrying the 1-based line number.  Keys that are absent
keep their defaults, so an empty file is a valid configuration.

Angles accept ``pi`` expressions such as ``pi/2``, ``2*pi`` or ``0.75 pi``.
``rho``, ``T`` and ``nu_prime`` accept ``auto``.  ``nu`` is never set directly;
it is derived from ``p``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

from .grid import ProblemParams


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based, or 0 when not tied to a line."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


_PI_RE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_angle(text: str) -> float:
    """Float or ``[a][*]pi[/b]`` expression."""
    m = _PI_RE.match(text)
    if m:
        sign_only = {"": 1.0, "+": 1.0, "-": -1.0}
        a = sign_only[m.group(1)] if m.group(1) in sign_only else float(m.group(1))
        b = float(m.group(2)) if m.group(2) else 1.0
        return a * math.pi / b
    return float(text)


@dataclass(frozen=True)
class GridConfig:
    n_theta: int = 32
    n_t: int = 64
    T: float | str = 20.0


@dataclass(frozen=True)
class ContourConfig:
    nu_prime: float | str = "auto"
    n_nodes: int = 200
    s_max: float = 1e3
    scale: float = 1.0
    backend: str = "discrete"


@dataclass(frozen=True)
class Tolerances:
    root_tol: float = 1e-12
    fp_tol: float = 1e-8
    quad_tol: float = 1e-3
    decay_tol: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    params: ProblemParams = field(default_factory=ProblemParams)
    rho_auto: bool = False
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    tol: Tolerances = field(default_factory=Tolerances)

    def as_dict(self) -> dict:
        return {
            "problem": {"p": self.params.p, "omega": self.params.omega, "nu": self.params.nu,
                        "k": self.params.k, "rho": "auto" if self.rho_auto else self.params.rho,
                        "seed": self.seed},
            "grid": {"n_theta": self.grid.n_theta, "n_t": self.grid.n_t, "T": self.grid.T},
            "contour": {"nu_prime": self.contour.nu_prime, "n_nodes": self.contour.n_nodes,
                        "s_max": self.contour.s_max, "scale": self.contour.scale,
                        "backend": self.contour.backend},
            "tolerances": {"root_tol": self.tol.root_tol, "fp_tol": self.tol.fp_tol,
                           "quad_tol": self.tol.quad_tol, "decay_tol": self.tol.decay_tol},
        }


# (section, key) -> (parser, validator, message)
def _positive(x):
    return x > 0


def _int_at_least(n):
    return lambda x: x >= n


def _float_or_auto(text: str):
    return "auto" if text.strip().lower() == "auto" else float(text)


def _positive_or_auto(x):
    return x == "auto" or x > 0


_KEYS = {
    "problem": {
        "p": (float, lambda x: x > 1.0, "p must exceed 1"),
        "omega": (parse_angle, lambda x: 0.0 < x <= 2.0 * math.pi + 1e-12, "omega must lie in (0, 2 pi]"),
        "k": (float, lambda x: x >= 0.0, "k must be nonnegative"),
        "rho": (_float_or_auto, _positive_or_auto, "rho must be positive or auto"),
        "seed": (int, lambda x: x >= 0, "seed must be a nonnegative integer"),
    },
    "grid": {
        "n_theta": (int, _int_at_least(7), "n_theta must be at least 7"),
        "n_t": (int, _int_at_least(7), "n_t must be at least 7"),
        "T": (_float_or_auto, _positive_or_auto, "T must be positive or auto"),
    },
    "contour": {
        "nu_prime": (_float_or_auto, _positive_or_auto, "nu_prime must be positive or auto"),
        "n_nodes": (int, _int_at_least(2), "n_nodes must be at least 2"),
        "s_max": (float, _positive, "s_max must be positive"),
        "scale": (float, _positive, "scale must be positive"),
        "backend": (str, lambda x: x in ("discrete", "formula"), "backend must be discrete or formula"),
    },
    "tolerances": {
        "root_tol": (float, _positive, "tolerances must be positive"),
        "fp_tol": (float, _positive, "tolerances must be positive"),
        "quad_tol": (float, _positive, "tolerances must be positive"),
        "decay_tol": (float, _positive, "tolerances must be positive"),
    },
}

_HEADER_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_ENTRY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$")


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a :class:`RunConfig`."""
    values: dict[str, dict] = {s: {} for s in _KEYS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER_RE.match(line)
        if m:
            section = m.group(1).lower()
            if section not in _KEYS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        m = _ENTRY_RE.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("missing section header before first entry", lineno)
        key, val = m.group(1), m.group(2).strip()
        if key == "nu":
            raise ConfigError("nu is derived from p and cannot be set", lineno)
        if key not in _KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        conv, check, msg = _KEYS[section][key]
        try:
            parsed = conv(val)
        except ValueError:
            raise ConfigError(f"bad value {val!r} for {key}", lineno) from None
        if not check(parsed):
            raise ConfigError(f"{msg} (got {val})", lineno)
        values[section][key] = parsed
    return _build(values)


def _build(values: dict) -> RunConfig:
    prob = values["problem"]
    rho = prob.get("rho", ProblemParams().rho)
    rho_auto = rho == "auto"
    params = ProblemParams(p=prob.get("p", 2.0), omega=prob.get("omega", math.pi / 2),
                           k=prob.get("k", 1.0), rho=ProblemParams().rho if rho_auto else rho)
    return RunConfig(params=params, rho_auto=rho_auto, seed=prob.get("seed", 0),
                     grid=replace(GridConfig(), **values["grid"]),
                     contour=replace(ContourConfig(), **values["contour"]),
                     tol=replace(Tolerances(), **values["tolerances"]))


def load_config(path: str | None) -> RunConfig:
    """Read a configuration file; ``None`` gives all defaults."""
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = ["ConfigError", "ContourConfig", "GridConfig", "RunConfig", "Tolerances",
           "load_config", "parse_angle", "parse_config"]
