"""Run configuration: strict TOML parsing with explicit angle units."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .gas import GasConstants
from .solver import SolverConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and the constraint."""


@dataclass(frozen=True)
class GridConfig:
    Ns: int = 65
    Nt: int = 65
    stretch: float = 1.05


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    field_csv: bool = True
    heatmap_svg: bool = True
    geometry_svg: bool = True


@dataclass(frozen=True)
class RunConfig:
    """Fully defaulted run description; angles in radians."""

    q_inf: float
    alpha: float
    sigma: float
    beta: float
    gas: GasConstants = field(default_factory=GasConstants)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# (name, lower, upper, lower inclusive) in radians
_ANGLES = {
    "alpha": (0.0, 0.5 * math.pi, False),
    "sigma": (0.0, 0.5 * math.pi, False),
    "beta": (0.0, 0.5 * math.pi, True),
}


def _angle(top: dict, name: str) -> float:
    keys = [k for k in (f"{name}_rad", f"{name}_deg") if k in top]
    if name in top:
        raise ConfigError(f"'{name}': angles need an explicit unit, use '{name}_rad' or '{name}_deg'")
    if not keys:
        raise ConfigError(f"missing required key '{name}_rad' or '{name}_deg'")
    if len(keys) > 1:
        raise ConfigError(f"'{name}' given in both units")
    key = keys[0]
    value = _number(top[key], key)
    rad = math.radians(value) if key.endswith("_deg") else value
    lo, hi, closed = _ANGLES[name]
    ok = (lo <= rad if closed else lo < rad) and rad < hi
    if not ok:
        left = "[" if closed else "("
        if key.endswith("_deg"):
            rng = f"{left}{math.degrees(lo):g} deg, {math.degrees(hi):g} deg)"
        else:
            rng = f"{left}{lo:g}, {hi:g})"
        raise ConfigError(f"'{key}' = {value} out of range: {name} must lie in {rng}")
    return rad


def _number(v, key: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"'{key}' must be finite")
    return float(v)


def _section(data: dict, name: str, cls):
    raw = data.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    kwargs = {}
    for key, v in raw.items():
        qual = f"{name}.{key}"
        default = known[key].default
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"'{qual}' must be true or false")
        elif isinstance(default, int):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"'{qual}' must be an integer")
        elif isinstance(default, float):
            v = _number(v, qual)
        elif isinstance(default, tuple):
            if not isinstance(v, list) or not v:
                raise ConfigError(f"'{qual}' must be a non-empty array")
            v = tuple(_number(x, qual) for x in v)
        elif isinstance(default, str):
            if not isinstance(v, str):
                raise ConfigError(f"'{qual}' must be a string")
        kwargs[key] = v
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a validated ``RunConfig``.

    Top-level keys: ``q_inf`` and the angles ``alpha``, ``sigma``, ``beta``
    with a mandatory ``_rad`` or ``_deg`` suffix.  Optional tables
    ``[gas]`` (a, rho_star), ``[grid]`` (Ns, Nt, stretch), ``[solver]``
    (``SolverConfig`` fields) and ``[outputs]``.  Unknown keys are errors.

    Raises
    ------
    ConfigError
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    sections = {"gas": GasConstants, "grid": GridConfig, "solver": SolverConfig, "outputs": OutputConfig}
    allowed = {"q_inf"} | {f"{a}_{u}" for a in _ANGLES for u in ("rad", "deg")} | set(sections)
    unknown = sorted(k for k in data if k not in allowed and k not in _ANGLES)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    if "q_inf" not in data:
        raise ConfigError("missing required key 'q_inf'")
    q_inf = _number(data["q_inf"], "q_inf")
    if not q_inf > 1.0:
        raise ConfigError(f"'q_inf' = {q_inf} violates q_inf > 1 (supersonic, normalized speed)")
    angles = {name: _angle(data, name) for name in _ANGLES}
    parts = {name: _section(data, name, cls) for name, cls in sections.items()}
    grid = parts["grid"]
    if grid.Ns < 9 or grid.Nt < 9:
        raise ConfigError("'grid.Ns' and 'grid.Nt' must be at least 9")
    if not grid.stretch >= 1.0:
        raise ConfigError("'grid.stretch' must be >= 1")
    return RunConfig(q_inf=q_inf, **angles, **parts)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
