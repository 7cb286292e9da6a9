"""Scenario configuration: flat key=value files with sections.

CLI flags override file values; the file format round-trips exactly
(emit -> parse -> identical values). Unknown sections or keys are
rejected by name so typos cannot silently fall back to defaults.
"""

import configparser
import io
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .modes import DEFAULT_L_MAX, NAMED_PLATES, PhasePlate
from .scattering import DEFAULT_DL_MAX
from .screens import DEFAULT_EXTENT, DEFAULT_GRID, DEFAULT_SUBHARMONICS

# (section, key) -> dataclass field
_LAYOUT = {
    ("scenario", "plate"): "plate",
    ("scenario", "ratios"): "ratios",
    ("scenario", "l_max"): "l_max",
    ("scenario", "dl_max"): "dl_max",
    ("scenario", "method"): "method",
    ("scenario", "seed"): "seed",
    ("monte_carlo", "enabled"): "mc",
    ("monte_carlo", "realizations"): "realizations",
    ("monte_carlo", "grid"): "grid_n",
    ("monte_carlo", "extent"): "extent",
    ("monte_carlo", "subharmonics"): "subharmonics",
    ("quadrature", "radial_nodes"): "radial_nodes",
    ("quadrature", "angular_nodes"): "angular_nodes",
    ("quadrature", "cusp_nodes"): "cusp_nodes",
    ("quadrature", "cusp_window"): "cusp_window",
    ("output", "path"): "out",
    ("output", "curve_points"): "curve_points",
}


@dataclass(frozen=True)
class ScenarioConfig:
    plate: str = "quadrant"
    ratios: tuple = (0.0,)
    l_max: int = DEFAULT_L_MAX
    dl_max: int = DEFAULT_DL_MAX
    method: str = "both"
    seed: int = 0
    mc: bool = False
    realizations: int = 2000
    grid_n: int = DEFAULT_GRID
    extent: float = DEFAULT_EXTENT
    subharmonics: int = DEFAULT_SUBHARMONICS
    radial_nodes: int = 64
    angular_nodes: int = 96
    cusp_nodes: int = 32
    cusp_window: float = 0.3
    out: str = ""
    curve_points: int = 721

    def emit(self):
        """Canonical config-file text for this scenario."""
        parser = configparser.ConfigParser()
        for (section, key), name in _LAYOUT.items():
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, key, _format_value(getattr(self, name)))
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def with_overrides(self, **kwargs):
        """Copy with the given non-None fields replaced."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_bool(text, where):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def parse_ratios(text):
    """Ratio list: a single value, a comma list, or a range `a:b:step`."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"ratio range must be start:stop:step, got {text!r}")
        try:
            a, b, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"bad ratio range {text!r}") from exc
        if step <= 0 or b < a:
            raise ConfigError(f"ratio range must increase, got {text!r}")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        values = tuple(round(a + k * step, 12) for k in range(count))
    else:
        try:
            values = tuple(float(p) for p in text.split(",") if p.strip())
        except ValueError as exc:
            raise ConfigError(f"bad ratio list {text!r}") from exc
    if not values:
        raise ConfigError("empty ratio list")
    if any(v < 0 for v in values):
        raise ConfigError("ratios must be >= 0")
    return values


def parse_plate(text):
    """Named preset or custom `start:phase` sector pairs in degrees."""
    name = text.strip().lower()
    if name in NAMED_PLATES:
        return NAMED_PLATES[name](), name
    sectors = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(
                f"plate must be quadrant|half|uniform or start:phase pairs "
                f"in degrees, got {text!r}"
            )
        try:
            start, phase = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"bad sector {chunk!r}") from exc
        sectors.append((math.radians(start), math.radians(phase)))
    try:
        return PhasePlate(tuple(sectors)), text.strip()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


_PARSERS = {
    "plate": lambda t, w: t.strip(),
    "ratios": lambda t, w: parse_ratios(t),
    "method": lambda t, w: t.strip(),
    "out": lambda t, w: t.strip(),
    "mc": _parse_bool,
}


def _parse_value(name, text, where, sample):
    if name in _PARSERS:
        return _PARSERS[name](text, where)
    try:
        if isinstance(sample, bool):
            return _parse_bool(text, where)
        if isinstance(sample, int):
            return int(text)
        if isinstance(sample, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value {text!r}") from exc
    return text


def parse_config(text):
    """Parse config-file text into a ScenarioConfig.

    Raises ConfigError naming any unknown section or key.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config syntax: {exc}") from exc
    defaults = ScenarioConfig()
    values = {}
    for section in parser.sections():
        for key in parser[section]:
            name = _LAYOUT.get((section, key))
            if name is None:
                raise ConfigError(
                    f"unknown config key '{key}' in section '{section}'"
                )
            where = f"[{section}] {key}"
            values[name] = _parse_value(
                name, parser[section][key], where, getattr(defaults, name)
            )
    config = ScenarioConfig(**values)
    _validate(config)
    return config


def load_config(path):
    try:
        with open(path, "r") as handle:
            text = handle.read()
    except OSError:
        raise
    return parse_config(text)


def _validate(config):
    if config.method not in ("operator", "curve", "both"):
        raise ConfigError(f"method must be operator|curve|both, "
                          f"got {config.method!r}")
    if config.l_max < 1:
        raise ConfigError("l_max must be >= 1")
    if config.dl_max < 0:
        raise ConfigError("dl_max must be >= 0")
    if config.curve_points < 2:
        raise ConfigError("curve_points must be >= 2")
    parse_plate(config.plate)
    for name in ("realizations", "grid_n", "subharmonics", "radial_nodes",
                 "angular_nodes", "cusp_nodes"):
        if getattr(config, name) < 0:
            raise ConfigError(f"{name} must be >= 0")
    return config
