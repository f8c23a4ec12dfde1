"""Run configuration: INI-style file with ``[scenario]``, ``[game]``, ``[experiment]``.

Times in the file are milliseconds (keys end in ``_ms``) and are converted
to seconds on load. Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

from .errors import InvalidInput

ENV_CONFIG = "EDGEOFFLOAD_CONFIG"


class ConfigError(InvalidInput):
    pass


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_str(text):
    return text.strip() or None


# key -> (section, attribute, parser, scale to seconds)
_SCHEMA = {
    "utilization": ("scenario", "utilizations", _floats, None),
    "seed": ("scenario", "seed", int, None),
    "delay_min_ms": ("scenario", "delay_min", float, 1e-3),
    "delay_max_ms": ("scenario", "delay_max", float, 1e-3),
    "deadline_min_ms": ("scenario", "deadline_min", float, 1e-3),
    "deadline_max_ms": ("scenario", "deadline_max", float, 1e-3),
    "xi_ms": ("game", "xi", float, 1e-3),
    "init_mode": ("game", "init_mode", str, None),
    "max_rounds": ("game", "max_rounds", int, None),
    "on_infeasible": ("game", "on_infeasible", str, None),
    "method": ("experiment", "method", str, None),
    "repetitions": ("experiment", "repetitions", int, None),
    "jobs": ("experiment", "jobs", int, None),
    "output": ("experiment", "output", str, None),
    "trace_output": ("experiment", "trace_output", _opt_str, None),
    "strict": ("experiment", "strict", _bool, None),
    "sweep_utilizations": ("experiment", "sweep_utilizations", _floats, None),
    "sweep_xi_ms": ("experiment", "sweep_xis", _floats, 1e-3),
}


@dataclass
class RunConfig:
    utilizations: tuple = (0.3,)
    seed: int = 42
    delay_min: float = 0.005
    delay_max: float = 0.100
    deadline_min: float = 0.200
    deadline_max: float = 0.280
    xi: float = 0.001
    init_mode: str = "initial_0"
    max_rounds: int = 10_000
    on_infeasible: str = "raise"
    method: str = "ditoa"
    repetitions: int = 100
    jobs: int = 1
    output: str = "-"
    trace_output: str | None = None
    strict: bool = False
    sweep_utilizations: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
    sweep_xis: tuple = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05)

    @property
    def relax(self) -> bool:
        return self.on_infeasible == "relax"

    def validate(self):
        if not self.utilizations:
            raise ConfigError("utilization: at least one value required")
        for u in self.utilizations:
            if not 0 < u < 1:
                raise ConfigError(f"utilization: {u} outside (0, 1)")
        if not (0 <= self.delay_min <= self.delay_max):
            raise ConfigError("delay_min_ms/delay_max_ms: need 0 <= min <= max")
        if not (0 < self.deadline_min <= self.deadline_max):
            raise ConfigError("deadline_min_ms/deadline_max_ms: need 0 < min <= max")
        if not self.xi > 0:
            raise ConfigError("xi: must be positive")
        if self.init_mode not in ("initial_0", "initial_P"):
            raise ConfigError(f"init_mode: {self.init_mode!r} not in initial_0, initial_P")
        if self.on_infeasible not in ("raise", "relax"):
            raise ConfigError(f"on_infeasible: {self.on_infeasible!r} not in raise, relax")
        if self.method.lower() not in ("ditoa", "ps", "gos", "all"):
            raise ConfigError(f"method: {self.method!r} not in ditoa, ps, gos, all")
        if self.repetitions < 1:
            raise ConfigError("repetitions: must be >= 1")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds: must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs: must be >= 1")
        return self


def _line_of(path, section, key):
    try:
        with open(path, encoding="utf-8") as fh:
            current = None
            for no, line in enumerate(fh, 1):
                s = line.strip()
                if s.startswith("[") and s.endswith("]"):
                    current = s[1:-1].strip()
                elif current == section and s.split("=", 1)[0].strip() == key:
                    return no
    except OSError:
        pass
    return None


def load_config(path=None) -> RunConfig:
    """Read ``path`` (or ``$EDGEOFFLOAD_CONFIG``); defaults when neither is given."""
    cfg = RunConfig()
    path = path or os.environ.get(ENV_CONFIG) or None
    if path is None:
        return cfg
    if not os.path.isfile(path):
        raise ConfigError(f"{path}: config file not found")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sections = {s for s, *_ in _SCHEMA.values()}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{path}:{_line_of(path, section, key) or '?'}: [{section}] {key}"
            entry = _SCHEMA.get(key)
            if entry is None or entry[0] != section:
                raise ConfigError(f"{where}: unknown key")
            _, attr, conv, scale = entry
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            if scale is not None:
                value = tuple(v * scale for v in value) if isinstance(value, tuple) else value * scale
            setattr(cfg, attr, value)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_fields():
    return [f.name for f in fields(RunConfig)]
