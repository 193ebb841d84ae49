"""Scenario configuration and its INI-style file format.

Files hold ``key = value`` lines under ``[scenario]``, ``[csma]``,
``[scosens]`` and ``[lpl]`` headers. Every duration is an integer number
of microseconds.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..csma import CsmaParams
from ..lpl import LplParams
from ..radio import DATA_OVERHEAD, MAX_MPDU
from ..scosens import ScosensParams

PROTOCOLS = ("scosens", "lpl")
TRAFFIC = ("periodic", "poisson", "none")
PAI_GRID_MS = (1500, 1000, 500, 100)


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    seed: int = 1
    duration: int = 300_000_000
    protocol: str = "scosens"
    n_leaves: int = 10
    pai: int = 1_500_000
    payload_len: int = 40
    traffic: str = "periodic"
    quantization: int = 32
    tp_enabled: bool = True
    warmup_cycles: int = 5
    leaf_queue_capacity: int = 8
    trace: bool = False
    csma: CsmaParams = field(default_factory=CsmaParams)
    scosens: ScosensParams = field(default_factory=ScosensParams)
    lpl: LplParams = field(default_factory=LplParams)

    @property
    def mpdu_len(self) -> int:
        return self.payload_len + DATA_OVERHEAD

    @property
    def warmup(self) -> int:
        return self.warmup_cycles * self.scosens.subframe

    def validate(self) -> "ScenarioConfig":
        problems = []
        if self.duration <= 0:
            problems.append("duration must be > 0")
        if self.n_leaves < 1:
            problems.append("n_leaves must be >= 1")
        if self.pai <= 0:
            problems.append("pai must be > 0")
        if self.protocol not in PROTOCOLS:
            problems.append(f"protocol must be one of {PROTOCOLS}")
        if self.traffic not in TRAFFIC:
            problems.append(f"traffic must be one of {TRAFFIC}")
        if self.quantization < 1:
            problems.append("quantization must be >= 1 (1 disables it)")
        if not 0 <= self.payload_len <= MAX_MPDU - DATA_OVERHEAD:
            problems.append(f"payload_len must lie in 0..{MAX_MPDU - DATA_OVERHEAD}")
        if self.warmup_cycles < 0:
            problems.append("warmup_cycles must be >= 0")
        if self.leaf_queue_capacity < 1:
            problems.append("leaf_queue_capacity must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_SECTIONS = {"csma": CsmaParams, "scosens": ScosensParams, "lpl": LplParams}
# keys owned by [scenario] even though a protocol dataclass also carries them
_SCENARIO_OWNED = {("scosens", "tp_enabled")}


def _coerce(raw: str, current: Any, key: str) -> Any:
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if current is None and raw.strip().lower() in ("", "none"):
        return None
    try:
        if isinstance(current, int) or current is None:
            return int(raw.replace("_", ""))
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw.strip()


def _apply(obj: Any, values: dict[str, str], section: str) -> Any:
    names = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, raw in values.items():
        if (section, key) in _SCENARIO_OWNED:
            raise ConfigError(f"[{section}] {key} is set under [scenario]")
        if key not in names or key in _SECTIONS:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        changes[key] = _coerce(raw, getattr(obj, key), f"{section}.{key}")
    try:
        return dataclasses.replace(obj, **changes)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def config_from_mapping(sections: dict[str, dict[str, str]],
                        base: ScenarioConfig | None = None) -> ScenarioConfig:
    cfg = base or ScenarioConfig()
    unknown = set(sections) - {"scenario", *_SECTIONS}
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    for name, cls in _SECTIONS.items():
        if name in sections:
            cfg = dataclasses.replace(cfg, **{name: _apply(getattr(cfg, name), sections[name], name)})
    if "scenario" in sections:
        cfg = _apply(cfg, sections["scenario"], "scenario")
    return cfg


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping({s: dict(parser[s]) for s in parser.sections()}, base)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = ["[scenario]"]
    for f in dataclasses.fields(cfg):
        if f.name not in _SECTIONS:
            lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    for name in _SECTIONS:
        lines.append("")
        lines.append(f"[{name}]")
        sub = getattr(cfg, name)
        for f in dataclasses.fields(sub):
            if (name, f.name) in _SCENARIO_OWNED:
                continue
            lines.append(f"{f.name} = {getattr(sub, f.name)}")
    return "\n".join(lines) + "\n"
