"""Run configuration: defaults < config file < SYLLASEG_* environment < flags."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace

ENV_PREFIX = "SYLLASEG_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 0.35
    tau_s: float = 0.05
    hop_s: float = 0.01
    prune_sigmas: float | None = None
    odf_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma", "tau_s", "hop_s"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.prune_sigmas is not None and not self.prune_sigmas >= 1:
            raise ConfigError(f"prune_sigmas must be >= 1, got {self.prune_sigmas}")
        # 0 is allowed on purpose: it exposes log(0) on ODF zeros
        if not self.odf_floor >= 0:
            raise ConfigError(f"odf_floor must be non-negative, got {self.odf_floor}")


def _coerce(name: str, value):
    if value is None or (isinstance(value, str) and value.lower() in ("", "none", "null")):
        if name == "prune_sigmas":
            return None
        raise ConfigError(f"{name} cannot be empty")
    try:
        return int(value) if name == "seed" else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {value!r}") from None


def _known(keys, source):
    names = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(keys) - names)
    if unknown:
        raise ConfigError(f"unknown config keys in {source}: {', '.join(unknown)}")


def load_config(path=None, overrides: dict | None = None, environ=None) -> RunConfig:
    """Build a :class:`RunConfig`.

    ``path`` points at a flat JSON object keyed by field name. ``overrides``
    holds command-line values; ``None`` entries are treated as unset.
    """
    values: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a flat JSON object")
        _known(doc, path)
        values.update({k: _coerce(k, v) for k, v in doc.items()})

    environ = os.environ if environ is None else environ
    for f in fields(RunConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in environ:
            values[f.name] = _coerce(f.name, environ[key])

    for k, v in (overrides or {}).items():
        if v is not None:
            _known([k], "overrides")
            values[k] = _coerce(k, v)
    return replace(RunConfig(), **values)
