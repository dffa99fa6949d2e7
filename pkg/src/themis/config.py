"""One TOML config file with per-stage sections.

Sections: [mining], [filter], [assemble], [scorer], [train], [eval], plus
top-level ``rng_seed`` and ``log_level``. Every section is optional and
falls back to its stage defaults; unknown keys are validation errors that
name the offending key path.
"""

from __future__ import annotations

import datetime as _dt
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from themis.records import ThemisError
from themis.mining import MiningConfig
from themis.filtering import FilterConfig
from themis.training import LossConfig


class ConfigError(ThemisError):
    def __init__(self, key_path: str, message: str):
        super().__init__(f"config error at {key_path}: {message}")
        self.key_path = key_path


@dataclass(frozen=True)
class ScorerSettings:
    endpoint: str | None = None
    token: str | None = None
    max_in_flight: int = 8


@dataclass(frozen=True)
class TrainSettings:
    stage: str = "pm"
    lr: float = 0.1
    batch_size: int = 32
    epochs: int | None = None
    lam: float | None = None
    mu: float | None = None
    literal_centering: bool = False

    def loss_config(self) -> LossConfig:
        base = LossConfig.pt if self.stage == "pt" else LossConfig.pm
        overrides = {"literal_centering": self.literal_centering}
        if self.epochs is not None:
            overrides["epochs"] = self.epochs
        if self.lam is not None:
            overrides["lam"] = self.lam
        if self.mu is not None:
            overrides["mu"] = self.mu
        return base(**overrides)


@dataclass(frozen=True)
class EvalSettings:
    criteria_mode: str = "none"
    k: int = 10
    list_size: int = 40


@dataclass(frozen=True)
class AssembleSettings:
    manifest: str | None = None
    strict: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    rng_seed: int = 0
    log_level: str = "info"
    mining: MiningConfig = field(default_factory=MiningConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    scorer: ScorerSettings = field(default_factory=ScorerSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)
    assemble: AssembleSettings = field(default_factory=AssembleSettings)


_SECTIONS = ("mining", "filter", "scorer", "train", "eval", "assemble")


def _build(cls, section: str, raw: dict, coerce: dict | None = None):
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in allowed:
            raise ConfigError(f"{section}.{key}", "unknown key")
        if coerce and key in coerce:
            try:
                value = coerce[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{section}.{key}", str(exc)) from exc
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ThemisError as exc:
        raise ConfigError(section, str(exc)) from exc


def _to_date(value) -> _dt.date:
    if isinstance(value, _dt.datetime):
        return value.date()
    if isinstance(value, _dt.date):
        return value
    return _dt.date.fromisoformat(str(value))


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load and validate the pipeline config; None yields all defaults."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "config file not found")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from exc

    unknown = set(raw) - set(_SECTIONS) - {"rng_seed", "log_level"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section or key")

    seed = raw.get("rng_seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("rng_seed", "must be an integer")
    log_level = raw.get("log_level", "info")
    if log_level not in ("debug", "info", "warning", "error"):
        raise ConfigError("log_level", f"unknown level {log_level!r}")

    mining_raw = dict(raw.get("mining", {}))
    mining = _build(
        MiningConfig,
        "mining",
        mining_raw,
        coerce={
            "license_allowlist": lambda v: frozenset(map(str, v)),
            "message_blocklist": lambda v: frozenset(map(str, v)),
            "date_from": _to_date,
            "date_to": _to_date,
        },
    )
    filter_raw = dict(raw.get("filter", {}))
    if "rng_seed" not in filter_raw:
        filter_raw["rng_seed"] = seed
    filter_cfg = _build(FilterConfig, "filter", filter_raw)
    scorer = _build(ScorerSettings, "scorer", dict(raw.get("scorer", {})))
    train = _build(TrainSettings, "train", dict(raw.get("train", {})))
    if train.stage not in ("pt", "pm"):
        raise ConfigError("train.stage", f"must be 'pt' or 'pm', got {train.stage!r}")
    eval_cfg = _build(EvalSettings, "eval", dict(raw.get("eval", {})))
    if eval_cfg.criteria_mode not in ("none", "all", "single"):
        raise ConfigError("eval.criteria_mode", f"unknown mode {eval_cfg.criteria_mode!r}")
    assemble = _build(AssembleSettings, "assemble", dict(raw.get("assemble", {})))
    if assemble.manifest is not None and not Path(assemble.manifest).exists():
        raise ConfigError("assemble.manifest", f"file not found: {assemble.manifest}")

    return PipelineConfig(
        rng_seed=seed,
        log_level=log_level,
        mining=mining,
        filter=filter_cfg,
        scorer=scorer,
        train=train,
        eval=eval_cfg,
        assemble=assemble,
    )
