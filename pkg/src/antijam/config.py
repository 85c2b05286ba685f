"""Experiment configuration: INI-style files with strict key checking.

An empty file yields the default setup (20 MHz band, 200x200 waterfall, comb
jammer, 20k training epochs). Unknown sections or keys are rejected; values
are validated by the domain dataclasses they feed. ``serialize_config`` and
``parse_config`` round-trip losslessly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .agent import TrainHyper
from .env import RewardConfig, SpectrumEnv
from .errors import ConfigError
from .jammers import CombJammer, IntelligentJammer, Jammer, RandomJammer, SweepJammer
from .spectrum import BandConfig, WaveformSpec

JAMMER_KINDS = ("sweep", "comb", "random", "intelligent", "none")


@dataclass(frozen=True)
class JammerConfig:
    kind: str = "comb"
    power_dbm: float = 30.0
    bandwidth_mhz: float = 4.0
    rolloff: float = 0.3
    sweep_speed_mhz_per_ms: float = 1.0
    sweep_start_mhz: float = 2.0
    comb_centers_mhz: tuple[float, ...] = (2.0, 10.0, 18.0)
    random_dwell_ms: float = 20.0
    random_grid_mhz: tuple[float, ...] = (2.0, 6.0, 10.0, 14.0, 18.0)
    observe_window: int = 200

    def __post_init__(self) -> None:
        if self.kind not in JAMMER_KINDS:
            raise ConfigError(f"jammer.kind must be one of {JAMMER_KINDS}, got {self.kind!r}")

    def waveform(self) -> WaveformSpec:
        return WaveformSpec(self.bandwidth_mhz, self.rolloff, self.power_dbm)


@dataclass(frozen=True)
class ExperimentConfig:
    band: BandConfig = field(default_factory=BandConfig)
    signal: WaveformSpec = field(default_factory=lambda: WaveformSpec(4.0, 0.3, 0.0))
    reward: RewardConfig = field(default_factory=RewardConfig)
    jammer: JammerConfig = field(default_factory=JammerConfig)
    training: TrainHyper = field(default_factory=TrainHyper)
    epochs: int = 20_000
    eval_epochs: int = 2_000
    seed: int = 1
    out_dir: str = "runs/default"

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.eval_epochs < 1:
            raise ConfigError("epochs must be >= 0 and eval_epochs >= 1")


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


# section -> key -> (target dataclass field, parser)
_SCHEMA = {
    "band": {
        "lo_mhz": _parse_float, "hi_mhz": _parse_float, "bin_mhz": _parse_float,
        "slot_ms": _parse_float, "rows": _parse_int, "bins": _parse_int,
        "epoch_slots": _parse_int,
    },
    "signal": {
        "bandwidth_mhz": _parse_float, "rolloff": _parse_float, "power_dbm": _parse_float,
    },
    "reward": {
        "rate": _parse_float, "switch_cost": _parse_float,
        "sinr_threshold_db": _parse_float, "noise_power_dbm": _parse_float,
    },
    "jammer": {
        "kind": _parse_str, "power_dbm": _parse_float, "bandwidth_mhz": _parse_float,
        "rolloff": _parse_float, "sweep_speed_mhz_per_ms": _parse_float,
        "sweep_start_mhz": _parse_float, "comb_centers_mhz": _parse_floats,
        "random_dwell_ms": _parse_float, "random_grid_mhz": _parse_floats,
        "observe_window": _parse_int,
    },
    "training": {
        "gamma": _parse_float, "learning_rate": _parse_float, "batch_size": _parse_int,
        "buffer_capacity": _parse_int, "min_replay": _parse_int,
        "epsilon_delta": _parse_float, "epsilon_floor": _parse_float,
        "decimation": _parse_int, "throughput_window": _parse_int,
        "epochs": _parse_int, "eval_epochs": _parse_int,
    },
    "run": {
        "seed": _parse_int, "out_dir": _parse_str,
    },
}

_SECTION_TYPES = {
    "band": BandConfig,
    "signal": WaveformSpec,
    "reward": RewardConfig,
    "jammer": JammerConfig,
    "training": TrainHyper,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse config text; missing keys take defaults, unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            try:
                values[section][key] = _SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: invalid value for {section}.{key}: {raw!r}") from exc

    def build(section: str, cls):
        try:
            return cls(**values.get(section, {}))
        except ConfigError as exc:
            raise ConfigError(f"{source}: [{section}] {exc}") from exc

    training_keys = dict(values.get("training", {}))
    epochs = training_keys.pop("epochs", 20_000)
    eval_epochs = training_keys.pop("eval_epochs", 2_000)
    run_keys = values.get("run", {})
    try:
        return ExperimentConfig(
            band=build("band", BandConfig),
            signal=build("signal", WaveformSpec),
            reward=build("reward", RewardConfig),
            jammer=build("jammer", JammerConfig),
            training=TrainHyper(**training_keys),
            epochs=epochs,
            eval_epochs=eval_epochs,
            seed=run_keys.get("seed", 1),
            out_dir=run_keys.get("out_dir", "runs/default"),
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form listing every key; parses back to an equal config."""
    lines: list[str] = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            if section == "training" and key in ("epochs", "eval_epochs"):
                value = getattr(cfg, key)
            elif section == "run":
                value = getattr(cfg, key)
            else:
                value = getattr(_section_obj(cfg, section), key)
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _section_obj(cfg: ExperimentConfig, section: str):
    return {"band": cfg.band, "signal": cfg.signal, "reward": cfg.reward,
            "jammer": cfg.jammer, "training": cfg.training}[section]


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))


def build_jammers(cfg: ExperimentConfig) -> list[Jammer]:
    j = cfg.jammer
    wf = j.waveform()
    if j.kind == "sweep":
        return [SweepJammer(wf, j.sweep_speed_mhz_per_ms, j.sweep_start_mhz,
                            cfg.band.lo_mhz, cfg.band.hi_mhz)]
    if j.kind == "comb":
        return [CombJammer(wf, j.comb_centers_mhz)]
    if j.kind == "random":
        return [RandomJammer(wf, j.random_dwell_ms, j.random_grid_mhz)]
    if j.kind == "intelligent":
        middle = (cfg.band.lo_mhz + cfg.band.hi_mhz) / 2.0
        return [IntelligentJammer(wf, j.observe_window, idle_center_mhz=middle)]
    return []


def build_env(cfg: ExperimentConfig) -> SpectrumEnv:
    return SpectrumEnv(band=cfg.band, reward=cfg.reward, signal=cfg.signal,
                       jammers=build_jammers(cfg))
