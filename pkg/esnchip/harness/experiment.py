"""
Experiment configuration: INI file sections -> pydantic models.

    [experiment]  name, epochs, global_seed, precision, feature_mode, ...
    [reservoir]   ReservoirConfig fields
    [weights]     WeightGenConfig fields (nested in the reservoir)
    [readout]     ReadoutConfig fields
    [topology]    TopologySpec fields
    [dataset]     DatasetConfig fields
    [noise]       NoiseSpec fields (section present = noise enabled)
    [pso]         PsoConfig fields

Flags override file keys as `section.key=value`.
"""
import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from esnchip.analysis.noise import NoiseSpec
from esnchip.chip.dataflow import TopologySpec
from esnchip.chip.readout import ReadoutConfig
from esnchip.chip.reservoir import ReservoirConfig
from esnchip.chip.rng_lfsr import fan_out_seeds
from esnchip.config import resolve_data_path
from esnchip.errors import ConfigError
from esnchip.harness.datasets import (
    HAR_LABEL_PRESETS, HAR_SAMPLE_RATE_HZ, DatasetKind, LoadedDataset, load_csv_generic, load_har,
    load_pfc, load_synthetic, load_synthetic_emg,
)
from esnchip.harness.filters import DEFAULT_CUTOFF_HZ, FeatureMode
from esnchip.harness.pso import PsoConfig

SECTIONS = ("experiment", "reservoir", "weights", "readout", "topology", "dataset", "noise", "pso")
SEED_KEYS = {
    "weights": ("lfsr_ff_seed", "lfsr_fb_seed", "lfsr_s_seed", "lfsr_f_seed"),
    "readout": ("init_seed", "sp_seed"),
}


class DatasetConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DatasetKind = DatasetKind.SYNTHETIC
    path: Optional[str] = None
    split: float = Field(0.70, gt=0, lt=1)
    label_preset: str = "first-four"
    classes: Optional[Tuple[int, ...]] = None   # raw labels in class order; overrides the preset
    sample_rate_hz: Optional[float] = Field(None, gt=0)
    cutoff_hz: float = Field(DEFAULT_CUTOFF_HZ, gt=0)
    # synthetic stream size
    n_samples: int = Field(4000, ge=10)
    samples_per_trial: int = Field(2000, ge=10)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == DatasetKind.HAR and self.classes is None and self.label_preset not in HAR_LABEL_PRESETS:
            raise ValueError(f"unknown label_preset {self.label_preset!r}; "
                             f"choose from {', '.join(HAR_LABEL_PRESETS)}")
        return self

    def resolved_classes(self, default: Tuple[int, ...] = (1, 2, 3, 4)) -> Tuple[int, ...]:
        if self.classes is not None:
            return tuple(self.classes)
        if self.kind == DatasetKind.HAR:
            return tuple(HAR_LABEL_PRESETS[self.label_preset])
        return default


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    reservoir: ReservoirConfig = ReservoirConfig()
    readout: ReadoutConfig = ReadoutConfig()
    topology: TopologySpec = TopologySpec()
    dataset: DatasetConfig = DatasetConfig()
    noise: Optional[NoiseSpec] = None
    pso: PsoConfig = PsoConfig()
    feature_mode: FeatureMode = FeatureMode.AUTO
    precision: Literal["fixed", "float"] = "fixed"
    epochs: int = Field(1, ge=0)
    global_seed: Optional[int] = Field(None, ge=0)

    @property
    def filters_enabled(self) -> bool:
        return self.feature_mode in (FeatureMode.FILTERED, FeatureMode.AUGMENTED)

    @model_validator(mode="after")
    def _check(self):
        if self.readout.n_o != self.reservoir.n_o:
            raise ValueError(f"readout n_o={self.readout.n_o} but reservoir n_o={self.reservoir.n_o}")
        return self

    def with_topology_from_reservoir(self) -> "ExperimentConfig":
        """Keeps the latency model's n_r / n_o in step with the simulated network."""
        topo = self.topology.model_copy(update={"n_r": self.reservoir.n_r, "n_o": self.reservoir.n_o})
        return self.model_copy(update={"topology": topo})


# --- Seeds ---

def apply_global_seed(cfg: ExperimentConfig, explicit: Iterable[str] = ()) -> ExperimentConfig:
    """
    One global seed fans out to the four weight generators, the two readout
    generators, PSO and noise. Seed keys set explicitly in the file win.
    """
    if cfg.global_seed is None:
        return cfg
    explicit = set(explicit)
    ff, fb, s, f, init, sp = fan_out_seeds(cfg.global_seed, cfg.reservoir.weights.lfsr_width, count=6)
    weights_update = {k: v for k, v in zip(SEED_KEYS["weights"], (ff, fb, s, f)) if f"weights.{k}" not in explicit}
    readout_update = {k: v for k, v in zip(SEED_KEYS["readout"], (init, sp)) if f"readout.{k}" not in explicit}
    weights = cfg.reservoir.weights.model_copy(update=weights_update)
    reservoir = cfg.reservoir.model_copy(update={"weights": weights})
    readout = cfg.readout.model_copy(update=readout_update)
    update: Dict[str, Any] = {"reservoir": reservoir, "readout": readout}
    if "pso.seed" not in explicit:
        update["pso"] = cfg.pso.model_copy(update={"seed": cfg.global_seed})
    if cfg.noise is not None and "noise.seed" not in explicit:
        update["noise"] = cfg.noise.model_copy(update={"seed": cfg.global_seed})
    # revalidate so the distinct-seed checks run on the derived values
    return ExperimentConfig.model_validate(cfg.model_copy(update=update).model_dump())


# --- INI parsing ---

def _coerce(value: str) -> Any:
    value = value.strip()
    if "," in value:
        return [_coerce(v) for v in value.split(",") if v.strip()]
    low = value.lower()
    if low in ("none", ""):
        return None
    if low in ("inf", "+inf"):
        return float("inf")
    try:
        return int(value, 0)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def parse_overrides(overrides: Iterable[str]) -> List[Tuple[str, str, str]]:
    parsed = []
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if section not in SECTIONS:
            raise ConfigError(f"override {item!r}: unknown section {section!r}")
        parsed.append((section, name.strip(), value))
    return parsed


def _nest(sections: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    data: Dict[str, Any] = dict(sections.get("experiment", {}))
    if "reservoir" in sections or "weights" in sections:
        data["reservoir"] = dict(sections.get("reservoir", {}))
        if "weights" in sections:
            data["reservoir"]["weights"] = dict(sections["weights"])
    for name in ("readout", "topology", "dataset", "noise", "pso"):
        if name in sections:
            data[name] = dict(sections[name])
    # the readout width follows the reservoir's unless set on its own
    n_o = data.get("reservoir", {}).get("n_o")
    if n_o is not None and "n_o" not in data.get("readout", {}):
        data.setdefault("readout", {})["n_o"] = n_o
    return data


def _format_validation(source: str, err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return f"{source}: invalid configuration ({'; '.join(parts)})"


def build_config(sections: Dict[str, Dict[str, Any]], source: str = "<config>",
                 explicit: Iterable[str] = ()) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(_nest(sections))
    except ValidationError as e:
        raise ConfigError(_format_validation(source, e)) from e
    if "topology" not in sections or not {"n_r", "n_o"} & set(sections.get("topology", {})):
        cfg = cfg.with_topology_from_reservoir()
    try:
        return apply_global_seed(cfg, explicit)
    except ValidationError as e:
        raise ConfigError(_format_validation(source, e)) from e


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Reads an INI experiment file (optional) and applies section.key=value overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    source = "<defaults>"
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            parser.read(p, encoding="utf-8")
        except configparser.Error as e:
            raise ConfigError(f"{p}: unreadable config ({e})") from e
        source = str(p)
        unknown = [s for s in parser.sections() if s not in SECTIONS]
        if unknown:
            raise ConfigError(f"{p}: unknown section(s) {', '.join(unknown)}")

    sections: Dict[str, Dict[str, Any]] = {s: {k: _coerce(v) for k, v in parser.items(s)} for s in parser.sections()}
    for section, key, value in parse_overrides(overrides):
        sections.setdefault(section, {})[key] = _coerce(value)
    explicit = {f"{s}.{k}" for s, keys in sections.items() for k in keys}
    cfg = build_config(sections, source, explicit)
    logging.info(f"Loaded experiment '{cfg.name}' from {source}")
    return cfg


def dump_config(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump()


# --- Dataset dispatch ---

def load_dataset(cfg: ExperimentConfig) -> LoadedDataset:
    d = cfg.dataset
    if d.kind == DatasetKind.HAR:
        if d.path is None:
            raise ConfigError("dataset.path is required for HAR")
        return load_har(resolve_data_path(d.path), d.resolved_classes(), d.split)
    if d.kind == DatasetKind.PFC:
        if d.path is None:
            logging.warning("No PFC path configured; using the synthetic EMG generator")
            return load_synthetic_emg(d.resolved_classes(), d.samples_per_trial, seed=cfg.global_seed or 0)
        return load_pfc(resolve_data_path(d.path), d.resolved_classes())
    if d.kind == DatasetKind.CSV_GENERIC:
        if d.path is None:
            raise ConfigError("dataset.path is required for csv datasets")
        return load_csv_generic(resolve_data_path(d.path), d.sample_rate_hz, d.split, classes=d.classes)
    return load_synthetic(n_classes=cfg.reservoir.n_o, n_samples=d.n_samples, n_features=_raw_width(cfg),
                          seed=cfg.global_seed or 0, train_fraction=d.split,
                          sample_rate_hz=d.sample_rate_hz or HAR_SAMPLE_RATE_HZ)


def _raw_width(cfg: ExperimentConfig) -> int:
    mode = cfg.feature_mode
    if mode == FeatureMode.AUTO:
        return cfg.reservoir.n_i
    if cfg.reservoir.n_i % mode.width_factor:
        raise ConfigError(f"n_i={cfg.reservoir.n_i} is not a multiple of the {mode.value} layout width")
    return cfg.reservoir.n_i // mode.width_factor
