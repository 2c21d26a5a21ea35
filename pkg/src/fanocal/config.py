"""
Experiment configuration and built-in presets.

Presets reproduce the three measured configurations (coherent light on a
photomultiplier, multimode thermal light on the same photomultiplier,
pseudo-thermal light on a hybrid photodiode) plus a sub-Poissonian test
source.  Photon means and the transmittance grid are free choices: they
put the largest mean voltage near 2-3 V.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .detection import DetectorChain
from .distributions import BinomialSource, MultimodeThermal, Poisson, PhotonNumberModel
from .errors import ConfigError, FanocalError

DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_SHOTS = 100_000
DEFAULT_SEED = 20070523
MIN_SHOTS = 100


@dataclass
class ExperimentConfig:
    model: PhotonNumberModel
    chain: DetectorChain
    transmittances: tuple[float, ...] = DEFAULT_GRID
    shots_per_run: int = DEFAULT_SHOTS
    master_seed: int = DEFAULT_SEED
    name: str = "custom"
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.transmittances = tuple(float(t) for t in self.transmittances)
        if not self.transmittances:
            raise ConfigError("transmittances must be nonempty")
        bad = [t for t in self.transmittances if not 0.0 < t <= 1.0]
        if bad:
            raise ConfigError(f"transmittances outside (0, 1]: {bad}")
        if int(self.shots_per_run) != self.shots_per_run or self.shots_per_run < MIN_SHOTS:
            raise ConfigError(f"shots_per_run must be an integer >= {MIN_SHOTS}, "
                              f"got {self.shots_per_run}")
        self.shots_per_run = int(self.shots_per_run)
        self.master_seed = int(self.master_seed)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "model": self.model.to_dict(), "chain": self.chain.to_dict(),
                "transmittances": list(self.transmittances),
                "shots_per_run": self.shots_per_run, "master_seed": self.master_seed,
                "outputs": dict(self.outputs)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        try:
            return cls(
                model=PhotonNumberModel.from_dict(data["model"]),
                chain=DetectorChain.from_dict(data["chain"]),
                transmittances=data.get("transmittances", DEFAULT_GRID),
                shots_per_run=data.get("shots_per_run", DEFAULT_SHOTS),
                master_seed=data.get("master_seed", DEFAULT_SEED),
                name=data.get("name", "custom"),
                outputs=data.get("outputs", {}),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from None
        except ConfigError:
            raise
        except (FanocalError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


PRESETS: dict[str, ExperimentConfig] = {
    "coherent": ExperimentConfig(Poisson(20.0), DetectorChain(0.24, 0.358), name="coherent"),
    "thermal": ExperimentConfig(MultimodeThermal(35.0, 5.2), DetectorChain(0.24, 0.356),
                                name="thermal"),
    "pseudo_thermal": ExperimentConfig(MultimodeThermal(40.0, 3.9), DetectorChain(0.40, 0.187),
                                       name="pseudo_thermal"),
    "sub_poissonian": ExperimentConfig(BinomialSource(20, 0.9), DetectorChain(0.8, 0.358),
                                       name="sub_poissonian"),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """Copy of a preset with selected fields replaced."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    data = base.to_dict()
    data.update(overrides)
    if "model" in overrides and isinstance(overrides["model"], PhotonNumberModel):
        data["model"] = overrides["model"].to_dict()
    if "chain" in overrides and isinstance(overrides["chain"], DetectorChain):
        data["chain"] = overrides["chain"].to_dict()
    return ExperimentConfig.from_dict(data)
