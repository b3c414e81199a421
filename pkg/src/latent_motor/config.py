"""Experiment configuration: a strict JSON schema over dataclasses.

Unknown keys anywhere in the document are rejected before any run
starts, so a typo like "bacth_size" fails loudly instead of silently
training with defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .cem import CemConfig
from .envs import DEFAULT_CONSTANTS, EnvConstants, FAMILIES, TaskSpec, make_task_set
from .errors import ConfigurationError
from .sac import TrainConfig


@dataclass
class EnvSection:
    family: str = "vel1d"
    count: int | None = None
    low: float = 0.5
    high: float = 2.5
    run_count: int = 4
    jump_count: int = 2
    run_low: float = 0.5
    run_high: float = 2.0
    jump_weights: list = field(default_factory=lambda: [2.0, 4.0])
    max_episode_frames: int = 200

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown env family {self.family!r}")

    def task_set(self) -> list[TaskSpec]:
        return make_task_set(
            self.family, count=self.count, low=self.low, high=self.high,
            run_count=self.run_count, jump_count=self.jump_count,
            run_low=self.run_low, run_high=self.run_high,
            jump_weights=tuple(self.jump_weights))

    def constants(self) -> EnvConstants:
        return dataclasses.replace(DEFAULT_CONSTANTS,
                                   max_episode_frames=self.max_episode_frames)


@dataclass
class AnalysisSection:
    sphere_resolution: int = 12
    pca_components: int = 2
    episodes: int = 1
    betas: list = field(default_factory=lambda: [round(b * 0.1, 1) for b in range(10, -1, -1)])


@dataclass
class ExperimentConfig:
    seed: int = 0
    out_dir: str = "runs/latest"
    env: EnvSection = field(default_factory=EnvSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    cem: CemConfig = field(default_factory=CemConfig)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)

    def resolved(self, seed: int | None = None) -> "ExperimentConfig":
        """Copy with the effective seed pushed into every sub-config."""
        eff = self.seed if seed is None else int(seed)
        return ExperimentConfig(
            seed=eff, out_dir=self.out_dir, env=self.env,
            train=dataclasses.replace(self.train, seed=eff),
            cem=dataclasses.replace(self.cem, seed=eff),
            analysis=self.analysis,
        )


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a JSON object")
    top = {"seed", "out_dir", "env", "train", "cem", "analysis"}
    unknown = set(doc) - top
    if unknown:
        raise ConfigurationError(f"unknown top-level keys: {sorted(unknown)}")
    return ExperimentConfig(
        seed=int(doc.get("seed", 0)),
        out_dir=str(doc.get("out_dir", "runs/latest")),
        env=_build(EnvSection, doc.get("env", {}), "env"),
        train=_build(TrainConfig, doc.get("train", {}), "train"),
        cem=_build(CemConfig, doc.get("cem", {}), "cem"),
        analysis=_build(AnalysisSection, doc.get("analysis", {}), "analysis"),
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    return parse_config(doc)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
        "env": dataclasses.asdict(cfg.env),
        "train": dataclasses.asdict(cfg.train),
        "cem": dataclasses.asdict(cfg.cem),
        "analysis": dataclasses.asdict(cfg.analysis),
    }
