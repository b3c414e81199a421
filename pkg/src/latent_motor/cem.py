"""Gradient-free adaptation: cross-entropy search over the embedding sphere.

An elite set of m embeddings starts uniform on the sphere. Each epoch,
every elite contributes itself plus n Gaussian-perturbed, re-projected
neighbours to the candidate pool; all candidates are scored by the
cumulative reward of deterministic rollouts and the top m survive. The
perturbation scale decays geometrically. Because elites re-enter the
pool and evaluation is deterministic, the best return never decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .embedding import inject_noise, normalize_rows
from .envs import TaskSpec
from .errors import ConfigurationError
from .rng import eval_generator
from .sac import SacModel, evaluate_policy


@dataclass
class CemConfig:
    elite_capacity: int = 5
    samples_per_elite: int = 8
    adapt_epochs: int = 10
    sample_sigma: float = 0.3
    sigma_decay: float = 0.9
    episodes_per_eval: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.elite_capacity < 1 or self.samples_per_elite < 0:
            raise ConfigurationError("need elite_capacity >= 1 and samples_per_elite >= 0")
        if self.sample_sigma <= 0 or not 0.0 < self.sigma_decay <= 1.0:
            raise ConfigurationError("need sample_sigma > 0 and sigma_decay in (0, 1]")
        if self.adapt_epochs < 1 or self.episodes_per_eval < 1:
            raise ConfigurationError("need adapt_epochs >= 1 and episodes_per_eval >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CemEpoch:
    elites: np.ndarray          # (m, d)
    elite_returns: np.ndarray   # (m,), descending
    best_return: float
    sigma: float
    episodes_used: int


@dataclass
class CemTrace:
    epochs: list = field(default_factory=list)

    def best_returns(self) -> np.ndarray:
        return np.array([e.best_return for e in self.epochs])


def cem_optimize(evaluator, config: CemConfig, dim: int = 3) -> tuple[np.ndarray, CemTrace]:
    """Core elite search; evaluator maps a unit vector to a scalar return.

    Rollout-free callers (tests, synthetic objectives) use this directly.
    """
    rng = eval_generator(config.seed, 101)
    m, n = config.elite_capacity, config.samples_per_elite
    elites = normalize_rows(rng.standard_normal((m, dim)))
    sigma = config.sample_sigma
    trace = CemTrace()
    for _ in range(config.adapt_epochs):
        candidates = []
        for i in range(m):
            candidates.append(elites[i])
            for _ in range(n):
                candidates.append(inject_noise(elites[i], sigma, rng))
        returns = np.array([evaluator(z) for z in candidates])
        # Descending return, candidate index breaks ties.
        order = np.lexsort((np.arange(len(candidates)), -returns))[:m]
        elites = np.stack([candidates[i] for i in order])
        elite_returns = returns[order]
        trace.epochs.append(CemEpoch(
            elites=elites.copy(), elite_returns=elite_returns,
            best_return=float(elite_returns[0]), sigma=sigma,
            episodes_used=m * (n + 1) * config.episodes_per_eval,
        ))
        sigma *= config.sigma_decay
    return elites[0].copy(), trace


def cem_adapt(model: SacModel, task: TaskSpec, config: CemConfig,
              evaluator=None) -> tuple[np.ndarray, CemTrace]:
    """Adapt to an unseen task by optimizing the embedding alone.

    The policy networks stay frozen; candidates are scored with the
    deterministic policy on a fixed evaluation seed so that repeat
    evaluations of an elite are identical.
    """
    if model is None or model.kind != "ear":
        raise ConfigurationError("adaptation needs a trained shared-interface model")
    if task.family != model.family:
        raise ConfigurationError(
            f"task family {task.family!r} does not match model family {model.family!r}")
    if evaluator is None:
        def evaluator(z):
            rep = evaluate_policy(model, z, task, episodes=config.episodes_per_eval,
                                  eval_seed=config.seed)
            return rep.mean_return
    return cem_optimize(evaluator, config, dim=model.config.lte_dim)


def adaptation_curve(traces: list[CemTrace]) -> list[dict]:
    """Aggregate best-return curves over adaptation runs.

    Returns one row per epoch with the mean and population std of the
    best return across traces; traces must have equal length.
    """
    if not traces:
        raise ConfigurationError("no traces given")
    lengths = {len(t.epochs) for t in traces}
    if len(lengths) != 1:
        raise ConfigurationError("ragged traces: all runs must have the same epoch count")
    stacked = np.stack([t.best_returns() for t in traces])
    rows = []
    for e in range(stacked.shape[1]):
        rows.append({
            "epoch": e,
            "mean_best_return": float(np.mean(stacked[:, e])),
            "std_best_return": float(np.std(stacked[:, e])),
        })
    return rows
