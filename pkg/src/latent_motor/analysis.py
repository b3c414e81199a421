"""Representation analyses: PCA of rollout embeddings, sphere coloring,
interpolation sweeps, target-metric beta search, and composition probes.

Everything here is read-only with respect to the model: evaluations use
stateless seeded generators, outputs are plain rows ready for CSV, and
identical inputs give identical rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import envs
from .embedding import interpolate, sphere_adjacency, sphere_grid, sphere_grid_angles
from .errors import ConfigurationError, DegenerateEmbedding
from .rng import eval_generator
from .sac import SacModel, evaluate_policy


@dataclass
class PcaResult:
    mean: np.ndarray
    components: np.ndarray    # (k, dim), rows orthonormal
    eigenvalues: np.ndarray   # (k,), descending
    projections: np.ndarray   # (n_samples, k)


def _jacobi_eigh(sym: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps rotate away every off-diagonal pair until the largest
    off-diagonal magnitude falls below tol relative to the matrix scale.
    """
    a = np.array(sym, dtype=np.float64)
    n = a.shape[0]
    vecs = np.eye(n)
    scale = max(np.max(np.abs(a)), 1.0)
    for _ in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a)))) if n > 1 else 0.0
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= tol * scale * 1e-3:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * vecs[:, p] - s * vecs[:, q]
                rot_q = s * vecs[:, p] + c * vecs[:, q]
                vecs[:, p], vecs[:, q] = rot_p, rot_q
    return np.diag(a).copy(), vecs


def pca(data: np.ndarray, k: int) -> PcaResult:
    """Top-k principal components of mean-centered data."""
    data = np.asarray(data, dtype=np.float64)
    n, dim = data.shape
    if k > dim:
        raise ConfigurationError(f"k={k} exceeds data dimension {dim}")
    if n < k + 1:
        raise ConfigurationError(f"need at least k+1={k + 1} samples, got {n}")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = _jacobi_eigh(cov)
    order = np.argsort(-eigvals)[:k]
    components = eigvecs[:, order].T
    eigenvalues = eigvals[order]
    projections = centered @ components.T
    return PcaResult(mean, components, eigenvalues, projections)


def pca_reconstruct(result: PcaResult) -> np.ndarray:
    return result.mean + result.projections @ result.components


def periodicity_score(series: np.ndarray) -> float:
    """Peak normalized autocorrelation over lags 2..T/2.

    A clean periodic signal scores near 1, white noise near 0; a
    constant series scores 0 by convention.
    """
    x = np.asarray(series, dtype=np.float64)
    x = x - x.mean()
    denom = float(np.sum(x * x))
    if denom < 1e-18:
        return 0.0
    t = len(x)
    best = 0.0
    for lag in range(2, t // 2 + 1):
        r = float(np.sum(x[:-lag] * x[lag:])) / denom
        best = max(best, r)
    return best


@dataclass
class LseAnalysis:
    raw_projections: np.ndarray
    lse_projections: np.ndarray
    raw_score: float
    lse_score: float


def lse_trajectory_analysis(model: SacModel, task: TaskSpec, task_id: int = 0,
                            eval_seed: int = 0) -> LseAnalysis:
    """Roll one deterministic episode and compare how periodic the raw
    observations and the sensory embeddings look after projecting each
    to its first principal components."""
    vec = envs.VecRollout([task], model.constants)
    obs = vec.reset(eval_generator(eval_seed))
    frames = model.constants.max_episode_frames
    raw = np.zeros((frames, model.obs_dim))
    lse = np.zeros((frames, model.config.lse_dim))
    lte_rows = model.lte_for_task(task_id)[None, :]
    for t in range(frames):
        raw[t] = obs[0]
        lse[t] = model.policy.encode_obs(obs)[0]
        action = model.policy.action_eval(obs, lte_rows=lte_rows)
        obs, _, _ = vec.step(action)
    k_raw = min(2, raw.shape[1])
    raw_proj = pca(raw, k_raw).projections
    lse_proj = pca(lse, 2).projections
    return LseAnalysis(
        raw_projections=raw_proj,
        lse_projections=lse_proj,
        raw_score=periodicity_score(raw_proj[:, 0]),
        lse_score=periodicity_score(lse_proj[:, 0]),
    )


@dataclass
class SphereCell:
    index: int
    theta: float
    phi: float
    embedding: np.ndarray
    metric: float
    mean_return: float


def evaluate_sphere(model: SacModel, task: TaskSpec, resolution: int,
                    eval_seed: int = 0, episodes: int = 1,
                    threads: int = 1) -> list[SphereCell]:
    """Score every lattice point of the embedding sphere on one task.

    Emits both the achieved-behavior metric and the reward, since either
    can serve as the coloring. Cells are ordered by grid index; each
    point is evaluated independently on stateless seeds, so the output
    is identical at any thread count.
    """
    if model.config.lte_dim != 3:
        raise ConfigurationError("sphere evaluation is defined for 3-d embeddings only")
    grid = sphere_grid(resolution)
    angles = sphere_grid_angles(resolution)

    def one(item):
        i, z = item
        rep = evaluate_policy(model, z, task, episodes=episodes, eval_seed=eval_seed)
        return SphereCell(i, float(angles[i, 0]), float(angles[i, 1]), z,
                          rep.metric, rep.mean_return)

    items = list(enumerate(grid))
    if threads <= 1:
        return [one(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, items))


def sphere_edges(resolution: int) -> list[tuple[int, int]]:
    return sphere_adjacency(resolution)


@dataclass
class SweepRow:
    beta: float
    metric: float
    mean_return: float
    skipped: bool = False


def interpolation_sweep(model: SacModel, z_i: np.ndarray, z_j: np.ndarray,
                        betas, task: TaskSpec, eval_seed: int = 0,
                        episodes: int = 1) -> list[SweepRow]:
    """Evaluate the blend of two embeddings across a list of coefficients.

    A degenerate blend (zero vector) is recorded as a skipped row rather
    than aborting the sweep.
    """
    normalized = getattr(model.policy, "normalize_lte", True)
    rows = []
    for beta in betas:
        try:
            z = interpolate(z_i, z_j, float(beta), normalized=normalized)
        except DegenerateEmbedding:
            rows.append(SweepRow(float(beta), np.nan, np.nan, skipped=True))
            continue
        rep = evaluate_policy(model, z, task, episodes=episodes, eval_seed=eval_seed)
        rows.append(SweepRow(float(beta), rep.metric, rep.mean_return))
    return rows


@dataclass
class BetaSearchResult:
    found: bool
    beta: float | None
    achieved: float | None
    evaluations: int


def search_beta(model: SacModel, z_i: np.ndarray, z_j: np.ndarray,
                target_metric: float, tol: float, task: TaskSpec,
                eval_seed: int = 0, episodes: int = 1,
                max_bisections: int = 40) -> BetaSearchResult:
    """Find a blend coefficient whose achieved metric hits a target.

    Scans a 17-point grid over [0.1, 0.9] in ascending order, returning
    the first hit within tol; otherwise bisects the first bracketing
    interval. Not finding one is a regular outcome, not an error.
    """
    normalized = getattr(model.policy, "normalize_lte", True)
    evals = 0

    def metric_at(beta: float) -> float:
        nonlocal evals
        z = interpolate(z_i, z_j, beta, normalized=normalized)
        evals += 1
        return evaluate_policy(model, z, task, episodes=episodes,
                               eval_seed=eval_seed).metric

    grid = np.linspace(0.1, 0.9, 17)
    values = []
    for beta in grid:
        m = metric_at(float(beta))
        values.append(m)
        if abs(m - target_metric) <= tol:
            return BetaSearchResult(True, float(beta), m, evals)
    values = np.array(values)
    sign = np.sign(values - target_metric)
    lo = hi = None
    for a in range(len(grid) - 1):
        if sign[a] == 0 or sign[a] != sign[a + 1]:
            lo, hi = grid[a], grid[a + 1]
            f_lo = values[a]
            break
    if lo is None:
        return BetaSearchResult(False, None, None, evals)
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        m = metric_at(float(mid))
        if abs(m - target_metric) <= tol:
            return BetaSearchResult(True, float(mid), m, evals)
        if np.sign(m - target_metric) == np.sign(f_lo - target_metric):
            lo = mid
            f_lo = m
        else:
            hi = mid
    return BetaSearchResult(False, None, None, evals)


@dataclass
class ComposeResult:
    beta: float
    mean_abs_vx: float
    mean_height: float
    mean_return: float
    skipped: bool = False


def compose(model: SacModel, z_a: np.ndarray, z_b: np.ndarray, beta: float,
            task: TaskSpec, eval_seed: int = 0, episodes: int = 1) -> ComposeResult:
    """Evaluate a cross-modality blend, reporting both modality metrics.

    The run/jump dynamics are task-independent, so the supplied task only
    sets the reward bookkeeping; horizontal speed and height are physical.
    """
    if task.family != envs.RUNJUMP:
        raise ConfigurationError("composition probes run on the run/jump family")
    normalized = getattr(model.policy, "normalize_lte", True)
    try:
        z = interpolate(z_a, z_b, beta, normalized=normalized)
    except DegenerateEmbedding:
        return ComposeResult(float(beta), np.nan, np.nan, np.nan, skipped=True)
    rep = evaluate_policy(model, z, task, episodes=episodes, eval_seed=eval_seed)
    return ComposeResult(float(beta), rep.extras["mean_abs_vx"],
                         rep.extras["mean_height"], rep.mean_return)


def spearman(x, y) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    def ranks(v):
        v = np.asarray(v, dtype=np.float64)
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        r[order] = np.arange(1, len(v) + 1, dtype=np.float64)
        # average tied ranks
        for val in np.unique(v):
            m = v == val
            if m.sum() > 1:
                r[m] = r[m].mean()
        return r
    rx, ry = ranks(x), ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.sum(rx ** 2) * np.sum(ry ** 2))
    if denom == 0:
        return 0.0
    return float(np.sum(rx * ry) / denom)
