"""Ring-buffer replay storage with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    truncated: bool
    task_id: int


@dataclass
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    truncated: np.ndarray
    task_id: np.ndarray
    # Physical termination mask for the bootstrap target. The toy
    # environments never terminate physically, so it stays all-False
    # unless a caller constructs a batch by hand.
    terminal: np.ndarray = None

    def __post_init__(self):
        if self.terminal is None:
            self.terminal = np.zeros(len(self.reward), dtype=bool)

    def __len__(self):
        return len(self.reward)


class ReplayBuffer:
    """FIFO ring buffer over transitions, sampled uniformly."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        if capacity < 1:
            raise ConfigurationError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.truncated = np.zeros(capacity, dtype=bool)
        self.task_id = np.zeros(capacity, dtype=np.int64)
        self.size = 0
        self.head = 0

    def __len__(self):
        return self.size

    def add(self, t: Transition) -> None:
        i = self.head
        self.obs[i] = t.state
        self.action[i] = t.action
        self.reward[i] = t.reward
        self.next_obs[i] = t.next_state
        self.truncated[i] = t.truncated
        self.task_id[i] = t.task_id
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add_batch(self, obs, action, reward, next_obs, truncated, task_id) -> None:
        for i in range(len(reward)):
            self.add(Transition(obs[i], action[i], float(reward[i]),
                                next_obs[i], bool(truncated[i]), int(task_id[i])))

    def sample(self, batch_size: int, rng) -> Batch:
        if self.size == 0:
            raise ConfigurationError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(
            obs=self.obs[idx], action=self.action[idx], reward=self.reward[idx],
            next_obs=self.next_obs[idx], truncated=self.truncated[idx],
            task_id=self.task_id[idx],
        )
