"""Error-path and validation coverage across modules."""

import numpy as np
import pytest

from latent_motor.checkpoint import load_checkpoint, save_checkpoint
from latent_motor.embedding import interpolate
from latent_motor.envs import TaskSpec, make_task_set
from latent_motor.errors import ConfigurationError
from latent_motor.sac import SacModel, TrainConfig


def test_interpolate_rejects_non_finite_beta():
    z = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ConfigurationError):
        interpolate(z, z, float("nan"))
    with pytest.raises(ConfigurationError):
        interpolate(z, z, float("inf"))


def test_taskspec_validation():
    with pytest.raises(ConfigurationError):
        TaskSpec("dir2d", (3.0, 4.0))  # not unit norm
    with pytest.raises(ConfigurationError):
        TaskSpec("vel1d", (1.0,), reward_ctrl_cost=-1e-3)
    with pytest.raises(ConfigurationError):
        TaskSpec("walker", (1.0,))
    with pytest.raises(ConfigurationError):
        TaskSpec("vel1d", (float("nan"),))


def test_make_task_set_runjump_weight_fallback():
    # mismatched weight tuple falls back to an evenly spaced ramp
    tasks = make_task_set("runjump", run_count=2, jump_count=3, jump_weights=(1.0,))
    weights = [t.modality_weight for t in tasks if t.jump_modality]
    assert len(weights) == 3
    assert weights == sorted(weights)


def test_train_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(gamma=0.0)
    with pytest.raises(ConfigurationError):
        TrainConfig(tau=1.5)
    with pytest.raises(ConfigurationError):
        TrainConfig(sigma_noise=-0.1)


def test_unnormalized_model_checkpoint_round_trip(tmp_path):
    cfg = TrainConfig(pretrain_epochs=0, train_epochs=1, optimization_times=1,
                      batch_size=8, seed=4, hidden_width=6, lse_dim=3,
                      normalize_lte=False)
    model = SacModel("ear", make_task_set("vel1d", count=2), cfg)
    p1 = str(tmp_path / "a.json")
    p2 = str(tmp_path / "b.json")
    save_checkpoint(model, p1)
    loaded = load_checkpoint(p1)
    assert loaded.config.normalize_lte is False
    save_checkpoint(loaded, p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    # raw embeddings are generally not unit norm and must survive as-is
    assert np.array_equal(model.lte_set(), loaded.lte_set())
