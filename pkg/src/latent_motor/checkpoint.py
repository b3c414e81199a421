"""Versioned checkpoint serialization.

Checkpoints are canonical JSON (sorted keys, compact separators, one
trailing newline) with every float64 written as a decimal literal.
Python's repr/float round trip is exact for finite doubles, so
load(save(model)) reproduces the model bit for bit and re-saving yields
byte-identical files. Loading re-validates structural invariants before
handing the model back.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .envs import EnvConstants, TaskSpec
from .errors import CheckpointError
from .nn import AdamState, Mlp
from .rng import RngStreams
from .sac import SacModel, TrainConfig

FORMAT_VERSION = 1


def _arr(a: np.ndarray):
    return np.asarray(a, dtype=np.float64).tolist()


def _mlp_payload(mlp: Mlp) -> dict:
    return {
        "dims": mlp.dims(),
        "weights": [_arr(w) for w in mlp.weights],
        "biases": [_arr(b) for b in mlp.biases],
    }


def _mlp_restore(mlp: Mlp, payload: dict) -> None:
    if payload["dims"] != mlp.dims():
        raise CheckpointError(
            f"network dims {payload['dims']} do not match expected {mlp.dims()}")
    for w, data in zip(mlp.weights, payload["weights"]):
        np.copyto(w, np.asarray(data, dtype=np.float64))
    for b, data in zip(mlp.biases, payload["biases"]):
        np.copyto(b, np.asarray(data, dtype=np.float64))


def _adam_payload(st: AdamState) -> dict:
    return {
        "m": [_arr(a) for a in st.m],
        "v": [_arr(a) for a in st.v],
        "step": st.step,
        "lr": st.lr, "beta1": st.beta1, "beta2": st.beta2, "eps": st.eps,
    }


def _adam_restore(st: AdamState, payload: dict) -> None:
    if len(payload["m"]) != len(st.m):
        raise CheckpointError("optimizer state length mismatch")
    for dst, data in zip(st.m, payload["m"]):
        src = np.asarray(data, dtype=np.float64)
        if src.shape != dst.shape:
            raise CheckpointError("optimizer moment shape mismatch")
        np.copyto(dst, src)
    for dst, data in zip(st.v, payload["v"]):
        src = np.asarray(data, dtype=np.float64)
        if np.any(src < 0):
            raise CheckpointError("second moments must be non-negative")
        np.copyto(dst, src)
    st.step = int(payload["step"])
    st.lr = float(payload["lr"])
    st.beta1 = float(payload["beta1"])
    st.beta2 = float(payload["beta2"])
    st.eps = float(payload["eps"])


def _policy_payload(model: SacModel) -> dict:
    p = model.policy
    if model.kind == "ear":
        return {
            "encoder": _mlp_payload(p.encoder),
            "decoder": _mlp_payload(p.decoder),
            "task_encoder": {"weight": _arr(p.task_encoder.weight),
                             "bias": _arr(p.task_encoder.bias)},
        }
    if model.kind == "ohe":
        return {"net": _mlp_payload(p.net)}
    return {
        "head_w": _arr(p.head_w),
        "head_b": _arr(p.head_b),
        "trunk": _mlp_payload(p.trunk),
    }


def _policy_restore(model: SacModel, payload: dict) -> None:
    p = model.policy
    if model.kind == "ear":
        _mlp_restore(p.encoder, payload["encoder"])
        _mlp_restore(p.decoder, payload["decoder"])
        np.copyto(p.task_encoder.weight,
                  np.asarray(payload["task_encoder"]["weight"], dtype=np.float64))
        np.copyto(p.task_encoder.bias,
                  np.asarray(payload["task_encoder"]["bias"], dtype=np.float64))
    elif model.kind == "ohe":
        _mlp_restore(p.net, payload["net"])
    else:
        np.copyto(p.head_w, np.asarray(payload["head_w"], dtype=np.float64))
        np.copyto(p.head_b, np.asarray(payload["head_b"], dtype=np.float64))
        _mlp_restore(p.trunk, payload["trunk"])


def checkpoint_payload(model: SacModel) -> dict:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "family": model.family,
        "tasks": [t.as_dict() for t in model.tasks],
        "constants": model.constants.as_dict(),
        "config": model.config.as_dict(),
        "policy": _policy_payload(model),
        "q1": _mlp_payload(model.q1),
        "q2": _mlp_payload(model.q2),
        "q1_target": _mlp_payload(model.q1_target),
        "q2_target": _mlp_payload(model.q2_target),
        "log_alpha": float(model.log_alpha),
        "target_entropy": model.target_entropy,
        "adam": {
            "policy": _adam_payload(model.opt_policy),
            "q1": _adam_payload(model.opt_q1),
            "q2": _adam_payload(model.opt_q2),
            "alpha": _adam_payload(model.opt_alpha),
        },
        "rng": model.rngs.state(),
    }
    if model.kind == "ear":
        payload["lte_set"] = _arr(model.lte_set())
    return payload


def dump_bytes(payload: dict) -> bytes:
    try:
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                          allow_nan=False)
    except ValueError as exc:
        raise CheckpointError(f"refusing to serialize non-finite value: {exc}") from exc
    return (text + "\n").encode("utf-8")


def save_checkpoint(model: SacModel, path: str) -> str:
    """Write the model; returns the sha256 of the file contents."""
    data = dump_bytes(checkpoint_payload(model))
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path: str) -> SacModel:
    """Rebuild a model, re-validating invariants along the way."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        offset = getattr(exc, "pos", getattr(exc, "start", 0))
        raise CheckpointError(f"corrupt checkpoint at byte {offset}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {payload.get('format_version')!r}; "
            f"this build reads version {FORMAT_VERSION}")
    try:
        tasks = [TaskSpec.from_dict(d) for d in payload["tasks"]]
        constants = EnvConstants(**payload["constants"])
        config = TrainConfig(**payload["config"])
        model = SacModel(payload["kind"], tasks, config, constants)
        _policy_restore(model, payload["policy"])
        _mlp_restore(model.q1, payload["q1"])
        _mlp_restore(model.q2, payload["q2"])
        _mlp_restore(model.q1_target, payload["q1_target"])
        _mlp_restore(model.q2_target, payload["q2_target"])
        model.log_alpha[...] = float(payload["log_alpha"])
        model.target_entropy = float(payload["target_entropy"])
        _adam_restore(model.opt_policy, payload["adam"]["policy"])
        _adam_restore(model.opt_q1, payload["adam"]["q1"])
        _adam_restore(model.opt_q2, payload["adam"]["q2"])
        _adam_restore(model.opt_alpha, payload["adam"]["alpha"])
        model.rngs = RngStreams.from_state(payload["rng"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint field: {exc}") from exc
    _validate(model, payload)
    return model


def _validate(model: SacModel, payload: dict) -> None:
    for net in (model.q1, model.q2, model.q1_target, model.q2_target):
        net.validate()
    if model.kind == "ear":
        model.policy.encoder.validate()
        model.policy.decoder.validate()
        if model.config.normalize_lte:
            norms = np.linalg.norm(model.lte_set(), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise CheckpointError("stored embedding set is not unit-norm")
        stored = np.asarray(payload["lte_set"], dtype=np.float64)
        if stored.shape != model.lte_set().shape or not np.allclose(
                stored, model.lte_set(), atol=1e-12, rtol=0.0):
            raise CheckpointError("stored embedding set disagrees with encoder weights")
    if not np.isfinite(model.log_alpha):
        raise CheckpointError("non-finite temperature")


def file_sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
