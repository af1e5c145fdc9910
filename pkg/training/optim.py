"""Adam with bias correction over a ParamStore."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from config.app_config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from engine.errors import ShapeMismatchError
from zoo.params import ParamStore


@dataclass(frozen=True)
class AdamState:
    """First/second moments per parameter key; keys appear on their first update."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def adam_step(
    params: ParamStore,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[ParamStore, AdamState]:
    """One Adam update. Frozen parameters keep their values and get no moments; t always advances."""
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    m, v = dict(state.m), dict(state.v)
    updates: dict[str, np.ndarray] = {}
    for key, grad in grads.items():
        if params.is_frozen(key):
            continue
        value = params[key]
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != value.shape:
            raise ShapeMismatchError(f"gradient {key}", value.shape, grad.shape)
        m_prev = m.get(key, np.zeros(value.shape))
        v_prev = v.get(key, np.zeros(value.shape))
        m[key] = b1 * m_prev + (1.0 - b1) * grad
        v[key] = b2 * v_prev + (1.0 - b2) * grad * grad
        step = lr * (m[key] / correction1) / (np.sqrt(v[key] / correction2) + state.eps)
        updates[key] = (value.astype(np.float64) - step).astype(value.dtype)
    new_state = AdamState(m=m, v=v, t=t, beta1=b1, beta2=b2, eps=state.eps)
    return params.with_tensors(updates), new_state
