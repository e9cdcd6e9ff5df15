"""
Adam optimizer over ParamStore-style name -> array maps.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from utils.errors import OptimError

# Standard Adam defaults.
LR = 1e-3
BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float = LR,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPS,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update. Inputs are left untouched; returns new
    parameter and state maps. Parameters without a gradient get a zero one.
    """
    for name, g in grads.items():
        if name not in params:
            raise OptimError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise OptimError(f"{name}: gradient shape {g.shape} != parameter {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise OptimError(f"non-finite gradient for {name!r}")

    t = state.t + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        if m.shape != p.shape or v.shape != p.shape:
            raise OptimError(f"{name}: optimizer state shape does not match parameter")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(m=new_m, v=new_v, t=t)
