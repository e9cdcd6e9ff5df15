"""
Central finite-difference check of tape gradients.
"""
import logging
from typing import Callable, Dict

import numpy as np

from tensor.autodiff import Tape, Tensor, backward
from utils.errors import ShapeError, UsageError

logger = logging.getLogger("LDGCN")


def _evaluate(f, inputs: Dict[str, np.ndarray]):
    tape = Tape()
    bound = {name: tape.watch(name, value) for name, value in inputs.items()}
    loss = f(bound)
    if not isinstance(loss, Tensor) or loss.values.size != 1:
        raise ShapeError("grad_check needs a scalar-valued function")
    return tape, loss


def grad_check(
    f: Callable[[Dict[str, Tensor]], Tensor], inputs: Dict[str, np.ndarray], eps: float = 1e-5
) -> float:
    """
    Max over every input coordinate of |analytic - central difference| / max(1, |analytic|).

    `f` receives the inputs as tape-bound Tensors keyed by name and must
    return a scalar Tensor built from them.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise UsageError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    inputs = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}
    tape, loss = _evaluate(f, inputs)
    analytic = backward(tape, loss)

    worst = 0.0
    for name, base in inputs.items():
        for idx in np.ndindex(base.shape):
            shifted_inputs = dict(inputs)
            shifted = base.copy()
            shifted[idx] = base[idx] + eps
            shifted_inputs[name] = shifted
            f_plus = _evaluate(f, shifted_inputs)[1].item()
            shifted = base.copy()
            shifted[idx] = base[idx] - eps
            shifted_inputs[name] = shifted
            f_minus = _evaluate(f, shifted_inputs)[1].item()
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = analytic[name][idx]
            worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return worst
