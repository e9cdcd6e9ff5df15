"""
Named parameter registry: allocation, initialization and tape binding.
"""
import logging
from typing import Dict, Iterator, Tuple

import numpy as np

from tensor.autodiff import Tensor
from utils.errors import UsageError

logger = logging.getLogger("LDGCN")


class ParamStore:
    """Insertion-ordered name -> float64 array map owning every trainable scalar."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self._params: Dict[str, np.ndarray] = {}

    def _put(self, name: str, value: np.ndarray) -> str:
        if name in self._params:
            raise UsageError(f"parameter {name!r} allocated twice")
        self._params[name] = np.asarray(value, dtype=np.float64)
        return name

    def glorot(self, name: str, rows: int, cols: int) -> str:
        """Uniform in +-sqrt(6 / (fan_in + fan_out))."""
        bound = np.sqrt(6.0 / (rows + cols))
        return self._put(name, self.rng.uniform(-bound, bound, size=(rows, cols)))

    def zeros(self, name: str, rows: int, cols: int) -> str:
        return self._put(name, np.zeros((rows, cols)))

    def set(self, name: str, value) -> str:
        return self._put(name, np.array(value, dtype=np.float64))

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self._params.items())

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self._params)

    def num_scalars(self, prefix: str = "") -> int:
        return int(sum(v.size for k, v in self._params.items() if k.startswith(prefix)))

    def bind(self, tape, name: str):
        """The tape leaf for `name` (repeated binds share one node), or a constant without a tape."""
        if tape is None:
            return Tensor(self._params[name])
        return tape.watch(name, self._params[name])

    def load(self, values: Dict[str, np.ndarray]):
        """Replaces parameter values in place; names and shapes must match."""
        if set(values) != set(self._params):
            missing = sorted(set(self._params) - set(values))
            extra = sorted(set(values) - set(self._params))
            raise UsageError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for name, value in values.items():
            if value.shape != self._params[name].shape:
                raise UsageError(
                    f"parameter {name!r}: shape {value.shape} != {self._params[name].shape}"
                )
            self._params[name] = np.asarray(value, dtype=np.float64)
