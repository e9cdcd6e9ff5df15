"""
Graph convolution layers: the vanilla layer, the dynamic fusion mechanism
(DFM) over 1..K-th order neighborhoods, and densely connected DFM stacks.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from graphs.adjacency import SparseAdjacency, kth_order_apply
from tensor import autodiff as ad
from tensor.autodiff import Tensor
from tensor.params import ParamStore
from utils.errors import ConfigError, ShapeError, UsageError

logger = logging.getLogger("LDGCN")


@dataclass(frozen=True)
class DfmConfig:
    lam: float = 0.7
    K: int = 2
    activation: str = "relu"

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.K < 2:
            raise ConfigError(f"K must be >= 2, got {self.K}")
        if self.activation not in ad.ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class GcnLayerParams:
    """W (d_in x d_out) and bias b (1 x d_out); DFM shares them over every order."""

    W: Tensor
    b: Tensor

    def __post_init__(self):
        if self.b.shape != [1, self.W.cols]:
            raise ShapeError(f"bias shape {self.b.shape} does not match W {self.W.shape}")

    @property
    def d_in(self) -> int:
        return self.W.rows

    @property
    def d_out(self) -> int:
        return self.W.cols


@dataclass(frozen=True)
class Dropout:
    """Inverted dropout on layer outputs, masks drawn from `rng`."""

    rate: float
    rng: np.random.Generator

    def __call__(self, h: Tensor) -> Tensor:
        return ad.dropout(h, self.rate, self.rng)


def alloc_layer(store: ParamStore, prefix: str, d_in: int, d_out: int) -> str:
    store.glorot(f"{prefix}.W", d_in, d_out)
    store.zeros(f"{prefix}.b", 1, d_out)
    return prefix


def bind_layer(store: ParamStore, tape, prefix: str) -> GcnLayerParams:
    return GcnLayerParams(store.bind(tape, f"{prefix}.W"), store.bind(tape, f"{prefix}.b"))


def _check(H: Tensor, A: SparseAdjacency, p: GcnLayerParams):
    if A.n != H.rows:
        raise ShapeError(f"adjacency is {A.n}x{A.n} but H has {H.rows} rows")
    if H.cols != p.d_in:
        raise ShapeError(f"H has width {H.cols} but W expects {p.d_in}")


def _pre_activation(H: Tensor, A: SparseAdjacency, p: GcnLayerParams, k: int) -> Tensor:
    """A^k H W + b, with A^k applied right to left."""
    return ad.add(ad.matmul(kth_order_apply(A, H, k), p.W), p.b)


def gcn_layer(H: Tensor, A: SparseAdjacency, p: GcnLayerParams, phi: str = "relu") -> Tensor:
    """phi(A H W + b)."""
    _check(H, A, p)
    return ad.activation(phi)(_pre_activation(H, A, p, 1))


def _gate(pre: Tensor, k: int, lam: float) -> Tensor:
    return ad.scalar_mul(ad.sigmoid(pre), 1.0 - lam ** k)


def dfm_gate(A: SparseAdjacency, H: Tensor, p: GcnLayerParams, k: int, lam: float) -> Tensor:
    """G(k) = (1 - lam^k) * sigmoid(A^k H W + b); every entry lies in (0, 1 - lam^k)."""
    if k < 2:
        raise UsageError(f"gates exist for orders k >= 2, got {k}")
    if not 0.0 < lam < 1.0:
        raise UsageError(f"lambda must lie in (0, 1), got {lam}")
    _check(H, A, p)
    return _gate(_pre_activation(H, A, p, k), k, lam)


def _total(tensors: Sequence[Tensor]) -> Tensor:
    out = tensors[0]
    for t in tensors[1:]:
        out = ad.add(out, t)
    return out


def dfm_layer(H: Tensor, A: SparseAdjacency, p: GcnLayerParams, cfg: DfmConfig) -> Tensor:
    """
    (1 - mean_k G(k)) * phi(A H W + b) + mean_k [G(k) * phi(A^k H W + b)],
    mean over k = 2..K with weight 1/(K-1). One (W, b) serves every order and
    each order's pre-activation feeds both its gate and its value.
    """
    _check(H, A, p)
    phi = ad.activation(cfg.activation)
    first = phi(_pre_activation(H, A, p, 1))

    gates, fused = [], []
    for k in range(2, cfg.K + 1):
        pre = _pre_activation(H, A, p, k)
        gate = _gate(pre, k, cfg.lam)
        gates.append(gate)
        fused.append(ad.mul(gate, phi(pre)))

    weight = 1.0 / (cfg.K - 1)
    keep = ad.add_scalar(ad.scalar_mul(_total(gates), -weight), 1.0)
    return ad.add(ad.mul(keep, first), ad.scalar_mul(_total(fused), weight))


def dense_concat(history: Sequence[Tensor]) -> Tensor:
    """[H_0; H_1; ...; H_{l-1}] column-wise, in layer order."""
    if not history:
        raise UsageError("dense_concat needs at least one tensor")
    if len(history) == 1:
        return history[0]
    return ad.concat_cols(list(history))


def deep_dfm_outputs(
    H0: Tensor, A: SparseAdjacency, layers: Sequence[GcnLayerParams], cfg: DfmConfig, fusion: bool = True,
    drop: Optional[Dropout] = None,
) -> List[Tensor]:
    """Every layer's output of a densely connected stack; layer l reads [H_0; ...; H_{l-1}]."""
    if not layers:
        raise UsageError("a stack needs at least one layer")
    history = [H0]
    for depth, p in enumerate(layers, start=1):
        x = dense_concat(history)
        if x.cols != p.d_in:
            raise ShapeError(f"layer {depth} expects width {p.d_in}, dense input has {x.cols}")
        h = dfm_layer(x, A, p, cfg) if fusion else gcn_layer(x, A, p, cfg.activation)
        history.append(drop(h) if drop is not None else h)
    return history[1:]


def deep_dfm_forward(
    H0: Tensor, A: SparseAdjacency, layers: Sequence[GcnLayerParams], cfg: DfmConfig, fusion: bool = True,
    drop: Optional[Dropout] = None,
) -> Tensor:
    """The last layer's output of a densely connected DFM stack."""
    return deep_dfm_outputs(H0, A, layers, cfg, fusion, drop)[-1]
