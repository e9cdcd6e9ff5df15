"""
Parameter-saving stack layouts and their exact parameter accounting.

- dense: densely connected layers with dimension shrinkage; layer l reads
  [H_0; H_1; ...; H_{l-1}] (width d + d(l-1)/L) and emits d/L columns; the L
  outputs concatenate back to width d.
- group: the same stack with layerwise input groups (layer l sees the first
  min(l, M) of M slices of H_0) and depthwise groups (every layer split into
  N independent convolutions over contiguous column ranges).
- tied: one (W, b) reused by every layer at constant width d, with a jumping
  connection mixing all layer outputs through one linear map.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from graphs.adjacency import SparseAdjacency
from layers.ldgcn import (
    DfmConfig,
    Dropout,
    GcnLayerParams,
    alloc_layer,
    bind_layer,
    dense_concat,
    deep_dfm_outputs,
    dfm_layer,
    gcn_layer,
)
from tensor import autodiff as ad
from tensor.autodiff import Tensor
from tensor.params import ParamStore
from utils.errors import ConfigError, ShapeError, UsageError

logger = logging.getLogger("LDGCN")

STRATEGIES = ("dense", "group", "tied")


@dataclass(frozen=True)
class StackConfig:
    strategy: str = "group"
    d: int = 32
    N: int = 2
    blocks: Tuple[Tuple[int, ...], ...] = ((4, 2), (4, 2))
    dfm: DfmConfig = DfmConfig()
    fusion: bool = True
    # Layerwise groups; None means M = L for each sub-block.
    M: Optional[int] = None
    # Inverted-dropout rate on every layer output while training.
    dropout: float = 0.0

    @classmethod
    def single(cls, strategy: str, L: int, d: int, N: int = 1, M: Optional[int] = None,
               dfm: DfmConfig = DfmConfig(), fusion: bool = True) -> "StackConfig":
        """A configuration holding one sub-block of L layers."""
        return cls(strategy=strategy, d=d, N=N, blocks=((L,),), dfm=dfm, fusion=fusion, M=M)

    def sub_blocks(self) -> List[int]:
        return [L for block in self.blocks for L in block]

    @property
    def L(self) -> int:
        """Layer count of the first sub-block."""
        return self.sub_blocks()[0]

    @property
    def total_layers(self) -> int:
        return sum(self.sub_blocks())

    def groups_for(self, L: int) -> int:
        return self.M if self.M is not None else L

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.d < 1 or not self.sub_blocks() or min(self.sub_blocks()) < 1:
            raise ConfigError("d and every sub-block layer count must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.strategy == "tied":
            return
        for L in self.sub_blocks():
            if self.d % L:
                raise ConfigError(f"d={self.d} is not divisible by L={L}")
            if self.strategy == "dense":
                continue
            M = self.groups_for(L)
            if self.N < 1 or M < 1:
                raise ConfigError(f"group strategy needs N >= 1 and M >= 1, got N={self.N}, M={M}")
            if self.d % M:
                raise ConfigError(f"d={self.d} is not divisible by M={M}")
            if (self.d // L) % self.N:
                raise ConfigError(f"layer output width d/L={self.d // L} is not divisible by N={self.N}")
            for l in range(1, L + 1):
                width = group_input_width(self.d, L, M, l)
                if width % self.N:
                    raise ConfigError(f"layer {l} input width {width} is not divisible by N={self.N}")


def dense_input_width(d: int, L: int, l: int) -> int:
    return d + d * (l - 1) // L


def group_input_width(d: int, L: int, M: int, l: int) -> int:
    """Width of min(l, M) input groups plus l-1 prior outputs; d(2l-1)/L when M = L."""
    return min(l, M) * (d // M) + (l - 1) * (d // L)


def _activation_and_dfm(cfg: StackConfig):
    return cfg.dfm.activation, (cfg.dfm if cfg.fusion else None)


# --- depthwise and layerwise grouping --------------------------------------


def split_groups(H: Tensor, M: int) -> List[Tensor]:
    """M contiguous, equal-width column slices of H."""
    if M < 1 or H.cols % M:
        raise ConfigError(f"cannot split width {H.cols} into {M} groups")
    if M == 1:
        return [H]
    w = H.cols // M
    return [ad.slice_cols(H, i * w, (i + 1) * w) for i in range(M)]


def depthwise_forward(
    H: Tensor, A: SparseAdjacency, groups: Sequence[GcnLayerParams], phi: str = "relu",
    dfm: Optional[DfmConfig] = None,
) -> Tensor:
    """
    Splits H's columns into N groups, convolves each with its own weights
    (DFM when `dfm` is given, vanilla otherwise) and concatenates the outputs
    in group order. Weights per layer shrink by a factor of N.
    """
    N = len(groups)
    if N < 1:
        raise UsageError("depthwise_forward needs at least one group")
    if H.cols % N:
        raise ConfigError(f"input width {H.cols} is not divisible by N={N}")
    w_in = H.cols // N
    for i, g in enumerate(groups):
        if g.W.shape != [w_in, groups[0].d_out]:
            raise ShapeError(f"group {i} weight {g.W.shape}, expected [{w_in}, {groups[0].d_out}]")
    cfg = replace(dfm, activation=phi) if dfm is not None else None

    outs = []
    for x, g in zip(split_groups(H, N), groups):
        outs.append(dfm_layer(x, A, g, cfg) if cfg is not None else gcn_layer(x, A, g, phi))
    return dense_concat(outs)


def depthwise_weight_count(d_in: int, d_out: int, N: int) -> int:
    """Weights of one depthwise layer, d_in * d_out / N."""
    if d_in % N or d_out % N:
        raise ConfigError(f"widths {d_in}x{d_out} are not divisible by N={N}")
    return N * (d_in // N) * (d_out // N)


def layerwise_input(l: int, input_groups: Sequence[Tensor], prior_outputs: Sequence[Tensor]) -> Tensor:
    """
    Input of layer l (1-based): input groups 1..min(l, M) followed by the l-1
    prior layer outputs. Group 1 feeds every layer, group 2 all but the first,
    and so on.
    """
    if not input_groups:
        raise UsageError("layerwise_input needs at least one input group")
    if l < 1 or len(prior_outputs) != l - 1:
        raise UsageError(f"layer {l} needs exactly {max(l - 1, 0)} prior outputs, got {len(prior_outputs)}")
    visible = list(input_groups[:min(l, len(input_groups))])
    return dense_concat(visible + list(prior_outputs))


# --- stack forwards --------------------------------------------------------


def dense_stack_forward(
    H0: Tensor, A: SparseAdjacency, cfg: StackConfig, layers: Sequence[GcnLayerParams],
    drop: Optional[Dropout] = None,
) -> Tensor:
    """Densely connected stack; the concatenated L outputs form the n x d result."""
    return dense_concat(deep_dfm_outputs(H0, A, layers, cfg.dfm, fusion=cfg.fusion, drop=drop))


def group_stack_forward(
    H0: Tensor, A: SparseAdjacency, cfg: StackConfig, params: Sequence[Sequence[GcnLayerParams]],
    drop: Optional[Dropout] = None,
) -> Tensor:
    """Layerwise + depthwise grouped stack of len(params) layers, output n x d."""
    if cfg.strategy != "group":
        raise ConfigError(f"group_stack_forward needs strategy 'group', got {cfg.strategy!r}")
    if H0.cols != cfg.d:
        raise ShapeError(f"H0 width {H0.cols} != d={cfg.d}")
    L = len(params)
    phi, dfm = _activation_and_dfm(cfg)
    input_groups = split_groups(H0, cfg.groups_for(L))
    outs: List[Tensor] = []
    for l, layer_groups in enumerate(params, start=1):
        x = layerwise_input(l, input_groups, outs)
        h = depthwise_forward(x, A, layer_groups, phi, dfm)
        outs.append(drop(h) if drop is not None else h)
    return dense_concat(outs)


def jumping_connection(outputs: Sequence[Tensor], F: Tensor) -> Tensor:
    """F applied to [H_L; ...; H_1], the layer outputs deepest first."""
    if not outputs:
        raise ShapeError("jumping_connection needs at least one layer output")
    shape = outputs[0].shape
    if any(o.shape != shape for o in outputs):
        raise ShapeError(f"layer outputs differ in shape: {[o.shape for o in outputs]}")
    if F.shape != [len(outputs) * shape[1], shape[1]]:
        raise ShapeError(f"jumping map {F.shape}, expected [{len(outputs) * shape[1]}, {shape[1]}]")
    return ad.matmul(dense_concat(list(reversed(outputs))), F)


def tied_stack_forward(
    H0: Tensor, A: SparseAdjacency, shared: GcnLayerParams, L: int, cfg: StackConfig, F: Tensor,
    drop: Optional[Dropout] = None,
) -> Tensor:
    """L layers all using `shared`, mixed by the jumping connection F."""
    if cfg.strategy != "tied":
        raise ConfigError(f"tied_stack_forward needs strategy 'tied', got {cfg.strategy!r}")
    d = H0.cols
    if shared.W.shape != [d, d]:
        raise ShapeError(f"shared W must be {d}x{d}, got {shared.W.shape}")
    if L < 1:
        raise UsageError("a tied stack needs at least one layer")
    h, outs = H0, []
    for _ in range(L):
        h = dfm_layer(h, A, shared, cfg.dfm) if cfg.fusion else gcn_layer(h, A, shared, cfg.dfm.activation)
        if drop is not None:
            h = drop(h)
        outs.append(h)
    return jumping_connection(outs, F)


def averaging_map(L: int, d: int) -> np.ndarray:
    """(L*d) x d map averaging the L blocks; the depth-neutral starting point of F."""
    return np.vstack([np.eye(d) / L] * L)


# --- allocation ------------------------------------------------------------


def alloc_dense_stack(store: ParamStore, prefix: str, d: int, L: int) -> List[str]:
    return [alloc_layer(store, f"{prefix}.layer{l}", dense_input_width(d, L, l), d // L) for l in range(1, L + 1)]


def alloc_group_stack(store: ParamStore, prefix: str, d: int, L: int, M: int, N: int) -> List[List[str]]:
    layers = []
    for l in range(1, L + 1):
        w_in = group_input_width(d, L, M, l) // N
        layers.append([alloc_layer(store, f"{prefix}.layer{l}.group{g}", w_in, d // (L * N)) for g in range(N)])
    return layers


def bind_dense_stack(store: ParamStore, tape, prefixes: Sequence[str]) -> List[GcnLayerParams]:
    return [bind_layer(store, tape, p) for p in prefixes]


def bind_group_stack(store: ParamStore, tape, prefixes: Sequence[Sequence[str]]) -> List[List[GcnLayerParams]]:
    return [[bind_layer(store, tape, p) for p in layer] for layer in prefixes]


# --- parameter accounting --------------------------------------------------


@dataclass(frozen=True)
class ParamRow:
    kind: str  # "conv", "proj" or "jump"
    block: int
    sub_block: int
    layer: Optional[int]
    rows: int
    cols: int
    groups: int = 1
    bias: int = 0

    @property
    def weights(self) -> int:
        return self.rows * self.cols * self.groups

    @property
    def count(self) -> int:
        return self.weights + self.bias


@dataclass(frozen=True)
class ParamReport:
    strategy: str
    d: int
    rows: Tuple[ParamRow, ...]

    @property
    def conv_total(self) -> int:
        return sum(r.count for r in self.rows if r.kind == "conv")

    @property
    def aux_total(self) -> int:
        return sum(r.count for r in self.rows if r.kind != "conv")

    @property
    def total(self) -> int:
        return sum(r.count for r in self.rows)

    def conv_rows(self, block: int = 0, sub_block: int = 0) -> List[ParamRow]:
        return [r for r in self.rows if r.kind == "conv" and r.block == block and r.sub_block == sub_block]


def count_parameters(cfg: StackConfig) -> ParamReport:
    """Exact encoder weight shapes per layer, from the closed-form width rules."""
    cfg.validate()
    d, rows = cfg.d, []
    if cfg.strategy == "tied":
        rows.append(ParamRow("conv", 0, 0, None, d, d, 1, d))
        rows.append(ParamRow("jump", 0, 0, None, cfg.total_layers * d, d))
        return ParamReport(cfg.strategy, d, tuple(rows))

    positions = [(b, s, L) for b, block in enumerate(cfg.blocks) for s, L in enumerate(block)]
    for i, (b, s, L) in enumerate(positions):
        for l in range(1, L + 1):
            if cfg.strategy == "dense":
                rows.append(ParamRow("conv", b, s, l, dense_input_width(d, L, l), d // L, 1, d // L))
            else:
                M, N = cfg.groups_for(L), cfg.N
                rows.append(ParamRow("conv", b, s, l, group_input_width(d, L, M, l) // N, d // (L * N), N, d // L))
        if i < len(positions) - 1:
            rows.append(ParamRow("proj", b, s, None, d, d, 1, d))
    return ParamReport(cfg.strategy, d, tuple(rows))
