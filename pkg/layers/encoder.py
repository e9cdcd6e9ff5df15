"""
Full LDGCN encoder: blocks of sub-block stacks for the dense and group
strategies, or one unrolled weight-tied stack for the tied strategy.
"""
import logging
from typing import List, Optional

import numpy as np

from graphs.adjacency import SparseAdjacency
from layers.ldgcn import Dropout, alloc_layer, bind_layer
from layers.strategies import (
    StackConfig,
    alloc_dense_stack,
    alloc_group_stack,
    averaging_map,
    bind_dense_stack,
    bind_group_stack,
    dense_stack_forward,
    group_stack_forward,
    tied_stack_forward,
)
from tensor import autodiff as ad
from tensor.autodiff import Tensor
from tensor.params import ParamStore
from utils.errors import ShapeError

logger = logging.getLogger("LDGCN")


class LdgcnEncoder:
    """Allocates its parameters under `prefix` in a ParamStore and encodes n x d node states."""

    def __init__(self, store: ParamStore, cfg: StackConfig, prefix: str = "encoder"):
        cfg.validate()
        self.store = store
        self.cfg = cfg
        self.prefix = prefix
        self._stacks: List[tuple] = []
        self._projections: List[str] = []

        if cfg.strategy == "tied":
            self._shared = alloc_layer(store, f"{prefix}.tied.shared", cfg.d, cfg.d)
            self._jump = store.set(f"{prefix}.tied.jump", averaging_map(cfg.total_layers, cfg.d))
        else:
            positions = [(b, s, L) for b, block in enumerate(cfg.blocks) for s, L in enumerate(block)]
            for i, (b, s, L) in enumerate(positions):
                name = f"{prefix}.block{b}.sub{s}"
                if cfg.strategy == "dense":
                    self._stacks.append((L, alloc_dense_stack(store, name, cfg.d, L)))
                else:
                    self._stacks.append((L, alloc_group_stack(store, name, cfg.d, L, cfg.groups_for(L), cfg.N)))
                if i < len(positions) - 1:
                    self._projections.append(alloc_layer(store, f"{name}.proj", cfg.d, cfg.d))
        logger.info(
            f"Encoder ({cfg.strategy}, fusion={cfg.fusion}) allocated "
            f"{store.num_scalars(prefix + '.')} parameters."
        )

    def forward(self, tape, H0: Tensor, A: SparseAdjacency, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Encodes H0; layer outputs pass through dropout only when `rng` is given."""
        cfg = self.cfg
        if H0.cols != cfg.d:
            raise ShapeError(f"encoder input width {H0.cols} != d={cfg.d}")
        drop = Dropout(cfg.dropout, rng) if rng is not None and cfg.dropout > 0.0 else None
        if cfg.strategy == "tied":
            shared = bind_layer(self.store, tape, self._shared)
            F = self.store.bind(tape, self._jump)
            return tied_stack_forward(H0, A, shared, cfg.total_layers, cfg, F, drop)

        h = H0
        for i, (L, prefixes) in enumerate(self._stacks):
            if cfg.strategy == "dense":
                h = dense_stack_forward(h, A, cfg, bind_dense_stack(self.store, tape, prefixes), drop)
            else:
                h = group_stack_forward(h, A, cfg, bind_group_stack(self.store, tape, prefixes), drop)
            if i < len(self._projections):
                proj = bind_layer(self.store, tape, self._projections[i])
                h = ad.add(ad.matmul(h, proj.W), proj.b)
        return h
