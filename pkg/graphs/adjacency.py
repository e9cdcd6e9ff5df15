"""
Sparse adjacency matrices built from AMR graphs, and k-th order propagation.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.sparse import csr_matrix

from graphs.penman import AmrGraph
from tensor.autodiff import Tensor, spmm
from utils.errors import ShapeError, UsageError

logger = logging.getLogger("LDGCN")


@dataclass(frozen=True)
class AdjacencyFlags:
    # reverse edges let leaves receive context
    include_reverse_edges: bool = True
    include_self_loops: bool = True
    row_normalize: bool = False


@dataclass(frozen=True)
class SparseAdjacency:
    """Coordinate-format n x n adjacency. Edge labels are not represented."""

    n: int
    entries: Tuple[Tuple[int, int, float], ...]
    flags: AdjacencyFlags = field(default_factory=AdjacencyFlags)

    def __post_init__(self):
        seen = set()
        for row, col, _ in self.entries:
            if not (0 <= row < self.n and 0 <= col < self.n):
                raise UsageError(f"entry ({row}, {col}) outside a {self.n}x{self.n} matrix")
            if (row, col) in seen:
                raise UsageError(f"duplicate entry ({row}, {col})")
            seen.add((row, col))

    @property
    def nnz(self) -> int:
        return len(self.entries)

    @cached_property
    def matrix(self) -> csr_matrix:
        if not self.entries:
            return csr_matrix((self.n, self.n), dtype=np.float64)
        rows, cols, vals = zip(*self.entries)
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n), dtype=np.float64)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_adjacency(graph: AmrGraph, flags: AdjacencyFlags = AdjacencyFlags()) -> SparseAdjacency:
    """
    A[u, v] = 1 for every edge u -> v, plus (v, u) with reverse edges and
    (i, i) with self-loops. Duplicate coordinates collapse to one entry before
    the optional row normalization.
    """
    coords = set()
    for e in graph.edges:
        coords.add((e.source, e.target))
        if flags.include_reverse_edges:
            coords.add((e.target, e.source))
    if flags.include_self_loops:
        coords.update((i, i) for i in range(graph.n))

    ordered = sorted(coords)
    values = {c: 1.0 for c in ordered}
    if flags.row_normalize:
        row_sums = {}
        for row, _ in ordered:
            row_sums[row] = row_sums.get(row, 0.0) + 1.0
        values = {(row, col): 1.0 / row_sums[row] for row, col in ordered}
    return SparseAdjacency(graph.n, tuple((r, c, values[(r, c)]) for r, c in ordered), flags)


def kth_order_apply(adj: SparseAdjacency, h: Tensor, k: int, counter=None) -> Tensor:
    """
    A^k H as A(A(...(A H))): exactly k sparse products, A^k never formed,
    k * nnz * d multiply-adds.
    """
    if k < 1:
        raise UsageError(f"order k must be >= 1, got {k}")
    if h.rows != adj.n:
        raise ShapeError(f"H has {h.rows} rows but the adjacency is {adj.n}x{adj.n}")
    out = h
    for _ in range(k):
        out = spmm(adj.matrix, out, counter=counter)
    return out
