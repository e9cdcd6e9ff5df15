import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from graphs.penman import AmrEdge, AmrGraph, AmrNode, declaration_order, parse_penman, serialize_penman, split_records
from utils.errors import DataError, ParseError, UsageError

logger = logging.getLogger("LDGCN")

CONCEPTS = (
    "want-01", "go-01", "boy", "girl", "say-01", "think-01", "know-01", "see-01",
    "make-01", "give-01", "take-01", "come-01", "believe-01", "possible-01", "need-01", "have-03",
    "person", "thing", "city", "country", "government-organization", "company", "school", "house",
    "book", "dog", "cat", "tree", "water", "food", "day", "night",
    "good-02", "bad-07", "big", "small", "new-01", "old", "early", "late",
    "help-01", "work-01", "read-01", "write-01", "buy-01", "sell-01", "live-01", "run-02",
    "trust-01", "worsen-01",
)
ROLES = ("ARG0", "ARG1", "ARG2", "mod", "time", "location", "manner", "degree")
MAX_REENTRANCIES = 2


def random_graph(rng: np.random.Generator, max_nodes: int) -> AmrGraph:
    """
    A random tree of 1..max_nodes concept nodes, each child attached to an
    earlier node, plus up to two extra edges that re-enter existing nodes.
    """
    n = int(rng.integers(1, max_nodes + 1))
    concepts = [CONCEPTS[int(i)] for i in rng.integers(0, len(CONCEPTS), size=n)]
    nodes = tuple(AmrNode(f"{c[0]}{i}", c) for i, c in enumerate(concepts))
    edges = [AmrEdge(int(rng.integers(0, i)), i, ROLES[int(rng.integers(0, len(ROLES)))]) for i in range(1, n)]

    if n >= 3:
        linked = {(e.source, e.target) for e in edges}
        for _ in range(int(rng.integers(0, MAX_REENTRANCIES + 1))):
            u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
            if v == 0 or (u, v) in linked or (v, u) in linked:
                continue
            linked.add((u, v))
            edges.append(AmrEdge(u, v, ROLES[int(rng.integers(0, len(ROLES)))]))
    return AmrGraph(nodes, tuple(edges), 0)


def linearize(graph: AmrGraph) -> List[str]:
    """Concepts in depth-first declaration order: the synthetic target sentence."""
    return [graph.nodes[i].concept for i in declaration_order(graph)]


def gen_synthetic(seed: int, count: int, max_nodes: int, out_path) -> Path:
    """
    Writes `count` random (graph, linearization) records. The same seed always
    produces a byte-identical file.
    """
    if count < 1 or max_nodes < 1:
        raise UsageError(f"count and max_nodes must be >= 1, got {count} and {max_nodes}")
    logger.info(f"Generating {count} synthetic graphs (seed={seed}, max_nodes={max_nodes}).")
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(count):
        graph = random_graph(rng, max_nodes)
        records.append(f"{serialize_penman(graph)}\t{' '.join(linearize(graph))}")

    out_path = Path(out_path)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text("\n\n".join(records) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write dataset {out_path}: {e}")
    logger.info(f"Synthetic dataset saved to {out_path}")
    return out_path


def read_records(path) -> List[Tuple[AmrGraph, Optional[List[str]]]]:
    """Parses every record of a dataset file into (graph, target tokens or None)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot read dataset {path}: {e}")
    out = []
    for i, (penman, target) in enumerate(split_records(text)):
        try:
            graph = parse_penman(penman)
        except ParseError as e:
            err = ParseError(f"{path} record {i}: {e}")
            err.offset = e.offset
            raise err from e
        out.append((graph, target.split() if target is not None else None))
    logger.info(f"Read {len(out)} records from {path}")
    return out
