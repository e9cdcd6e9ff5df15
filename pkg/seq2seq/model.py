"""
Graph-to-sequence model: concept embeddings, the LDGCN encoder and the
attention GRU decoder, all registered in one ParamStore.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from graphs.adjacency import AdjacencyFlags, SparseAdjacency, build_adjacency
from graphs.penman import AmrGraph
from layers.encoder import LdgcnEncoder
from seq2seq.decoder import AttnGruDecoder, teacher_forced
from seq2seq.search import beam_decode, greedy_decode
from seq2seq.vocab import EOS_ID, Vocab
from tensor import autodiff as ad
from tensor.autodiff import Tensor
from tensor.params import ParamStore
from utils.config import RunConfig
from utils.errors import UsageError

logger = logging.getLogger("LDGCN")

# reverse edges and self-loops, rows scaled to sum to 1
MODEL_ADJACENCY = AdjacencyFlags(row_normalize=True)


@dataclass(frozen=True)
class Example:
    example_id: int
    graph: AmrGraph
    adjacency: SparseAdjacency
    target: Tuple[str, ...]

    @classmethod
    def from_graph(cls, example_id: int, graph: AmrGraph, target: Sequence[str]) -> "Example":
        return cls(example_id, graph, build_adjacency(graph, MODEL_ADJACENCY), tuple(target))


class Graph2SeqModel:
    """Encoder parameters live under `encoder.`; embeddings and decoder beside them."""

    def __init__(self, vocab: Vocab, cfg: RunConfig):
        self.vocab = vocab
        self.cfg = cfg
        self.store = ParamStore(cfg.seed)
        self.store.glorot("embed.concepts", len(vocab), cfg.d)
        self.encoder = LdgcnEncoder(self.store, cfg.stack_config())
        self.decoder = AttnGruDecoder(self.store, len(vocab), cfg.embed_dim, cfg.d, cfg.decoder_hidden)
        # dropout masks; advances only while training with dropout > 0
        self.dropout_rng = np.random.default_rng(cfg.seed)
        logger.info(f"Graph2Seq model with {self.store.num_scalars()} parameters, vocabulary {len(vocab)}.")

    def encode(self, tape, example: Example, rng: Optional[np.random.Generator] = None) -> Tensor:
        """n x d node representations; tape may be None for inference, rng enables dropout."""
        ids = self.vocab.encode(example.graph.concepts)
        H0 = ad.take_rows(self.store.bind(tape, "embed.concepts"), ids)
        return self.encoder.forward(tape, H0, example.adjacency, rng)

    def loss(self, tape, example: Example) -> Tuple[Tensor, int, int]:
        """
        Teacher-forced mean cross-entropy over the target plus EOS.

        Returns:
            (loss 1x1 tensor, correctly predicted steps, total steps).
        """
        reps = self.encode(tape, example, self.dropout_rng)
        target = self.vocab.encode(example.target)
        total, predictions = teacher_forced(reps, self.decoder.bind(tape), target)
        gold = target + [EOS_ID]
        correct = sum(int(p == g) for p, g in zip(predictions, gold))
        return ad.scalar_mul(total, 1.0 / len(gold)), correct, len(gold)

    def decode(self, example: Example, beam: Optional[int] = None, max_len: Optional[int] = None) -> List[str]:
        if beam is None:
            beam = self.cfg.beam
        if max_len is None:
            max_len = self.cfg.max_len
        if beam < 1 or max_len < 1:
            raise UsageError(f"beam and max_len must be >= 1, got {beam} and {max_len}")
        reps = self.encode(None, example)
        params = self.decoder.bind(None)
        if beam == 1:
            ids = greedy_decode(reps, params, max_len)
        else:
            ids = beam_decode(reps, params, beam, max_len)
        return self.vocab.decode(ids)
