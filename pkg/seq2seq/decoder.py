"""
Attention GRU decoder over encoder node representations.

At each step the previous hidden state scores every node, the attention
context is concatenated with the previous token's embedding, and a GRU cell
produces the next hidden state and vocabulary logits.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from seq2seq.vocab import BOS_ID, EOS_ID
from tensor import autodiff as ad
from tensor.autodiff import Tensor
from tensor.params import ParamStore
from utils.errors import ShapeError, VocabError

logger = logging.getLogger("LDGCN")

_GATES = ("z", "r", "h")


@dataclass(frozen=True)
class DecoderState:
    hidden: Tensor  # 1 x h
    context: Tensor  # 1 x d
    step: int = 0


@dataclass(frozen=True)
class DecoderParams:
    E: Tensor  # V x e token embeddings
    W_a: Tensor  # d x h attention keys
    W_init: Tensor  # d x h
    b_init: Tensor
    W: Tuple[Tensor, Tensor, Tensor]  # (e + d) x h input maps for z, r, h~
    U: Tuple[Tensor, Tensor, Tensor]  # h x h recurrent maps
    b: Tuple[Tensor, Tensor, Tensor]
    W_o: Tensor  # h x V
    b_o: Tensor

    @property
    def vocab_size(self) -> int:
        return self.W_o.cols


class AttnGruDecoder:
    """Owns the decoder parameters under `prefix` in a ParamStore."""

    def __init__(self, store: ParamStore, vocab_size: int, embed_dim: int, d: int, hidden: int,
                 prefix: str = "decoder"):
        self.store = store
        self.prefix = prefix
        self.vocab_size = vocab_size
        store.glorot(f"{prefix}.E", vocab_size, embed_dim)
        store.glorot(f"{prefix}.W_a", d, hidden)
        store.glorot(f"{prefix}.W_init", d, hidden)
        store.zeros(f"{prefix}.b_init", 1, hidden)
        for g in _GATES:
            store.glorot(f"{prefix}.W_{g}", embed_dim + d, hidden)
            store.glorot(f"{prefix}.U_{g}", hidden, hidden)
            store.zeros(f"{prefix}.b_{g}", 1, hidden)
        store.glorot(f"{prefix}.W_o", hidden, vocab_size)
        store.zeros(f"{prefix}.b_o", 1, vocab_size)

    def bind(self, tape=None) -> DecoderParams:
        def get(name):
            return self.store.bind(tape, f"{self.prefix}.{name}")

        return DecoderParams(
            E=get("E"),
            W_a=get("W_a"),
            W_init=get("W_init"),
            b_init=get("b_init"),
            W=tuple(get(f"W_{g}") for g in _GATES),
            U=tuple(get(f"U_{g}") for g in _GATES),
            b=tuple(get(f"b_{g}") for g in _GATES),
            W_o=get("W_o"),
            b_o=get("b_o"),
        )


def embed(tokens: Sequence[int], E: Tensor) -> Tensor:
    """len(tokens) x e rows of the embedding table."""
    for t in tokens:
        if not 0 <= t < E.rows:
            raise VocabError(f"token id {t} outside embedding table of {E.rows} rows")
    return ad.take_rows(E, list(tokens))


def init_state(node_reps: Tensor, params: DecoderParams) -> DecoderState:
    """hidden = tanh(mean(nodeReps) W_init + b_init); context starts at the node mean."""
    if node_reps.cols != params.W_init.rows:
        raise ShapeError(f"node reps have width {node_reps.cols}, decoder expects {params.W_init.rows}")
    mean = ad.mean_rows(node_reps)
    hidden = ad.tanh(ad.add(ad.matmul(mean, params.W_init), params.b_init))
    return DecoderState(hidden, mean, 0)


def attend(state: DecoderState, node_reps: Tensor, W_a: Tensor) -> Tuple[Tensor, Tensor]:
    """
    Dot-product attention of the hidden state over projected node states.

    Returns:
        (context 1 x d, weights 1 x n); weights are non-negative and sum to 1.
    """
    keys = ad.matmul(node_reps, W_a)
    scores = ad.matmul(state.hidden, ad.transpose(keys))
    weights = ad.softmax_rows(scores)
    return ad.matmul(weights, node_reps), weights


def decode_step(state: DecoderState, prev_token: int, node_reps: Tensor,
                params: DecoderParams) -> Tuple[Tensor, DecoderState]:
    """One GRU step; returns (1 x V logits, next state)."""
    context, _ = attend(state, node_reps, params.W_a)
    x = ad.concat_cols([embed([prev_token], params.E), context])
    h = state.hidden

    def gate(i, recurrent):
        return ad.add(ad.add(ad.matmul(x, params.W[i]), ad.matmul(recurrent, params.U[i])), params.b[i])

    z = ad.sigmoid(gate(0, h))
    r = ad.sigmoid(gate(1, h))
    candidate = ad.tanh(gate(2, ad.mul(r, h)))
    hidden = ad.add(h, ad.mul(z, ad.sub(candidate, h)))
    logits = ad.add(ad.matmul(hidden, params.W_o), params.b_o)
    return logits, DecoderState(hidden, context, state.step + 1)


def teacher_forced(node_reps: Tensor, params: DecoderParams,
                   target: Sequence[int]) -> Tuple[Tensor, List[int]]:
    """
    Feeds BOS + target and scores target + EOS.

    Returns:
        (summed cross-entropy as a 1x1 tensor, argmax prediction per step).
    """
    inputs = [BOS_ID] + list(target)
    expected = list(target) + [EOS_ID]
    state = init_state(node_reps, params)
    losses, predictions = [], []
    for prev, gold in zip(inputs, expected):
        logits, state = decode_step(state, prev, node_reps, params)
        losses.append(ad.cross_entropy(logits, [gold]))
        predictions.append(int(np.argmax(logits.values[0])))
    total = losses[0]
    for loss in losses[1:]:
        total = ad.add(total, loss)
    return total, predictions
