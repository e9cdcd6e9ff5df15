"""
Greedy and beam-search decoding. Both run tape-free and are deterministic.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import log_softmax

from seq2seq.decoder import DecoderParams, DecoderState, decode_step, init_state
from seq2seq.vocab import BOS_ID, EOS_ID
from tensor.autodiff import Tensor
from utils.errors import UsageError

logger = logging.getLogger("LDGCN")


def _log_probs(logits: Tensor) -> np.ndarray:
    return log_softmax(logits.values[0])


def greedy_decode(node_reps: Tensor, params: DecoderParams, max_len: int) -> List[int]:
    """Argmax at every step (lowest id on ties) until EOS or max_len tokens; EOS is not returned."""
    if max_len < 1:
        raise UsageError(f"max_len must be >= 1, got {max_len}")
    node_reps = node_reps.detach()
    state = init_state(node_reps, params)
    out, prev = [], BOS_ID
    for _ in range(max_len):
        logits, state = decode_step(state, prev, node_reps, params)
        prev = int(np.argmax(_log_probs(logits)))
        if prev == EOS_ID:
            break
        out.append(prev)
    return out


@dataclass(frozen=True)
class _Hypothesis:
    tokens: Tuple[int, ...]
    logprob: float
    state: DecoderState

    @property
    def finished(self) -> bool:
        return bool(self.tokens) and self.tokens[-1] == EOS_ID

    def normalized(self) -> float:
        return self.logprob / len(self.tokens)


def beam_decode(node_reps: Tensor, params: DecoderParams, beam: int, max_len: int) -> List[int]:
    """
    Keeps the `beam` best live hypotheses by cumulative log-probability, ties
    broken by the lexicographically smaller token sequence. Hypotheses ending
    in EOS leave the beam; search stops at max_len or when none is live. The
    result is the finished (or length-capped) hypothesis with the best
    per-token score, without its EOS.
    """
    if beam < 1:
        raise UsageError(f"beam must be >= 1, got {beam}")
    if max_len < 1:
        raise UsageError(f"max_len must be >= 1, got {max_len}")
    node_reps = node_reps.detach()
    live = [_Hypothesis((), 0.0, init_state(node_reps, params))]
    finished: List[_Hypothesis] = []

    for _ in range(max_len):
        candidates = []
        for hyp in live:
            prev = hyp.tokens[-1] if hyp.tokens else BOS_ID
            logits, state = decode_step(hyp.state, prev, node_reps, params)
            logp = _log_probs(logits)
            # a hypothesis contributes at most `beam` survivors
            for tok in np.argsort(-logp, kind="stable")[:beam]:
                candidates.append(_Hypothesis(hyp.tokens + (int(tok),), hyp.logprob + float(logp[tok]), state))
        candidates.sort(key=lambda h: (-h.logprob, h.tokens))
        live = []
        for hyp in candidates[:beam]:
            (finished if hyp.finished else live).append(hyp)
        if not live:
            break

    pool = finished + live
    best = min(pool, key=lambda h: (-h.normalized(), h.tokens))
    return list(best.tokens[:-1] if best.finished else best.tokens)
