"""
BLEU with clipped n-gram precision, a brevity penalty against the closest
reference length, and add-one smoothing of empty higher-order matches.
"""
import math
from collections import Counter
from typing import List, Sequence, Tuple

from seq2seq.vocab import PAD
from utils.errors import UsageError


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _strip(tokens: Sequence[str], pad: str) -> List[str]:
    return [t for t in tokens if t != pad]


def modified_precision(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> Tuple[int, int]:
    """(clipped matches, candidate n-gram total) for one order n."""
    counts = _ngrams(candidate, n)
    max_ref = Counter()
    for ref in references:
        for gram, c in _ngrams(ref, n).items():
            max_ref[gram] = max(max_ref[gram], c)
    matches = sum(min(c, max_ref[gram]) for gram, c in counts.items())
    return matches, sum(counts.values())


def closest_ref_length(c_len: int, references: Sequence[Sequence[str]]) -> int:
    """Reference length closest to c_len; ties go to the shorter one."""
    return min((len(r) for r in references), key=lambda r: (abs(r - c_len), r))


def brevity_penalty(c_len: int, r_len: int) -> float:
    if c_len == 0:
        return 0.0
    return 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)


def _precision(n: int, matches: int, total: int) -> float:
    if total == 0:
        return 1.0
    if matches == 0 and n >= 2:
        return (matches + 1) / (total + 1)
    return matches / total


def _combine(matches: List[int], totals: List[int], c_len: int, r_len: int, max_n: int) -> float:
    if c_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        p = _precision(n, matches[n - 1], totals[n - 1])
        if p == 0.0:
            return 0.0
        log_sum += math.log(p)
    return brevity_penalty(c_len, r_len) * math.exp(log_sum / max_n)


def bleu(candidate: Sequence[str], references: Sequence[Sequence[str]], max_n: int = 4, pad: str = PAD) -> float:
    """Sentence BLEU in [0, 1]; an empty candidate scores 0."""
    if not references:
        raise UsageError("bleu needs at least one reference")
    if max_n < 1:
        raise UsageError(f"max_n must be >= 1, got {max_n}")
    cand = _strip(candidate, pad)
    refs = [_strip(r, pad) for r in references]
    stats = [modified_precision(cand, refs, n) for n in range(1, max_n + 1)]
    return _combine([m for m, _ in stats], [t for _, t in stats], len(cand),
                    closest_ref_length(len(cand), refs), max_n)


def corpus_bleu(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[Sequence[str]]],
                max_n: int = 4, pad: str = PAD) -> float:
    """Corpus BLEU: n-gram statistics and lengths are summed before combining."""
    if len(candidates) != len(references):
        raise UsageError(f"{len(candidates)} candidates for {len(references)} reference sets")
    if not candidates:
        raise UsageError("corpus_bleu needs at least one candidate")
    matches, totals = [0] * max_n, [0] * max_n
    c_len = r_len = 0
    for candidate, refs in zip(candidates, references):
        if not refs:
            raise UsageError("every candidate needs at least one reference")
        cand = _strip(candidate, pad)
        refs = [_strip(r, pad) for r in refs]
        for n in range(1, max_n + 1):
            m, t = modified_precision(cand, refs, n)
            matches[n - 1] += m
            totals[n - 1] += t
        c_len += len(cand)
        r_len += closest_ref_length(len(cand), refs)
    return _combine(matches, totals, c_len, r_len, max_n)
