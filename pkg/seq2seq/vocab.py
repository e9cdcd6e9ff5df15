"""
Token vocabulary shared by concept embeddings and the decoder output layer.
"""
import logging
from typing import Iterable, List, Sequence

from utils.errors import VocabError

logger = logging.getLogger("LDGCN")

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED = (PAD, BOS, EOS, UNK)


class Vocab:
    """Dense token <-> id map; ids 0..3 are the reserved symbols."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._tokens: List[str] = list(RESERVED)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}
        for tok in tokens:
            self.add(tok)

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]]) -> "Vocab":
        """Reserved symbols first, then every distinct token in sorted order."""
        seen = set()
        for seq in sequences:
            seen.update(seq)
        return cls(sorted(seen - set(RESERVED)))

    def add(self, token: str) -> int:
        if token not in self._index:
            self._index[token] = len(self._tokens)
            self._tokens.append(token)
        return self._index[token]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def tokens(self) -> List[str]:
        return list(self._tokens)

    def index(self, token: str) -> int:
        """Id of `token`, UNK when unseen."""
        return self._index.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self._tokens):
            raise VocabError(f"token id {idx} outside vocabulary of size {len(self._tokens)}")
        return self._tokens[idx]

    def encode(self, tokens: Sequence[str]) -> List[int]:
        ids = [self.index(t) for t in tokens]
        unknown = sorted({t for t, i in zip(tokens, ids) if i == UNK_ID and t != UNK})
        if unknown:
            logger.warning(f"Mapped {len(unknown)} out-of-vocabulary tokens to {UNK}: {unknown[:5]}")
        return ids

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.token(i) for i in ids]
