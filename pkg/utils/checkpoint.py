"""
Binary checkpoint format.

    b"LDGCNCKPT1"
    repeated until EOF, one entry per named parameter:
        uint32 name length, UTF-8 name,
        uint32 rank, rank x uint64 dims,
        prod(dims) little-endian float64 values

All integers are little-endian. Values round-trip bit-exactly.
"""
import logging
import struct
from pathlib import Path
from typing import Dict

import numpy as np

from utils.errors import CheckpointError

logger = logging.getLogger("LDGCN")

MAGIC = b"LDGCNCKPT1"


def encode_checkpoint(params: Dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC]
    for name, value in params.items():
        value = np.asarray(value, dtype=np.float64)
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}Q", *value.shape))
        chunks.append(value.astype("<f8").tobytes(order="C"))
    return b"".join(chunks)


def decode_checkpoint(blob: bytes) -> Dict[str, np.ndarray]:
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a checkpoint: bad magic")
    params = {}
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError(f"truncated checkpoint at byte {pos}")
        chunk = blob[pos:pos + n]
        pos += n
        return chunk

    while pos < len(blob):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}Q", take(8 * rank))
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(take(8 * count), dtype="<f8").astype(np.float64)
        if name in params:
            raise CheckpointError(f"duplicate parameter {name!r} in checkpoint")
        params[name] = values.reshape(shape)
    return params


def save_checkpoint(path, params: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(params))
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}")
    logger.info(f"Checkpoint with {len(params)} parameters saved to {path}")
    return path


def load_checkpoint(path) -> Dict[str, np.ndarray]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    return decode_checkpoint(blob)
