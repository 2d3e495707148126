"""Counter-based random streams.

Every stochastic quantity in the package is drawn from blocks of a Philox
stream keyed by ``(seed, stream)``.  Block ``b`` of a stream is generated by a
fresh Philox instance whose 256-bit counter starts at ``b * 2**128``, so the
values for item ``i`` depend only on ``(seed, stream, i)`` and never on how
many items were requested before or on the order of parallel consumption.
"""

from __future__ import annotations

import zlib

import numpy as np

BLOCK = 1024


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode())


def _generator(seed: int, stream: int, block: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def draw(seed: int, stream, start: int, count: int, sampler, width: int) -> np.ndarray:
    """Rows ``start .. start+count`` of a ``(∞, width)`` table of random draws.

    ``sampler(gen, shape)`` fills one block; e.g.
    ``lambda gen, shape: gen.standard_normal(shape)``.
    """
    if isinstance(stream, str):
        stream = stream_id(stream)
    if count <= 0:
        return np.empty((0, width))
    first = start // BLOCK
    last = (start + count - 1) // BLOCK
    blocks = [sampler(_generator(seed, stream, b), (BLOCK, width)) for b in range(first, last + 1)]
    table = np.concatenate(blocks, axis=0)
    offset = start - first * BLOCK
    return table[offset: offset + count]


def normal(seed: int, stream, start: int, count: int, width: int) -> np.ndarray:
    return draw(seed, stream, start, count, lambda gen, shape: gen.standard_normal(shape), width)


def uniform(seed: int, stream, start: int, count: int, width: int) -> np.ndarray:
    return draw(seed, stream, start, count, lambda gen, shape: gen.random(shape), width)
