"""Counter-based uniform streams for reproducible parallel Monte Carlo.

Every consumer of randomness in this package draws uniforms through
:func:`uniform_block`, which keys a fresh Philox generator with
``(seed, stream, chunk)``.  A chunk is a fixed-size block of replication
rows, so the draws for any row are a pure function of
``(seed, stream, row index)`` and are completely independent of how many
workers process the chunks.  Reductions over chunks are always performed
in chunk order, which keeps floating-point results bit-identical for any
worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

#: rows per chunk; fixed forever — changing it changes every stream.
CHUNK_ROWS = 1 << 15

#: soft cap on 64-bit words materialized per chunk (wide rows shrink chunks)
TARGET_WORDS = 1 << 22

_MASK64 = (1 << 64) - 1
# offset added to 53-bit uniforms so the open interval (0, 1) is hit exactly,
# keeping inverse-CDF transforms finite.
_HALF_ULP = 2.0**-54


def _key(seed: int, stream: int, chunk: int) -> list[int]:
    if not 0 <= stream < (1 << 20):
        raise ValueError(f"stream id out of range: {stream}")
    if not 0 <= chunk < (1 << 40):
        raise ValueError(f"chunk index out of range: {chunk}")
    return [int(seed) & _MASK64, (stream << 40) | chunk]


def uniform_block(seed: int, stream: int, chunk: int, rows: int, words: int) -> np.ndarray:
    """Uniforms in (0, 1) for one chunk, shaped ``(rows, words)``.

    ``words`` is the per-row budget of 64-bit draws; layouts are fixed per
    consumer so identical keys always produce identical arrays.
    """
    gen = np.random.Generator(np.random.Philox(key=_key(seed, stream, chunk)))
    u = gen.random((rows, words))
    u += _HALF_ULP
    return u


def normal_block(seed: int, stream: int, chunk: int, rows: int, words: int) -> np.ndarray:
    """Standard normals via inverse-CDF of :func:`uniform_block`.

    Inversion (rather than ziggurat/Box–Muller) keeps the bijection between
    uniform words and variates exact, which the chunk layout relies on.
    """
    return ndtri(uniform_block(seed, stream, chunk, rows, words))


def rows_per_chunk(words: int) -> int:
    """Chunk height for rows consuming ``words`` uniforms each.

    A pure function of the row layout, so chunk boundaries (and therefore
    the streams) never depend on worker count or available memory.
    """
    return max(1, min(CHUNK_ROWS, TARGET_WORDS // max(1, words)))


def chunk_ranges(reps: int, rows: int = CHUNK_ROWS) -> list[tuple[int, int, int]]:
    """``(chunk_index, start_row, n_rows)`` triples covering ``reps`` rows."""
    out = []
    chunk = 0
    start = 0
    while start < reps:
        n = min(rows, reps - start)
        out.append((chunk, start, n))
        chunk += 1
        start += n
    return out


def map_chunks(
    work: Callable[[int, int, int], object],
    reps: int,
    workers: int = 1,
    rows: int = CHUNK_ROWS,
) -> list[object]:
    """Apply ``work(chunk, start, rows)`` over all chunks of ``reps`` rows.

    Results come back ordered by chunk index regardless of completion
    order, so any subsequent reduction is worker-count invariant.
    """
    ranges = chunk_ranges(reps, rows)
    if workers <= 1 or len(ranges) == 1:
        return [work(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(work, *r) for r in ranges]
        return [f.result() for f in futures]


def mean_and_stderr(sums: Sequence[float], sumsqs: Sequence[float], reps: int) -> tuple[float, float]:
    """Combine per-chunk (sum, sum-of-squares) into mean and standard error."""
    total = float(np.sum(np.asarray(sums, dtype=float)))
    total_sq = float(np.sum(np.asarray(sumsqs, dtype=float)))
    mean = total / reps
    if reps > 1:
        var = max(0.0, (total_sq - reps * mean * mean) / (reps - 1))
    else:
        var = 0.0
    return mean, float(np.sqrt(var / reps))
