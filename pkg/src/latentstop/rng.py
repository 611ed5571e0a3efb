"""Counter-based random streams for reproducible Monte Carlo.

Variates are addressed by (seed, stream, step) plus an absolute position
inside the stream, so any contiguous chunk can be produced independently of
how the remaining work is split across workers.  Gaussians are produced by
inverse CDF and consume exactly one 64-bit word each, which keeps positions
aligned between runs no matter the chunking.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Philox-4x64 emits 4 words per counter increment and advance() moves whole
# counter blocks, so positions are converted to (blocks, remainder).
_WORDS_PER_BLOCK = 4
_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Stream ids used by the library; callers may pick any other non-negative int.
DATA_STREAM = 1
INIT_STREAM = 2
FORWARD_STREAM = 3
BACKWARD_STREAM = 4


def _bit_generator(seed: int, stream: int, step: int) -> np.random.Philox:
    # distinct (seed, stream, step) -> distinct Philox key -> independent stream
    key = np.array(
        [seed & _MASK64, ((stream & _MASK32) << 32) | (step & _MASK32)],
        dtype=np.uint64,
    )
    return np.random.Philox(key=key)


def uniforms(seed: int, stream: int, step: int, count: int, offset: int = 0) -> np.ndarray:
    """`count` doubles strictly inside (0,1), at stream positions offset..offset+count-1."""
    if count < 0 or offset < 0:
        raise ValueError("count and offset must be non-negative")
    bg = _bit_generator(seed, stream, step)
    blocks, rem = divmod(offset, _WORDS_PER_BLOCK)
    if blocks:
        bg.advance(blocks)
    raw = bg.random_raw(rem + count)[rem:]
    # top 53 bits, shifted off zero so the inverse CDF stays finite
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def normals(seed: int, stream: int, step: int, count: int, offset: int = 0) -> np.ndarray:
    """Standard normals via inverse CDF, one uniform word per variate."""
    return ndtri(uniforms(seed, stream, step, count, offset))


def normal_rows(
    seed: int, stream: int, step: int, n_rows: int, width: int, row_start: int = 0
) -> np.ndarray:
    """Rows row_start..row_start+n_rows-1 of the conceptual (inf x width) normal table."""
    flat = normals(seed, stream, step, n_rows * width, offset=row_start * width)
    return flat.reshape(n_rows, width)
