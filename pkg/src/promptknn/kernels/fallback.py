"""Pure-numpy top-k kernel, used when the compiled extension is unavailable.

Same contract as the compiled kernel: float64-accumulated dot products of a
float32 row matrix against a float64 query, scores clamped to [-1, 1], top k
rows ordered by (score descending, row ascending).
"""

from __future__ import annotations

import numpy as np

# Rows scored per chunk; bounds the float64 temporary to ~CHUNK_ROWS*dim*8 B.
CHUNK_ROWS = 65536


def topk_dot(matrix: np.ndarray, query: np.ndarray, k: int):
    """Return (rows int64, scores float64) for the top k dot products.

    matrix: (n, d) float32, C-contiguous; query: (d,) float64; 1 <= k <= n.
    """
    n = matrix.shape[0]
    scores = np.empty(n, dtype=np.float64)
    for start in range(0, n, CHUNK_ROWS):
        stop = min(start + CHUNK_ROWS, n)
        scores[start:stop] = matrix[start:stop].astype(np.float64) @ query
    np.clip(scores, -1.0, 1.0, out=scores)

    if k >= n:
        candidates = np.arange(n, dtype=np.int64)
    else:
        # Partial selection, then widen to every row tied with the k-th score
        # so the (score desc, row asc) tie rule is applied exactly.
        top = np.argpartition(scores, n - k)[n - k :]
        boundary = scores[top].min()
        candidates = np.nonzero(scores >= boundary)[0].astype(np.int64)
    order = np.lexsort((candidates, -scores[candidates]))[:k]
    rows = candidates[order]
    return rows, scores[rows]
