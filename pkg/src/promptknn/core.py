"""Dimension-checked embedding types and the numeric primitives built on them.

Values are stored as float32 (the storage currency of the whole pipeline);
every reduction (norm, dot, mean, weighted sum) accumulates in float64 and
narrows the result back to float32. NaN/Inf are rejected once, at type
construction, so the operations below can assume finite inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatchError, EmptyMatrixError, ZeroVectorError


def _as_finite_f32(values, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding values must be finite (no NaN/Inf)")
    return arr


class EmbeddingVector:
    """Immutable finite float32 vector of dimension >= 1."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = _as_finite_f32(values, ndim=1)
        if arr.shape[0] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("EmbeddingVector is immutable")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim})"


class EmbeddingMatrix:
    """Immutable finite float32 matrix; rows share one dimension >= 1.

    Zero rows are allowed (the shape still fixes the dimension), which is how
    header-only embedding files round-trip.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = _as_finite_f32(data, ndim=2)
        if arr.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        arr = np.ascontiguousarray(arr)
        if arr.flags.writeable:
            # Copy so we never freeze (or alias) a caller-owned buffer; arrays
            # that arrive read-only (e.g. from frombuffer) are used zero-copy.
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("EmbeddingMatrix is immutable")

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def row(self, i: int) -> EmbeddingVector:
        return EmbeddingVector(self.data[i])

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dim={self.dim})"


def _require_same_dim(a: EmbeddingVector, b: EmbeddingVector) -> None:
    if a.dim != b.dim:
        raise DimMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def l2_normalize(v: EmbeddingVector) -> EmbeddingVector:
    """Return v scaled to unit L2 norm. Raises ZeroVectorError on ‖v‖ = 0."""
    values = v.values.astype(np.float64)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ZeroVectorError("cannot normalize a zero vector")
    return EmbeddingVector((values / norm).astype(np.float32))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between a and b, clamped to [-1, 1].

    The clamp absorbs float rounding: dot products of unit vectors can land
    a few ulp outside the mathematical range.
    """
    _require_same_dim(a, b)
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    norm_a = float(np.linalg.norm(av))
    norm_b = float(np.linalg.norm(bv))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    sim = float(np.dot(av, bv) / (norm_a * norm_b))
    return min(1.0, max(-1.0, sim))


def mean_pool(m: EmbeddingMatrix) -> EmbeddingVector:
    """Component-wise arithmetic mean of the rows (float64 accumulation)."""
    if m.rows < 1:
        raise EmptyMatrixError("mean_pool needs at least one row")
    mean = m.data.astype(np.float64).mean(axis=0)
    return EmbeddingVector(mean.astype(np.float32))


def weighted_fuse(
    a: EmbeddingVector, b: EmbeddingVector, w1: float, w2: float
) -> EmbeddingVector:
    """Return w1*a + w2*b. No implicit normalization; callers decide."""
    _require_same_dim(a, b)
    if not (np.isfinite(w1) and np.isfinite(w2)):
        raise ValueError("fusion weights must be finite")
    combined = w1 * a.values.astype(np.float64) + w2 * b.values.astype(np.float64)
    return EmbeddingVector(combined.astype(np.float32))
