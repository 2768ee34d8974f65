"""Exact top-k cosine search over the corpus CLIP embeddings.

The index holds unit-normalized CLIP rows so each similarity is a single dot
product. Search is a full scan with exact output semantics: the result equals
a full sort by (score descending, row ascending). The inner loop runs on the
compiled kernel when built, numpy otherwise (promptknn.kernels).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import EmbeddingMatrix, EmbeddingVector
from .errors import (
    DimMismatchError,
    EmptyMatrixError,
    NormalizationError,
    ZeroVectorError,
)
from .store import CorpusBundle

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-5


class Neighbor(NamedTuple):
    row: int
    score: float


@dataclass(frozen=True)
class QueryResult:
    """Top-k neighbors for one query: scores non-increasing, rows distinct,
    equal scores ordered by ascending row."""

    neighbors: tuple[Neighbor, ...]

    def rows(self) -> list[int]:
        return [n.row for n in self.neighbors]

    def scores(self) -> list[float]:
        return [n.score for n in self.neighbors]


@dataclass(frozen=True)
class CorpusIndex:
    """Immutable searchable bundle: unit CLIP rows + paired sentence rows."""

    clip_normalized: EmbeddingMatrix
    sent: EmbeddingMatrix
    prompts: tuple[str, ...]
    build_time: float

    @property
    def count(self) -> int:
        return self.clip_normalized.rows

    @property
    def clip_dim(self) -> int:
        return self.clip_normalized.dim

    @property
    def sent_dim(self) -> int:
        return self.sent.dim


def build_index(bundle: CorpusBundle) -> CorpusIndex:
    """Build a searchable index from a loaded corpus.

    CLIP rows are normalized here unless the manifest recorded them as
    pre-normalized, in which case they are verified instead (a row off unit
    length by more than 1e-5 means the manifest lied about its data).
    """
    if bundle.count < 1:
        raise EmptyMatrixError("cannot build an index over an empty corpus")
    data = bundle.clip.data
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    zero_rows = np.nonzero(norms == 0.0)[0]
    if zero_rows.size:
        row = int(zero_rows[0])
        raise ZeroVectorError(f"corpus row {row} has zero norm", row=row)
    if bundle.manifest.normalized:
        worst = int(np.argmax(np.abs(norms - 1.0)))
        if abs(norms[worst] - 1.0) > UNIT_NORM_TOLERANCE:
            raise NormalizationError(
                f"manifest says normalized but row {worst} has norm {norms[worst]:.8f}"
            )
        clip_normalized = bundle.clip
    else:
        unit = (data.astype(np.float64) / norms[:, None]).astype(np.float32)
        clip_normalized = EmbeddingMatrix(unit)
    return CorpusIndex(
        clip_normalized=clip_normalized,
        sent=bundle.sent,
        prompts=bundle.prompts,
        build_time=time.time(),
    )


def _normalized_query(index: CorpusIndex, query: EmbeddingVector) -> np.ndarray:
    if query.dim != index.clip_dim:
        raise DimMismatchError(
            f"query dim {query.dim} != index clip dim {index.clip_dim}"
        )
    q = query.values.astype(np.float64)
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ZeroVectorError("query vector has zero norm")
    return q / norm


def search(index: CorpusIndex, query: EmbeddingVector, k: int) -> QueryResult:
    """Exact top-k cosine search; k > corpus size clamps with a warning."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = _normalized_query(index, query)
    n = index.count
    if k > n:
        logger.warning("k=%d exceeds corpus size %d; clamping", k, n)
        k = n
    rows, scores = kernels.topk_dot(index.clip_normalized.data, q, k)
    return QueryResult(
        neighbors=tuple(
            Neighbor(int(r), float(s)) for r, s in zip(rows, scores)
        )
    )


def search_batch(
    index: CorpusIndex, queries: EmbeddingMatrix, k: int
) -> list[QueryResult]:
    """Per-query search over a batch; results in input order.

    Element i equals search(index, queries.row(i), k) exactly; per-query
    failures are reported with the query index.
    """
    if queries.rows and queries.dim != index.clip_dim:
        raise DimMismatchError(
            f"queries dim {queries.dim} != index clip dim {index.clip_dim}"
        )
    results: list[QueryResult] = []
    for i in range(queries.rows):
        try:
            results.append(search(index, queries.row(i), k))
        except (ZeroVectorError, DimMismatchError) as exc:
            raise type(exc)(f"query {i}: {exc}") from exc
    return results
