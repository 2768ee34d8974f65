"""Online-stage prediction: image embedding in, fused prompt embedding out.

Retrieval runs in CLIP space (that is the joint image/text space), but the
pooled component averages the sentence embeddings paired with the retrieved
rows, so the pooled component, the caption component, and the evaluation
ground truth all live in one space. The caption component is an optional
externally produced sentence embedding; without it prediction falls back to
the pooled component alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EmbeddingMatrix,
    EmbeddingVector,
    l2_normalize,
    mean_pool,
    weighted_fuse,
)
from .errors import DimMismatchError, PromptKnnError, RowCountMismatchError
from .index import CorpusIndex, QueryResult, search


@dataclass(frozen=True)
class FusionConfig:
    """Retrieval depth and fusion weights.

    Defaults are the production settings: k=100 neighbors, weights 0.6/0.4.
    Components are normalized before fusing so the weights compare directions,
    not magnitudes; the output is normalized because downstream scoring is
    cosine-based and unit vectors cost nothing.
    """

    k: int = 100
    w1: float = 0.6
    w2: float = 0.4
    normalize_components: bool = True
    normalize_output: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (np.isfinite(self.w1) and np.isfinite(self.w2)):
            raise ValueError("fusion weights must be finite")
        if self.w1 == 0.0 and self.w2 == 0.0:
            raise ValueError("fusion weights must not both be zero")


@dataclass(frozen=True)
class Prediction:
    """e_pred plus its ingredients, kept for explainability.

    e_pred1 is the raw mean-pooled neighbor component (pre-normalization);
    e_pred2 is the caption embedding as supplied, or None without a caption.
    """

    e_pred: EmbeddingVector
    e_pred1: EmbeddingVector
    e_pred2: EmbeddingVector | None
    neighbors: QueryResult


def predict_knn_component(
    index: CorpusIndex, image_embedding: EmbeddingVector, k: int
) -> tuple[EmbeddingVector, QueryResult]:
    """Retrieve top-k rows in CLIP space, mean-pool their sentence embeddings."""
    result = search(index, image_embedding, k)
    rows = [neighbor.row for neighbor in result.neighbors]
    pooled = mean_pool(EmbeddingMatrix(index.sent.data[rows]))
    return pooled, result


def predict(
    index: CorpusIndex,
    image_embedding: EmbeddingVector,
    caption_embedding: EmbeddingVector | None = None,
    config: FusionConfig = FusionConfig(),
) -> Prediction:
    """Full prediction: pooled neighbor component fused with the caption.

    Without a caption the prediction is the (normalized) pooled component and
    e_pred2 is absent.
    """
    pooled, neighbors = predict_knn_component(index, image_embedding, config.k)
    if caption_embedding is None:
        e_pred = l2_normalize(pooled) if config.normalize_output else pooled
        return Prediction(e_pred=e_pred, e_pred1=pooled, e_pred2=None, neighbors=neighbors)

    if caption_embedding.dim != pooled.dim:
        raise DimMismatchError(
            f"caption embedding dim {caption_embedding.dim} != sentence dim {pooled.dim}"
        )
    first = l2_normalize(pooled) if config.normalize_components else pooled
    second = (
        l2_normalize(caption_embedding)
        if config.normalize_components
        else caption_embedding
    )
    fused = weighted_fuse(first, second, config.w1, config.w2)
    e_pred = l2_normalize(fused) if config.normalize_output else fused
    return Prediction(
        e_pred=e_pred, e_pred1=pooled, e_pred2=caption_embedding, neighbors=neighbors
    )


def predict_batch(
    index: CorpusIndex,
    image_embeddings: EmbeddingMatrix,
    caption_embeddings: EmbeddingMatrix | None = None,
    config: FusionConfig = FusionConfig(),
) -> list[Prediction]:
    """Sequential predict over a batch; output in input order.

    Row-count and dimension mismatches are rejected before any query runs;
    per-row failures are reported with the row index.
    """
    if caption_embeddings is not None:
        if caption_embeddings.rows != image_embeddings.rows:
            raise RowCountMismatchError(
                f"{image_embeddings.rows} image rows vs "
                f"{caption_embeddings.rows} caption rows"
            )
        if caption_embeddings.rows and caption_embeddings.dim != index.sent_dim:
            raise DimMismatchError(
                f"caption dim {caption_embeddings.dim} != sentence dim {index.sent_dim}"
            )
    if image_embeddings.rows and image_embeddings.dim != index.clip_dim:
        raise DimMismatchError(
            f"image dim {image_embeddings.dim} != index clip dim {index.clip_dim}"
        )
    predictions: list[Prediction] = []
    for i in range(image_embeddings.rows):
        caption = (
            caption_embeddings.row(i) if caption_embeddings is not None else None
        )
        try:
            predictions.append(
                predict(index, image_embeddings.row(i), caption, config)
            )
        except PromptKnnError as exc:
            raise type(exc)(f"row {i}: {exc}") from exc
    return predictions
