"""Evaluation harness: per-query cosine scoring, variant comparison tables,
parameter sweeps, and deterministic synthetic fixtures.

Real-scale corpora and their hidden ground truth are out of desk-scale reach,
so the harness certifies the metric definition and the relative ordering of
retrieval variants on clustered synthetic data with a known cross-space
relationship, not any absolute score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .core import EmbeddingMatrix, l2_normalize
from .errors import DimMismatchError, RowCountMismatchError, ZeroVectorError
from .index import CorpusIndex
from .predictor import FusionConfig, predict_batch
from .store import (
    CorpusManifest,
    write_embeddings,
    write_manifest,
    write_prompts_jsonl,
)


class EvalRecord(NamedTuple):
    query_id: int
    similarity: float


@dataclass(frozen=True)
class EvalSummary:
    variant_name: str
    n: int
    mean_similarity: float
    std: float
    min_similarity: float
    max_similarity: float

    def to_dict(self) -> dict:
        return {
            "variant_name": self.variant_name,
            "n": self.n,
            "mean_similarity": self.mean_similarity,
            "std": self.std,
            "min_similarity": self.min_similarity,
            "max_similarity": self.max_similarity,
        }


def evaluate(
    predictions: EmbeddingMatrix,
    ground_truth: EmbeddingMatrix,
    name: str = "eval",
) -> tuple[list[EvalRecord], EvalSummary]:
    """Per-row cosine similarity plus float64-accumulated summary statistics."""
    if predictions.rows != ground_truth.rows:
        raise RowCountMismatchError(
            f"{predictions.rows} predictions vs {ground_truth.rows} ground-truth rows"
        )
    if predictions.rows < 1:
        raise RowCountMismatchError("evaluation needs at least one row")
    if predictions.dim != ground_truth.dim:
        raise DimMismatchError(
            f"prediction dim {predictions.dim} != ground-truth dim {ground_truth.dim}"
        )
    p = predictions.data.astype(np.float64)
    g = ground_truth.data.astype(np.float64)
    p_norms = np.linalg.norm(p, axis=1)
    g_norms = np.linalg.norm(g, axis=1)
    for label, norms in (("prediction", p_norms), ("ground-truth", g_norms)):
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            row = int(zero[0])
            raise ZeroVectorError(f"{label} row {row} has zero norm", row=row)
    sims = np.clip(np.einsum("ij,ij->i", p, g) / (p_norms * g_norms), -1.0, 1.0)
    records = [EvalRecord(i, float(s)) for i, s in enumerate(sims)]
    summary = EvalSummary(
        variant_name=name,
        n=len(records),
        mean_similarity=float(sims.mean()),
        std=float(sims.std()),
        min_similarity=float(sims.min()),
        max_similarity=float(sims.max()),
    )
    return records, summary


@dataclass(frozen=True)
class Variant:
    """One column of the comparison table.

    caption_only scores the normalized caption embedding by itself (the
    baseline without retrieval); otherwise prediction is the standard
    pipeline, fused when captions are present.
    """

    name: str
    config: FusionConfig = FusionConfig()
    captions: EmbeddingMatrix | None = None
    caption_only: bool = False


def _variant_predictions(
    index: CorpusIndex, queries: EmbeddingMatrix, variant: Variant
) -> EmbeddingMatrix:
    if variant.caption_only:
        if variant.captions is None:
            raise ValueError(
                f"variant {variant.name!r} is caption-only but has no captions"
            )
        rows = [
            l2_normalize(variant.captions.row(i)).values
            for i in range(variant.captions.rows)
        ]
        return EmbeddingMatrix(np.stack(rows))
    predictions = predict_batch(index, queries, variant.captions, variant.config)
    return EmbeddingMatrix(np.stack([p.e_pred.values for p in predictions]))


def compare_variants(
    index: CorpusIndex,
    queries: EmbeddingMatrix,
    ground_truth: EmbeddingMatrix,
    variants: Sequence[Variant],
) -> list[EvalSummary]:
    """Evaluate every variant over the identical query set."""
    summaries = []
    for variant in variants:
        predicted = _variant_predictions(index, queries, variant)
        _, summary = evaluate(predicted, ground_truth, name=variant.name)
        summaries.append(summary)
    return summaries


def sweep(
    index: CorpusIndex,
    queries: EmbeddingMatrix,
    ground_truth: EmbeddingMatrix,
    k_values: Sequence[int],
    w1_values: Sequence[float],
    captions: EmbeddingMatrix | None = None,
) -> tuple[list[EvalSummary], EvalSummary]:
    """Full Cartesian grid over k and w1 (w2 = 1 - w1); returns (grid, best).

    Without captions the w1 axis is inert (prediction falls back to the pooled
    component), but the grid shape is preserved so cells stay addressable.
    """
    if not k_values or not w1_values:
        raise ValueError("k_values and w1_values must be non-empty")
    summaries = []
    for k in k_values:
        for w1 in w1_values:
            config = FusionConfig(k=k, w1=w1, w2=1.0 - w1)
            variant = Variant(name=f"k={k},w1={w1:g}", config=config, captions=captions)
            predicted = _variant_predictions(index, queries, variant)
            _, summary = evaluate(predicted, ground_truth, name=variant.name)
            summaries.append(summary)
    best = max(summaries, key=lambda s: s.mean_similarity)
    return summaries, best


def render_table(summaries: Sequence[EvalSummary]) -> str:
    """Aligned plain-text table of summaries."""
    headers = ("variant", "n", "mean", "std", "min", "max")
    rows = [
        (
            s.variant_name,
            str(s.n),
            f"{s.mean_similarity:.4f}",
            f"{s.std:.4f}",
            f"{s.min_similarity:.4f}",
            f"{s.max_similarity:.4f}",
        )
        for s in summaries
    ]
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
        for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)),
        "  ".join("-" * widths[c] for c in range(len(headers))),
    ]
    for r in rows:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in range(len(headers))))
    return "\n".join(lines)


def summaries_to_json(summaries: Sequence[EvalSummary]) -> str:
    return json.dumps([s.to_dict() for s in summaries], indent=2)


@dataclass(frozen=True)
class SyntheticFixtureSpec:
    """Clustered synthetic corpus parameters; one seed fixes every byte."""

    n_clusters: int
    prompts_per_cluster: int
    n_queries: int
    clip_dim: int
    sent_dim: int
    noise_sigma: float
    seed: int

    def __post_init__(self):
        for name in (
            "n_clusters",
            "prompts_per_cluster",
            "n_queries",
            "clip_dim",
            "sent_dim",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class FixturePaths:
    manifest: Path
    queries: Path
    ground_truth: Path
    labels: Path


def _cross_space_map(rng: np.random.Generator, clip_dim: int, sent_dim: int) -> np.ndarray:
    """Random semi-orthogonal (sent_dim, clip_dim) map, seeded by the fixture RNG."""
    gaussian = rng.standard_normal((clip_dim, sent_dim))
    if clip_dim >= sent_dim:
        q, _ = np.linalg.qr(gaussian)
        return q.T
    q, _ = np.linalg.qr(gaussian.T)
    return q


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def make_fixture(spec: SyntheticFixtureSpec, out_dir: str | Path) -> FixturePaths:
    """Generate corpus + queries + ground truth with known cluster structure.

    Corpus CLIP rows are noisy copies of unit cluster centers; paired sentence
    rows are those CLIP rows pushed through a fixed random semi-orthogonal map
    and renormalized, so neighborhoods survive the change of space. Queries
    are fresh noisy centers; ground truth is the mapped clean centers. Output
    is byte-deterministic for a given spec.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_clusters * spec.prompts_per_cluster

    centers = _unit_rows(rng.standard_normal((spec.n_clusters, spec.clip_dim)))
    prompt_clusters = np.repeat(np.arange(spec.n_clusters), spec.prompts_per_cluster)
    clip = centers[prompt_clusters] + spec.noise_sigma * rng.standard_normal(
        (n, spec.clip_dim)
    )
    mapping = _cross_space_map(rng, spec.clip_dim, spec.sent_dim)
    sent = _unit_rows(clip @ mapping.T)

    query_clusters = np.arange(spec.n_queries) % spec.n_clusters
    queries = centers[query_clusters] + spec.noise_sigma * rng.standard_normal(
        (spec.n_queries, spec.clip_dim)
    )
    ground_truth = _unit_rows(centers @ mapping.T)[query_clusters]

    prompts = [
        f"cluster-{c}-prompt-{j % spec.prompts_per_cluster}"
        for j, c in enumerate(prompt_clusters)
    ]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clip_path = out_dir / "clip.emb"
    sent_path = out_dir / "sent.emb"
    prompts_path = out_dir / "prompts.jsonl"
    manifest_path = out_dir / "manifest.json"
    queries_path = out_dir / "queries.emb"
    truth_path = out_dir / "ground_truth.emb"
    labels_path = out_dir / "labels.json"

    write_embeddings(EmbeddingMatrix(clip.astype(np.float32)), clip_path)
    write_embeddings(EmbeddingMatrix(sent.astype(np.float32)), sent_path)
    write_prompts_jsonl(list(range(n)), prompts, prompts_path)
    write_manifest(
        CorpusManifest(
            clip_embeddings=clip_path.name,
            sent_embeddings=sent_path.name,
            prompts=prompts_path.name,
            clip_dim=spec.clip_dim,
            sent_dim=spec.sent_dim,
            count=n,
            normalized=False,
            provenance=f"synthetic fixture seed={spec.seed}",
        ),
        manifest_path,
    )
    write_embeddings(EmbeddingMatrix(queries.astype(np.float32)), queries_path)
    write_embeddings(EmbeddingMatrix(ground_truth.astype(np.float32)), truth_path)
    labels = {
        "prompt_clusters": prompt_clusters.tolist(),
        "query_clusters": query_clusters.tolist(),
    }
    labels_path.write_text(
        json.dumps(labels, sort_keys=True) + "\n", encoding="utf-8"
    )
    return FixturePaths(
        manifest=manifest_path,
        queries=queries_path,
        ground_truth=truth_path,
        labels=labels_path,
    )
