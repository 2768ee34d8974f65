"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's code paths: per-row
np.dot loops, python sorts, math.fsum summation. They are the reference
implementations the fast paths are checked against.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from promptknn.core import EmbeddingMatrix
from promptknn.index import CorpusIndex
from promptknn.store import (
    CorpusManifest,
    write_embeddings,
    write_manifest,
    write_prompts_jsonl,
)


def oracle_topk(unit_rows: np.ndarray, unit_query: np.ndarray, k: int):
    """Full-scan reference: float64 per-row dot, clamp, sort by (-score, row)."""
    scores = []
    q = unit_query.astype(np.float64)
    for row in unit_rows:
        s = float(np.dot(row.astype(np.float64), q))
        scores.append(min(1.0, max(-1.0, s)))
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))[: min(k, len(scores))]
    return order, [scores[i] for i in order]


def oracle_mean(rows: np.ndarray) -> np.ndarray:
    """High-precision column means via math.fsum."""
    n, d = rows.shape
    return np.array(
        [math.fsum(float(rows[i, j]) for i in range(n)) / n for j in range(d)]
    )


def oracle_greedy_dedup(rows: np.ndarray, threshold: float) -> list[int]:
    """Quadratic reference for the greedy forward dedup pass."""
    kept: list[int] = []
    for i in range(rows.shape[0]):
        v = rows[i].astype(np.float64)
        v = v / np.linalg.norm(v)
        duplicate = False
        for j in kept:
            w = rows[j].astype(np.float64)
            w = w / np.linalg.norm(w)
            if min(1.0, max(-1.0, float(np.dot(v, w)))) >= threshold:
                duplicate = True
                break
        if not duplicate:
            kept.append(i)
    return kept


def unit_rows_f32(raw: np.ndarray) -> np.ndarray:
    """Normalize rows in float64, narrow to float32 (the index's convention)."""
    raw64 = raw.astype(np.float64)
    return (raw64 / np.linalg.norm(raw64, axis=1, keepdims=True)).astype(np.float32)


def make_index(clip_raw: np.ndarray, sent_raw: np.ndarray) -> CorpusIndex:
    """Assemble an in-memory index directly from raw (unnormalized) arrays."""
    n = clip_raw.shape[0]
    return CorpusIndex(
        clip_normalized=EmbeddingMatrix(unit_rows_f32(clip_raw)),
        sent=EmbeddingMatrix(sent_raw.astype(np.float32)),
        prompts=tuple(f"prompt-{i}" for i in range(n)),
        build_time=0.0,
    )


def write_corpus_dir(
    dirpath,
    clip: np.ndarray,
    sent: np.ndarray,
    prompts: list[str] | None = None,
    normalized: bool = False,
    count: int | None = None,
):
    """Write a corpus directory; count can be forced to an inconsistent value."""
    dirpath.mkdir(parents=True, exist_ok=True)
    n = clip.shape[0]
    if prompts is None:
        prompts = [f"prompt {i}" for i in range(n)]
    write_embeddings(EmbeddingMatrix(clip.astype(np.float32)), dirpath / "clip.emb")
    write_embeddings(EmbeddingMatrix(sent.astype(np.float32)), dirpath / "sent.emb")
    write_prompts_jsonl(list(range(len(prompts))), prompts, dirpath / "prompts.jsonl")
    manifest = CorpusManifest(
        clip_embeddings="clip.emb",
        sent_embeddings="sent.emb",
        prompts="prompts.jsonl",
        clip_dim=clip.shape[1],
        sent_dim=sent.shape[1],
        count=n if count is None else count,
        normalized=normalized,
        provenance="test corpus",
    )
    write_manifest(manifest, dirpath / "manifest.json")
    return dirpath / "manifest.json"


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)


@pytest.fixture
def small_corpus(tmp_path, rng):
    """A 12-row corpus on disk: returns (manifest_path, clip, sent)."""
    clip = rng.standard_normal((12, 8)).astype(np.float32)
    sent = rng.standard_normal((12, 6)).astype(np.float32)
    manifest = write_corpus_dir(tmp_path / "corpus", clip, sent)
    return manifest, clip, sent
