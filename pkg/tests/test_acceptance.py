"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with `pytest -s tests/test_acceptance.py` to see one PASS/FAIL line per
criterion. Criteria (tolerances fixed here, not calibrated later):

  A1  search equals an independent full-scan oracle on >= 1000 random
      instances (N <= 512, dim in {8, 64, 384}, k <= N), zero mismatches,
      under 60 s.
  A2  numeric core properties at >= 10k random cases each: cosine symmetry
      (exact), scale invariance (1e-5), clamping, mean vs fsum oracle
      (1e-5/component), fuse linearity (1e-5).
  A3  frozen clustered fixture (32, 64, 500, 64, 32, 0.35, seed=7):
      mean@100 > mean@10 > mean@1 with every gap > 0.005, under 120 s.
  A4  dedup at threshold 0.9: greedy equals the quadratic reference exactly
      on 200-row inputs, no surviving pair at cosine >= 0.9, idempotent.
  A5  binary format: write/read bit-identity on >= 100 random matrices
      (zero-row and subnormal cases included); corrupt headers rejected
      with the specific error.
  A6  degenerate configs: w1=1/w2=0 matches caption-free output, k > N
      clamps with a warning, k=1 returns the nearest sentence row exactly.
  A7  HTTP predictions match library predictions within 1e-6 per component
      on 50 fixture queries; 400 on dim mismatch; 413 on oversized body;
      healthz reports the corpus size.
"""

import json
import math
import struct
import time
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

from promptknn.builder import dedup_by_similarity
from promptknn.core import (
    EmbeddingMatrix,
    EmbeddingVector,
    cosine_similarity,
    mean_pool,
    weighted_fuse,
)
from promptknn.errors import BadDtypeError, BadMagicError, TruncatedFileError
from promptknn.evaluator import (
    SyntheticFixtureSpec,
    Variant,
    compare_variants,
    make_fixture,
)
from promptknn.index import build_index, search
from promptknn.predictor import FusionConfig, predict, predict_knn_component
from promptknn.service import ServiceConfig, create_app
from promptknn.store import load_corpus, read_embeddings, write_embeddings

from conftest import (
    make_index,
    oracle_greedy_dedup,
    oracle_mean,
    oracle_topk,
    unit_rows_f32,
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_a1_knn_oracle_equivalence():
    rng = np.random.default_rng(42)
    dims = (8, 64, 384)
    started = time.perf_counter()
    with criterion("A1 knn-oracle-equivalence"):
        for trial in range(1000):
            n = int(rng.integers(1, 513))
            d = dims[trial % 3]
            k = int(rng.integers(1, n + 1))
            clip = rng.standard_normal((n, d))
            index = make_index(clip, clip[:, : min(d, 8)])
            query = rng.standard_normal(d).astype(np.float32)
            result = search(index, EmbeddingVector(query), k)
            q64 = query.astype(np.float64)
            expected_rows, expected_scores = oracle_topk(
                index.clip_normalized.data, q64 / np.linalg.norm(q64), k
            )
            assert result.rows() == expected_rows, f"trial {trial}: index mismatch"
            np.testing.assert_allclose(
                result.scores(), expected_scores, atol=1e-9,
                err_msg=f"trial {trial}: score mismatch",
            )
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_a2_numeric_core_properties():
    rng = np.random.default_rng(7)
    with criterion("A2 numeric-core-properties"):
        # cosine symmetry, exact
        for _ in range(10_000):
            a = EmbeddingVector(rng.standard_normal(6))
            b = EmbeddingVector(rng.standard_normal(6))
            assert cosine_similarity(a, b) == cosine_similarity(b, a)

        # scale invariance within 1e-5
        for _ in range(10_000):
            a = rng.standard_normal(6)
            b = rng.standard_normal(6)
            alpha, beta = rng.uniform(1e-3, 1e3, size=2)
            base = cosine_similarity(EmbeddingVector(a), EmbeddingVector(b))
            scaled = cosine_similarity(
                EmbeddingVector(alpha * a), EmbeddingVector(beta * b)
            )
            assert abs(scaled - base) < 1e-5

        # clamped to [-1, 1] even for parallel/antiparallel pairs
        for _ in range(10_000):
            a = rng.standard_normal(4)
            scale = float(rng.uniform(0.1, 100.0))
            sign = 1.0 if rng.random() < 0.5 else -1.0
            s = cosine_similarity(EmbeddingVector(a), EmbeddingVector(sign * scale * a))
            assert -1.0 <= s <= 1.0

        # mean_pool against the fsum oracle, 1e-5 per component
        for _ in range(10_000):
            rows = rng.standard_normal(
                (int(rng.integers(1, 7)), int(rng.integers(1, 7)))
            ).astype(np.float32)
            got = mean_pool(EmbeddingMatrix(rows)).values.astype(np.float64)
            np.testing.assert_allclose(got, oracle_mean(rows), atol=1e-5)

        # weighted_fuse linearity, 1e-5 per component
        for _ in range(10_000):
            a = EmbeddingVector(rng.standard_normal(5))
            b = EmbeddingVector(rng.standard_normal(5))
            w1, w2, u1, u2 = rng.uniform(-3, 3, size=4)
            lhs = (
                weighted_fuse(a, b, w1, w2).values.astype(np.float64)
                + weighted_fuse(a, b, u1, u2).values.astype(np.float64)
            )
            rhs = weighted_fuse(a, b, w1 + u1, w2 + u2).values.astype(np.float64)
            np.testing.assert_allclose(lhs, rhs, atol=1e-5)


FROZEN_SPEC = SyntheticFixtureSpec(
    n_clusters=32,
    prompts_per_cluster=64,
    n_queries=500,
    clip_dim=64,
    sent_dim=32,
    noise_sigma=0.35,
    seed=7,
)


def test_a3_retrieval_depth_ordering(tmp_path):
    started = time.perf_counter()
    with criterion("A3 retrieval-depth-ordering"):
        paths = make_fixture(FROZEN_SPEC, tmp_path / "frozen")
        index = build_index(load_corpus(paths.manifest))
        queries = read_embeddings(paths.queries)
        truth = read_embeddings(paths.ground_truth)
        summaries = compare_variants(
            index,
            queries,
            truth,
            [
                Variant(name="knn@1", config=FusionConfig(k=1)),
                Variant(name="knn@10", config=FusionConfig(k=10)),
                Variant(name="knn@100", config=FusionConfig(k=100)),
            ],
        )
        mean_at = {s.variant_name: s.mean_similarity for s in summaries}
        assert mean_at["knn@100"] - mean_at["knn@10"] > 0.005, mean_at
        assert mean_at["knn@10"] - mean_at["knn@1"] > 0.005, mean_at
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"took {elapsed:.1f}s"
        print(
            f"  knn@1={mean_at['knn@1']:.4f} knn@10={mean_at['knn@10']:.4f} "
            f"knn@100={mean_at['knn@100']:.4f}",
            end=" ",
        )


def test_a4_dedup_guarantee():
    rng = np.random.default_rng(13)
    with criterion("A4 dedup-guarantee"):
        for trial in range(10):
            base = rng.standard_normal((120, 8)).astype(np.float32)
            dupes = base[rng.integers(0, 120, size=80)] + (
                0.03 * rng.standard_normal((80, 8)).astype(np.float32)
            )
            rows = np.vstack([base, dupes])[rng.permutation(200)].astype(np.float32)
            kept = dedup_by_similarity(["p"] * 200, EmbeddingMatrix(rows), 0.9)

            assert kept == oracle_greedy_dedup(rows, 0.9), f"trial {trial}"

            unit = unit_rows_f32(rows[kept]).astype(np.float64)
            sims = unit @ unit.T
            np.fill_diagonal(sims, -1.0)
            assert sims.max() < 0.9, f"trial {trial}: audit found a surviving pair"

            again = dedup_by_similarity(
                ["p"] * len(kept), EmbeddingMatrix(rows[kept]), 0.9
            )
            assert again == list(range(len(kept))), f"trial {trial}: not idempotent"


def test_a5_format_roundtrip(tmp_path):
    rng = np.random.default_rng(99)
    with criterion("A5 format-roundtrip"):
        path = tmp_path / "m.emb"
        for trial in range(110):
            if trial == 0:
                arr = np.empty((0, 7), dtype=np.float32)
            else:
                rows = int(rng.integers(1, 40))
                d = int(rng.integers(1, 40))
                magnitude = 10.0 ** float(rng.integers(-20, 20))
                arr = (rng.standard_normal((rows, d)) * magnitude).astype(np.float32)
                arr[~np.isfinite(arr)] = 0.0
                # plant subnormal bit patterns in a few slots
                flat = arr.view(np.uint32).reshape(-1)
                for slot in rng.integers(0, flat.size, size=min(4, flat.size)):
                    flat[slot] = np.uint32(rng.integers(1, 0x007FFFFF))
            matrix = EmbeddingMatrix(arr)
            write_embeddings(matrix, path)
            back = read_embeddings(path)
            assert back.data.tobytes() == matrix.data.tobytes(), f"trial {trial}"

        header = struct.Struct("<8sIQB15s")
        m = EmbeddingMatrix(np.ones((2, 3), dtype=np.float32))
        write_embeddings(m, path)
        good = path.read_bytes()

        bad_magic = tmp_path / "bad_magic.emb"
        bad_magic.write_bytes(b"XXXXXXXX" + good[8:])
        with pytest.raises(BadMagicError):
            read_embeddings(bad_magic)

        bad_dtype = tmp_path / "bad_dtype.emb"
        bad_dtype.write_bytes(
            header.pack(b"PKNNEMB1", 3, 2, 9, b"\x00" * 15) + good[36:]
        )
        with pytest.raises(BadDtypeError):
            read_embeddings(bad_dtype)

        truncated = tmp_path / "trunc.emb"
        truncated.write_bytes(good[:-5])
        with pytest.raises(TruncatedFileError):
            read_embeddings(truncated)


def test_a6_degenerate_configs(caplog):
    rng = np.random.default_rng(21)
    with criterion("A6 degenerate-configs"):
        clip = rng.standard_normal((30, 16))
        sent = rng.standard_normal((30, 8))
        index = make_index(clip, sent)
        query = EmbeddingVector(rng.standard_normal(16).astype(np.float32))
        caption = EmbeddingVector(rng.standard_normal(8).astype(np.float32))

        # w1=1/w2=0 equals caption-free prediction (last-ulp renormalization
        # wiggle aside) and ignores the caption entirely
        ignoring = predict(index, query, caption, FusionConfig(k=5, w1=1.0, w2=0.0))
        caption_free = predict(index, query, None, FusionConfig(k=5, w1=1.0, w2=0.0))
        np.testing.assert_allclose(
            ignoring.e_pred.values, caption_free.e_pred.values, atol=1e-6
        )
        assert ignoring.neighbors == caption_free.neighbors

        # k > N clamps with a warning instead of failing
        with caplog.at_level("WARNING", logger="promptknn.index"):
            clamped = search(index, query, 10_000)
        assert len(clamped.neighbors) == 30
        assert any("clamp" in rec.message for rec in caplog.records)

        # k=1 returns the single nearest row's sentence embedding bit-exactly
        pooled, result = predict_knn_component(index, query, 1)
        nearest = result.neighbors[0].row
        assert pooled.values.tobytes() == index.sent.data[nearest].tobytes()


def test_a7_service_conformance(tmp_path):
    with criterion("A7 service-conformance"):
        spec = SyntheticFixtureSpec(
            n_clusters=8,
            prompts_per_cluster=16,
            n_queries=50,
            clip_dim=24,
            sent_dim=12,
            noise_sigma=0.3,
            seed=5,
        )
        paths = make_fixture(spec, tmp_path / "svc")
        index = build_index(load_corpus(paths.manifest))
        queries = read_embeddings(paths.queries)
        client = TestClient(
            create_app(index, ServiceConfig(max_body_bytes=256 * 1024))
        )

        health = client.get("/healthz")
        assert health.status_code == 200
        assert health.json()["corpus_count"] == 128
        assert health.json()["clip_dim"] == 24

        config = FusionConfig(k=10)
        for i in range(50):
            vector = [float(x) for x in queries.data[i]]
            response = client.post(
                "/v1/predict", json={"image_embedding": vector, "k": 10}
            )
            assert response.status_code == 200
            http_pred = np.array(response.json()["e_pred"], dtype=np.float64)
            lib_pred = predict(index, queries.row(i), None, config)
            np.testing.assert_allclose(
                http_pred,
                lib_pred.e_pred.values.astype(np.float64),
                atol=1e-6,
                err_msg=f"query {i}",
            )

        wrong_dim = client.post(
            "/v1/predict", json={"image_embedding": [1.0, 2.0, 3.0]}
        )
        assert wrong_dim.status_code == 400
        assert "expected 24" in wrong_dim.json()["error"]

        oversized = client.post(
            "/v1/predict",
            json={
                "image_embedding": [1.0] * 24,
                "padding": "x" * (512 * 1024),
            },
        )
        assert oversized.status_code == 413

        nonfinite = client.post(
            "/v1/predict",
            content=('{"image_embedding": [' + "NaN," + "1.0," * 22 + "1.0]}").encode(),
            headers={"content-type": "application/json"},
        )
        assert nonfinite.status_code == 422


def test_acceptance_fixture_digest(tmp_path):
    """Companion check: the frozen fixture itself is reproducible."""
    a = make_fixture(FROZEN_SPEC, tmp_path / "a")
    b = make_fixture(FROZEN_SPEC, tmp_path / "b")
    assert a.manifest.read_bytes() == b.manifest.read_bytes()
    assert (tmp_path / "a" / "clip.emb").read_bytes() == (
        tmp_path / "b" / "clip.emb"
    ).read_bytes()
    assert a.queries.read_bytes() == b.queries.read_bytes()


def test_acceptance_labels_match_layout(tmp_path):
    """Companion check: fixture labels agree with the prompt text layout."""
    paths = make_fixture(
        SyntheticFixtureSpec(4, 8, 10, 16, 8, 0.2, seed=1), tmp_path / "fx"
    )
    bundle = load_corpus(paths.manifest)
    labels = json.loads(paths.labels.read_text())
    for row, cluster in enumerate(labels["prompt_clusters"]):
        assert bundle.prompts[row].startswith(f"cluster-{cluster}-")
    assert not math.isnan(sum(labels["query_clusters"]))
