"""Test doubles for the encoding pipelines.

The stub encoder produces deterministic per-text vectors without any model,
so the file/manifest plumbing is testable offline. The real-model smoke test
lives in test_smoke_real_model.py and skips when weights can't be loaded.
"""

from __future__ import annotations

import hashlib

import numpy as np
import pytest


class StubEncoder:
    """Deterministic text encoder: one hash-seeded gaussian vector per input."""

    def __init__(self, dim: int = 12):
        self.dim = dim
        self.model_name = "stub-encoder"
        self.model_revision = "0"
        self.device = "cpu"

    def _vector(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        return np.random.default_rng(seed).standard_normal(self.dim)

    def encode(self, items) -> np.ndarray:
        if not items:
            return np.empty((0, self.dim), dtype=np.float32)
        rows = [self._vector(self._key(item)) for item in items]
        return np.stack(rows).astype(np.float32)

    @staticmethod
    def _key(item) -> str:
        if isinstance(item, str):
            return item
        size = getattr(item, "size", None)  # PIL image
        return f"image-{size}"


class StubCaptioner:
    model_name = "stub-captioner"
    model_revision = "0"
    device = "cpu"

    def caption(self, image) -> str:
        return f"a picture sized {image.size[0]}x{image.size[1]}"


@pytest.fixture
def stub_encoder():
    return StubEncoder()


@pytest.fixture
def stub_captioner():
    return StubCaptioner()


@pytest.fixture
def prompts_file(tmp_path):
    import json

    path = tmp_path / "prompts.jsonl"
    rows = [
        {"id": i, "prompt": text}
        for i, text in enumerate(
            ["a red bicycle", "snowy mountain pass", "two cats sleeping"]
        )
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


@pytest.fixture
def image_dir(tmp_path):
    from PIL import Image

    d = tmp_path / "images"
    d.mkdir()
    for name, size in (("b.png", (8, 6)), ("a.png", (4, 4)), ("c.png", (10, 2))):
        Image.new("RGB", size, color=(120, 30, 200)).save(d / name)
    (d / "broken.png").write_bytes(b"not an image at all")
    return d
