"""Real-model encoder construction. All heavyweight imports are lazy.

Encoders expose:
    encode(items) -> (n, dim) float32 ndarray   # texts or PIL images
    model_name, model_revision, device

The CLIP model name is always an explicit argument (there is no safe default
to pick silently); the sentence encoder defaults to all-MiniLM-L6-v2.
"""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SENTENCE_MODEL = "sentence-transformers/all-MiniLM-L6-v2"


class ModelUnavailableError(RuntimeError):
    """A model (or its library) could not be loaded."""


class CaptionerUnavailableError(ModelUnavailableError):
    """No captioner could be loaded; the fused prediction variant is optional."""


class SentenceEncoder:
    def __init__(self, model_name: str = DEFAULT_SENTENCE_MODEL, device: str = "cpu"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelUnavailableError(
                "sentence-transformers is not installed; "
                "pip install 'promptknn-adapters[models]'"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name, device=device)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_name}: {exc}") from exc
        self.model_name = model_name
        self.model_revision = getattr(self._model, "_model_config", {}).get(
            "__version__", ""
        ) or ""
        self.device = device

    def encode(self, texts: list[str]) -> np.ndarray:
        out = self._model.encode(
            list(texts),
            batch_size=64,
            convert_to_numpy=True,
            show_progress_bar=False,
            normalize_embeddings=False,
        )
        return np.asarray(out, dtype=np.float32)


class ClipTextEncoder:
    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoTokenizer, CLIPTextModelWithProjection
        except ImportError as exc:
            raise ModelUnavailableError(
                "transformers/torch are not installed; "
                "pip install 'promptknn-adapters[models]'"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = CLIPTextModelWithProjection.from_pretrained(model_name)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_name}: {exc}") from exc
        self._torch = torch
        self._model.eval().to(device)
        self.model_name = model_name
        self.model_revision = getattr(self._model.config, "_commit_hash", "") or ""
        self.device = device

    def encode(self, texts: list[str]) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for start in range(0, len(texts), 64):
                batch = list(texts[start : start + 64])
                inputs = self._tokenizer(
                    batch, padding=True, truncation=True, return_tensors="pt"
                ).to(self.device)
                out = self._model(**inputs)
                chunks.append(out.text_embeds.cpu().numpy())
        if not chunks:
            return np.empty((0, self._model.config.projection_dim), dtype=np.float32)
        return np.concatenate(chunks).astype(np.float32)


class ClipImageEncoder:
    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoImageProcessor, CLIPVisionModelWithProjection
        except ImportError as exc:
            raise ModelUnavailableError(
                "transformers/torch are not installed; "
                "pip install 'promptknn-adapters[models]'"
            ) from exc
        try:
            self._processor = AutoImageProcessor.from_pretrained(model_name)
            self._model = CLIPVisionModelWithProjection.from_pretrained(model_name)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_name}: {exc}") from exc
        self._torch = torch
        self._model.eval().to(device)
        self.model_name = model_name
        self.model_revision = getattr(self._model.config, "_commit_hash", "") or ""
        self.device = device

    def encode(self, images) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for start in range(0, len(images), 16):
                batch = list(images[start : start + 16])
                inputs = self._processor(images=batch, return_tensors="pt").to(self.device)
                out = self._model(**inputs)
                chunks.append(out.image_embeds.cpu().numpy())
        if not chunks:
            return np.empty((0, self._model.config.projection_dim), dtype=np.float32)
        return np.concatenate(chunks).astype(np.float32)


class PipelineCaptioner:
    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise CaptionerUnavailableError(
                "transformers is not installed, so no captioner is available. "
                "Captions only feed the optional fused variant; retrieval-only "
                "prediction works without them."
            ) from exc
        try:
            self._pipe = pipeline("image-to-text", model=model_name, device=device)
        except Exception as exc:
            raise CaptionerUnavailableError(
                f"cannot load captioner {model_name}: {exc}. Captions only feed "
                "the optional fused variant; retrieval-only prediction works "
                "without them."
            ) from exc
        self.model_name = model_name
        self.model_revision = ""
        self.device = device

    def caption(self, image) -> str:
        result = self._pipe(image)
        text = result[0]["generated_text"] if result else ""
        return text.strip()


def build_text_encoder(selector: str, model_name: str | None, device: str = "cpu"):
    if selector == "sentence":
        return SentenceEncoder(model_name or DEFAULT_SENTENCE_MODEL, device)
    if selector == "clip_text":
        if not model_name:
            raise ValueError("clip_text encoding requires an explicit --model name")
        return ClipTextEncoder(model_name, device)
    raise ValueError(f"unknown text encoder selector {selector!r}")
