"""Batch encoding pipelines: prompts or images in, embedding file + manifest out."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import numpy as np

from .embfile import write_embedding_file
from .manifest import AdapterManifest

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp"}


class MalformedLineError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_prompt_lines(path: str | Path) -> tuple[list[int], list[str]]:
    """Read {"id": int?, "prompt": str} JSON-Lines; malformed lines carry numbers."""
    ids: list[int] = []
    prompts: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise MalformedLineError("blank line", lineno)
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(f"invalid JSON: {exc}", lineno) from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("prompt"), str):
                raise MalformedLineError('need an object with a string "prompt"', lineno)
            rec_id = obj.get("id", len(ids))
            if not isinstance(rec_id, int) or isinstance(rec_id, bool):
                raise MalformedLineError('"id" must be an integer', lineno)
            ids.append(rec_id)
            prompts.append(obj["prompt"])
    return ids, prompts


def encode_prompts(
    prompts_path: str | Path,
    encoder,
    output_path: str | Path,
    selector: str = "sentence",
) -> AdapterManifest:
    """Encode prompt texts line-by-line; output row i is prompt i's embedding."""
    started = time.perf_counter()
    _, prompts = read_prompt_lines(prompts_path)
    if prompts:
        embeddings = encoder.encode(prompts)
    else:
        embeddings = np.empty((0, getattr(encoder, "dim", 1) or 1), dtype=np.float32)
    if embeddings.shape[0] != len(prompts):
        raise RuntimeError(
            f"encoder returned {embeddings.shape[0]} rows for {len(prompts)} prompts"
        )
    write_embedding_file(embeddings, output_path)
    manifest = AdapterManifest(
        model_selector=selector,
        model_name=encoder.model_name,
        model_revision=encoder.model_revision,
        input_path=str(prompts_path),
        output_path=str(output_path),
        dim=int(embeddings.shape[1]),
        rows=int(embeddings.shape[0]),
        device=encoder.device,
        wall_clock_s=time.perf_counter() - started,
    )
    manifest.write(Path(output_path).with_suffix(".manifest.json"))
    logger.info("encoded %d prompts -> %s", len(prompts), output_path)
    return manifest


def collect_image_paths(source: str | Path | list) -> list[Path]:
    """A directory becomes its sorted image listing; a list is sorted as given paths."""
    if isinstance(source, (str, Path)) and Path(source).is_dir():
        paths = [
            p
            for p in Path(source).iterdir()
            if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file()
        ]
    else:
        paths = [Path(p) for p in (source if isinstance(source, list) else [source])]
    return sorted(paths)


def _load_image(path: Path):
    from PIL import Image

    with Image.open(path) as img:
        return img.convert("RGB")


def encode_images(
    source: str | Path | list,
    encoder,
    output_path: str | Path,
) -> AdapterManifest:
    """Encode images in sorted path order; unreadable files are skipped with a
    warning and recorded in the manifest."""
    started = time.perf_counter()
    paths = collect_image_paths(source)
    images = []
    skipped: list[dict] = []
    for path in paths:
        try:
            images.append(_load_image(path))
        except Exception as exc:
            logger.warning("skipping unreadable image %s: %s", path, exc)
            skipped.append({"path": str(path), "reason": str(exc)})
    if images:
        embeddings = encoder.encode(images)
    else:
        embeddings = np.empty((0, 1), dtype=np.float32)
    write_embedding_file(embeddings, output_path)
    manifest = AdapterManifest(
        model_selector="clip_image",
        model_name=encoder.model_name,
        model_revision=encoder.model_revision,
        input_path=str(source),
        output_path=str(output_path),
        dim=int(embeddings.shape[1]),
        rows=int(embeddings.shape[0]),
        device=encoder.device,
        wall_clock_s=time.perf_counter() - started,
        skipped=skipped,
    )
    manifest.write(Path(output_path).with_suffix(".manifest.json"))
    logger.info(
        "encoded %d images (%d skipped) -> %s", len(images), len(skipped), output_path
    )
    return manifest
