"""Caption generation: images in, {"id", "prompt"} JSON-Lines out.

The output feeds straight into encode_prompts with the sentence encoder to
produce caption-component embeddings for fused prediction.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .encode import collect_image_paths, _load_image

logger = logging.getLogger(__name__)


def caption_images(
    source: str | Path | list,
    captioner,
    output_path: str | Path,
) -> int:
    """Caption every readable image in sorted order; returns captions written."""
    paths = collect_image_paths(source)
    written = 0
    with open(output_path, "w", encoding="utf-8") as fh:
        for path in paths:
            try:
                image = _load_image(path)
            except Exception as exc:
                logger.warning("skipping unreadable image %s: %s", path, exc)
                continue
            text = captioner.caption(image)
            if not text:
                logger.warning("captioner produced empty text for %s", path)
                continue
            fh.write(json.dumps({"id": written, "prompt": text}, ensure_ascii=False))
            fh.write("\n")
            written += 1
    logger.info("captioned %d images -> %s", written, output_path)
    return written
