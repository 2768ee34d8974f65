"""Encoder adapters for promptknn.

These scripts run real models (CLIP text/image towers, sentence
transformers, captioners) and emit embedding files and prompt JSON-Lines in
the promptknn formats. They write those formats and never read them back;
validation authority stays with the core package.
"""

from .caption import caption_images
from .embfile import write_embedding_file
from .encode import collect_image_paths, encode_images, encode_prompts, read_prompt_lines
from .encoders import (
    CaptionerUnavailableError,
    ClipImageEncoder,
    ClipTextEncoder,
    ModelUnavailableError,
    PipelineCaptioner,
    SentenceEncoder,
    build_text_encoder,
)
from .manifest import AdapterManifest

__version__ = "0.1.0"
