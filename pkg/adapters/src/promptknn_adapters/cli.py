"""Adapter CLI: encode-prompts, encode-images, caption.

Mirrors the core CLI's conventions: diagnostics to stderr, JSON summaries to
stdout, nonzero exit on failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .caption import caption_images
from .encode import MalformedLineError, encode_images, encode_prompts
from .encoders import (
    CaptionerUnavailableError,
    ClipImageEncoder,
    ModelUnavailableError,
    PipelineCaptioner,
    build_text_encoder,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="promptknn-encode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode-prompts", help="prompts JSONL -> embedding file")
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--encoder", choices=["sentence", "clip_text"], default="sentence")
    p.add_argument("--model", help="model name (required for clip_text)")
    p.add_argument("--device", default="cpu")

    p = sub.add_parser("encode-images", help="image dir/files -> embedding file")
    p.add_argument("--images", required=True, nargs="+", help="directory or image paths")
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True, help="CLIP vision model name")
    p.add_argument("--device", default="cpu")

    p = sub.add_parser("caption", help="image dir/files -> captions JSONL")
    p.add_argument("--images", required=True, nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True, help="image-to-text model name")
    p.add_argument("--device", default="cpu")

    return parser


def _image_source(values: list[str]):
    return values[0] if len(values) == 1 else values


def main() -> None:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args()
    try:
        if args.command == "encode-prompts":
            encoder = build_text_encoder(args.encoder, args.model, args.device)
            manifest = encode_prompts(args.prompts, encoder, args.out, args.encoder)
            print(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
        elif args.command == "encode-images":
            encoder = ClipImageEncoder(args.model, args.device)
            manifest = encode_images(_image_source(args.images), encoder, args.out)
            print(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
        elif args.command == "caption":
            captioner = PipelineCaptioner(args.model, args.device)
            written = caption_images(_image_source(args.images), captioner, args.out)
            print(json.dumps({"captions": written, "output": args.out}, indent=2))
    except CaptionerUnavailableError as exc:
        print(f"promptknn-encode: {exc}", file=sys.stderr)
        sys.exit(4)
    except (ModelUnavailableError, MalformedLineError, ValueError) as exc:
        print(f"promptknn-encode: error: {exc}", file=sys.stderr)
        sys.exit(2)
    except OSError as exc:
        print(f"promptknn-encode: I/O error: {exc}", file=sys.stderr)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
