"""Command-line front end for every pipeline stage.

Subcommands: build, index-check, predict, eval, sweep, fixture, serve.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.
Diagnostics go to stderr; data goes to stdout or --out. Fusion parameters
resolve as flags > --config JSON file > built-in defaults (k=100, w1=0.6,
w2=0.4). PROMPTKNN_LOG=error|warn|info|debug controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .builder import (
    FilterConfig,
    TermEmbeddings,
    VocabMode,
    build_corpus,
    load_vocab_terms,
    read_raw_prompts,
    write_report,
)
from .core import EmbeddingMatrix
from .errors import IoFailureError, PromptKnnError
from .evaluator import (
    SyntheticFixtureSpec,
    Variant,
    compare_variants,
    make_fixture,
    render_table,
    summaries_to_json,
    sweep,
)
from .index import build_index
from .predictor import FusionConfig, predict_batch
from .service import ServiceConfig, serve
from .store import embeddings_to_bytes, load_corpus, read_embeddings, write_embeddings

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage to 1
        raise _UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _variant_spec(text: str) -> str:
    if text == "clip" or text == "fused" or text.startswith("knn@"):
        if text.startswith("knn@"):
            try:
                int(text[4:])
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad variant {text!r}")
        return text
    raise argparse.ArgumentTypeError(
        f"bad variant {text!r}; expected clip, fused, or knn@K"
    )


def _add_fusion_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file mirroring flag names")
    parser.add_argument("--k", type=int, default=None, help="neighbors to retrieve")
    parser.add_argument("--w1", type=float, default=None, help="pooled-component weight")
    parser.add_argument("--w2", type=float, default=None, help="caption-component weight")
    parser.add_argument(
        "--normalize-components",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="L2-normalize components before fusing (default: on)",
    )
    parser.add_argument(
        "--normalize-output",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="L2-normalize the fused prediction (default: on)",
    )


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return obj


def _resolved_fusion(args) -> FusionConfig:
    file_cfg = _load_config_file(getattr(args, "config", None))
    defaults = FusionConfig()

    def pick(flag_value, name, fallback):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(name, fallback)

    return FusionConfig(
        k=int(pick(args.k, "k", defaults.k)),
        w1=float(pick(args.w1, "w1", defaults.w1)),
        w2=float(pick(args.w2, "w2", defaults.w2)),
        normalize_components=bool(
            pick(args.normalize_components, "normalize_components", True)
        ),
        normalize_output=bool(pick(args.normalize_output, "normalize_output", True)),
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="promptknn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("build", help="filter raw prompts and emit an aligned corpus")
    p.add_argument("--prompts", required=True, help="raw prompts JSON-Lines")
    p.add_argument("--clip", required=True, help="CLIP text embedding file")
    p.add_argument("--sent", required=True, help="sentence embedding file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dedup-threshold", type=float, default=0.9)
    p.add_argument("--vocab-threshold", type=float, default=0.6)
    p.add_argument(
        "--vocab-mode",
        choices=[m.value for m in VocabMode],
        default=VocabMode.OFF.value,
    )
    p.add_argument("--vocab-terms", help="plain-text vocabulary, one term per line")
    p.add_argument("--term-list", help="terms aligned with --term-embeddings")
    p.add_argument("--term-embeddings", help="embedding file for --term-list")
    p.add_argument("--vocab-embeddings", help="vocabulary embedding file")
    p.add_argument("--min-prompt-chars", type=int, default=1)
    p.add_argument("--ascii-ratio", type=float, default=0.9)
    p.add_argument("--dedup-space", choices=["sent", "clip"], default="sent")
    p.add_argument("--provenance", default="")
    p.add_argument("--report", help="write the build report JSON here instead of stdout")
    p.set_defaults(handler=_cmd_build)

    p = sub.add_parser("index-check", help="validate a corpus manifest and its files")
    p.add_argument("--manifest", required=True)
    p.set_defaults(handler=_cmd_index_check)

    p = sub.add_parser("predict", help="batch predictions: image embeddings in, fused out")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images", required=True, help="query image embedding file")
    p.add_argument("--captions", help="optional caption sentence-embedding file")
    p.add_argument("--out", help="output embedding file (default: stdout)")
    _add_fusion_flags(p)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("eval", help="compare retrieval variants on a query set")
    p.add_argument("--manifest", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--captions")
    p.add_argument(
        "--variant",
        action="append",
        type=_variant_spec,
        help="clip, fused, or knn@K; repeatable (default: knn@10 knn@100"
        " plus clip and fused when captions are given)",
    )
    p.add_argument("--json-out", help="write the JSON summaries here instead of stdout")
    _add_fusion_flags(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("sweep", help="grid-evaluate k and w1 (w2 = 1 - w1)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--captions")
    p.add_argument("--k-values", type=_int_list, default=[1, 10, 100])
    p.add_argument("--w1-values", type=_float_list, default=[1.0])
    p.add_argument("--json-out")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("fixture", help="generate a deterministic synthetic fixture")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-clusters", type=int, default=32)
    p.add_argument("--prompts-per-cluster", type=int, default=64)
    p.add_argument("--n-queries", type=int, default=500)
    p.add_argument("--clip-dim", type=int, default=64)
    p.add_argument("--sent-dim", type=int, default=32)
    p.add_argument("--noise-sigma", type=float, default=0.35)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(handler=_cmd_fixture)

    p = sub.add_parser("serve", help="HTTP prediction service over a loaded corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--max-body-bytes", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None, help="request timeout seconds")
    _add_fusion_flags(p)
    p.set_defaults(handler=_cmd_serve)

    return parser


def _cmd_build(args) -> int:
    ids, prompts = read_raw_prompts(args.prompts)
    clip = read_embeddings(args.clip)
    sent = read_embeddings(args.sent)
    config = FilterConfig(
        dedup_threshold=args.dedup_threshold,
        vocab_threshold=args.vocab_threshold,
        vocab_mode=VocabMode(args.vocab_mode),
        min_prompt_chars=args.min_prompt_chars,
        ascii_alpha_ratio=args.ascii_ratio,
    )
    vocab_terms = load_vocab_terms(args.vocab_terms) if args.vocab_terms else None
    term_embeddings = None
    if args.term_list or args.term_embeddings:
        if not (args.term_list and args.term_embeddings):
            raise _UsageError("--term-list and --term-embeddings go together")
        term_embeddings = TermEmbeddings.load(args.term_list, args.term_embeddings)
    vocab_embeddings = (
        read_embeddings(args.vocab_embeddings) if args.vocab_embeddings else None
    )
    manifest_path, report = build_corpus(
        prompts,
        clip,
        sent,
        config,
        args.out_dir,
        prompt_ids=ids,
        vocab_terms=vocab_terms,
        term_embeddings=term_embeddings,
        vocab_embeddings=vocab_embeddings,
        dedup_space=args.dedup_space,
        provenance=args.provenance,
    )
    logger.info("manifest written to %s", manifest_path)
    text = write_report(report, args.report)
    if args.report is None:
        print(text)
    return 0


def _cmd_index_check(args) -> int:
    bundle = load_corpus(args.manifest)
    index = build_index(bundle)
    print(
        json.dumps(
            {
                "status": "ok",
                "count": index.count,
                "clip_dim": index.clip_dim,
                "sent_dim": index.sent_dim,
                "normalized_on_disk": bundle.manifest.normalized,
            },
            indent=2,
        )
    )
    return 0


def _cmd_predict(args) -> int:
    fusion = _resolved_fusion(args)
    index = build_index(load_corpus(args.manifest))
    images = read_embeddings(args.images)
    captions = read_embeddings(args.captions) if args.captions else None
    predictions = predict_batch(index, images, captions, fusion)
    if predictions:
        matrix = EmbeddingMatrix(np.stack([p.e_pred.values for p in predictions]))
    else:
        matrix = EmbeddingMatrix(np.empty((0, index.sent_dim), dtype=np.float32))
    if args.out:
        written = write_embeddings(matrix, args.out)
        logger.info("wrote %d bytes to %s", written, args.out)
    else:
        sys.stdout.buffer.write(embeddings_to_bytes(matrix))
    return 0


def _default_variants(fusion: FusionConfig, captions) -> list[Variant]:
    variants = [
        Variant(name="knn@10", config=FusionConfig(k=10)),
        Variant(name="knn@100", config=FusionConfig(k=100)),
    ]
    if captions is not None:
        variants.insert(0, Variant(name="clip", captions=captions, caption_only=True))
        variants.append(Variant(name="fused", config=fusion, captions=captions))
    return variants


def _parse_variants(specs, fusion: FusionConfig, captions) -> list[Variant]:
    variants = []
    for spec in specs:
        if spec == "clip":
            if captions is None:
                raise ValueError("variant 'clip' needs --captions")
            variants.append(Variant(name="clip", captions=captions, caption_only=True))
        elif spec == "fused":
            if captions is None:
                raise ValueError("variant 'fused' needs --captions")
            variants.append(Variant(name="fused", config=fusion, captions=captions))
        else:
            k = int(spec[4:])
            variants.append(Variant(name=spec, config=FusionConfig(k=k)))
    return variants


def _cmd_eval(args) -> int:
    fusion = _resolved_fusion(args)
    index = build_index(load_corpus(args.manifest))
    queries = read_embeddings(args.queries)
    truth = read_embeddings(args.truth)
    captions = read_embeddings(args.captions) if args.captions else None
    if args.variant:
        variants = _parse_variants(args.variant, fusion, captions)
    else:
        variants = _default_variants(fusion, captions)
    summaries = compare_variants(index, queries, truth, variants)
    print(render_table(summaries))
    payload = summaries_to_json(summaries)
    if args.json_out:
        Path(args.json_out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_sweep(args) -> int:
    index = build_index(load_corpus(args.manifest))
    queries = read_embeddings(args.queries)
    truth = read_embeddings(args.truth)
    captions = read_embeddings(args.captions) if args.captions else None
    summaries, best = sweep(
        index, queries, truth, args.k_values, args.w1_values, captions
    )
    print(render_table(summaries))
    payload = json.dumps(
        {
            "grid": [s.to_dict() for s in summaries],
            "best": best.to_dict(),
        },
        indent=2,
    )
    if args.json_out:
        Path(args.json_out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_fixture(args) -> int:
    spec = SyntheticFixtureSpec(
        n_clusters=args.n_clusters,
        prompts_per_cluster=args.prompts_per_cluster,
        n_queries=args.n_queries,
        clip_dim=args.clip_dim,
        sent_dim=args.sent_dim,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    paths = make_fixture(spec, args.out_dir)
    print(
        json.dumps(
            {
                "manifest": str(paths.manifest),
                "queries": str(paths.queries),
                "ground_truth": str(paths.ground_truth),
                "labels": str(paths.labels),
            },
            indent=2,
        )
    )
    return 0


def _cmd_serve(args) -> int:
    file_cfg = _load_config_file(args.config)
    defaults = ServiceConfig(manifest=args.manifest)

    def pick(flag_value, name, fallback):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(name, fallback)

    config = ServiceConfig(
        host=str(pick(args.host, "host", defaults.host)),
        port=int(pick(args.port, "port", defaults.port)),
        manifest=args.manifest,
        fusion=_resolved_fusion(args),
        max_body_bytes=int(
            pick(args.max_body_bytes, "max_body_bytes", defaults.max_body_bytes)
        ),
        request_timeout_s=float(
            pick(args.timeout, "request_timeout_s", defaults.request_timeout_s)
        ),
    )
    serve(config)
    return 0


def _configure_logging() -> None:
    requested = os.environ.get("PROMPTKNN_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(requested)
    if level is None:
        print(f"promptknn: unknown PROMPTKNN_LOG={requested!r}, using warn", file=sys.stderr)
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def cli_dispatch(argv: list[str]) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "handler", None) is None:
            raise _UsageError("a subcommand is required")
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"promptknn: error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"promptknn: error: {exc}", file=sys.stderr)
        return 1
    except IoFailureError as exc:
        print(f"promptknn: I/O error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"promptknn: I/O error: {exc}", file=sys.stderr)
        return 3
    except (PromptKnnError, ValueError) as exc:
        print(f"promptknn: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
