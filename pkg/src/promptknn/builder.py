"""Corpus construction: prompt cleaning, vocabulary filtering, near-duplicate
removal, and the aligned on-disk corpus they produce.

Stage order is clean -> vocab -> dedup. Vocabulary filtering edits prompt
texts (it drops individual terms), so it runs before similarity dedup; both
similarity stages operate on the row-aligned embeddings supplied with the raw
prompts. Dedup is a greedy forward pass in input order: a row survives iff
its maximum cosine to every previously kept row is below the threshold, which
makes the result deterministic and idempotent.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import EmbeddingMatrix
from .errors import (
    MalformedJsonLineError,
    MissingVocabularyError,
    RowCountMismatchError,
    ZeroVectorError,
)
from .store import (
    CorpusManifest,
    read_embeddings,
    write_embeddings,
    write_manifest,
    write_prompts_jsonl,
)

logger = logging.getLogger(__name__)

# Prompts whose entire trimmed text is one of these are data-poisoning
# artifacts of scraped corpora, not usable prompts.
_JUNK_LITERALS = frozenset({"NaN", "nan", "null"})


class VocabMode(str, Enum):
    OFF = "off"
    EXACT_MATCH = "exact_match"
    EMBEDDING_SIMILARITY = "embedding_similarity"


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds and modes for the corpus filters.

    ascii_alpha_ratio is the language heuristic: a prompt is kept only when
    at least this fraction of its alphabetic characters is in [A-Za-z].
    """

    dedup_threshold: float = 0.9
    vocab_threshold: float = 0.6
    vocab_mode: VocabMode = VocabMode.OFF
    min_prompt_chars: int = 1
    ascii_alpha_ratio: float = 0.9

    def __post_init__(self):
        for name in ("dedup_threshold", "vocab_threshold", "ascii_alpha_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.min_prompt_chars < 0:
            raise ValueError("min_prompt_chars must be >= 0")


@dataclass
class BuildReport:
    """Per-stage accounting; input_count = kept_count + all dropped counts."""

    input_count: int = 0
    kept_count: int = 0
    dropped_dedup: int = 0
    dropped_vocab: int = 0
    dropped_malformed: int = 0
    timings_s: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "dropped_dedup": self.dropped_dedup,
            "dropped_vocab": self.dropped_vocab,
            "dropped_malformed": self.dropped_malformed,
            "timings_s": {k: round(v, 6) for k, v in self.timings_s.items()},
        }


def _ascii_alpha_fraction(text: str) -> float:
    alpha = [c for c in text if c.isalpha()]
    if not alpha:
        return 1.0
    ascii_alpha = sum(1 for c in alpha if ("a" <= c <= "z") or ("A" <= c <= "Z"))
    return ascii_alpha / len(alpha)


def clean_prompts(prompts: Sequence[str], config: FilterConfig) -> list[int]:
    """Return indices of prompts that survive cleaning, in input order.

    Drops: empty/whitespace-only texts, texts shorter than min_prompt_chars
    after trimming, the junk literals ("NaN"/"nan"/"null"), and texts failing
    the ASCII-ratio language heuristic.
    """
    kept: list[int] = []
    for i, prompt in enumerate(prompts):
        trimmed = prompt.strip()
        if not trimmed or len(trimmed) < config.min_prompt_chars:
            continue
        if trimmed in _JUNK_LITERALS:
            continue
        if _ascii_alpha_fraction(trimmed) < config.ascii_alpha_ratio:
            continue
        kept.append(i)
    return kept


def dedup_by_similarity(
    prompts: Sequence[str], embeddings: EmbeddingMatrix, threshold: float
) -> list[int]:
    """Greedy forward near-duplicate filter; returns kept row indices (sorted).

    Row i is kept iff its max cosine similarity to all previously kept rows is
    strictly below the threshold, so after filtering every pairwise similarity
    among survivors is < threshold.
    """
    if len(prompts) != embeddings.rows:
        raise RowCountMismatchError(
            f"{len(prompts)} prompts vs {embeddings.rows} embedding rows"
        )
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    n = embeddings.rows
    if n == 0:
        return []
    data = embeddings.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero_rows = np.nonzero(norms == 0.0)[0]
    if zero_rows.size:
        row = int(zero_rows[0])
        raise ZeroVectorError(f"row {row} has zero norm", row=row)
    unit = data / norms[:, None]

    kept: list[int] = []
    kept_block = np.empty_like(unit)
    for i in range(n):
        if kept:
            sims = kept_block[: len(kept)] @ unit[i]
            if float(sims.max()) >= threshold:
                continue
        kept_block[len(kept)] = unit[i]
        kept.append(i)
    return kept


@dataclass(frozen=True)
class TermEmbeddings:
    """Whitespace-level terms paired row-by-row with their embeddings.

    Lookup is case-folded; terms without an embedding cannot attest any
    similarity and are treated as below threshold.
    """

    terms: tuple[str, ...]
    matrix: EmbeddingMatrix

    def __post_init__(self):
        if len(self.terms) != self.matrix.rows:
            raise RowCountMismatchError(
                f"{len(self.terms)} terms vs {self.matrix.rows} embedding rows"
            )

    @classmethod
    def load(cls, terms_path: str | Path, embeddings_path: str | Path):
        terms = _read_term_list(terms_path)
        return cls(terms=tuple(terms), matrix=read_embeddings(embeddings_path))


def _read_term_list(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def load_vocab_terms(path: str | Path) -> frozenset[str]:
    """Plain-text vocabulary, one term per line, case-folded."""
    return frozenset(term.casefold() for term in _read_term_list(path))


def vocab_filter(
    prompts: Sequence[str],
    config: FilterConfig,
    vocab_terms: frozenset[str] | None = None,
    term_embeddings: TermEmbeddings | None = None,
    vocab_embeddings: EmbeddingMatrix | None = None,
) -> list[tuple[int, str]]:
    """Filter prompt terms against a vocabulary; returns (row, text) survivors.

    Terms are whitespace-split. exact_match drops terms absent from the
    case-folded vocabulary; embedding_similarity drops a term whose max cosine
    to every vocabulary embedding is below vocab_threshold. Prompts left empty
    lose their row entirely.
    """
    if config.vocab_mode is VocabMode.OFF:
        return [(i, prompt) for i, prompt in enumerate(prompts)]

    if config.vocab_mode is VocabMode.EXACT_MATCH:
        if vocab_terms is None:
            raise MissingVocabularyError(
                "exact_match vocabulary filtering needs a vocabulary term list"
            )
        keep_term = lambda term: term.casefold() in vocab_terms
    else:
        if term_embeddings is None or vocab_embeddings is None:
            raise MissingVocabularyError(
                "embedding_similarity filtering needs term and vocabulary embeddings"
            )
        keep_term = _embedding_term_filter(
            term_embeddings, vocab_embeddings, config.vocab_threshold
        )

    survivors: list[tuple[int, str]] = []
    for i, prompt in enumerate(prompts):
        kept_terms = [t for t in prompt.split() if keep_term(t)]
        if kept_terms:
            survivors.append((i, " ".join(kept_terms)))
    return survivors


def _embedding_term_filter(
    term_embeddings: TermEmbeddings,
    vocab_embeddings: EmbeddingMatrix,
    threshold: float,
):
    vocab = vocab_embeddings.data.astype(np.float64)
    vocab_norms = np.linalg.norm(vocab, axis=1)
    zero_rows = np.nonzero(vocab_norms == 0.0)[0]
    if zero_rows.size:
        row = int(zero_rows[0])
        raise ZeroVectorError(f"vocabulary embedding row {row} has zero norm", row=row)
    vocab_unit = vocab / vocab_norms[:, None]

    lookup: dict[str, int] = {}
    for row, term in enumerate(term_embeddings.terms):
        lookup.setdefault(term.casefold(), row)
    term_data = term_embeddings.matrix.data.astype(np.float64)
    cache: dict[str, bool] = {}

    def keep(term: str) -> bool:
        key = term.casefold()
        if key in cache:
            return cache[key]
        row = lookup.get(key)
        if row is None:
            verdict = False
        else:
            vec = term_data[row]
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise ZeroVectorError(f"term embedding row {row} has zero norm", row=row)
            verdict = float((vocab_unit @ (vec / norm)).max()) >= threshold
        cache[key] = verdict
        return verdict

    return keep


def build_corpus(
    prompts: Sequence[str],
    clip: EmbeddingMatrix,
    sent: EmbeddingMatrix,
    config: FilterConfig,
    out_dir: str | Path,
    prompt_ids: Sequence[int] | None = None,
    vocab_terms: frozenset[str] | None = None,
    term_embeddings: TermEmbeddings | None = None,
    vocab_embeddings: EmbeddingMatrix | None = None,
    dedup_space: str = "sent",
    provenance: str = "",
) -> tuple[Path, BuildReport]:
    """Run clean -> vocab -> dedup and emit an aligned corpus under out_dir.

    Returns (manifest path, report). The build is atomic: on failure any
    files already written are removed. dedup_space selects which embedding
    matrix the similarity filter compares ("sent" by default, "clip" allowed).
    """
    n = len(prompts)
    if clip.rows != n or sent.rows != n:
        raise RowCountMismatchError(
            f"{n} prompts vs {clip.rows} clip rows vs {sent.rows} sentence rows"
        )
    if prompt_ids is None:
        prompt_ids = list(range(n))
    elif len(prompt_ids) != n:
        raise RowCountMismatchError(
            f"{len(prompt_ids)} prompt ids vs {n} prompts"
        )
    if dedup_space not in ("sent", "clip"):
        raise ValueError(f"dedup_space must be 'sent' or 'clip', got {dedup_space!r}")

    report = BuildReport(input_count=n)

    t0 = time.perf_counter()
    cleaned_rows = clean_prompts(prompts, config)
    report.timings_s["clean"] = time.perf_counter() - t0
    report.dropped_malformed = n - len(cleaned_rows)

    t0 = time.perf_counter()
    vocab_survivors = vocab_filter(
        [prompts[i] for i in cleaned_rows],
        config,
        vocab_terms=vocab_terms,
        term_embeddings=term_embeddings,
        vocab_embeddings=vocab_embeddings,
    )
    report.timings_s["vocab"] = time.perf_counter() - t0
    report.dropped_vocab = len(cleaned_rows) - len(vocab_survivors)
    rows_after_vocab = [cleaned_rows[j] for j, _ in vocab_survivors]
    texts_after_vocab = [text for _, text in vocab_survivors]

    t0 = time.perf_counter()
    dedup_source = sent if dedup_space == "sent" else clip
    submatrix = EmbeddingMatrix(dedup_source.data[rows_after_vocab])
    kept_local = dedup_by_similarity(texts_after_vocab, submatrix, config.dedup_threshold)
    report.timings_s["dedup"] = time.perf_counter() - t0
    report.dropped_dedup = len(rows_after_vocab) - len(kept_local)

    final_rows = [rows_after_vocab[j] for j in kept_local]
    final_texts = [texts_after_vocab[j] for j in kept_local]
    final_ids = [int(prompt_ids[i]) for i in final_rows]
    report.kept_count = len(final_rows)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    t0 = time.perf_counter()
    try:
        clip_out = EmbeddingMatrix(clip.data[final_rows])
        sent_out = EmbeddingMatrix(sent.data[final_rows])
        clip_path = out_dir / "clip.emb"
        sent_path = out_dir / "sent.emb"
        prompts_path = out_dir / "prompts.jsonl"
        manifest_path = out_dir / "manifest.json"
        for path, writer in (
            (clip_path, lambda p: write_embeddings(clip_out, p)),
            (sent_path, lambda p: write_embeddings(sent_out, p)),
            (prompts_path, lambda p: write_prompts_jsonl(final_ids, final_texts, p)),
        ):
            created.append(path)
            writer(path)
        manifest = CorpusManifest(
            clip_embeddings=clip_path.name,
            sent_embeddings=sent_path.name,
            prompts=prompts_path.name,
            clip_dim=clip.dim,
            sent_dim=sent.dim,
            count=len(final_rows),
            normalized=False,
            provenance=provenance,
        )
        created.append(manifest_path)
        write_manifest(manifest, manifest_path)
    except BaseException:
        for path in created:
            path.unlink(missing_ok=True)
        raise
    report.timings_s["write"] = time.perf_counter() - t0
    logger.info(
        "built corpus: %d in, %d kept (%d malformed, %d vocab, %d dedup)",
        report.input_count,
        report.kept_count,
        report.dropped_malformed,
        report.dropped_vocab,
        report.dropped_dedup,
    )
    return manifest_path, report


def read_raw_prompts(path: str | Path) -> tuple[list[int], list[str]]:
    """Read raw ingestion prompts (JSON-Lines).

    Laxer than the corpus reader: empty prompt strings are data for the
    cleaning stage to drop, not errors. Structural junk (blank lines, invalid
    JSON, wrong field types) is still malformed. "id" defaults to the row
    index when absent.
    """
    ids: list[int] = []
    prompts: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise MalformedJsonLineError("blank line", lineno)
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedJsonLineError(f"invalid JSON: {exc}", lineno) from exc
            if not isinstance(obj, dict):
                raise MalformedJsonLineError("record is not a JSON object", lineno)
            prompt = obj.get("prompt")
            if not isinstance(prompt, str):
                raise MalformedJsonLineError('"prompt" must be a string', lineno)
            rec_id = obj.get("id", len(ids))
            if not isinstance(rec_id, int) or isinstance(rec_id, bool):
                raise MalformedJsonLineError('"id" must be an integer', lineno)
            ids.append(rec_id)
            prompts.append(prompt)
    return ids, prompts


def write_report(report: BuildReport, destination: str | Path | None) -> str:
    """Serialize the report as JSON; writes to a file when a path is given."""
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if destination is not None:
        Path(destination).write_text(text + "\n", encoding="utf-8")
    return text
