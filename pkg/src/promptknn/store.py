"""Binary embedding files, the corpus manifest, and corpus loading.

Embedding file layout (little-endian, 36-byte header, bit-exact contract):

    offset  size  field
    0       8     magic  = ASCII "PKNNEMB1"
    8       4     dim    = uint32
    12      8     rows   = uint64
    20      1     dtype  = uint8, 1 = float32 little-endian
    21      15    reserved, must be zero
    36      -     payload: rows * dim float32 values, row-major

A corpus is a JSON manifest binding two embedding files (CLIP text space and
sentence space) to a JSON-Lines prompts file; the three are paired purely by
row index.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EmbeddingMatrix
from .errors import (
    AllocationCapExceededError,
    BadDtypeError,
    BadHeaderError,
    BadMagicError,
    CountMismatchError,
    DimMismatchError,
    IoFailureError,
    MalformedJsonLineError,
    ManifestError,
    NonFinitePayloadError,
    TruncatedFileError,
)

MAGIC = b"PKNNEMB1"
DTYPE_FLOAT32 = 1
HEADER = struct.Struct("<8sIQB15s")
HEADER_SIZE = HEADER.size  # 36
DEFAULT_ALLOCATION_CAP = 8 * 1024**3  # bytes of payload a header may request

assert HEADER_SIZE == 36


def embeddings_to_bytes(matrix: EmbeddingMatrix) -> bytes:
    """Serialize a matrix to the binary format above (header + payload)."""
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    header = HEADER.pack(MAGIC, matrix.dim, matrix.rows, DTYPE_FLOAT32, b"\x00" * 15)
    return header + payload


def write_embeddings(matrix: EmbeddingMatrix, destination: str | Path) -> int:
    """Write a matrix in the binary format above; returns bytes written.

    Writing the same matrix twice produces byte-identical files.
    """
    blob = embeddings_to_bytes(matrix)
    try:
        with open(destination, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoFailureError(f"cannot write {destination}: {exc}") from exc
    return len(blob)


def read_embeddings(
    source: str | Path, allocation_cap: int = DEFAULT_ALLOCATION_CAP
) -> EmbeddingMatrix:
    """Read and fully validate an embedding file.

    The header is checked before any payload-sized allocation happens, so a
    corrupt header cannot make the reader allocate more than allocation_cap.
    """
    try:
        with open(source, "rb") as fh:
            raw_header = fh.read(HEADER_SIZE)
            if len(raw_header) < HEADER_SIZE:
                raise TruncatedFileError(
                    f"{source}: file shorter than the {HEADER_SIZE}-byte header"
                )
            magic, dim, rows, dtype_code, reserved = HEADER.unpack(raw_header)
            if magic != MAGIC:
                raise BadMagicError(f"{source}: bad magic {magic!r}")
            if dtype_code != DTYPE_FLOAT32:
                raise BadDtypeError(f"{source}: unsupported dtype code {dtype_code}")
            if reserved != b"\x00" * 15:
                raise BadHeaderError(f"{source}: reserved header bytes not zero")
            if dim < 1:
                raise BadHeaderError(f"{source}: dim must be >= 1, got {dim}")
            payload_size = rows * dim * 4
            if payload_size > allocation_cap:
                raise AllocationCapExceededError(
                    f"{source}: header promises {payload_size} payload bytes, "
                    f"cap is {allocation_cap}"
                )
            expected = HEADER_SIZE + payload_size
            actual = os.fstat(fh.fileno()).st_size
            if actual != expected:
                raise TruncatedFileError(
                    f"{source}: header promises {expected} bytes, file has {actual}"
                )
            payload = fh.read(payload_size)
    except OSError as exc:
        raise IoFailureError(f"cannot read {source}: {exc}") from exc
    if len(payload) != payload_size:
        raise TruncatedFileError(f"{source}: short read of payload")
    arr = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    if not np.all(np.isfinite(arr)):
        raise NonFinitePayloadError(f"{source}: payload contains NaN or Inf")
    return EmbeddingMatrix(arr)


@dataclass(frozen=True)
class CorpusManifest:
    """JSON manifest binding the corpus files together."""

    clip_embeddings: str
    sent_embeddings: str
    prompts: str
    clip_dim: int
    sent_dim: int
    count: int
    normalized: bool
    provenance: str = ""
    schema_version: int = 1

    _REQUIRED = (
        "clip_embeddings",
        "sent_embeddings",
        "prompts",
        "clip_dim",
        "sent_dim",
        "count",
        "normalized",
    )

    @classmethod
    def from_dict(cls, obj: dict) -> "CorpusManifest":
        if not isinstance(obj, dict):
            raise ManifestError("manifest must be a JSON object")
        missing = [key for key in cls._REQUIRED if key not in obj]
        if missing:
            raise ManifestError(f"manifest missing fields: {', '.join(missing)}")
        version = obj.get("schema_version", 1)
        if version != 1:
            raise ManifestError(f"unsupported schema_version {version}")
        return cls(
            clip_embeddings=str(obj["clip_embeddings"]),
            sent_embeddings=str(obj["sent_embeddings"]),
            prompts=str(obj["prompts"]),
            clip_dim=int(obj["clip_dim"]),
            sent_dim=int(obj["sent_dim"]),
            count=int(obj["count"]),
            normalized=bool(obj["normalized"]),
            provenance=str(obj.get("provenance", "")),
            schema_version=1,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "clip_embeddings": self.clip_embeddings,
            "sent_embeddings": self.sent_embeddings,
            "prompts": self.prompts,
            "clip_dim": self.clip_dim,
            "sent_dim": self.sent_dim,
            "count": self.count,
            "normalized": self.normalized,
            "provenance": self.provenance,
        }


def write_manifest(manifest: CorpusManifest, destination: str | Path) -> None:
    try:
        with open(destination, "w", encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {destination}: {exc}") from exc


def read_prompts_jsonl(source: str | Path) -> tuple[list[int], list[str]]:
    """Read a prompts JSON-Lines file: one {"id": int, "prompt": str} per line.

    Extra fields are ignored; blank lines, bad JSON, wrong field types, and
    prompts that are empty after trimming are all malformed (reported with the
    1-based line number).
    """
    ids: list[int] = []
    prompts: list[str] = []
    try:
        with open(source, "r", encoding="utf-8") as fh:
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
                rec_id = obj.get("id")
                prompt = obj.get("prompt")
                if not isinstance(rec_id, int) or isinstance(rec_id, bool):
                    raise MalformedJsonLineError('"id" must be an integer', lineno)
                if not isinstance(prompt, str):
                    raise MalformedJsonLineError('"prompt" must be a string', lineno)
                if not prompt.strip():
                    raise MalformedJsonLineError("prompt is empty after trimming", lineno)
                ids.append(rec_id)
                prompts.append(prompt)
    except OSError as exc:
        raise IoFailureError(f"cannot read {source}: {exc}") from exc
    return ids, prompts


def write_prompts_jsonl(
    ids: list[int], prompts: list[str], destination: str | Path
) -> None:
    try:
        with open(destination, "w", encoding="utf-8") as fh:
            for rec_id, prompt in zip(ids, prompts):
                fh.write(json.dumps({"id": rec_id, "prompt": prompt}, ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {destination}: {exc}") from exc


@dataclass(frozen=True)
class CorpusBundle:
    """A fully loaded, cross-checked corpus: matrices + prompts + manifest."""

    manifest: CorpusManifest
    clip: EmbeddingMatrix
    sent: EmbeddingMatrix
    prompt_ids: tuple[int, ...]
    prompts: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.prompts)


def load_corpus(
    manifest_path: str | Path, allocation_cap: int = DEFAULT_ALLOCATION_CAP
) -> CorpusBundle:
    """Load a corpus, enforcing all cross-file count and dim consistency.

    Succeeds iff clip rows = sent rows = prompt count = manifest count and
    both embedding dims match the manifest.
    """
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{manifest_path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise IoFailureError(f"cannot read {manifest_path}: {exc}") from exc
    manifest = CorpusManifest.from_dict(obj)

    base = manifest_path.parent
    clip_path = base / manifest.clip_embeddings
    sent_path = base / manifest.sent_embeddings
    prompts_path = base / manifest.prompts

    clip = read_embeddings(clip_path, allocation_cap)
    sent = read_embeddings(sent_path, allocation_cap)
    prompt_ids, prompts = read_prompts_jsonl(prompts_path)

    for name, rows in (
        (f"clip embeddings file '{manifest.clip_embeddings}'", clip.rows),
        (f"sentence embeddings file '{manifest.sent_embeddings}'", sent.rows),
        (f"prompts file '{manifest.prompts}'", len(prompts)),
    ):
        if rows != manifest.count:
            raise CountMismatchError(
                f"{name} has {rows} rows, manifest count is {manifest.count}"
            )
    if clip.dim != manifest.clip_dim:
        raise DimMismatchError(
            f"clip embeddings dim {clip.dim} != manifest clip_dim {manifest.clip_dim}"
        )
    if sent.dim != manifest.sent_dim:
        raise DimMismatchError(
            f"sentence embeddings dim {sent.dim} != manifest sent_dim {manifest.sent_dim}"
        )
    return CorpusBundle(
        manifest=manifest,
        clip=clip,
        sent=sent,
        prompt_ids=tuple(prompt_ids),
        prompts=tuple(prompts),
    )
