"""Minimal HTTP prediction service over an immutable loaded index.

One index is loaded before the socket binds and never mutated afterwards, so
request handling needs no locking. The JSON wire format carries single
vectors (debuggability beats density at that size); batch traffic belongs to
the CLI file path.

Endpoints:
    GET  /healthz     -> {"status": "ok", "corpus_count": N, "clip_dim": D}
    POST /v1/predict  -> {"e_pred": [...], "neighbors": [{"row", "score", "prompt"}]}

Client faults map to 400 (malformed JSON / wrong dimension), 413 (oversized
body), and 422 (non-finite values); they never surface as 500.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .core import EmbeddingVector
from .errors import PromptKnnError
from .index import CorpusIndex, build_index
from .predictor import FusionConfig, predict
from .store import load_corpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    manifest: str | Path | None = None
    fusion: FusionConfig = field(default_factory=FusionConfig)
    max_body_bytes: int = 4 * 1024 * 1024
    request_timeout_s: float = 30.0

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port must be in [1, 65535], got {self.port}")
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        if self.request_timeout_s <= 0:
            raise ValueError("request_timeout_s must be positive")


class _ClientFault(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _require_vector(payload: dict, key: str, expected_dim: int) -> EmbeddingVector:
    raw = payload.get(key)
    if not isinstance(raw, list) or not raw:
        raise _ClientFault(400, f'"{key}" must be a non-empty array of numbers')
    values = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise _ClientFault(400, f'"{key}" must contain only numbers')
        if not math.isfinite(x):
            raise _ClientFault(422, f'"{key}" contains non-finite values')
        values.append(float(x))
    if len(values) != expected_dim:
        raise _ClientFault(
            400, f'"{key}" has dimension {len(values)}, expected {expected_dim}'
        )
    return EmbeddingVector(values)


def _request_config(payload: dict, base: FusionConfig) -> FusionConfig:
    overrides = {}
    k = payload.get("k")
    if k is not None:
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise _ClientFault(400, '"k" must be a positive integer')
        overrides["k"] = k
    for key in ("w1", "w2"):
        w = payload.get(key)
        if w is not None:
            if isinstance(w, bool) or not isinstance(w, (int, float)):
                raise _ClientFault(400, f'"{key}" must be a number')
            if not math.isfinite(w):
                raise _ClientFault(422, f'"{key}" is non-finite')
            overrides[key] = float(w)
    try:
        return replace(base, **overrides) if overrides else base
    except ValueError as exc:
        raise _ClientFault(400, str(exc)) from exc


def create_app(index: CorpusIndex, config: ServiceConfig | None = None) -> FastAPI:
    """Build the FastAPI app around an already-built index."""
    config = config or ServiceConfig()
    app = FastAPI(title="promptknn", docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def _timeout(request: Request, call_next):
        try:
            return await asyncio.wait_for(
                call_next(request), timeout=config.request_timeout_s
            )
        except asyncio.TimeoutError:
            return JSONResponse({"error": "request timed out"}, status_code=504)

    @app.get("/healthz")
    def healthz():
        return JSONResponse(
            {
                "status": "ok",
                "corpus_count": index.count,
                "clip_dim": index.clip_dim,
            }
        )

    @app.post("/v1/predict")
    async def predict_endpoint(request: Request):
        content_length = request.headers.get("content-length")
        if content_length is not None:
            try:
                if int(content_length) > config.max_body_bytes:
                    return JSONResponse(
                        {"error": "request body too large"}, status_code=413
                    )
            except ValueError:
                return JSONResponse({"error": "bad Content-Length"}, status_code=400)
        body = await request.body()
        if len(body) > config.max_body_bytes:
            return JSONResponse({"error": "request body too large"}, status_code=413)
        return _predict_sync(body)

    def _predict_sync(body: bytes) -> JSONResponse:
        try:
            payload = json.loads(body)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return JSONResponse({"error": "malformed JSON body"}, status_code=400)
        if not isinstance(payload, dict):
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        try:
            image = _require_vector(payload, "image_embedding", index.clip_dim)
            caption = None
            if payload.get("caption_embedding") is not None:
                caption = _require_vector(
                    payload, "caption_embedding", index.sent_dim
                )
            fusion = _request_config(payload, config.fusion)
            prediction = predict(index, image, caption, fusion)
        except _ClientFault as fault:
            return JSONResponse({"error": fault.message}, status_code=fault.status)
        except PromptKnnError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        neighbors = [
            {"row": nb.row, "score": nb.score, "prompt": index.prompts[nb.row]}
            for nb in prediction.neighbors.neighbors
        ]
        return JSONResponse(
            {
                "e_pred": [float(x) for x in prediction.e_pred.values],
                "neighbors": neighbors,
            }
        )

    return app


def serve(config: ServiceConfig) -> None:
    """Load the corpus, build the index, then bind and serve until shutdown.

    Loading happens before the socket binds so a broken corpus never looks
    like a live service. Uvicorn handles SIGINT/SIGTERM gracefully,
    completing in-flight requests.
    """
    import uvicorn

    if config.manifest is None:
        raise ValueError("ServiceConfig.manifest is required to serve")
    bundle = load_corpus(config.manifest)
    index = build_index(bundle)
    app = create_app(index, config)
    logger.info(
        "serving corpus of %d rows (clip_dim=%d) on %s:%d",
        index.count,
        index.clip_dim,
        config.host,
        config.port,
    )
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
