"""HTTP scoring service for the editor UI and other clients.

One process serves scoring, word-stat explanations, similar-tweet
lookup, and transcript analysis over immutable artifacts loaded at
startup from a TOML config ({diversity_model, alignment_model,
word_stats, index, corpus, bind_addr}; the BRIDGECRAFT_CONFIG env var
overrides the path). Handlers never mutate state, so identical requests
return byte-identical bodies.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from bridgecraft.corpus import TweetRecord, read_corpus_jsonl
from bridgecraft.explain import (
    DEFAULT_K,
    EmbeddingIndex,
    WordStatsTable,
    analyze_transcript,
    highlight,
    similar_tweets,
    word_stats_from_csv,
)
from bridgecraft.models.artifact import Predictor

logger = logging.getLogger("bridgecraft.access")

MAX_SCORE_LINES = 100
BRIDGINESS_RANGE = (0.0, 1.0)
ALIGNMENT_RANGE = (-2.0, 2.0)
CONFIG_ENV = "BRIDGECRAFT_CONFIG"


def clamp(value: float, bounds: tuple[float, float]) -> float:
    return min(max(value, bounds[0]), bounds[1])


def _round6(value: float) -> float:
    return round(float(value), 6)


@dataclass
class ServiceState:
    diversity: Predictor | None = None
    alignment: Predictor | None = None
    word_stats: WordStatsTable | None = None
    index: EmbeddingIndex | None = None
    records: dict[str, TweetRecord] | None = None

    @property
    def ready(self) -> bool:
        return self.diversity is not None and self.alignment is not None


def load_config(path: str | Path | None = None) -> dict:
    """Read the service TOML config; BRIDGECRAFT_CONFIG wins over the arg."""
    env_path = os.environ.get(CONFIG_ENV)
    config_path = Path(env_path or path or "bridgecraft.toml")
    with open(config_path, "rb") as fh:
        return tomllib.load(fh)


def load_state(config: dict) -> ServiceState:
    state = ServiceState()
    base = Path(config.get("workdir", "."))

    def resolve(key: str) -> Path | None:
        value = config.get(key)
        return None if value is None else base / value

    if resolve("diversity_model"):
        state.diversity = Predictor.load(resolve("diversity_model"))
        if state.diversity.target != "diversity":
            raise ValueError("diversity_model artifact targets the wrong quantity")
    if resolve("alignment_model"):
        state.alignment = Predictor.load(resolve("alignment_model"))
        if state.alignment.target != "alignment":
            raise ValueError("alignment_model artifact targets the wrong quantity")
    if resolve("word_stats"):
        state.word_stats = word_stats_from_csv(
            resolve("word_stats").read_text(encoding="utf-8")
        )
    if resolve("index"):
        state.index = EmbeddingIndex.load(resolve("index"))
    if resolve("corpus"):
        state.records = {r.tweet_id: r for r in read_corpus_jsonl(resolve("corpus"))}
    return state


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="bridgecraft", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return _error(400, "malformed request body")

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        logger.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "duration_ms": round((time.perf_counter() - start) * 1000, 3),
                },
                sort_keys=True,
            )
        )
        return response

    @app.get("/health")
    async def health():
        hashes: dict[str, Any] = {}
        if state.diversity is not None:
            hashes["diversity"] = state.diversity.hash
        if state.alignment is not None:
            hashes["alignment"] = state.alignment.hash
        if state.index is not None:
            hashes["index_model"] = state.index.model_hash
        return {"status": "ready" if state.ready else "loading", "model_hashes": hashes}

    @app.post("/score")
    async def score(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or not isinstance(body.get("texts"), list):
            return _error(400, "body must be {\"texts\": [...]}")
        texts = body["texts"]
        if not all(isinstance(t, str) for t in texts):
            return _error(400, "texts must be strings")
        if not texts:
            return _error(400, "empty body: no texts given")
        if len(texts) > MAX_SCORE_LINES:
            return _error(413, f"at most {MAX_SCORE_LINES} lines per request")
        if not state.ready:
            return _error(503, "models not loaded")
        lines = [t for t in texts if t.strip()]
        if not lines:
            return {"scores": []}
        bridginess = state.diversity.predict_texts(lines)
        alignment = state.alignment.predict_texts(lines)
        return {
            "scores": [
                {
                    "text": text,
                    "bridginess": _round6(clamp(b, BRIDGINESS_RANGE)),
                    "alignment": _round6(clamp(a, ALIGNMENT_RANGE)),
                    "model_hash": state.diversity.hash,
                }
                for text, b, a in zip(lines, bridginess, alignment)
            ]
        }

    @app.post("/explain")
    async def explain(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            return _error(400, "body must be {\"text\": ...}")
        if state.word_stats is None:
            return _error(503, "word statistics not loaded")
        spans = highlight(body["text"], state.word_stats)
        words = []
        for span in spans:
            stats = state.word_stats.get(span.word)
            words.append(
                {
                    "word": span.word,
                    "side": span.side,
                    "intensity": _round6(span.intensity),
                    "stats": None
                    if stats is None
                    else {
                        "p_left": _round6(stats.p_left),
                        "p_right": _round6(stats.p_right),
                        "ratio": _round6(stats.ratio),
                        "outlet_counts": dict(stats.outlet_counts),
                    },
                }
            )
        return {"words": words}

    @app.post("/similar")
    async def similar(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            return _error(400, "body must be {\"text\": ..., \"k\"?: int}")
        k = body.get("k", DEFAULT_K)
        if not isinstance(k, int) or k < 1:
            return _error(400, "k must be a positive integer")
        if state.index is None or state.records is None or state.diversity is None:
            return _error(503, "similarity index not loaded")
        if state.diversity.neural_model is None:
            return _error(503, "similarity requires a neural diversity model")
        query = state.diversity.embed_texts([body["text"]])[0]
        neighbors = similar_tweets(state.index, state.records, query, k=k)
        for n in neighbors:
            n["bridginess"] = _round6(n["bridginess"])
            n["similarity"] = _round6(n["similarity"])
        return {"neighbors": neighbors}

    @app.post("/transcript")
    async def transcript(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or not isinstance(body.get("segments"), list):
            return _error(400, "body must be {\"segments\": [...]}")
        if not state.ready:
            return _error(503, "models not loaded")
        result = analyze_transcript(body["segments"], state.diversity, state.alignment)
        return {
            "segments": [
                {
                    "index": seg.index,
                    "speaker": seg.speaker,
                    "text": seg.text,
                    "bridginess": _round6(clamp(seg.bridginess, BRIDGINESS_RANGE)),
                    "alignment": _round6(clamp(seg.alignment, ALIGNMENT_RANGE)),
                }
                for seg in result.segments
            ],
            "warnings": result.warnings,
        }

    return app


async def _json_body(request: Request):
    try:
        return await request.json()
    except Exception:
        return None


def serve(config_path: str | None, host: str | None = None, port: int | None = None) -> None:
    """Load artifacts per config and run uvicorn (blocking)."""
    import uvicorn

    config = load_config(config_path)
    state = load_state(config)
    bind = config.get("bind_addr", "127.0.0.1:8000")
    bind_host, _, bind_port = bind.partition(":")
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    uvicorn.run(
        create_app(state),
        host=host or bind_host,
        port=port or int(bind_port or 8000),
        log_level="warning",
    )
