"""Asset selection over a local index.

Similarity models are abstracted behind :class:`SimilarityProvider`. The
bundled :class:`StubProvider` derives pseudo-embeddings from a hash of the
text so the whole pipeline runs (and is tested) without any ML stack.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import ProviderError, SchemaError

RETRIEVAL_THRESHOLD = 27.0
TOP_K = 10
EMBED_DTYPE = "<f8"


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    name: str
    dims: tuple[float, float, float]
    image_embedding: np.ndarray = field(compare=False, repr=False)
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        emb = np.asarray(self.image_embedding, dtype=np.float64)
        object.__setattr__(self, "image_embedding", emb)
        if emb.ndim != 1 or emb.size == 0:
            raise ValueError(f"{self.asset_id}: embedding must be a non-empty vector")
        norm = math.sqrt(exact_dot(emb, emb))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"{self.asset_id}: embedding norm {norm:.9f} is not 1")
        if not all(d > 0 for d in self.dims):
            raise ValueError(f"{self.asset_id}: dims must be positive")


class SimilarityProvider(Protocol):
    def text_image_score(self, query: str, image_embedding: np.ndarray) -> float: ...

    def text_text_score(self, query: str, name: str) -> float: ...


def exact_dot(a: np.ndarray, b: np.ndarray) -> float:
    """Correctly rounded dot product; unlike BLAS it is identical on every platform."""
    return math.fsum((np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64)).tolist())


def unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / math.sqrt(exact_dot(v, v))


def text_embedding(text: str, dim: int) -> np.ndarray:
    """Deterministic unit vector seeded from the SHA-256 of ``text``."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
    return unit(np.random.default_rng(seed).standard_normal(dim))


class StubProvider:
    """Hash-based stand-in for CLIP / Sentence-BERT.

    Both scores are ``scale * cosine``; with the default scale the image
    score sits on a CLIP-logit-like range where a threshold of 27 is
    meaningful.
    """

    def __init__(self, dim: int = 16, image_scale: float = 100.0, text_scale: float = 10.0):
        self.dim = dim
        self.image_scale = image_scale
        self.text_scale = text_scale

    def embed(self, text: str) -> np.ndarray:
        return text_embedding(text, self.dim)

    def text_image_score(self, query: str, image_embedding: np.ndarray) -> float:
        if image_embedding.shape != (self.dim,):
            raise ProviderError(f"embedding dimension {image_embedding.shape} != ({self.dim},)")
        return self.image_scale * exact_dot(self.embed(query), image_embedding)

    def text_text_score(self, query: str, name: str) -> float:
        return self.text_scale * exact_dot(self.embed(query), self.embed(name))


@dataclass(frozen=True)
class ScoredAsset:
    asset_id: str
    score: float
    image_score: float = math.nan
    text_score: float = math.nan


def score_assets(
    query: str,
    index: Sequence[AssetRecord],
    provider: SimilarityProvider,
    weights: tuple[float, float] = (1.0, 1.0),
) -> list[ScoredAsset]:
    """Combined score per asset, best first; ties go to the smaller asset_id."""
    if not query:
        raise ValueError("query must be non-empty")
    wi, wt = weights
    out = []
    for rec in index:
        try:
            si = float(provider.text_image_score(query, rec.image_embedding))
            st = float(provider.text_text_score(query, rec.name))
        except ProviderError as exc:
            raise ProviderError(f"{rec.asset_id}: {exc}") from exc
        if not (math.isfinite(si) and math.isfinite(st)):
            raise ProviderError(f"{rec.asset_id}: provider returned a non-finite score")
        out.append(ScoredAsset(rec.asset_id, wi * si + wt * st, si, st))
    out.sort(key=lambda s: (-s.score, s.asset_id))
    return out


def candidate_set(
    scored: Sequence[ScoredAsset | tuple[str, float]],
    threshold: float = RETRIEVAL_THRESHOLD,
    top_k: int = TOP_K,
    threshold_target: str = "combined",
) -> list[str]:
    """Asset ids in the top ``top_k`` whose gated score reaches ``threshold``."""
    if threshold_target not in ("combined", "image"):
        raise ValueError(f"threshold_target must be 'combined' or 'image', got {threshold_target!r}")
    out = []
    for item in list(scored)[:top_k]:
        if isinstance(item, ScoredAsset):
            aid = item.asset_id
            gate = item.image_score if threshold_target == "image" else item.score
        else:
            if threshold_target == "image":
                raise ValueError("image threshold needs ScoredAsset entries")
            aid, gate = item
        if gate >= threshold:
            out.append(aid)
    return out


def select_asset(
    scored: Sequence[ScoredAsset | tuple[str, float]],
    threshold: float = RETRIEVAL_THRESHOLD,
    top_k: int = TOP_K,
    seed: int = 0,
    threshold_target: str = "combined",
) -> str | None:
    cands = candidate_set(scored, threshold, top_k, threshold_target)
    if not cands:
        return None
    return cands[random.Random(seed).randrange(len(cands))]


# -- index file --------------------------------------------------------------


def encode_embedding(vec: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vec, dtype=EMBED_DTYPE).tobytes()).decode("ascii")


def decode_embedding(text: str) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    if len(raw) % 8:
        raise ValueError("embedding byte length is not a multiple of 8")
    return np.frombuffer(raw, dtype=EMBED_DTYPE).astype(np.float64)


def record_to_line(rec: AssetRecord) -> str:
    return json.dumps(
        {
            "id": rec.asset_id,
            "name": rec.name,
            "dims": list(rec.dims),
            "embedding": encode_embedding(rec.image_embedding),
            "tags": list(rec.tags),
        },
        ensure_ascii=False,
    )


def dump_index(records: Iterable[AssetRecord]) -> str:
    return "".join(record_to_line(r) + "\n" for r in records)


def load_index(text: str) -> list[AssetRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            out.append(
                AssetRecord(
                    asset_id=str(d["id"]),
                    name=str(d["name"]),
                    dims=tuple(float(v) for v in d["dims"]),
                    image_embedding=decode_embedding(d["embedding"]),
                    tags=tuple(str(t) for t in d.get("tags", [])),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise SchemaError(f"asset index line {lineno}: {exc}") from None
    return out
