"""Reward scoring backends: a deterministic toy linear model and a remote
HTTP inference client, both mapping (criteria_prompt, task_prompt, response)
to a scalar reward.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence, Union

import httpx
import numpy as np

from themis.records import InvariantViolation, ThemisError
from themis.filtering import normalize_tokens

FEATURE_DIM = 1 << 16
FEATURE_SPACE_VERSION = "bigram-crc32/1"

ENDPOINT_ENV = "THEMIS_SCORER_ENDPOINT"
TOKEN_ENV = "THEMIS_SCORER_TOKEN"


class EndpointUnreachable(ThemisError):
    pass


class NonFiniteReward(ThemisError):
    pass


class RequestFailed(ThemisError):
    """Remote endpoint returned a non-retryable client error."""


@dataclass(frozen=True)
class ScoreRequest:
    task_prompt: str
    response: str
    criteria_prompt: str | None = None

    def __post_init__(self):
        if not self.task_prompt or not self.response:
            raise InvariantViolation("task_prompt and response must be non-empty")


@dataclass(frozen=True)
class ScoreResponse:
    reward: float
    model_id: str
    latency_ms: int = 0

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise NonFiniteReward(f"reward is {self.reward}")


class Scorer(Protocol):
    def score(self, req: ScoreRequest) -> ScoreResponse: ...


def extract_features(criteria_prompt: str | None, task_prompt: str, response: str) -> dict[int, float]:
    """Hashed bag of token bigrams over the concatenated inputs, plus a bias.

    Uses crc32, not the builtin hash, so feature indices are stable across
    processes. Index FEATURE_DIM is the always-on bias.
    """
    text = (criteria_prompt or "") + " " + task_prompt + " " + response
    tokens = normalize_tokens(text)
    features: dict[int, float] = {FEATURE_DIM: 1.0}
    for a, b in zip(tokens, tokens[1:]):
        idx = zlib.crc32(f"{a}\x1f{b}".encode("utf-8")) % FEATURE_DIM
        features[idx] = features.get(idx, 0.0) + 1.0
    return features


def dot(weights: np.ndarray, features: dict[int, float]) -> float:
    return float(sum(weights[i] * v for i, v in features.items()))


@dataclass
class ToyRewardModel:
    """Linear reward model over the hashed bigram feature space."""

    weights: np.ndarray = field(default_factory=lambda: np.zeros(FEATURE_DIM + 1))
    model_id: str = "toy-linear"
    seed: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (FEATURE_DIM + 1,):
            raise InvariantViolation(
                f"weights must have length {FEATURE_DIM + 1}, got {self.weights.shape}"
            )

    def features(self, req: ScoreRequest) -> dict[int, float]:
        return extract_features(req.criteria_prompt, req.task_prompt, req.response)

    def score(self, req: ScoreRequest) -> ScoreResponse:
        reward = dot(self.weights, self.features(req))
        if not math.isfinite(reward):
            raise NonFiniteReward(f"reward is {reward}")
        return ScoreResponse(reward=reward, model_id=self.model_id)

    def save(self, path: str | Path, cfg: dict | None = None) -> None:
        nonzero = np.nonzero(self.weights)[0]
        payload = {
            "model_id": self.model_id,
            "seed": self.seed,
            "feature_space": FEATURE_SPACE_VERSION,
            "dim": FEATURE_DIM + 1,
            "cfg": cfg or {},
            "indices": nonzero.tolist(),
            "values": self.weights[nonzero].tolist(),
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ToyRewardModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("feature_space") != FEATURE_SPACE_VERSION:
            raise InvariantViolation(
                f"incompatible feature space: {payload.get('feature_space')!r}"
            )
        weights = np.zeros(payload["dim"])
        weights[payload["indices"]] = payload["values"]
        return cls(weights=weights, model_id=payload.get("model_id", "toy-linear"),
                   seed=payload.get("seed", 0))


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    base_delay: float = 0.5
    max_delay: float = 8.0
    jitter: float = 0.25


class RemoteScorer:
    """HTTP client for a reward endpoint.

    Wire contract: POST {base}/v1/reward with JSON
    {"system": str|null, "prompt": str, "response": str}; the endpoint
    replies {"reward": number, "model_id": str}. 429 and 5xx responses are
    retried with exponential backoff and jitter; other 4xx are fatal.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        token: str | None = None,
        timeout: float = 30.0,
        retry: RetryPolicy = RetryPolicy(),
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise InvariantViolation(f"no scorer endpoint configured (set {ENDPOINT_ENV})")
        token = token if token is not None else os.environ.get(TOKEN_ENV)
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self.endpoint = endpoint.rstrip("/")
        self.retry = retry
        self._sleep = sleep
        self._rng = rng or random.Random()
        self._client = httpx.Client(
            base_url=self.endpoint, headers=headers, timeout=timeout, transport=transport
        )

    def close(self) -> None:
        self._client.close()

    def score(self, req: ScoreRequest) -> ScoreResponse:
        body = {
            "system": req.criteria_prompt,
            "prompt": req.task_prompt,
            "response": req.response,
        }
        last_error: Exception | None = None
        for attempt in range(self.retry.attempts):
            if attempt:
                delay = min(self.retry.base_delay * 2 ** (attempt - 1), self.retry.max_delay)
                delay += self._rng.uniform(0, self.retry.jitter)
                self._sleep(delay)
            started = time.monotonic()
            try:
                resp = self._client.post("/v1/reward", json=body)
            except httpx.TimeoutException as exc:
                last_error = exc
                continue
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = RequestFailed(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise RequestFailed(f"HTTP {resp.status_code}: {resp.text[:200]}")
            payload = resp.json()
            reward = payload.get("reward")
            if not isinstance(reward, (int, float)) or not math.isfinite(float(reward)):
                raise NonFiniteReward(f"endpoint returned reward={reward!r}")
            latency = int((time.monotonic() - started) * 1000)
            return ScoreResponse(
                reward=float(reward),
                model_id=str(payload.get("model_id", "remote")),
                latency_ms=latency,
            )
        raise EndpointUnreachable(
            f"{self.endpoint} failed after {self.retry.attempts} attempts: {last_error}"
        )


BatchSlot = Union[ScoreResponse, ThemisError]


def score_batch(
    reqs: Sequence[ScoreRequest], scorer: Scorer, max_in_flight: int = 8
) -> list[BatchSlot]:
    """Score requests with bounded parallelism; result[i] matches reqs[i].

    Individual failures occupy their slot as errors instead of aborting the
    batch.
    """
    if max_in_flight < 1:
        raise InvariantViolation("max_in_flight must be >= 1")

    def one(req: ScoreRequest) -> BatchSlot:
        try:
            return scorer.score(req)
        except ThemisError as exc:
            return exc

    if max_in_flight == 1:
        return [one(req) for req in reqs]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, reqs))
