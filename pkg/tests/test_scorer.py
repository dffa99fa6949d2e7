import json

import httpx
import numpy as np
import pytest

from themis.records import InvariantViolation, ThemisError
from themis.scorer import (
    FEATURE_DIM,
    EndpointUnreachable,
    NonFiniteReward,
    RemoteScorer,
    RequestFailed,
    RetryPolicy,
    ScoreRequest,
    ScoreResponse,
    ToyRewardModel,
    extract_features,
    score_batch,
)


REQ = ScoreRequest(task_prompt="sort the list", response="sorted(xs)")


def test_request_validation():
    with pytest.raises(InvariantViolation):
        ScoreRequest(task_prompt="", response="y")
    with pytest.raises(InvariantViolation):
        ScoreRequest(task_prompt="x", response="")


def test_response_rejects_non_finite():
    with pytest.raises(NonFiniteReward):
        ScoreResponse(reward=float("nan"), model_id="m")
    with pytest.raises(NonFiniteReward):
        ScoreResponse(reward=float("inf"), model_id="m")


def test_features_include_bias_and_are_stable():
    f1 = extract_features(None, "sort the list", "sorted(xs)")
    f2 = extract_features(None, "sort the list", "sorted(xs)")
    assert f1 == f2
    assert f1[FEATURE_DIM] == 1.0
    assert all(0 <= idx <= FEATURE_DIM for idx in f1)


def test_features_distinguish_criteria_prompt():
    base = extract_features(None, "sort the list", "sorted(xs)")
    with_prompt = extract_features("favor fast code", "sort the list", "sorted(xs)")
    assert base != with_prompt


def test_zero_weights_score_zero():
    model = ToyRewardModel()
    assert model.score(REQ).reward == 0.0


def test_bias_only_weights():
    weights = np.zeros(FEATURE_DIM + 1)
    weights[FEATURE_DIM] = 1.0
    model = ToyRewardModel(weights=weights)
    assert model.score(REQ).reward == 1.0
    other = ScoreRequest(task_prompt="different", response="thing")
    assert model.score(other).reward == 1.0


def test_toy_determinism_across_instances():
    rng = np.random.default_rng(7)
    weights = rng.normal(size=FEATURE_DIM + 1)
    a = ToyRewardModel(weights=weights.copy())
    b = ToyRewardModel(weights=weights.copy())
    assert a.score(REQ).reward == b.score(REQ).reward


def test_criteria_prompt_sensitivity_constructible():
    f_p1 = extract_features("prefer memory efficiency", "task", "resp")
    f_p2 = extract_features("prefer readability", "task", "resp")
    only_in_p1 = set(f_p1) - set(f_p2)
    assert only_in_p1
    weights = np.zeros(FEATURE_DIM + 1)
    weights[next(iter(only_in_p1))] = 1.0
    model = ToyRewardModel(weights=weights)
    r1 = model.score(ScoreRequest(task_prompt="task", response="resp",
                                  criteria_prompt="prefer memory efficiency")).reward
    r2 = model.score(ScoreRequest(task_prompt="task", response="resp",
                                  criteria_prompt="prefer readability")).reward
    assert r1 != r2


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    weights = np.zeros(FEATURE_DIM + 1)
    idx = rng.integers(0, FEATURE_DIM, size=100)
    weights[idx] = rng.normal(size=100)
    model = ToyRewardModel(weights=weights, seed=3)
    path = tmp_path / "weights.json"
    model.save(path, cfg={"stage": "PM"})
    loaded = ToyRewardModel.load(path)
    assert np.array_equal(loaded.weights, model.weights)
    assert loaded.seed == 3
    payload = json.loads(path.read_text())
    assert payload["cfg"] == {"stage": "PM"}
    assert payload["feature_space"] == "bigram-crc32/1"


def test_load_rejects_wrong_feature_space(tmp_path):
    path = tmp_path / "weights.json"
    path.write_text(json.dumps({"feature_space": "other/9", "dim": 1, "indices": [], "values": []}))
    with pytest.raises(InvariantViolation):
        ToyRewardModel.load(path)


def _remote(handler, **kwargs):
    kwargs.setdefault("retry", RetryPolicy(attempts=3, base_delay=0.0, max_delay=0.0, jitter=0.0))
    return RemoteScorer(
        endpoint="http://scorer.test",
        token="tok",
        transport=httpx.MockTransport(handler),
        sleep=lambda s: None,
        **kwargs,
    )


def test_remote_happy_path():
    seen = {}

    def handler(request):
        seen["path"] = request.url.path
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"reward": 1.25, "model_id": "rm-7b"})

    scorer = _remote(handler)
    resp = scorer.score(ScoreRequest(task_prompt="p", response="r", criteria_prompt="c"))
    assert resp.reward == 1.25 and resp.model_id == "rm-7b"
    assert seen["path"] == "/v1/reward"
    assert seen["body"] == {"system": "c", "prompt": "p", "response": "r"}
    assert seen["auth"] == "Bearer tok"


def test_remote_null_system_for_no_criteria():
    def handler(request):
        assert json.loads(request.content)["system"] is None
        return httpx.Response(200, json={"reward": 0.0, "model_id": "m"})

    _remote(handler).score(ScoreRequest(task_prompt="p", response="r"))


def test_remote_retries_5xx_then_succeeds():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"reward": 2.0, "model_id": "m"})

    assert _remote(handler).score(REQ).reward == 2.0
    assert calls["n"] == 3


def test_remote_gives_up_after_attempts():
    def handler(request):
        return httpx.Response(429)

    with pytest.raises(EndpointUnreachable):
        _remote(handler).score(REQ)


def test_remote_4xx_is_fatal_without_retry():
    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(403)

    with pytest.raises(RequestFailed):
        _remote(handler).score(REQ)
    assert calls["n"] == 1


def test_remote_non_finite_reward():
    def handler(request):
        return httpx.Response(200, json={"reward": "NaN", "model_id": "m"})

    with pytest.raises(NonFiniteReward):
        _remote(handler).score(REQ)


def test_remote_requires_endpoint(monkeypatch):
    monkeypatch.delenv("THEMIS_SCORER_ENDPOINT", raising=False)
    with pytest.raises(InvariantViolation):
        RemoteScorer()


def test_remote_endpoint_from_env(monkeypatch):
    monkeypatch.setenv("THEMIS_SCORER_ENDPOINT", "http://from.env")
    scorer = RemoteScorer(transport=httpx.MockTransport(
        lambda request: httpx.Response(200, json={"reward": 0.0, "model_id": "m"})
    ))
    assert scorer.endpoint == "http://from.env"


class _CountingScorer:
    def __init__(self, fail_at=None):
        self.fail_at = fail_at
        self.calls = 0

    def score(self, req):
        self.calls += 1
        if self.fail_at is not None and req.response == self.fail_at:
            raise EndpointUnreachable("boom")
        return ScoreResponse(reward=float(len(req.response)), model_id="count")


def test_score_batch_preserves_order():
    reqs = [ScoreRequest(task_prompt="t", response="x" * (i + 1)) for i in range(100)]
    for workers in (1, 8):
        out = score_batch(reqs, _CountingScorer(), max_in_flight=workers)
        assert [r.reward for r in out] == [float(i + 1) for i in range(100)]


def test_score_batch_isolates_failures():
    reqs = [ScoreRequest(task_prompt="t", response=r) for r in ("a", "bb", "ccc")]
    out = score_batch(reqs, _CountingScorer(fail_at="bb"), max_in_flight=4)
    assert isinstance(out[0], ScoreResponse)
    assert isinstance(out[1], ThemisError)
    assert isinstance(out[2], ScoreResponse)


def test_score_batch_rejects_bad_bound():
    with pytest.raises(InvariantViolation):
        score_batch([], _CountingScorer(), max_in_flight=0)
