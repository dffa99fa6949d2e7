import math
import random

import numpy as np
import pytest

from themis.records import Criterion, InvariantViolation
from themis.scorer import FEATURE_DIM, ToyRewardModel, extract_features
from themis.training import (
    LossConfig,
    MixSampler,
    ToyLM,
    apply_criteria_mode,
    grad,
    loss,
    sample_criteria_mode,
    train_toy,
    training_accuracy,
)
from conftest import make_pair


def fitted_lm(pairs):
    return ToyLM().fit(p.chosen for p in pairs)


def random_model(rng, pairs, scale=0.1):
    weights = np.zeros(FEATURE_DIM + 1)
    for pair in pairs:
        for side in (pair.chosen, pair.rejected):
            for idx in extract_features(pair.criteria_prompt, pair.task_prompt, side):
                weights[idx] = rng.gauss(0, scale)
    return ToyRewardModel(weights=weights)


def test_stage_defaults():
    pt = LossConfig.pt()
    assert (pt.lam, pt.mu, pt.epochs) == (0.4, 0.01, 2)
    pm = LossConfig.pm()
    assert (pm.lam, pm.mu, pm.epochs) == (0.25, 0.001, 1)
    with pytest.raises(InvariantViolation):
        LossConfig(lam=-1, mu=0, stage="PT", epochs=1)


def test_bt_at_zero_margin():
    pair = make_pair()
    model = ToyRewardModel()  # zero weights force r_c == r_r
    out = loss(pair, model, fitted_lm([pair]), LossConfig.pm(lam=0.0, mu=0.0))
    assert abs(out["bt"] - (-math.log(0.5))) < 1e-12
    assert out["center"] == 0.0
    assert out["total"] == out["bt"]


def test_center_cancels_for_symmetric_rewards():
    # Construct weights so r_c = 1 and r_r = -1 via features unique to each side.
    pair = make_pair(chosen="alpha beta", rejected="gamma delta")
    phi_c = extract_features(None, pair.task_prompt, pair.chosen)
    phi_r = extract_features(None, pair.task_prompt, pair.rejected)
    only_c = next(iter(set(phi_c) - set(phi_r) - {FEATURE_DIM}))
    only_r = next(iter(set(phi_r) - set(phi_c) - {FEATURE_DIM}))
    weights = np.zeros(FEATURE_DIM + 1)
    weights[only_c] = 1.0 / phi_c[only_c]
    weights[only_r] = -1.0 / phi_r[only_r]
    model = ToyRewardModel(weights=weights)
    out = loss(pair, model, fitted_lm([pair]), LossConfig.pm(lam=0.0, mu=0.5))
    assert abs(out["center"]) < 1e-12


def test_bt_value_at_margin_two():
    pair = make_pair(chosen="alpha beta", rejected="gamma delta")
    phi_c = extract_features(None, pair.task_prompt, pair.chosen)
    phi_r = extract_features(None, pair.task_prompt, pair.rejected)
    only_c = next(iter(set(phi_c) - set(phi_r) - {FEATURE_DIM}))
    weights = np.zeros(FEATURE_DIM + 1)
    weights[only_c] = 2.0 / phi_c[only_c]
    model = ToyRewardModel(weights=weights)
    out = loss(pair, model, fitted_lm([pair]), LossConfig.pm(lam=0.0, mu=0.0))
    assert abs(out["total"] - 0.1269280110429725) < 1e-12


def test_lm_term_scales_with_lambda():
    pair = make_pair()
    lm = fitted_lm([pair])
    model = ToyRewardModel()
    lam_half = loss(pair, model, lm, LossConfig.pm(lam=0.5, mu=0.0))
    lam_one = loss(pair, model, lm, LossConfig.pm(lam=1.0, mu=0.0))
    assert lam_one["lm"] == pytest.approx(2 * lam_half["lm"])
    assert lam_half["lm"] > 0  # negative log-likelihood


def test_literal_centering_flips_sign():
    pair = make_pair(chosen="alpha beta gamma", rejected="delta epsilon zeta")
    rng = random.Random(0)
    model = random_model(rng, [pair])
    plain = loss(pair, model, fitted_lm([pair]), LossConfig.pm(lam=0.0, mu=0.1))
    literal = loss(pair, model, fitted_lm([pair]),
                   LossConfig.pm(lam=0.0, mu=0.1, literal_centering=True))
    assert plain["center"] == pytest.approx(-literal["center"])


def numeric_grad(pair, model, lm, cfg, indices, h=1e-6):
    out = {}
    for idx in indices:
        orig = model.weights[idx]
        model.weights[idx] = orig + h
        up = loss(pair, model, lm, cfg)["total"]
        model.weights[idx] = orig - h
        down = loss(pair, model, lm, cfg)["total"]
        model.weights[idx] = orig
        out[idx] = (up - down) / (2 * h)
    return out


def test_grad_matches_finite_differences(rng):
    pairs = [make_pair(i, chosen=f"good solution variant {i} extra tokens",
                       rejected=f"bad solution variant {i} other tokens") for i in range(10)]
    lm = fitted_lm(pairs)
    cfg = LossConfig.pm()
    for pair in pairs:
        model = random_model(rng, [pair])
        g = grad(pair, model, lm, cfg)
        sample = rng.sample(sorted(g), min(8, len(g)))
        numeric = numeric_grad(pair, model, lm, cfg, sample)
        for idx in sample:
            denom = max(abs(numeric[idx]), abs(g[idx]), 1e-8)
            assert abs(g[idx] - numeric[idx]) / denom < 1e-5


def test_grad_zero_when_features_identical():
    pair = make_pair()
    model = ToyRewardModel()
    cfg = LossConfig.pm(lam=0.0, mu=0.0)
    # With zero weights and mu=0, gradient support comes only from phi_c - phi_r;
    # shared bigrams cancel exactly.
    g = grad(pair, model, fitted_lm([pair]), cfg)
    phi_c = extract_features(None, pair.task_prompt, pair.chosen)
    phi_r = extract_features(None, pair.task_prompt, pair.rejected)
    for idx, value in g.items():
        assert value == pytest.approx(-0.5 * (phi_c.get(idx, 0.0) - phi_r.get(idx, 0.0)))


def test_bt_invariant_under_reward_shift():
    pair = make_pair(chosen="alpha beta gamma", rejected="delta epsilon zeta")
    rng = random.Random(5)
    model = random_model(rng, [pair])
    cfg = LossConfig.pm(lam=0.0, mu=0.01)
    base = loss(pair, model, fitted_lm([pair]), cfg)
    shifted = ToyRewardModel(weights=model.weights.copy())
    shifted.weights[FEATURE_DIM] += 3.0  # bias shifts every reward by 3
    after = loss(pair, shifted, fitted_lm([pair]), cfg)
    assert after["bt"] == pytest.approx(base["bt"], abs=1e-12)
    phi_c = extract_features(None, pair.task_prompt, pair.chosen)
    phi_r = extract_features(None, pair.task_prompt, pair.rejected)
    r_sum = sum(model.weights[i] * v for i, v in phi_c.items()) + \
        sum(model.weights[i] * v for i, v in phi_r.items())
    expected_delta = cfg.mu * ((r_sum + 6.0) ** 2 - r_sum**2)
    assert after["center"] - base["center"] == pytest.approx(expected_delta)


def test_toy_lm_distributions_sum_to_one():
    lm = ToyLM().fit(["the cat sat", "the cat ran", "a dog sat"])
    for context in [ToyLM.BOS, "the", "cat", "unseen-context"]:
        total = sum(lm.prob(context, tok) for tok in lm.vocab)
        assert abs(total - 1.0) < 1e-9


def test_toy_lm_prefers_seen_bigrams():
    lm = ToyLM().fit(["the cat sat on the mat"] * 5)
    assert lm.prob("the", "cat") > lm.prob("the", "dog")
    assert lm.log_prob("the cat sat") > lm.log_prob("sat cat the")


def test_mix_sampler_determinism():
    s1 = MixSampler(rng_seed=42).modes()
    s2 = MixSampler(rng_seed=42).modes()
    assert [s1.draw() for _ in range(1000)] == [s2.draw() for _ in range(1000)]


def test_mix_sampler_degenerate_single():
    stream = MixSampler(p_none=0.0, p_all=0.0, p_single=1.0, rng_seed=0).modes()
    pair = make_pair(criterion=Criterion.SH)
    for _ in range(50):
        mode, prompt = sample_criteria_mode(stream, pair)
        assert mode == "single"
        assert "Security Hardness" in prompt


def test_mix_sampler_probability_validation():
    with pytest.raises(InvariantViolation):
        MixSampler(p_none=0.5, p_all=0.5, p_single=0.5)


def test_mode_prompts():
    pair = make_pair(criterion=Criterion.EE)
    stream = MixSampler(p_none=1.0, p_all=0.0, p_single=0.0, rng_seed=0).modes()
    mode, prompt = sample_criteria_mode(stream, pair)
    assert mode == "none" and prompt is None
    stream = MixSampler(p_none=0.0, p_all=1.0, p_single=0.0, rng_seed=0).modes()
    mode, prompt = sample_criteria_mode(stream, pair)
    assert mode == "all"
    for label in ("Helpfulness", "Harmlessness", "Memory Efficiency", "Functional Correctness",
                  "Readability and Maintainability", "Runtime Efficiency", "Security Hardness"):
        assert label in prompt


def test_apply_criteria_mode_sets_prompt():
    stream = MixSampler(p_none=0.0, p_all=0.0, p_single=1.0, rng_seed=0).modes()
    pair = apply_criteria_mode(make_pair(criterion=Criterion.RM), stream)
    assert pair.criteria_prompt and "Readability and Maintainability" in pair.criteria_prompt


def separable_pairs(n, rng):
    vocab = [f"tok{i}" for i in range(80)]
    crits = list(Criterion)
    pairs = []
    for i in range(n):
        base = " ".join(rng.choices(vocab, k=12))
        pairs.append(make_pair(
            i, task_prompt=f"solve task {base}",
            chosen=f"{base} goodmarker end",
            rejected=f"{base} badmarker end",
            criterion=crits[i % 5],
        ))
    return pairs


def test_train_reaches_separable_accuracy(rng):
    pairs = separable_pairs(300, rng)
    state, curve = train_toy(pairs, LossConfig.pm(epochs=2), lr=0.5, seed=0)
    assert curve[-1]["accuracy"] >= 0.95
    assert state.step > 0


def test_train_lr_zero_changes_nothing(rng):
    pairs = separable_pairs(50, rng)
    state, curve = train_toy(pairs, LossConfig.pm(epochs=1), lr=0.0, seed=0)
    assert not state.weights.any()
    model = ToyRewardModel()
    assert curve[-1]["accuracy"] == training_accuracy(pairs, model)


def test_train_loss_decreases_on_repeated_pair():
    pair = make_pair(chosen="alpha beta gamma good", rejected="alpha beta gamma bad")
    cfg = LossConfig.pm(lam=0.0, mu=0.0, epochs=10)
    _, curve = train_toy([pair], cfg, lr=0.01, seed=0, batch_size=1,
                         sampler=MixSampler(p_none=1.0, p_all=0.0, p_single=0.0))
    bts = [row["bt"] for row in curve]
    assert all(b1 > b2 for b1, b2 in zip(bts, bts[1:]))


def test_train_empty_dataset_rejected():
    with pytest.raises(InvariantViolation):
        train_toy([], LossConfig.pm())
