"""Reference pairwise-preference training objective on the toy linear scorer.

The minimized loss per pair is

    total = bt + lm + center
    bt     = -log sigmoid(r_chosen - r_rejected)
    lm     = -lambda * log p(chosen | criteria_prompt, task_prompt)
    center = +mu * (r_chosen + r_rejected)^2

with analytic gradients for the reward weights. The language-model term is
computed by a separate bigram model whose parameters are not trained here, so
it contributes a constant to the loss and nothing to the reward gradient.
``literal_centering`` flips the centering term's sign for comparison with the
magnitude-rewarding variant.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from themis.records import InvariantViolation, PreferencePair, ThemisError
from themis.filtering import normalize_tokens
from themis.scorer import FEATURE_DIM, ToyRewardModel, dot, extract_features
from themis import prompts


class NonFinite(ThemisError):
    def __init__(self, term: str, value: float):
        super().__init__(f"non-finite {term} term: {value}")
        self.term = term


class Divergence(ThemisError):
    def __init__(self, state: "TrainState"):
        super().__init__(f"training diverged at step {state.step}")
        self.last_good_state = state


@dataclass(frozen=True)
class LossConfig:
    lam: float
    mu: float
    stage: str
    epochs: int
    literal_centering: bool = False

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0:
            raise InvariantViolation("lam and mu must be >= 0")
        if self.stage not in ("PT", "PM"):
            raise InvariantViolation(f"unknown stage: {self.stage!r}")

    @classmethod
    def pt(cls, **overrides) -> "LossConfig":
        defaults = dict(lam=0.4, mu=0.01, stage="PT", epochs=2)
        defaults.update(overrides)
        return cls(**defaults)

    @classmethod
    def pm(cls, **overrides) -> "LossConfig":
        defaults = dict(lam=0.25, mu=0.001, stage="PM", epochs=1)
        defaults.update(overrides)
        return cls(**defaults)


@dataclass
class TrainState:
    weights: np.ndarray
    step: int
    loss_components: dict[str, float]


class ToyLM:
    """Additive-smoothed bigram language model over a closed vocabulary."""

    BOS = "<s>"
    UNK = "<unk>"

    def __init__(self, alpha: float = 1.0):
        if alpha <= 0:
            raise InvariantViolation("alpha must be positive")
        self.alpha = alpha
        self.vocab: set[str] = {self.UNK}
        self.bigram_counts: dict[str, dict[str, int]] = {}
        self.context_totals: dict[str, int] = {}

    def fit(self, texts: Iterable[str]) -> "ToyLM":
        for text in texts:
            tokens = normalize_tokens(text)
            self.vocab.update(tokens)
            prev = self.BOS
            for tok in tokens:
                row = self.bigram_counts.setdefault(prev, {})
                row[tok] = row.get(tok, 0) + 1
                self.context_totals[prev] = self.context_totals.get(prev, 0) + 1
                prev = tok
        return self

    def prob(self, context: str, token: str) -> float:
        if token not in self.vocab:
            token = self.UNK
        if context not in self.vocab and context != self.BOS:
            context = self.UNK
        count = self.bigram_counts.get(context, {}).get(token, 0)
        total = self.context_totals.get(context, 0)
        return (count + self.alpha) / (total + self.alpha * len(self.vocab))

    def log_prob(self, text: str) -> float:
        """Total log probability of the token sequence under the bigram model."""
        tokens = normalize_tokens(text)
        log_sum = 0.0
        prev = self.BOS
        for tok in tokens:
            log_sum += math.log(self.prob(prev, tok))
            prev = tok if tok in self.vocab else self.UNK
        return log_sum


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _pair_features(pair: PreferencePair) -> tuple[dict[int, float], dict[int, float]]:
    phi_c = extract_features(pair.criteria_prompt, pair.task_prompt, pair.chosen)
    phi_r = extract_features(pair.criteria_prompt, pair.task_prompt, pair.rejected)
    return phi_c, phi_r


def loss(
    pair: PreferencePair, model: ToyRewardModel, lm: ToyLM, cfg: LossConfig
) -> dict[str, float]:
    phi_c, phi_r = _pair_features(pair)
    r_c = dot(model.weights, phi_c)
    r_r = dot(model.weights, phi_r)
    delta = r_c - r_r
    # -log sigmoid(delta) == log(1 + exp(-delta)), computed stably
    bt = float(np.logaddexp(0.0, -delta))
    lm_term = -cfg.lam * lm.log_prob(pair.chosen) if cfg.lam else 0.0
    center_sign = -1.0 if cfg.literal_centering else 1.0
    center = center_sign * cfg.mu * (r_c + r_r) ** 2
    total = bt + lm_term + center
    for name, value in (("bt", bt), ("lm", lm_term), ("center", center), ("total", total)):
        if not math.isfinite(value):
            raise NonFinite(name, value)
    return {"total": total, "bt": bt, "lm": lm_term, "center": center}


def grad(
    pair: PreferencePair, model: ToyRewardModel, lm: ToyLM, cfg: LossConfig
) -> dict[int, float]:
    """Sparse analytic gradient of the total loss w.r.t. the reward weights."""
    phi_c, phi_r = _pair_features(pair)
    r_c = dot(model.weights, phi_c)
    r_r = dot(model.weights, phi_r)
    delta = r_c - r_r
    bt_coeff = -_sigmoid(-delta)
    center_sign = -1.0 if cfg.literal_centering else 1.0
    center_coeff = center_sign * 2.0 * cfg.mu * (r_c + r_r)
    g: dict[int, float] = {}
    for idx, v in phi_c.items():
        g[idx] = g.get(idx, 0.0) + bt_coeff * v + center_coeff * v
    for idx, v in phi_r.items():
        g[idx] = g.get(idx, 0.0) - bt_coeff * v + center_coeff * v
    for idx, v in g.items():
        if not math.isfinite(v):
            raise NonFinite("grad", v)
    return g


@dataclass(frozen=True)
class MixSampler:
    """Categorical draw over the criteria-prompt conditioning modes."""

    p_none: float = 0.15
    p_all: float = 0.20
    p_single: float = 0.65
    rng_seed: int = 0

    def __post_init__(self):
        if abs(self.p_none + self.p_all + self.p_single - 1.0) > 1e-12:
            raise InvariantViolation("mode probabilities must sum to 1")

    def modes(self) -> "_ModeStream":
        return _ModeStream(self)


class _ModeStream:
    def __init__(self, sampler: MixSampler):
        self._sampler = sampler
        self._rng = random.Random(sampler.rng_seed)

    def draw(self) -> str:
        u = self._rng.random()
        if u < self._sampler.p_none:
            return "none"
        if u < self._sampler.p_none + self._sampler.p_all:
            return "all"
        return "single"


def sample_criteria_mode(stream: _ModeStream, pair: PreferencePair) -> tuple[str, str | None]:
    """Draw a conditioning mode and the system prompt it implies for the pair."""
    mode = stream.draw()
    if mode == "none":
        return mode, None
    if mode == "all":
        return mode, prompts.ALL_CRITERIA_PROMPT
    return mode, prompts.single_criterion_prompt(pair.criterion)


def apply_criteria_mode(pair: PreferencePair, stream: _ModeStream) -> PreferencePair:
    _, prompt = sample_criteria_mode(stream, pair)
    return replace(pair, criteria_prompt=prompt)


def training_accuracy(pairs: Sequence[PreferencePair], model: ToyRewardModel) -> float:
    correct = 0
    for pair in pairs:
        phi_c, phi_r = _pair_features(pair)
        if dot(model.weights, phi_c) > dot(model.weights, phi_r):
            correct += 1
    return correct / len(pairs) if pairs else 0.0


def train_toy(
    dataset: Sequence[PreferencePair],
    cfg: LossConfig,
    epochs: int | None = None,
    lr: float = 0.1,
    seed: int = 0,
    batch_size: int = 32,
    sampler: MixSampler | None = None,
) -> tuple[TrainState, list[dict[str, float]]]:
    """Mini-batch gradient descent on the pairwise loss.

    Criteria-prompt modes are drawn once per pair up front from the seeded
    sampler, then features and LM log-probs are cached so each step is a
    sparse update. Returns the final state plus one curve row per epoch with
    mean loss components and training pairwise accuracy. A non-finite loss
    aborts with the last finite state attached to the Divergence error.
    """
    if not dataset:
        raise InvariantViolation("dataset is empty")
    epochs = cfg.epochs if epochs is None else epochs

    stream = (sampler or MixSampler(rng_seed=seed)).modes()
    conditioned = [apply_criteria_mode(pair, stream) for pair in dataset]
    lm = ToyLM().fit(p.chosen for p in conditioned)
    cached = []
    for pair in conditioned:
        phi_c, phi_r = _pair_features(pair)
        lm_term = -cfg.lam * lm.log_prob(pair.chosen) if cfg.lam else 0.0
        cached.append((phi_c, phi_r, lm_term))

    weights = np.zeros(FEATURE_DIM + 1)
    order = list(range(len(conditioned)))
    rng = random.Random(seed)
    state = TrainState(weights=weights.copy(), step=0, loss_components={"bt": 0.0, "lm": 0.0, "center": 0.0})
    curve: list[dict[str, float]] = []
    center_sign = -1.0 if cfg.literal_centering else 1.0
    step = 0

    for epoch in range(epochs):
        rng.shuffle(order)
        sums = {"bt": 0.0, "lm": 0.0, "center": 0.0, "total": 0.0}
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            g: dict[int, float] = {}
            for i in batch:
                phi_c, phi_r, lm_term = cached[i]
                r_c = float(sum(weights[k] * v for k, v in phi_c.items()))
                r_r = float(sum(weights[k] * v for k, v in phi_r.items()))
                delta = r_c - r_r
                bt = float(np.logaddexp(0.0, -delta))
                center = center_sign * cfg.mu * (r_c + r_r) ** 2
                total = bt + lm_term + center
                if not math.isfinite(total):
                    raise Divergence(state)
                sums["bt"] += bt
                sums["lm"] += lm_term
                sums["center"] += center
                sums["total"] += total
                bt_coeff = -_sigmoid(-delta)
                center_coeff = center_sign * 2.0 * cfg.mu * (r_c + r_r)
                for idx, v in phi_c.items():
                    g[idx] = g.get(idx, 0.0) + (bt_coeff + center_coeff) * v
                for idx, v in phi_r.items():
                    g[idx] = g.get(idx, 0.0) + (center_coeff - bt_coeff) * v
            scale = lr / len(batch)
            for idx, v in g.items():
                weights[idx] -= scale * v
            step += 1
            state = TrainState(
                weights=weights,
                step=step,
                loss_components={k: sums[k] / max(start + len(batch), 1) for k in ("bt", "lm", "center")},
            )
        n = len(order)
        correct = sum(
            1
            for phi_c, phi_r, _ in cached
            if sum(weights[k] * v for k, v in phi_c.items())
            > sum(weights[k] * v for k, v in phi_r.items())
        )
        curve.append({
            "epoch": float(epoch + 1),
            "bt": sums["bt"] / n,
            "lm": sums["lm"] / n,
            "center": sums["center"] / n,
            "total": sums["total"] / n,
            "accuracy": correct / n,
        })
    return state, curve
