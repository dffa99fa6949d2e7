"""Evaluation suite: pairwise preference accuracy with label breakdowns,
listwise Hits@k and median rank correlation, adversarial accuracy per
perturbation family, and deterministic report rendering.
"""

from __future__ import annotations

import io
import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from themis.records import (
    Criterion,
    InvariantViolation,
    Language,
    PreferencePair,
    RankedCandidate,
    ThemisError,
)
from themis.scorer import Scorer, ScoreRequest, score_batch, ScoreResponse
from themis import prompts

CRITERIA_MODES = ("none", "all", "single")


class ListTooShort(ThemisError):
    def __init__(self, problem_id: str, size: int, needed: int):
        super().__init__(f"problem {problem_id} has {size} candidates, needs {needed}")
        self.problem_id = problem_id


class DegenerateList(ThemisError):
    pass


@dataclass(frozen=True)
class EvalReport:
    overall_accuracy: float
    by_criterion: Mapping[Criterion, float]
    by_language: Mapping[Language, float]
    by_subset: Mapping[str, float]
    n_pairs: int
    ties: int
    counts_by_subset: Mapping[str, int] = field(default_factory=dict)
    partial: bool = False


@dataclass(frozen=True)
class ListwiseReport:
    hits_at_k_mean: float
    rank_corr_median: float
    k: int = 10
    list_size: int = 40
    n_problems: int = 0
    n_excluded: int = 0


@dataclass(frozen=True)
class AdversarialReport:
    overall_accuracy: float
    by_family: Mapping[str, float]
    n_pairs: int
    ties: int


def _criteria_prompt_for(pair: PreferencePair, criteria_mode: str) -> str | None:
    if criteria_mode == "none":
        return None
    if criteria_mode == "all":
        return prompts.ALL_CRITERIA_PROMPT
    return prompts.single_criterion_prompt(pair.criterion)


def _score_pairs(
    pairs: Sequence[PreferencePair], scorer: Scorer, criteria_mode: str, max_in_flight: int
) -> tuple[list[tuple[float, float] | None], bool]:
    """Score both sides of every pair; a None slot marks a scorer failure."""
    reqs = []
    for pair in pairs:
        cp = _criteria_prompt_for(pair, criteria_mode)
        reqs.append(ScoreRequest(task_prompt=pair.task_prompt, response=pair.chosen, criteria_prompt=cp))
        reqs.append(ScoreRequest(task_prompt=pair.task_prompt, response=pair.rejected, criteria_prompt=cp))
    slots = score_batch(reqs, scorer, max_in_flight=max_in_flight)
    results: list[tuple[float, float] | None] = []
    partial = False
    for i in range(len(pairs)):
        c, r = slots[2 * i], slots[2 * i + 1]
        if isinstance(c, ScoreResponse) and isinstance(r, ScoreResponse):
            results.append((c.reward, r.reward))
        else:
            results.append(None)
            partial = True
    return results, partial


def _accuracy(decisions: Sequence[bool]) -> float:
    return sum(decisions) / len(decisions) if decisions else 0.0


def pairwise_accuracy(
    pairs: Sequence[PreferencePair],
    scorer: Scorer,
    criteria_mode: str = "none",
    max_in_flight: int = 8,
) -> EvalReport:
    """Fraction of pairs where the chosen response scores strictly higher.

    Ties are incorrect and reported separately. Pairs whose scoring failed
    are dropped from every aggregate and flag the report as partial.
    """
    if criteria_mode not in CRITERIA_MODES:
        raise InvariantViolation(f"unknown criteria_mode: {criteria_mode!r}")
    scores, partial = _score_pairs(pairs, scorer, criteria_mode, max_in_flight)

    decisions: list[tuple[PreferencePair, bool, bool]] = []
    for pair, slot in zip(pairs, scores):
        if slot is None:
            continue
        s_c, s_r = slot
        decisions.append((pair, s_c > s_r, s_c == s_r))

    by_criterion: dict[Criterion, list[bool]] = {}
    by_language: dict[Language, list[bool]] = {}
    by_subset: dict[str, list[bool]] = {}
    for pair, correct, _ in decisions:
        by_criterion.setdefault(pair.criterion, []).append(correct)
        by_language.setdefault(pair.language, []).append(correct)
        by_subset.setdefault(pair.subset, []).append(correct)

    return EvalReport(
        overall_accuracy=_accuracy([c for _, c, _ in decisions]),
        by_criterion={c: _accuracy(v) for c, v in by_criterion.items()},
        by_language={l: _accuracy(v) for l, v in by_language.items()},
        by_subset={s: _accuracy(v) for s, v in by_subset.items()},
        n_pairs=len(decisions),
        ties=sum(1 for _, _, tie in decisions if tie),
        counts_by_subset={s: len(v) for s, v in by_subset.items()},
        partial=partial,
    )


def _ranked(candidates: Sequence[RankedCandidate]) -> list[RankedCandidate]:
    return sorted(
        candidates,
        key=lambda c: (-c.rm_score, c.candidate_id if c.candidate_id is not None else ""),
    )


def hits_at_k(
    problems: Mapping[str, Sequence[RankedCandidate]],
    k: int = 10,
    count_missing_as_miss: bool = False,
) -> tuple[float, int, int]:
    """Mean over problems of whether a fully-correct candidate ranks in the top k.

    Problems with no fully-correct candidate are excluded by default (a hit
    is impossible); set count_missing_as_miss to score them 0 instead.
    Returns (mean, n_problems_scored, n_excluded).
    """
    hits: list[int] = []
    excluded = 0
    for problem_id in sorted(problems):
        candidates = problems[problem_id]
        if len(candidates) < k:
            raise ListTooShort(problem_id, len(candidates), k)
        if not any(c.fully_correct for c in candidates):
            if count_missing_as_miss:
                hits.append(0)
            else:
                excluded += 1
            continue
        top = _ranked(candidates)[:k]
        hits.append(1 if any(c.fully_correct for c in top) else 0)
    mean = sum(hits) / len(hits) if hits else 0.0
    return mean, len(hits), excluded


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rho: Pearson correlation of average ranks. Raises on constant input."""
    if len(x) != len(y) or len(x) < 2:
        raise InvariantViolation("need two equal-length lists of at least 2 items")
    rx, ry = _average_ranks(x), _average_ranks(y)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        raise DegenerateList("constant ranking")
    return cov / math.sqrt(vx * vy)


def rank_corr(
    problems: Mapping[str, Sequence[RankedCandidate]], list_size: int = 40
) -> tuple[float, int, int]:
    """Median per-problem Spearman rho between scores and pass fractions.

    Problems where either side is constant have undefined rho; they are
    excluded and counted. Returns (median, n_problems_scored, n_excluded).
    """
    rhos: list[float] = []
    excluded = 0
    for problem_id in sorted(problems):
        candidates = problems[problem_id]
        if len(candidates) != list_size:
            raise ListTooShort(problem_id, len(candidates), list_size)
        try:
            rho = spearman(
                [c.rm_score for c in candidates],
                [c.ground_truth_pass_fraction for c in candidates],
            )
        except DegenerateList:
            excluded += 1
            continue
        rhos.append(rho)
    median = statistics.median(rhos) if rhos else 0.0
    return median, len(rhos), excluded


def listwise_report(
    problems: Mapping[str, Sequence[RankedCandidate]], k: int = 10, list_size: int = 40
) -> ListwiseReport:
    hits_mean, n_hit_problems, hit_excluded = hits_at_k(problems, k=k)
    corr_median, n_corr_problems, corr_excluded = rank_corr(problems, list_size=list_size)
    return ListwiseReport(
        hits_at_k_mean=hits_mean,
        rank_corr_median=corr_median,
        k=k,
        list_size=list_size,
        n_problems=max(n_hit_problems, n_corr_problems),
        n_excluded=hit_excluded + corr_excluded,
    )


def adversarial_accuracy(
    pairs: Sequence[PreferencePair],
    scorer: Scorer,
    criteria_mode: str = "none",
    family_field: str = "perturbation_family",
    max_in_flight: int = 8,
) -> AdversarialReport:
    """Pairwise accuracy over perturbed pairs, broken down per perturbation family."""
    scores, _ = _score_pairs(pairs, scorer, criteria_mode, max_in_flight)
    by_family: dict[str, list[bool]] = {}
    decisions: list[bool] = []
    ties = 0
    n = 0
    for pair, slot in zip(pairs, scores):
        if slot is None:
            continue
        s_c, s_r = slot
        correct = s_c > s_r
        if s_c == s_r:
            ties += 1
        family = str(pair.extra.get(family_field, "unperturbed"))
        by_family.setdefault(family, []).append(correct)
        decisions.append(correct)
        n += 1
    return AdversarialReport(
        overall_accuracy=_accuracy(decisions),
        by_family={f: _accuracy(v) for f, v in sorted(by_family.items())},
        n_pairs=n,
        ties=ties,
    )


def _truncate(value: float, places: int) -> str:
    """Fixed-precision truncation toward zero: 0.50675 -> '0.5067' at 4 places."""
    scale = 10**places
    truncated = math.trunc(value * scale) / scale
    return f"{truncated:.{places}f}"


def _fmt_acc(value: float) -> str:
    return _truncate(value, 2)


def emit_report(
    pairwise: EvalReport | None = None,
    listwise: ListwiseReport | None = None,
    adversarial: AdversarialReport | None = None,
) -> tuple[str, str]:
    """Render the available reports as (markdown, csv); byte-deterministic."""
    if pairwise is None and listwise is None and adversarial is None:
        raise InvariantViolation("at least one report required")
    md = io.StringIO()
    csv_buf = io.StringIO()
    csv_buf.write("section,key,value\n")

    if pairwise is not None:
        md.write("## Pairwise preference accuracy\n\n")
        md.write(f"Pairs: {pairwise.n_pairs}, ties: {pairwise.ties}")
        if pairwise.partial:
            md.write(" (partial: some pairs failed to score)")
        md.write(f"\n\nOverall: {_fmt_acc(pairwise.overall_accuracy)}\n\n")
        md.write("| " + " | ".join(c.name for c in Criterion) + " |\n")
        md.write("|" + "---|" * len(Criterion) + "\n")
        md.write(
            "| "
            + " | ".join(
                _fmt_acc(pairwise.by_criterion[c]) if c in pairwise.by_criterion else "-"
                for c in Criterion
            )
            + " |\n\n"
        )
        md.write("| " + " | ".join(l.value for l in Language) + " |\n")
        md.write("|" + "---|" * len(Language) + "\n")
        md.write(
            "| "
            + " | ".join(
                _fmt_acc(pairwise.by_language[l]) if l in pairwise.by_language else "-"
                for l in Language
            )
            + " |\n\n"
        )
        csv_buf.write(f"pairwise,overall,{_fmt_acc(pairwise.overall_accuracy)}\n")
        csv_buf.write(f"pairwise,n_pairs,{pairwise.n_pairs}\n")
        csv_buf.write(f"pairwise,ties,{pairwise.ties}\n")
        for c in Criterion:
            if c in pairwise.by_criterion:
                csv_buf.write(f"pairwise,criterion.{c.name},{_fmt_acc(pairwise.by_criterion[c])}\n")
        for l in Language:
            if l in pairwise.by_language:
                csv_buf.write(f"pairwise,language.{l.value},{_fmt_acc(pairwise.by_language[l])}\n")
        for subset in sorted(pairwise.by_subset):
            csv_buf.write(f"pairwise,subset.{subset},{_fmt_acc(pairwise.by_subset[subset])}\n")

    if listwise is not None:
        md.write("## Listwise re-ranking\n\n")
        md.write(f"| Hits@{listwise.k} (mean) | Rank Corr.@{listwise.list_size} (median) |\n")
        md.write("|---|---|\n")
        md.write(
            f"| {_fmt_acc(listwise.hits_at_k_mean)} | {_truncate(listwise.rank_corr_median, 4)} |\n\n"
        )
        md.write(f"Problems: {listwise.n_problems}, excluded: {listwise.n_excluded}\n\n")
        csv_buf.write(f"listwise,hits_at_{listwise.k},{_fmt_acc(listwise.hits_at_k_mean)}\n")
        csv_buf.write(
            f"listwise,rank_corr_at_{listwise.list_size},{_truncate(listwise.rank_corr_median, 4)}\n"
        )
        csv_buf.write(f"listwise,n_problems,{listwise.n_problems}\n")
        csv_buf.write(f"listwise,n_excluded,{listwise.n_excluded}\n")

    if adversarial is not None:
        md.write("## Adversarial accuracy\n\n")
        md.write(f"Pairs: {adversarial.n_pairs}, ties: {adversarial.ties}\n\n")
        md.write(f"Overall: {_fmt_acc(adversarial.overall_accuracy)}\n\n")
        md.write("| Perturbation family | Accuracy |\n|---|---|\n")
        for family in sorted(adversarial.by_family):
            md.write(f"| {family} | {_fmt_acc(adversarial.by_family[family])} |\n")
        md.write("\n")
        csv_buf.write(f"adversarial,overall,{_fmt_acc(adversarial.overall_accuracy)}\n")
        for family in sorted(adversarial.by_family):
            csv_buf.write(f"adversarial,family.{family},{_fmt_acc(adversarial.by_family[family])}\n")

    return md.getvalue(), csv_buf.getvalue()
