"""Commit mining funnel: record gates, keyword tagging, judge consensus, pair emission.

The funnel turns raw single-file commit records into preference pairs:

1. ``filter_record`` applies the repo/message/date gates.
2. ``tag_criteria`` matches per-criterion search terms against the message
   (optionally ANDed with a pluggable classifier).
3. ``judge_saliency`` asks one or more judges to rate how specifically the
   change improves the tagged criterion; multi-tag records keep at most the
   single highest-rated criterion.
4. ``emit_pair`` turns an accepted record into a PreferencePair with the
   post-change file as the chosen response.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, timezone
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from themis.records import (
    CommitRecord,
    Criterion,
    InvariantViolation,
    PreferencePair,
    ThemisError,
)
from themis.mining_terms import DEFAULT_CRITERIA_TERMS
from themis import prompts

DEFAULT_LICENSE_ALLOWLIST = frozenset({
    "mit", "artistic-2.0", "isc", "cc0-1.0", "epl-1.0", "mpl-2.0",
    "unlicense", "apache-2.0", "bsd-3-clause", "agpl-3.0", "lgpl-2.1", "bsd-2-clause",
})

DEFAULT_MESSAGE_BLOCKLIST = frozenset({
    "update readme.md", "initial commit", "update", "mirroring from micro.blog.",
    "update data.json", "update data.js", "add files via upload", "update readme",
    "can't you see i'm updating the time?", "dummy", "update index.html", "first commit",
    "create readme.md", "heartbeat update", "updated readme", "update log", "test",
    "no message", "readme", "wip", "updates", "commit", "update _config.yaml", "testing",
    "tweak", "tweaks", "modified", "edited", "yolo commit", "yolo", "made it work",
    "work in progress", "fixing", "for review", "my changes", "revised", "addressed comments",
    "placeholder", "test commit", "trying something", "experimental changes", "hack",
    "do not merge", "various updates", "stuff",
})

# Gates are evaluated in this order; the reject reason names the first failure.
GATE_ORDER = (
    "license", "message_length", "blocklist", "stars",
    "contributors", "issues", "date", "merged_pr", "reverted",
)


class JudgeUnreachable(ThemisError):
    def __init__(self, judge_id: str):
        super().__init__(f"judge unreachable: {judge_id}")
        self.judge_id = judge_id


class UnparseableRating(ThemisError):
    def __init__(self, judge_id: str, raw_reply: str):
        super().__init__(f"unparseable rating from judge {judge_id}")
        self.judge_id = judge_id
        self.raw_reply = raw_reply


@dataclass(frozen=True)
class MiningConfig:
    """Gate thresholds, tagging terms, and judge consensus policy.

    Message length bounds are exclusive and counted in characters. Defaults
    match the evaluation mining window; use ``train_defaults`` for the
    training window, which additionally requires repo disjointness against
    the evaluation repo set (see ``check_repo_disjoint``).
    """

    license_allowlist: frozenset[str] = DEFAULT_LICENSE_ALLOWLIST
    message_len_min: int = 10
    message_len_max: int = 15000
    message_blocklist: frozenset[str] = DEFAULT_MESSAGE_BLOCKLIST
    min_stars: int = 15
    min_contributors: int = 5
    min_issues: int = 10
    date_from: date = date(2019, 6, 1)
    date_to: date = date(2021, 1, 31)
    criteria_terms: Mapping[Criterion, Sequence[str]] = field(
        default_factory=lambda: dict(DEFAULT_CRITERIA_TERMS)
    )
    judge_threshold: int = 4
    judge_quorum: str = "all"  # "all" or "majority"

    def __post_init__(self):
        if self.message_len_min >= self.message_len_max:
            raise InvariantViolation("message_len_min must be < message_len_max")
        if not 1 <= self.judge_threshold <= 5:
            raise InvariantViolation("judge_threshold outside [1, 5]")
        if self.judge_quorum not in ("all", "majority"):
            raise InvariantViolation(f"unknown quorum: {self.judge_quorum!r}")
        missing = set(Criterion) - set(self.criteria_terms)
        if missing:
            raise InvariantViolation(f"criteria_terms missing {sorted(c.name for c in missing)}")

    @classmethod
    def eval_defaults(cls, **overrides) -> "MiningConfig":
        return cls(**overrides)

    @classmethod
    def train_defaults(cls, **overrides) -> "MiningConfig":
        overrides.setdefault("date_from", date(2008, 1, 1))
        overrides.setdefault("date_to", date(2019, 3, 31))
        return cls(**overrides)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    reason: str | None = None
    ratings: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class JudgeVerdict:
    judge_id: str
    rating: int
    summary: str

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise InvariantViolation(f"rating outside 1-5: {self.rating}")


def filter_record(rec: CommitRecord, cfg: MiningConfig) -> Verdict:
    """Apply every record gate; reject with the first failing gate's name."""
    msg = rec.message.lower()
    authored = rec.authored_at.astimezone(timezone.utc).date()
    checks = {
        "license": rec.license in cfg.license_allowlist,
        "message_length": cfg.message_len_min < len(rec.message) < cfg.message_len_max,
        "blocklist": msg.strip() not in cfg.message_blocklist and not msg.startswith("merge"),
        "stars": rec.stars >= cfg.min_stars,
        "contributors": rec.contributors >= cfg.min_contributors,
        "issues": rec.issues >= cfg.min_issues,
        "date": cfg.date_from <= authored <= cfg.date_to,
        "merged_pr": rec.merged_pr,
        "reverted": not rec.reverted,
    }
    for gate in GATE_ORDER:
        if not checks[gate]:
            return Verdict(False, gate)
    return Verdict(True)


class CommitClassifier(Protocol):
    """Optional model-based tagger; probabilities are ANDed with keyword tags."""

    def classify(self, message: str) -> Mapping[Criterion, float]: ...


def tag_criteria(
    rec: CommitRecord,
    cfg: MiningConfig,
    classifier: CommitClassifier | None = None,
    classifier_threshold: float = 0.5,
) -> set[Criterion]:
    """Tag the record with every criterion whose terms appear in the message.

    When a classifier is supplied, a keyword tag survives only if the
    classifier also assigns it probability >= classifier_threshold.
    """
    msg = rec.message.lower()
    tags = {
        criterion
        for criterion, terms in cfg.criteria_terms.items()
        if any(term in msg for term in terms)
    }
    if classifier is not None and tags:
        probs = classifier.classify(rec.message)
        tags = {c for c in tags if probs.get(c, 0.0) >= classifier_threshold}
    return tags


class JudgeClient(Protocol):
    judge_id: str

    def complete(self, system_prompt: str, user_prompt: str) -> str: ...


_RATING_RE = re.compile(r"\[RATING\]\s*([1-5])\s*\[/RATING\]")
_SUMMARY_RE = re.compile(r"\[SUMMARY\](.*?)\[/SUMMARY\]", re.S)


def parse_judge_reply(judge_id: str, reply: str) -> JudgeVerdict:
    m = _RATING_RE.search(reply)
    if m is None:
        raise UnparseableRating(judge_id, reply)
    summary_match = _SUMMARY_RE.search(reply)
    summary = summary_match.group(1).strip() if summary_match else ""
    return JudgeVerdict(judge_id=judge_id, rating=int(m.group(1)), summary=summary)


def judge_saliency(
    rec: CommitRecord,
    criterion: Criterion,
    judges: Sequence[JudgeClient],
    cfg: MiningConfig,
) -> Verdict:
    """Rate one criterion with every judge and apply the quorum rule."""
    if not judges:
        raise InvariantViolation("at least one judge required")
    user_prompt = prompts.render(
        prompts.SALIENCY_USER_TEMPLATE,
        criteria=criterion.display_name,
        programming_language=rec.language.value,
        old_file_contents=rec.old_file,
        new_file_contents=rec.new_file,
        commit_message=rec.message,
    )
    ratings = []
    for judge in judges:
        try:
            reply = judge.complete(prompts.SALIENCY_SYSTEM_PROMPT, user_prompt)
        except UnparseableRating:
            raise
        except ThemisError:
            raise
        except Exception as exc:
            raise JudgeUnreachable(judge.judge_id) from exc
        ratings.append(parse_judge_reply(judge.judge_id, reply).rating)
    passing = sum(1 for r in ratings if r >= cfg.judge_threshold)
    if cfg.judge_quorum == "all":
        ok = passing == len(ratings)
    else:
        ok = passing * 2 > len(ratings)
    return Verdict(ok, None if ok else "saliency", tuple(ratings))


def resolve_criteria(
    rec: CommitRecord,
    tags: set[Criterion],
    judges: Sequence[JudgeClient],
    cfg: MiningConfig,
) -> tuple[Criterion | None, str | None, dict[Criterion, Verdict]]:
    """Pick at most one criterion for a tagged record via judge consensus.

    Each tagged criterion is judged independently. At most the single
    highest-rated accepted criterion survives; a tie between accepted
    criteria rejects the record as a multi-purpose change.
    """
    verdicts = {c: judge_saliency(rec, c, judges, cfg) for c in sorted(tags, key=lambda c: c.name)}
    accepted = {c: v for c, v in verdicts.items() if v.passed}
    if not accepted:
        return None, "saliency", verdicts
    if len(accepted) == 1:
        return next(iter(accepted)), None, verdicts
    best = max(min(v.ratings) for v in accepted.values())
    top = [c for c, v in accepted.items() if min(v.ratings) == best]
    if len(top) > 1:
        return None, "multi-purpose", verdicts
    return top[0], None, verdicts


def emit_pair(rec: CommitRecord, criterion: Criterion, instruction: str) -> PreferencePair:
    """Build the preference pair: post-change file wins, pre-change file loses."""
    return PreferencePair(
        id=f"{rec.commit_sha}:{criterion.name}",
        task_prompt=instruction,
        chosen=rec.new_file,
        rejected=rec.old_file,
        criterion=criterion,
        language=rec.language,
        subset="CommitPref",
        extra={"repo": rec.repo, "commit_sha": rec.commit_sha},
    )


class RuleBasedJudge:
    """Deterministic stand-in judge for self-contained runs and fixtures.

    Rates 5 when the message contains two or more of the criterion's search
    terms, 4 on exactly one, and 1 on none. The reply mimics the rubric's
    [SUMMARY]/[RATING] reply shape so the parser path is exercised.
    """

    def __init__(self, judge_id: str = "rule-based", criteria_terms: Mapping[Criterion, Sequence[str]] | None = None):
        self.judge_id = judge_id
        self.criteria_terms = dict(criteria_terms or DEFAULT_CRITERIA_TERMS)
        self._display_to_criterion = {c.display_name: c for c in Criterion}

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        first_line = user_prompt.splitlines()[0]
        criterion = self._display_to_criterion[first_line.removeprefix("Code Change Review: ").strip()]
        m = re.search(r"\[CHANGES\](.*?)\[/CHANGES\]", user_prompt, re.S)
        message = (m.group(1) if m else "").lower()
        hits = sum(1 for term in self.criteria_terms[criterion] if term in message)
        rating = 5 if hits >= 2 else 4 if hits == 1 else 1
        return f"[SUMMARY]{hits} matching signals for {criterion.display_name}.[/SUMMARY]\n[RATING]{rating}[/RATING]"


def default_instruction(rec: CommitRecord) -> str:
    """Instruction fallback when no inverse-instruction judge is configured."""
    return rec.message.strip()


def mine(
    records: Iterable[CommitRecord],
    cfg: MiningConfig,
    judges: Sequence[JudgeClient] | None = None,
    instruction_fn: Callable[[CommitRecord], str] | None = None,
    classifier: CommitClassifier | None = None,
) -> tuple[list[PreferencePair], list[dict]]:
    """Run the full funnel; returns (pairs sorted by (repo, commit_sha), rejects).

    Each reject is ``{"commit_sha": ..., "reason": ...}`` where the reason is
    the first failed gate, "untagged" when no criterion matched, "saliency"
    or "multi-purpose" from the judge stage.
    """
    judges = list(judges) if judges else [RuleBasedJudge(criteria_terms=cfg.criteria_terms)]
    instruction_fn = instruction_fn or default_instruction
    pairs: list[PreferencePair] = []
    rejects: list[dict] = []
    for rec in records:
        verdict = filter_record(rec, cfg)
        if not verdict:
            rejects.append({"commit_sha": rec.commit_sha, "reason": verdict.reason})
            continue
        tags = tag_criteria(rec, cfg, classifier=classifier)
        if not tags:
            rejects.append({"commit_sha": rec.commit_sha, "reason": "untagged"})
            continue
        criterion, reason, _ = resolve_criteria(rec, tags, judges, cfg)
        if criterion is None:
            rejects.append({"commit_sha": rec.commit_sha, "reason": reason})
            continue
        pairs.append(emit_pair(rec, criterion, instruction_fn(rec)))
    pairs.sort(key=lambda p: (p.extra["repo"], p.extra["commit_sha"]))
    return pairs, rejects


def check_repo_disjoint(train_records: Iterable[CommitRecord], eval_repos: set[str]) -> list[CommitRecord]:
    """Drop training records whose repo also appears in the evaluation set."""
    return [rec for rec in train_records if rec.repo not in eval_repos]
