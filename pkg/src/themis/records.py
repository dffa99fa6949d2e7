"""Shared domain types and the JSONL serialization contract.

All records live on disk as JSON Lines (UTF-8, one object per line,
lower_snake_case field names). A file may start with a header record
``{"_schema": "themis/1"}``; readers tolerate its absence. Unknown fields
are preserved verbatim in ``extra`` so richer upstream exports survive a
round trip through the pipeline.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Union

from themis import SCHEMA_VERSION


class ThemisError(Exception):
    """Base class for all toolkit errors."""


class MalformedJson(ThemisError):
    pass


class MissingField(ThemisError):
    def __init__(self, name: str):
        super().__init__(f"missing field: {name}")
        self.name = name


class InvariantViolation(ThemisError):
    pass


class Criterion(enum.Enum):
    """The five code quality dimensions."""

    FC = "functional_correctness"
    EE = "execution_efficiency"
    ME = "memory_efficiency"
    RM = "readability_maintainability"
    SH = "security_hardness"

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        text = text.strip()
        if text in cls.__members__:
            return cls[text]
        for member in cls:
            if member.value == text:
                return member
        raise InvariantViolation(f"unknown criterion: {text!r}")

    @property
    def display_name(self) -> str:
        return _CRITERION_DISPLAY[self]


_CRITERION_DISPLAY = {
    Criterion.FC: "Functional Correctness",
    Criterion.EE: "Execution Efficiency",
    Criterion.ME: "Memory Efficiency",
    Criterion.RM: "Readability and Maintainability",
    Criterion.SH: "Security Hardness",
}


class Language(enum.Enum):
    """The eight supported programming languages. Closed set: unknown names are rejected."""

    C = "C"
    CSharp = "C#"
    Cpp = "C++"
    Go = "Go"
    Java = "Java"
    JavaScript = "JavaScript"
    Python = "Python"
    Ruby = "Ruby"

    @classmethod
    def parse(cls, text: str) -> "Language":
        key = text.strip().lower()
        if key not in _LANGUAGE_ALIASES:
            raise InvariantViolation(f"unknown language: {text!r}")
        return _LANGUAGE_ALIASES[key]


_LANGUAGE_ALIASES = {
    "c": Language.C,
    "c#": Language.CSharp,
    "csharp": Language.CSharp,
    "c++": Language.Cpp,
    "cpp": Language.Cpp,
    "go": Language.Go,
    "java": Language.Java,
    "javascript": Language.JavaScript,
    "js": Language.JavaScript,
    "python": Language.Python,
    "ruby": Language.Ruby,
}

_SPLITS = ("train", "eval")


@dataclass(frozen=True)
class PreferencePair:
    """One (criteria prompt, task prompt, chosen, rejected) preference tuple."""

    id: str
    task_prompt: str
    chosen: str
    rejected: str
    criterion: Criterion
    language: Language
    subset: str
    split: str = "train"
    criteria_prompt: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise InvariantViolation("empty id")
        if not self.task_prompt:
            raise InvariantViolation("empty task_prompt")
        if not self.chosen or not self.rejected:
            raise InvariantViolation("empty response")
        if self.chosen == self.rejected:
            raise InvariantViolation("chosen equals rejected")
        if self.split not in _SPLITS:
            raise InvariantViolation(f"unknown split: {self.split!r}")

    def to_json_obj(self) -> dict:
        obj = dict(self.extra)
        obj.update(
            id=self.id,
            task_prompt=self.task_prompt,
            chosen=self.chosen,
            rejected=self.rejected,
            criterion=self.criterion.name,
            language=self.language.value,
            subset=self.subset,
            split=self.split,
        )
        if self.criteria_prompt is not None:
            obj["criteria_prompt"] = self.criteria_prompt
        return obj


@dataclass(frozen=True)
class CommitRecord:
    """One mined single-file code change with repo metadata."""

    commit_sha: str
    repo: str
    license: str
    language: Language
    message: str
    old_file: str
    new_file: str
    authored_at: datetime
    stars: int
    contributors: int
    issues: int
    merged_pr: bool
    reverted: bool
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.old_file == self.new_file:
            raise InvariantViolation("old_file equals new_file")
        for name in ("stars", "contributors", "issues"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"negative {name}")
        if self.authored_at.tzinfo is None:
            object.__setattr__(self, "authored_at", self.authored_at.replace(tzinfo=timezone.utc))

    def to_json_obj(self) -> dict:
        obj = dict(self.extra)
        obj.update(
            commit_sha=self.commit_sha,
            repo=self.repo,
            license=self.license,
            language=self.language.value,
            message=self.message,
            old_file=self.old_file,
            new_file=self.new_file,
            authored_at=self.authored_at.astimezone(timezone.utc).isoformat(),
            stars=self.stars,
            contributors=self.contributors,
            issues=self.issues,
            merged_pr=self.merged_pr,
            reverted=self.reverted,
        )
        return obj


@dataclass(frozen=True)
class RankedCandidate:
    """One scored solution inside a listwise re-ranking problem."""

    problem_id: str
    solution: str
    rm_score: float
    ground_truth_pass_fraction: float
    candidate_id: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.rm_score):
            raise InvariantViolation("non-finite rm_score")
        if not 0.0 <= self.ground_truth_pass_fraction <= 1.0:
            raise InvariantViolation("pass fraction outside [0, 1]")

    @property
    def fully_correct(self) -> bool:
        return self.ground_truth_pass_fraction == 1.0

    def to_json_obj(self) -> dict:
        obj = dict(self.extra)
        obj.update(
            problem_id=self.problem_id,
            solution=self.solution,
            rm_score=self.rm_score,
            ground_truth_pass_fraction=self.ground_truth_pass_fraction,
        )
        if self.candidate_id is not None:
            obj["candidate_id"] = self.candidate_id
        return obj


Record = Union[PreferencePair, CommitRecord, RankedCandidate]

_PAIR_FIELDS = {"id", "task_prompt", "chosen", "rejected", "criterion", "language", "subset", "split", "criteria_prompt"}
_COMMIT_FIELDS = {
    "commit_sha", "repo", "license", "language", "message", "old_file", "new_file",
    "authored_at", "stars", "contributors", "issues", "merged_pr", "reverted",
}
_CANDIDATE_FIELDS = {"problem_id", "solution", "rm_score", "ground_truth_pass_fraction", "candidate_id"}


def _require(obj: dict, name: str) -> Any:
    if name not in obj:
        raise MissingField(name)
    return obj[name]


def _parse_timestamp(raw: Any) -> datetime:
    if isinstance(raw, (int, float)):
        return datetime.fromtimestamp(raw, tz=timezone.utc)
    try:
        ts = datetime.fromisoformat(str(raw).replace("Z", "+00:00"))
    except ValueError as exc:
        raise InvariantViolation(f"bad timestamp: {raw!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_record(line: str) -> Record:
    """Parse one JSONL line into the record type its fields identify.

    Unknown extra fields are kept in the record's ``extra`` map. Any listed
    invariant violation raises ``InvariantViolation``; nothing is coerced.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(obj, dict):
        raise MalformedJson("record is not a JSON object")

    if "chosen" in obj or "rejected" in obj:
        extra = {k: v for k, v in obj.items() if k not in _PAIR_FIELDS}
        return PreferencePair(
            id=str(_require(obj, "id")),
            task_prompt=str(_require(obj, "task_prompt")),
            chosen=str(_require(obj, "chosen")),
            rejected=str(_require(obj, "rejected")),
            criterion=Criterion.parse(str(_require(obj, "criterion"))),
            language=Language.parse(str(_require(obj, "language"))),
            subset=str(_require(obj, "subset")),
            split=str(obj.get("split", "train")),
            criteria_prompt=obj.get("criteria_prompt"),
            extra=extra,
        )
    if "commit_sha" in obj:
        extra = {k: v for k, v in obj.items() if k not in _COMMIT_FIELDS}
        return CommitRecord(
            commit_sha=str(_require(obj, "commit_sha")),
            repo=str(_require(obj, "repo")),
            license=str(_require(obj, "license")),
            language=Language.parse(str(_require(obj, "language"))),
            message=str(_require(obj, "message")),
            old_file=str(_require(obj, "old_file")),
            new_file=str(_require(obj, "new_file")),
            authored_at=_parse_timestamp(_require(obj, "authored_at")),
            stars=int(_require(obj, "stars")),
            contributors=int(_require(obj, "contributors")),
            issues=int(_require(obj, "issues")),
            merged_pr=bool(_require(obj, "merged_pr")),
            reverted=bool(_require(obj, "reverted")),
            extra=extra,
        )
    if "problem_id" in obj:
        extra = {k: v for k, v in obj.items() if k not in _CANDIDATE_FIELDS}
        return RankedCandidate(
            problem_id=str(_require(obj, "problem_id")),
            solution=str(_require(obj, "solution")),
            rm_score=float(_require(obj, "rm_score")),
            ground_truth_pass_fraction=float(_require(obj, "ground_truth_pass_fraction")),
            candidate_id=obj.get("candidate_id"),
            extra=extra,
        )
    raise MalformedJson("record matches no known type")


def serialize_record(rec: Record) -> str:
    return json.dumps(rec.to_json_obj(), ensure_ascii=False, sort_keys=True)


def read_jsonl(path: str | Path) -> Iterator[Record]:
    """Stream records from a JSONL file, skipping the schema header if present."""
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            if i == 0 and '"_schema"' in line:
                header = json.loads(line)
                if header.get("_schema") != SCHEMA_VERSION:
                    raise MalformedJson(f"unsupported schema: {header.get('_schema')!r}")
                continue
            yield parse_record(line)


def write_jsonl(path: str | Path, records: Iterable[Record]) -> int:
    """Write records with a leading schema header; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_schema": SCHEMA_VERSION}) + "\n")
        for rec in records:
            fh.write(serialize_record(rec) + "\n")
            n += 1
    return n


def check_unique_ids(pairs: Iterable[PreferencePair]) -> None:
    seen: set[str] = set()
    for pair in pairs:
        if pair.id in seen:
            raise InvariantViolation(f"duplicate id: {pair.id}")
        seen.add(pair.id)
