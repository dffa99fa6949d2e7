"""Benchmark assembly: group pairs into the manifest's subset x criterion x
language grid, audit counts against the expected composition, and write
evaluation-ready files.

Manifests are data, not code; the bundled default lives at
``themis/data/benchmark_manifest.json``. Cells absent from a manifest mean
"this combination does not exist", not "expect zero".
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from themis.records import Criterion, InvariantViolation, Language, PreferencePair, ThemisError

CellKey = tuple[str, Criterion, Language]


class UnknownSubset(ThemisError):
    def __init__(self, subset: str):
        super().__init__(f"subset not in manifest: {subset}")
        self.subset = subset


class CellOverflow(ThemisError):
    def __init__(self, key: CellKey, actual: int, expected: int):
        subset, criterion, language = key
        super().__init__(
            f"cell ({subset}, {criterion.name}, {language.value}) has {actual} > expected {expected}"
        )
        self.key = key


@dataclass(frozen=True)
class BenchmarkManifest:
    name: str
    cells: Mapping[CellKey, int]

    def __post_init__(self):
        for key, count in self.cells.items():
            if count < 0:
                raise InvariantViolation(f"negative count in cell {key}")

    @property
    def total(self) -> int:
        return sum(self.cells.values())

    @property
    def subsets(self) -> set[str]:
        return {subset for subset, _, _ in self.cells}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BenchmarkManifest":
        cells: dict[CellKey, int] = {}
        for cell in obj["cells"]:
            key = (
                str(cell["subset"]),
                Criterion.parse(cell["criterion"]),
                Language.parse(cell["language"]),
            )
            if key in cells:
                raise InvariantViolation(f"duplicate manifest cell: {key}")
            cells[key] = int(cell["count"])
        return cls(name=str(obj.get("name", "benchmark")), cells=cells)

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkManifest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))

    @classmethod
    def bundled(cls) -> "BenchmarkManifest":
        text = resources.files("themis").joinpath("data/benchmark_manifest.json").read_text("utf-8")
        return cls.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class AuditRow:
    subset: str
    criterion: Criterion
    language: Language
    expected: int
    actual: int

    @property
    def delta(self) -> int:
        return self.actual - self.expected


@dataclass(frozen=True)
class AuditReport:
    rows: tuple[AuditRow, ...]
    expected_total: int
    actual_total: int

    @property
    def clean(self) -> bool:
        return all(row.delta == 0 for row in self.rows)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subset", "criterion", "language", "expected", "actual", "delta"])
            for row in self.rows:
                writer.writerow(
                    [row.subset, row.criterion.name, row.language.value, row.expected, row.actual, row.delta]
                )
            writer.writerow(["TOTAL", "", "", self.expected_total, self.actual_total,
                             self.actual_total - self.expected_total])


def _sort_key(pair: PreferencePair):
    return (pair.criterion.name, pair.language.value, pair.subset, pair.id)


def assemble(
    pairs: Iterable[PreferencePair],
    manifest: BenchmarkManifest,
    strict: bool = False,
) -> tuple[list[PreferencePair], AuditReport]:
    """Group and sort pairs, then audit them cell by cell against the manifest.

    Lenient mode (default) reports every delta and never fails; strict mode
    raises on subsets outside the manifest or cells exceeding expectation.
    """
    ordered = sorted(pairs, key=_sort_key)
    actual: dict[CellKey, int] = {}
    for pair in ordered:
        if strict and pair.subset not in manifest.subsets:
            raise UnknownSubset(pair.subset)
        key = (pair.subset, pair.criterion, pair.language)
        actual[key] = actual.get(key, 0) + 1
        if strict and key in manifest.cells and actual[key] > manifest.cells[key]:
            raise CellOverflow(key, actual[key], manifest.cells[key])

    keys = sorted(
        set(manifest.cells) | set(actual),
        key=lambda k: (k[0], k[1].name, k[2].value),
    )
    rows = tuple(
        AuditRow(
            subset=subset,
            criterion=criterion,
            language=language,
            expected=manifest.cells.get((subset, criterion, language), 0),
            actual=actual.get((subset, criterion, language), 0),
        )
        for subset, criterion, language in keys
    )
    report = AuditReport(
        rows=rows,
        expected_total=manifest.total,
        actual_total=len(ordered),
    )
    return ordered, report


def audit_totals(manifest: BenchmarkManifest) -> dict:
    """Per-criterion and per-language marginal counts; both sum to the total."""
    by_criterion: dict[Criterion, int] = {}
    by_language: dict[Language, int] = {}
    for (_, criterion, language), count in manifest.cells.items():
        by_criterion[criterion] = by_criterion.get(criterion, 0) + count
        by_language[language] = by_language.get(language, 0) + count
    return {
        "by_criterion": {c.name: by_criterion.get(c, 0) for c in Criterion},
        "by_language": {l.value: by_language.get(l, 0) for l in Language},
        "total": manifest.total,
    }
