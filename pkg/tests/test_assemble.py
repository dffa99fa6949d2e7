import random

import pytest

from themis.assemble import (
    AuditRow,
    BenchmarkManifest,
    CellOverflow,
    UnknownSubset,
    assemble,
    audit_totals,
)
from themis.records import Criterion, InvariantViolation, Language
from conftest import make_pair


def manifest_of(cells):
    return BenchmarkManifest.from_json_obj({
        "name": "test",
        "cells": [
            {"subset": s, "criterion": c, "language": l, "count": n}
            for (s, c, l), n in cells.items()
        ],
    })


SMALL = manifest_of({
    ("alpha", "FC", "Python"): 2,
    ("alpha", "SH", "Ruby"): 1,
    ("beta", "EE", "Go"): 3,
})


def pairs_for(manifest):
    pairs = []
    for (subset, criterion, language), count in sorted(manifest.cells.items(),
                                                       key=lambda kv: (kv[0][0], kv[0][1].name, kv[0][2].value)):
        for i in range(count):
            pairs.append(make_pair(
                f"{subset}-{criterion.name}-{language.value}-{i}",
                id=f"{subset}-{criterion.name}-{language.value}-{i}",
                subset=subset, criterion=criterion, language=language,
            ))
    return pairs


def test_exact_match_has_zero_deltas():
    ordered, report = assemble(pairs_for(SMALL), SMALL)
    assert report.clean
    assert report.actual_total == report.expected_total == 6
    assert len(ordered) == 6


def test_shortfall_is_flagged():
    pairs = pairs_for(SMALL)[:-2]
    _, report = assemble(pairs, SMALL)
    deltas = {(r.subset, r.criterion, r.language): r.delta for r in report.rows}
    assert deltas[("beta", Criterion.EE, Language.Go)] == -2
    assert not report.clean


def test_empty_input_all_deltas_negative_expected():
    _, report = assemble([], SMALL)
    assert all(r.delta == -r.expected for r in report.rows)
    assert report.actual_total == 0


def test_output_sorted_and_permutation_stable(rng):
    pairs = pairs_for(SMALL)
    shuffled = list(pairs)
    rng.shuffle(shuffled)
    out1, _ = assemble(pairs, SMALL)
    out2, _ = assemble(shuffled, SMALL)
    assert out1 == out2
    keys = [(p.criterion.name, p.language.value, p.subset, p.id) for p in out1]
    assert keys == sorted(keys)


def test_strict_unknown_subset():
    stray = make_pair(0, subset="gamma")
    with pytest.raises(UnknownSubset):
        assemble([stray], SMALL, strict=True)
    _, report = assemble([stray], SMALL, strict=False)
    extra = [r for r in report.rows if r.subset == "gamma"]
    assert extra and extra[0].expected == 0 and extra[0].actual == 1


def test_strict_cell_overflow():
    pairs = pairs_for(SMALL)
    extra = make_pair(99, id="overflow", subset="alpha", criterion=Criterion.FC,
                      language=Language.Python)
    with pytest.raises(CellOverflow):
        assemble(pairs + [extra], SMALL, strict=True)


def test_marginals_additivity():
    totals = audit_totals(SMALL)
    assert sum(totals["by_criterion"].values()) == totals["total"]
    assert sum(totals["by_language"].values()) == totals["total"]
    assert totals["by_criterion"]["FC"] == 2
    assert totals["by_language"]["Go"] == 3


def test_single_cell_marginals():
    m = manifest_of({("x", "FC", "Python"): 10})
    totals = audit_totals(m)
    assert totals["by_criterion"]["FC"] == 10
    assert totals["by_language"]["Python"] == 10


def test_negative_count_rejected():
    with pytest.raises(InvariantViolation):
        manifest_of({("x", "FC", "Python"): -1})


def test_duplicate_cell_rejected():
    with pytest.raises(InvariantViolation):
        BenchmarkManifest.from_json_obj({
            "name": "dupes",
            "cells": [
                {"subset": "x", "criterion": "FC", "language": "Python", "count": 1},
                {"subset": "x", "criterion": "FC", "language": "Python", "count": 2},
            ],
        })


def test_bundled_manifest_shape():
    m = BenchmarkManifest.bundled()
    assert len(m.subsets) == 19
    totals = audit_totals(m)
    assert totals["by_criterion"]["FC"] > totals["by_criterion"]["ME"]
    assert sum(totals["by_criterion"].values()) == m.total


def test_audit_csv(tmp_path):
    _, report = assemble(pairs_for(SMALL), SMALL)
    path = tmp_path / "audit.csv"
    report.write_csv(path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "subset,criterion,language,expected,actual,delta"
    assert lines[-1].startswith("TOTAL,")
