import random
from datetime import datetime, timezone

import pytest

from themis.records import CommitRecord, Criterion, Language, PreferencePair


def make_pair(i=0, **overrides):
    defaults = dict(
        id=f"pair-{i}",
        task_prompt=f"Implement widget number {i} that parses the input safely",
        chosen=f"def widget_{i}():\n    return parse(input())\n",
        rejected=f"def widget_{i}():\n    return eval(input())\n",
        criterion=Criterion.SH,
        language=Language.Python,
        subset="synthetic",
    )
    defaults.update(overrides)
    return PreferencePair(**defaults)


def make_commit(i=0, **overrides):
    defaults = dict(
        commit_sha=f"{i:040x}",
        repo=f"org/repo-{i % 7}",
        license="mit",
        language=Language.Python,
        message="fix memory leak in the parser cache",
        old_file="def parse():\n    data = load_all()\n    return data\n",
        new_file="def parse():\n    for chunk in load_chunks():\n        yield chunk\n",
        authored_at=datetime(2020, 3, 1, tzinfo=timezone.utc),
        stars=100,
        contributors=12,
        issues=40,
        merged_pr=True,
        reverted=False,
    )
    defaults.update(overrides)
    return CommitRecord(**defaults)


@pytest.fixture
def rng():
    return random.Random(1234)
