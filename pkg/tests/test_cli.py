import json
from pathlib import Path

import numpy as np
import pytest

from themis.cli import main
from themis.config import ConfigError, load_config
from themis.records import read_jsonl, write_jsonl
from themis.scorer import FEATURE_DIM, ToyRewardModel, extract_features
from conftest import make_commit, make_pair


def write_pairs(path, pairs):
    write_jsonl(path, pairs)
    return path


def test_filter_happy_path(tmp_path):
    src = write_pairs(tmp_path / "in.jsonl", [make_pair(i) for i in range(5)])
    out = tmp_path / "out.jsonl"
    assert main(["filter", "--in", str(src), "--out", str(out)]) == 0
    assert out.exists()
    assert len(list(read_jsonl(out))) == 5
    manifest = json.loads((tmp_path / "out.jsonl.manifest.json").read_text())
    assert manifest["config_hash"] == "defaults"
    assert str(src) in manifest["input_hashes"]
    assert "created_at" in manifest
    rejects = tmp_path / "out.rejects.jsonl"
    assert rejects.exists()


def test_mine_happy_path(tmp_path):
    commits = [make_commit(i) for i in range(3)] + [make_commit(9, stars=1)]
    src = tmp_path / "commits.jsonl"
    write_jsonl(src, commits)
    out = tmp_path / "pairs.jsonl"
    assert main(["mine", "--in", str(src), "--out", str(out)]) == 0
    pairs = list(read_jsonl(out))
    assert len(pairs) == 3
    rejects = [json.loads(l) for l in (tmp_path / "pairs.rejects.jsonl").read_text().splitlines()[1:]]
    assert rejects[0]["reason"] == "stars"


def test_assemble_with_bundled_manifest(tmp_path):
    src = write_pairs(tmp_path / "in.jsonl", [make_pair(i, subset="HumanEvalPack") for i in range(3)])
    out = tmp_path / "out.jsonl"
    audit = tmp_path / "audit.csv"
    assert main(["assemble", "--in", str(src), "--out", str(out), "--audit", str(audit)]) == 0
    assert audit.read_text().splitlines()[0].startswith("subset,")


def _toy_weights_path(tmp_path):
    weights = np.zeros(FEATURE_DIM + 1)
    for pair in [make_pair(i, chosen=f"sol {i} goodmarker", rejected=f"sol {i} badmarker") for i in range(4)]:
        phi = extract_features(None, pair.task_prompt, pair.chosen)
        for idx in phi:
            weights[idx] = 1.0
    model = ToyRewardModel(weights=weights)
    path = tmp_path / "weights.json"
    model.save(path)
    return path


def test_eval_with_toy_scorer(tmp_path):
    pairs = [make_pair(i, chosen=f"sol {i} goodmarker", rejected=f"sol {i} badmarker") for i in range(4)]
    bench = write_pairs(tmp_path / "bench.jsonl", pairs)
    weights = _toy_weights_path(tmp_path)
    report = tmp_path / "report.md"
    csv_out = tmp_path / "report.csv"
    code = main(["eval", "--bench", str(bench), "--scorer", f"toy:{weights}",
                 "--out", str(report), "--csv", str(csv_out)])
    assert code == 0
    assert "Pairwise preference accuracy" in report.read_text()
    assert csv_out.read_text().startswith("section,key,value")


def test_train_toy_cli(tmp_path):
    pairs = [make_pair(i, chosen=f"base {i} goodmarker", rejected=f"base {i} badmarker")
             for i in range(30)]
    data = write_pairs(tmp_path / "train.jsonl", pairs)
    out = tmp_path / "weights.json"
    curve = tmp_path / "curve.csv"
    code = main(["train-toy", "--stage", "pm", "--data", str(data),
                 "--out", str(out), "--curve", str(curve)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["cfg"]["stage"] == "PM"
    assert curve.read_text().startswith("epoch,")


def test_report_subcommand(tmp_path, capsys):
    assert main(["report"]) == 0
    text = capsys.readouterr().out
    assert "Total: " in text


def test_missing_input_file_is_validation_error(tmp_path):
    code = main(["filter", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o.jsonl")])
    assert code == 1


def test_bad_config_key_names_path(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[filter]\nbogus_key = 1\n")
    code = main(["--config", str(cfg), "filter", "--in", "x", "--out", "y"])
    assert code == 1
    assert "filter.bogus_key" in capsys.readouterr().err


def test_unknown_scorer_spec(tmp_path):
    bench = write_pairs(tmp_path / "b.jsonl", [make_pair(0)])
    code = main(["eval", "--bench", str(bench), "--scorer", "magic:thing",
                 "--out", str(tmp_path / "r.md")])
    assert code == 1


def test_unreachable_endpoint_is_runtime_error(tmp_path):
    bench = write_pairs(tmp_path / "b.jsonl", [make_pair(0)])
    code = main(["eval", "--bench", str(bench),
                 "--scorer", "http:http://127.0.0.1:1", "--out", str(tmp_path / "r.md")])
    assert code == 2


def test_config_loading(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text(
        "rng_seed = 7\n"
        "[mining]\nmin_stars = 20\ndate_from = 2019-06-01\ndate_to = 2021-01-31\n"
        "[filter]\nmax_tokens = 2560\n"
        "[train]\nstage = \"pt\"\nlr = 0.2\n"
    )
    cfg = load_config(cfg_file)
    assert cfg.rng_seed == 7
    assert cfg.mining.min_stars == 20
    assert cfg.filter.max_tokens == 2560
    assert cfg.filter.rng_seed == 7  # global seed propagates
    assert cfg.train.loss_config().stage == "PT"


def test_config_unknown_section():
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".toml", delete=False) as fh:
        fh.write("[mystery]\nx = 1\n")
        path = fh.name
    with pytest.raises(ConfigError, match="mystery"):
        load_config(path)


def test_config_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/does/not/exist.toml")


def test_config_bad_mode(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[eval]\ncriteria_mode = \"sometimes\"\n")
    with pytest.raises(ConfigError, match="eval.criteria_mode"):
        load_config(cfg)


def test_seed_flag_overrides_config(tmp_path):
    src = write_pairs(tmp_path / "in.jsonl", [make_pair(0)])
    out = tmp_path / "out.jsonl"
    assert main(["--seed", "99", "filter", "--in", str(src), "--out", str(out)]) == 0
    manifest = json.loads((tmp_path / "out.jsonl.manifest.json").read_text())
    assert manifest["seed"] == 99
