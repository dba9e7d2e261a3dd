import csv
import json
import subprocess
import sys

import pytest

from attrition_lab import io
from attrition_lab.cli import DEFAULTS, EXIT_CODES, config_hash, load_config, main
from attrition_lab.errors import ConfigError

FAST = {
    "data": {"synth": {"n_students": 900, "seed": 3}},
    "seed": 1,
    "workers": 1,
    "models": {"grids": {
        "logreg": {"l2": [0.1, 1.0]},
        "random_forest": {"max_depth": [4], "n_trees": [20]},
        "gbt": {"max_depth": [2], "learning_rate": [0.1], "n_trees": [40]},
        "ada_logreg": {"stages": [3]},
    }},
    "affinity": {"grid": [0.5, 0.9, 0.99, 0.999]},
}


def write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return path


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = write_config(base / "config.json", FAST)
    assert main(["all", "--config", str(cfg), "--out", str(base / "run1")]) == 0
    return base, cfg


def test_all_writes_expected_layout(full_run):
    base, _ = full_run
    out = base / "run1"
    for rel in ["data/students.csv", "data/manifest.json", "label/labels.csv", "label/cohort_summary.csv",
                "features/features.csv", "features/registry.json", "train/split.json", "train/metrics.json",
                "train/logreg/model.json", "train/gbt/tuning.json", "train/ada_logreg/eval_report.json",
                "train/random_forest/roc_points.csv", "scan/single_feature_scan.csv",
                "affinity/affinity_model.json", "affinity/traces.csv", "affinity/switch_counts.csv",
                "report/manifest.json", "report/tables/model_comparison.csv", "report/plots/roc.svg",
                "manifest.json"]:
        assert (out / rel).exists(), rel
    man = io.read_json(out / "manifest.json")
    assert man["command"] == "all" and "out" not in man["config"]
    for rel, digest in man["outputs"].items():
        assert io.file_digest(out / rel) == digest
    ada = io.read_json(out / "train" / "ada_logreg" / "model.json")
    lr = io.read_json(out / "train" / "logreg" / "model.json")
    assert ada["hyperparameters"]["l2"] == lr["hyperparameters"]["l2"]


def test_rerun_is_byte_identical_across_workers(full_run):
    base, cfg = full_run
    assert main(["all", "--config", str(cfg), "--out", str(base / "run2"), "--workers", "3"]) == 0
    assert tree_bytes(base / "run1") == tree_bytes(base / "run2")


def test_steps_one_by_one_match_all(full_run):
    base, cfg = full_run
    out = str(base / "steps")
    for step in ("synth", "label", "features", "train", "scan", "affinity", "report"):
        assert main([step, "--config", str(cfg), "--out", out]) == 0
    a, b = tree_bytes(base / "run1"), tree_bytes(base / "steps")
    a.pop("manifest.json")
    b.pop("manifest.json")
    assert a == b


def test_iterative_mode_logs_monotone_likelihood(full_run):
    base, cfg = full_run
    out = base / "iter"
    assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["affinity", "--config", str(cfg), "--out", str(out), "--mode", "iterative"]) == 0
    with open(out / "affinity" / "iterations.csv") as fh:
        rows = list(csv.DictReader(fh))
    lls = [float(r["log_likelihood"]) for r in rows]
    assert len(lls) >= 2 and all(b >= a for a, b in zip(lls, lls[1:]))
    assert float(rows[-1]["improvement"]) < 0.5
    assert io.read_json(out / "affinity" / "affinity_model.json")["fit"]["mode"] == "iterative"


def test_precondition_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", FAST)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES["precondition"]
    err = capsys.readouterr().err
    assert "[precondition]" in err and "features" in err


@pytest.mark.parametrize("content", ["{not json", json.dumps({"data": {"synth": {}}, "colour": 1}),
                                     json.dumps({"data": {"synth": {}, "files": {}}}),
                                     json.dumps({"data": {"synth": {"stem_prior": 2}}}),
                                     json.dumps({"data": {"synth": {}}, "affinity": {"mode": "loop"}})])
def test_config_errors_exit_2(tmp_path, content):
    p = tmp_path / "c.json"
    p.write_text(content)
    assert main(["label", "--config", str(p)]) == EXIT_CODES["config"]


def test_missing_config_file(tmp_path):
    assert main(["all", "--config", str(tmp_path / "absent.json")]) == 2


def test_dataset_integrity_exit_code(tmp_path, full_run):
    base, _ = full_run
    data = tmp_path / "data"
    data.mkdir()
    for name in io.DATASET_FILES.values():
        (data / name).write_bytes((base / "run1" / "data" / name).read_bytes())
    tx = (data / "transcripts.csv").read_text().splitlines()
    cols = tx[0].split(",")
    row = tx[1].split(",")
    row[cols.index("declared_major")] = "NOSUCH"
    (data / "transcripts.csv").write_text("\n".join([tx[0], ",".join(row)] + tx[2:]) + "\n")
    cfg = write_config(tmp_path / "c.json", {"data": {"files": {"dir": "data"}}})
    assert main(["label", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES["dataset-integrity"]


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    cfg = write_config(tmp_path / "c.json", {"data": {"synth": {"n_students": 20}}})
    assert main(["synth", "--config", str(cfg), "--out", str(blocker / "out")]) == EXIT_CODES["io"]


def test_files_paths_resolve_against_config_dir(tmp_path, full_run):
    base, _ = full_run
    sub = tmp_path / "cfgdir"
    sub.mkdir()
    cfg = load_config(write_config(sub / "c.json", {"data": {"files": {"dir": str(base / "run1" / "data")}}}))
    assert cfg["data"]["files"]["dir"] == str(base / "run1" / "data")
    with pytest.raises(ConfigError):
        load_config(write_config(sub / "d.json", {"data": {"files": {"dir": "nowhere"}}}))


def test_overrides_and_hash(tmp_path):
    p = write_config(tmp_path / "c.json", FAST)
    a = load_config(p, {"out": "x", "workers": 4})
    b = load_config(p, {"out": "y", "workers": 1})
    c = load_config(p, {"seed": 9})
    assert config_hash(a) == config_hash(b) != config_hash(c)
    assert c["seed"] == 9 and a["affinity"]["penalty"] == DEFAULTS["affinity"]["penalty"]
    assert load_config(p, {"affinity.mode": "iterative"})["affinity"]["mode"] == "iterative"


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "attrition_lab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
    proc = subprocess.run([sys.executable, "-m", "attrition_lab.cli", "label", "--config",
                           str(tmp_path / "missing.json")], capture_output=True, text=True)
    assert proc.returncode == 2 and "error [config]" in proc.stderr
