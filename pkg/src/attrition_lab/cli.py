"""``attrition-lab`` command-line entry point.

Configuration is one JSON document. Command-line flags override the matching
keys (``--out`` -> ``out``, ``--seed`` -> ``seed``, ``--workers`` -> ``workers``,
``--mode`` -> ``affinity.mode``), and keys missing from the file take the
defaults in :data:`DEFAULTS`.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, io
from . import affinity as aff
from . import reporting
from .errors import (
    AttritionLabError,
    ConfigError,
    DatasetIntegrityError,
    NumericalError,
    PreconditionError,
)
from .features import build_matrix
from .features.matrix import FeatureMatrix
from .learners import DEFAULT_GRIDS, KINDS, EvalReport, ScanRow, evaluate, make_split, single_feature_scan, train, tune
from .registrar import GRADUATION_WINDOW, cohort_summary, label_cohort
from .synth import SynthConfig, generate, write_synth

log = logging.getLogger("attrition_lab")

EXIT_OK = 0
EXIT_CODES = {
    "unexpected": 1,
    "config": 2,
    "dataset-integrity": 3,
    "numerical": 4,
    "precondition": 5,
    "io": 6,
}

SUBCOMMANDS = ("synth", "label", "features", "train", "scan", "affinity", "report", "all")
PIPELINE = ("synth", "label", "features", "train", "scan", "affinity", "report")

DEFAULTS = {
    "data": None,
    "out": "attrition_run",
    "seed": 0,
    "workers": None,
    "window": GRADUATION_WINDOW,
    "features": {"prefix_min_students": 6, "campus": [47.6553, -122.3035]},
    "models": {"kinds": list(KINDS), "grids": {}},
    "affinity": {"cohort_year": None, "penalty": aff.DEFAULT_SWITCH_PENALTY, "grid": None, "mode": "single",
                 "duration": aff.DEFAULT_DURATION, "switch_quarters": aff.DEFAULT_SWITCH_QUARTERS,
                 "threshold": aff.ITERATION_THRESHOLD},
    "report": {"top_degrees": reporting.TOP_DEGREES, "heatmap_columns": reporting.HEATMAP_COLUMNS,
               "case_study": None},
}

# settings that do not influence any output, left out of the config hash
_UNHASHED = ("out", "workers")


# ---------------------------------------------------------------- configuration

def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides=None) -> dict:
    raw = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base_dir = path.resolve().parent
    cfg = _merge(DEFAULTS, raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    return validate_config(cfg, base_dir)


def validate_config(cfg: dict, base_dir: Path) -> dict:
    data = cfg["data"]
    if not isinstance(data, dict) or len(data) != 1 or next(iter(data)) not in ("synth", "files"):
        raise ConfigError('config "data" needs exactly one of {"synth": {...}} or {"files": {...}}')
    if "synth" in data:
        SynthConfig.from_dict(data["synth"] or {})  # validates
    else:
        files = data["files"]
        if not isinstance(files, dict):
            raise ConfigError('"data.files" must be an object')
        allowed = set(io.DATASET_FILES) | {"dir"}
        unknown = set(files) - allowed
        if unknown:
            raise ConfigError(f"unknown data.files keys: {sorted(unknown)}")
        resolved = {}
        for key, value in files.items():
            p = Path(value)
            resolved[key] = str(p if p.is_absolute() else (base_dir / p))
        for key in io.DATASET_FILES:
            if key == "zip_attrs":
                continue
            target = Path(resolved[key]) if key in resolved else (
                Path(resolved["dir"]) / io.DATASET_FILES[key] if "dir" in resolved else None)
            if target is None or not target.exists():
                raise ConfigError(f"input file for {key!r} not found: {target}")
        data["files"] = resolved
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if cfg["workers"] is not None and (not isinstance(cfg["workers"], int) or cfg["workers"] < 1):
        raise ConfigError("workers must be a positive integer")
    kinds = cfg["models"]["kinds"]
    if not kinds or any(k not in KINDS for k in kinds):
        raise ConfigError(f"model kinds must be drawn from {list(KINDS)}")
    if set(cfg["models"]["grids"]) - set(KINDS):
        raise ConfigError("grids given for unknown model kinds")
    a = cfg["affinity"]
    if a["mode"] not in ("single", "iterative"):
        raise ConfigError('affinity.mode must be "single" or "iterative"')
    if a["penalty"] < 0:
        raise ConfigError("affinity.penalty must be non-negative")
    return cfg


def config_hash(cfg: dict) -> str:
    hashed = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    return hashlib.sha256(json.dumps(hashed, sort_keys=True).encode()).hexdigest()


def _workers(cfg) -> int:
    return cfg["workers"] or os.cpu_count() or 1


def _cohort_year(cfg) -> int:
    year = cfg["affinity"]["cohort_year"]
    if year is not None:
        return int(year)
    if "synth" in cfg["data"]:
        return SynthConfig.from_dict(cfg["data"]["synth"] or {}).cohort_years[0]
    return 2004


# ---------------------------------------------------------------- steps

class Run:
    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.written = []
        self._dataset = None

    def path(self, *parts) -> Path:
        return self.out.joinpath(*parts)

    def need(self, *paths, step):
        missing = [str(p) for p in paths if not Path(p).exists()]
        if missing:
            raise PreconditionError(f"missing {', '.join(missing)}; run `{step}` first")

    def record(self, *paths):
        self.written.extend(Path(p) for p in paths if p is not None)

    def dataset(self):
        if self._dataset is None:
            data = self.cfg["data"]
            if "synth" in data:
                d = self.path("data")
                self.need(d / io.DATASET_FILES["students"], step="synth")
                self._dataset = io.read_dataset(d)
            else:
                files = dict(data["files"])
                directory = files.pop("dir", None)
                self._dataset = io.read_dataset(directory, files)
        return self._dataset

    def labels(self):
        p = self.path("label", "labels.csv")
        self.need(p, step="label")
        return io.read_labels(p)

    def matrix(self):
        d = self.path("features")
        self.need(d / "features.csv", d / "registry.json", step="features")
        return FeatureMatrix.read(d)

    def split(self, matrix):
        labels = dict(zip(matrix.student_ids, matrix.label.tolist()))
        return make_split(matrix.student_ids, self.cfg["seed"], labels=labels)

    # -- subcommands

    def synth(self):
        data = self.cfg["data"]
        if "synth" not in data:
            raise ConfigError("`synth` needs a data.synth section")
        config = SynthConfig.from_dict(data["synth"] or {})
        output = generate(config)
        manifest = write_synth(self.path("data"), output, config)
        self.record(*(self.path("data", name) for name in manifest["files"]), self.path("data", "manifest.json"))
        self._dataset = None  # later steps read the written CSVs, as a separate invocation would

    def label(self):
        ds = self.dataset()
        labels = label_cohort(ds.students, ds.transcripts, ds.degrees, ds.majors, self.cfg["window"])
        if not labels:
            raise DatasetIntegrityError("no STEM students found in the dataset")
        rows = cohort_summary(labels, ds.students)
        self.record(
            io.write_labels(self.path("label", "labels.csv"), labels),
            io.write_rows(self.path("label", "cohort_summary.csv"),
                          ["section", "category", "stem_grads", "stem_ncs", "grad_rate"],
                          ([r["section"], r["category"], r["stem_grads"], r["stem_ncs"],
                            io.fmt_prob(r["grad_rate"])] for r in rows)),
        )

    def features(self):
        labels = self.labels()
        ds = self.dataset()
        fcfg = self.cfg["features"]
        matrix = build_matrix(ds.students, ds.transcripts, ds.majors, ds.zip_attrs, labels,
                              campus_coords=tuple(fcfg["campus"]),
                              prefix_min_students=fcfg["prefix_min_students"])
        matrix.write(self.path("features"))
        self.record(self.path("features", "features.csv"), self.path("features", "registry.json"))

    def train(self):
        matrix = self.matrix()
        split = self.split(matrix)
        seed = self.cfg["seed"]
        self.record(io.write_json(self.path("train", "split.json"), split.to_json()))
        metrics = {}
        grids = self.cfg["models"]["grids"]
        kinds = self.cfg["models"]["kinds"]
        best_l2 = None
        # plain logreg goes first: ada-boost's weak learners reuse its tuned strength
        for kind in sorted(kinds, key=lambda k: k != "logreg"):
            grid = grids.get(kind)
            if kind == "ada_logreg" and (grid is None or "l2" not in grid):
                if best_l2 is None:
                    best_l2 = tune(matrix, split, "logreg", grids.get("logreg"), seed=seed,
                                   workers=_workers(self.cfg), keep_predictions=False).best["l2"]
                grid = {**(grid or DEFAULT_GRIDS["ada_logreg"]), "l2": [best_l2]}
            result = tune(matrix, split, kind, grid, seed=seed, workers=_workers(self.cfg), keep_predictions=False)
            if kind == "logreg":
                best_l2 = result.best["l2"]
            artifact = train(matrix, split.train_ids, kind, result.best, seed=seed)
            report = evaluate(artifact, matrix, split.test_ids)
            metrics[kind] = {"metrics": report.to_json(), "hyperparameters": artifact.hyperparameters}
            log.info("%s: best %s, test AUROC %.4f", kind, result.best, report.auroc)
            self.record(io.write_json(self.path("train", kind, "model.json"), artifact.to_json()),
                        io.write_json(self.path("train", kind, "tuning.json"), result.to_json()),
                        io.write_json(self.path("train", kind, "eval_report.json"), report.to_json()),
                        io.write_rows(self.path("train", kind, "roc_points.csv"), ["fpr", "tpr"],
                                      ([io.fmt_prob(x), io.fmt_prob(y)] for x, y in report.roc_points)))
        self.record(io.write_json(self.path("train", "metrics.json"), metrics))

    def scan(self):
        matrix = self.matrix()
        rows = single_feature_scan(matrix, self.split(matrix))
        self.record(io.write_rows(
            self.path("scan", "single_feature_scan.csv"),
            ["rank", "feature", "accuracy", "auroc", "f1", "slope", "intercept", "constant"],
            ([r.rank, r.feature, io.fmt_prob(r.accuracy), io.fmt_prob(r.auroc), io.fmt_prob(r.f1),
              io.fmt_prob(r.slope), io.fmt_prob(r.intercept), int(r.constant)] for r in rows)))

    def affinity(self):
        ds = self.dataset()
        a = self.cfg["affinity"]
        data = aff.affinity_dataset(ds.students, ds.transcripts, ds.degrees, ds.majors, _cohort_year(self.cfg),
                                    self.cfg["window"])
        grid = None if a["grid"] is None else [int(round(1000 * g)) for g in a["grid"]]
        result = aff.fit_affinity(data, a["penalty"], grid, a["mode"], a["duration"], a["switch_quarters"],
                                  workers=_workers(self.cfg), threshold=a["threshold"])
        self.record(*aff.write_affinity(self.path("affinity"), result))

    def report(self):
        labels = self.labels()
        ds = self.dataset()
        r = self.cfg["report"]
        inputs = reporting.ReportInputs(cohort_rows=cohort_summary(labels, ds.students))
        inputs.degree_table = reporting.top_nonstem_degrees(labels, ds.degrees, ds.majors, ds.students,
                                                            r["top_degrees"], self.cfg["window"])
        starts = reporting.starting_programs(ds.students, ds.transcripts, ds.majors)
        inputs.heatmap = reporting.transition_heatmap(labels, starts, ds.degrees, ds.majors, ds.students,
                                                      r["heatmap_columns"], self.cfg["window"])
        metrics = self.path("train", "metrics.json")
        if metrics.exists():
            inputs.models = {k: {"report": EvalReport(**v["metrics"]), "hyperparameters": v["hyperparameters"]}
                             for k, v in io.read_json(metrics).items()}
        scan = self.path("scan", "single_feature_scan.csv")
        if scan.exists():
            inputs.scan_rows = read_scan(scan)
        traces = self.path("affinity", "traces.csv")
        if traces.exists():
            a = self.cfg["affinity"]
            inputs.affinity = aff.read_affinity_summary(self.path("affinity"), a["duration"], a["switch_quarters"])
        inputs.case_study = r["case_study"]
        fingerprints = {}
        for name in ("label/labels.csv", "features/registry.json", "train/metrics.json",
                     "scan/single_feature_scan.csv", "affinity/affinity_model.json"):
            p = self.path(*name.split("/"))
            if p.exists():
                fingerprints[name] = io.file_digest(p)
        inputs.input_fingerprints = fingerprints
        manifest = reporting.emit_reports(self.path("report"), inputs)
        self.record(*(self.path("report", f) for f in manifest["files"]), self.path("report", "manifest.json"))

    def manifest(self, command: str) -> dict:
        cfg = {k: v for k, v in self.cfg.items() if k not in _UNHASHED}
        files = {}
        for p in sorted(set(self.written)):
            files[p.relative_to(self.out).as_posix()] = io.file_digest(p)
        data = self.cfg["data"]
        seeds = {"split": self.cfg["seed"], "models": self.cfg["seed"]}
        if "synth" in data:
            seeds["synth"] = SynthConfig.from_dict(data["synth"] or {}).seed
        doc = {"command": command, "version": __version__, "config": cfg, "config_hash": config_hash(self.cfg),
               "seeds": seeds, "outputs": files}
        io.write_json(self.out / "manifest.json", doc)
        return doc


def read_scan(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [ScanRow(r["feature"], i, float(r["accuracy"]), float(r["auroc"]), float(r["f1"]), float(r["slope"]),
                    float(r["intercept"]), r["constant"] == "1", int(r["rank"])) for i, r in enumerate(rows)]


def run(command: str, cfg: dict) -> dict:
    """Execute a subcommand (``all`` runs the pipeline in order); returns the manifest."""
    if command not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {command!r}")
    r = Run(cfg)
    steps = PIPELINE if command == "all" else (command,)
    if command == "all" and "synth" not in cfg["data"]:
        steps = steps[1:]
    for step in steps:
        log.info("running %s", step)
        getattr(r, step)()
    return r.manifest(command)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attrition-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides config 'out')")
        p.add_argument("--seed", type=int, help="split and model seed (overrides config 'seed')")
        p.add_argument("--workers", type=int, help="parallel workers (overrides config 'workers')")
        if name in ("affinity", "all"):
            p.add_argument("--mode", choices=("single", "iterative"), help="affinity estimation mode")
    return parser


def _category(exc) -> str:
    if isinstance(exc, AttritionLabError):
        return exc.category
    if isinstance(exc, OSError):
        return "io"
    return "unexpected"


def main(argv=None) -> int:
    level = os.environ.get("ATTRITION_LAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"out": args.out, "seed": args.seed, "workers": args.workers,
                                        "affinity.mode": getattr(args, "mode", None)})
        run(args.command, cfg)
    except (AttritionLabError, OSError) as exc:
        category = _category(exc)
        print(f"attrition-lab: error [{category}]: {exc}", file=sys.stderr)
        return EXIT_CODES[category]
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
