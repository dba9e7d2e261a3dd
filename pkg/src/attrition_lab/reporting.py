"""Report tables, plot-ready point files and static SVG renderings.

Every writer formats numbers explicitly and sorts its rows, so identical
inputs give identical bytes.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from . import io
from .errors import ConfigError
from .registrar import (
    FIRST_YEAR_QUARTERS,
    GRADUATION_WINDOW,
    MajorCatalog,
    classify_major_stem,
    is_stem_declaration,
    transcripts_by_student,
)

log = logging.getLogger(__name__)

TOP_DEGREES = 10
HEATMAP_COLUMNS = 20


# ---------------------------------------------------------------- degree destinations

def starting_programs(students, transcripts, majors) -> dict:
    """First STEM declaration in each student's first calendar year.

    Pre-majors map to their family name, majors to their display name.
    Students without a STEM declaration in year one are absent.
    """
    catalog = MajorCatalog.from_majors(majors)
    by_student = transcripts_by_student(transcripts)
    out = {}
    for s in students:
        start = s.first_enrollment.index
        entries = sorted(by_student.get(s.student_id, ()),
                         key=lambda e: (e.quarter.index, e.course_prefix, e.course_number))
        for e in entries:
            if e.quarter.index - start >= FIRST_YEAR_QUARTERS:
                break
            info = catalog[e.declared_major]
            if is_stem_declaration(info):
                out[s.student_id] = info.premajor_family if info.is_premajor else info.display_name
                break
    return out


def _nonstem_awards(labels, degrees, catalog, students, window):
    """(student_id, degree name) for non-STEM degrees held by STEM NCs within the window."""
    start = {s.student_id: s.first_enrollment.index for s in students}
    out = []
    for d in degrees:
        lab = labels.get(d.student_id)
        if lab is None or lab.is_stem_graduate or not lab.is_graduate:
            continue
        if d.quarter_awarded.index - start[d.student_id] > window:
            continue
        info = catalog[d.major_code]
        if not classify_major_stem(info):
            out.append((d.student_id, info.display_name))
    return sorted(set(out))


def _top(counter: Counter, k: int) -> list:
    return sorted(counter, key=lambda name: (-counter[name], name))[:k]


@dataclass
class DegreeTable:
    denominator: int  # graduating STEM NCs
    rows: list  # (degree, count, percent)

    def to_json(self) -> dict:
        return {"denominator": self.denominator,
                "rows": [{"degree": d, "count": c, "percent": p} for d, c, p in self.rows]}


def top_nonstem_degrees(labels, degrees, majors, students, k: int = TOP_DEGREES,
                        window: int = GRADUATION_WINDOW) -> DegreeTable:
    """Most common non-STEM degrees among STEM NCs.

    Percentages use all graduating STEM NCs as the denominator, so a student
    holding two non-STEM degrees counts toward both fields.
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    catalog = MajorCatalog.from_majors(majors)
    denominator = sum(1 for lab in labels.values() if lab.is_graduate and not lab.is_stem_graduate)
    counts = Counter(name for _, name in _nonstem_awards(labels, degrees, catalog, students, window))
    rows = [(name, counts[name], 100.0 * counts[name] / denominator) for name in _top(counts, k)]
    return DegreeTable(denominator, rows)


@dataclass
class HeatmapReport:
    rows: list  # starting programs
    columns: list  # destination degrees
    counts: list  # raw counts, rows x columns
    cells: list  # row-normalized proportions
    row_totals: list = field(default_factory=list)
    column_totals: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"rows": self.rows, "columns": self.columns, "counts": self.counts, "cells": self.cells,
                "row_totals": self.row_totals, "column_totals": self.column_totals}


def transition_heatmap(labels, first_year_majors, degrees, majors, students, k: int = HEATMAP_COLUMNS,
                       window: int = GRADUATION_WINDOW) -> HeatmapReport:
    """Starting STEM program versus non-STEM degree earned, normalized across each row.

    Only the ``k`` most frequent destinations are kept, and row totals count
    only students landing in those columns.
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    catalog = MajorCatalog.from_majors(majors)
    awards = [(sid, name) for sid, name in _nonstem_awards(labels, degrees, catalog, students, window)
              if sid in first_year_majors]
    columns = _top(Counter(name for _, name in awards), k)
    col_index = {c: j for j, c in enumerate(columns)}
    table = defaultdict(Counter)
    for sid, name in awards:
        if name in col_index:
            table[first_year_majors[sid]][name] += 1
    rows = sorted(table)
    counts = [[table[r][c] for c in columns] for r in rows]
    row_totals = [sum(r) for r in counts]
    cells = [[v / tot if tot else 0.0 for v in r] for r, tot in zip(counts, row_totals)]
    column_totals = [sum(counts[i][j] for i in range(len(rows))) for j in range(len(columns))]
    return HeatmapReport(rows, columns, counts, cells, row_totals, column_totals)


# ---------------------------------------------------------------- SVG

_W, _H, _PAD = 480, 320, 48


def _num(x: float) -> str:
    return f"{x:.2f}"


def _svg(body: list, title: str, width: int = _W, height: int = _H) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    parts = [head, f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>']
    return "\n".join(parts + body + ["</svg>", ""])


def _axes(x_label: str, y_label: str) -> list:
    x0, y0, x1, y1 = _PAD, _H - _PAD, _W - _PAD / 2, _PAD / 2 + 8
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{_num(x1)}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{_num(y1)}" stroke="black"/>',
        f'<text x="{_num((x0 + x1) / 2)}" y="{_H - 12}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="14" y="{_num((y0 + y1) / 2)}" transform="rotate(-90 14 {_num((y0 + y1) / 2)})" '
        f'text-anchor="middle">{escape(y_label)}</text>',
    ]


def _project(x, y, x_max, y_max):
    x0, y0 = _PAD, _H - _PAD
    w, h = _W - 1.5 * _PAD, _H - 2 * _PAD + _PAD / 2 - 8
    return x0 + w * (x / x_max if x_max else 0.0), y0 - h * (y / y_max if y_max else 0.0)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_svg(series: dict, title: str, x_label: str, y_label: str, x_max=None, y_max=None,
             threshold=None) -> str:
    """``series`` maps a name to a list of (x, y) points."""
    pts = [p for s in series.values() for p in s]
    x_max = x_max if x_max is not None else max((p[0] for p in pts), default=1.0)
    y_max = y_max if y_max is not None else max((p[1] for p in pts), default=1.0)
    body = _axes(x_label, y_label)
    if threshold is not None:
        ax, ay = _project(0, threshold, x_max, y_max)
        bx, _ = _project(x_max, threshold, x_max, y_max)
        body.append(f'<line x1="{_num(ax)}" y1="{_num(ay)}" x2="{_num(bx)}" y2="{_num(ay)}" '
                    f'stroke="green" stroke-dasharray="4 3"/>')
    for i, name in enumerate(sorted(series)):
        xy = " ".join(f"{_num(px)},{_num(py)}" for px, py in
                      (_project(x, y, x_max, y_max) for x, y in series[name]))
        color = _COLORS[i % len(_COLORS)]
        body.append(f'<polyline points="{xy}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        body.append(f'<text x="{_W - _PAD}" y="{40 + 14 * i}" text-anchor="end" fill="{color}">'
                    f'{escape(name)}</text>')
    return _svg(body, title)


def bar_svg(groups: dict, title: str, x_label: str, y_label: str) -> str:
    """``groups`` maps a series name to per-category counts (categories 1..n on the x axis)."""
    names = sorted(groups)
    n_cat = max((len(v) for v in groups.values()), default=0)
    y_max = max((v for vals in groups.values() for v in vals), default=0) or 1
    body = _axes(x_label, y_label)
    slot = (_W - 1.5 * _PAD) / max(n_cat, 1)
    width = slot * 0.8 / max(len(names), 1)
    for i, name in enumerate(names):
        color = _COLORS[i % len(_COLORS)]
        for c, v in enumerate(groups[name]):
            x = _PAD + c * slot + slot * 0.1 + i * width
            _, top = _project(0, v, 1, y_max)
            body.append(f'<rect x="{_num(x)}" y="{_num(top)}" width="{_num(width)}" '
                        f'height="{_num(_H - _PAD - top)}" fill="{color}"/>')
        body.append(f'<text x="{_W - _PAD}" y="{40 + 14 * i}" text-anchor="end" fill="{color}">'
                    f'{escape(name)}</text>')
    for c in range(n_cat):
        body.append(f'<text x="{_num(_PAD + (c + 0.5) * slot)}" y="{_H - _PAD + 12}" '
                    f'text-anchor="middle">{c + 1}</text>')
    return _svg(body, title)


def heatmap_svg(report: HeatmapReport, title: str) -> str:
    cell, left, top = 18, 150, 150
    width = left + cell * max(len(report.columns), 1) + 20
    height = top + cell * max(len(report.rows), 1) + 20
    body = []
    for j, c in enumerate(report.columns):
        x = left + cell * j + cell / 2
        body.append(f'<text x="{_num(x)}" y="{top - 6}" transform="rotate(-60 {_num(x)} {top - 6})">'
                    f'{escape(c)}</text>')
    for i, r in enumerate(report.rows):
        y = top + cell * i
        body.append(f'<text x="{left - 6}" y="{_num(y + cell * 0.7)}" text-anchor="end">{escape(r)}</text>')
        for j, v in enumerate(report.cells[i]):
            shade = int(round(255 * (1.0 - v)))
            body.append(f'<rect x="{left + cell * j}" y="{y}" width="{cell}" height="{cell}" '
                        f'fill="rgb({shade},{shade},255)" stroke="#ccc"/>')
    return _svg(body, title, width, height)


# ---------------------------------------------------------------- emitting

@dataclass
class ReportInputs:
    """Everything the report writer can use; absent pieces are skipped."""

    cohort_rows: list = None  # from registrar.cohort_summary
    models: dict = None  # kind -> {"report": EvalReport, "hyperparameters": dict}
    scan_rows: list = None  # learners.scan.ScanRow
    degree_table: DegreeTable = None
    heatmap: HeatmapReport = None
    affinity: object = None  # affinity.AffinityResult
    case_study: str = None  # student id for the single-trace plot
    input_fingerprints: dict = field(default_factory=dict)


def _write_svg(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _fp(x) -> str:
    return io.fmt_prob(x)


def pick_case_study(traces):
    """First student (by id) with exactly one switch, out of STEM, or None."""
    for t in sorted(traces, key=lambda t: t.student_id):
        if len(t.switches) == 1 and t.switches[0][1] == "out_of_stem":
            return t.student_id
    return None


def emit_reports(out_dir, inputs: ReportInputs) -> dict:
    """Write tables/, plots/ and manifest.json; returns the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    tables, plots = out / "tables", out / "plots"
    files = []

    if inputs.cohort_rows is not None:
        cols = ["section", "category", "stem_grads", "stem_ncs", "grad_rate"]
        files.append(io.write_rows(tables / "cohort_summary.csv", cols,
                                   ([r["section"], r["category"], r["stem_grads"], r["stem_ncs"],
                                     _fp(r["grad_rate"])] for r in inputs.cohort_rows)))
        files.append(io.write_json(tables / "cohort_summary.json", inputs.cohort_rows))

    if inputs.models:
        kinds = sorted(inputs.models)
        files.append(io.write_rows(
            tables / "model_comparison.csv", ["model", "accuracy", "auroc", "f1", "n_test", "hyperparameters"],
            ([k, _fp(inputs.models[k]["report"].accuracy), _fp(inputs.models[k]["report"].auroc),
              _fp(inputs.models[k]["report"].f1), inputs.models[k]["report"].n,
              json.dumps(inputs.models[k]["hyperparameters"], sort_keys=True)] for k in kinds)))
        files.append(io.write_json(tables / "model_comparison.json",
                                   {k: {"metrics": inputs.models[k]["report"].to_json(),
                                        "hyperparameters": inputs.models[k]["hyperparameters"]} for k in kinds}))
        series = {}
        for k in kinds:
            pts = inputs.models[k]["report"].roc_points
            series[k] = pts
            files.append(io.write_rows(plots / f"roc_{k}.csv", ["fpr", "tpr"],
                                       ([_fp(x), _fp(y)] for x, y in pts)))
        files.append(_write_svg(plots / "roc.svg", line_svg(series, "ROC", "false positive rate",
                                                            "true positive rate", 1.0, 1.0)))

    if inputs.scan_rows is not None:
        files.append(io.write_rows(
            tables / "single_feature_scan.csv",
            ["rank", "feature", "accuracy", "auroc", "f1", "slope", "intercept", "constant"],
            ([r.rank, r.feature, _fp(r.accuracy), _fp(r.auroc), _fp(r.f1), _fp(r.slope), _fp(r.intercept),
              int(r.constant)] for r in inputs.scan_rows)))

    if inputs.degree_table is not None:
        dt = inputs.degree_table
        files.append(io.write_rows(tables / "top_nonstem_degrees.csv", ["degree", "count", "percent", "denominator"],
                                   ([d, c, _fp(p), dt.denominator] for d, c, p in dt.rows)))
        files.append(io.write_json(tables / "top_nonstem_degrees.json", dt.to_json()))

    if inputs.heatmap is not None:
        hm = inputs.heatmap
        files.append(io.write_rows(
            tables / "transition_heatmap.csv", ["start", "degree", "count", "row_total", "proportion"],
            ([r, c, hm.counts[i][j], hm.row_totals[i], _fp(hm.cells[i][j])]
             for i, r in enumerate(hm.rows) for j, c in enumerate(hm.columns))))
        files.append(io.write_json(tables / "transition_heatmap.json", hm.to_json()))
        files.append(_write_svg(plots / "transition_heatmap.svg", heatmap_svg(hm, "Starting program to degree")))

    if inputs.affinity is not None:
        res = inputs.affinity
        c = res.curves
        files.append(io.write_rows(plots / "affinity_proportion.csv", ["quarter", "stem_proportion"],
                                   ([q + 1, _fp(p)] for q, p in enumerate(c.stem_proportion))))
        files.append(_write_svg(plots / "affinity_proportion.svg", line_svg(
            {f"{c.duration}-quarter students": [(q + 1, p) for q, p in enumerate(c.stem_proportion)]},
            "Share with STEM intent", "quarter", "proportion", max(c.duration, 1), 1.0)))
        files.append(io.write_rows(plots / "switch_counts.csv", ["quarter", "into_stem", "out_of_stem"],
                                   ([q + 1, i, o] for q, (i, o) in enumerate(zip(c.into_stem, c.out_of_stem)))))
        files.append(_write_svg(plots / "switch_counts.svg", bar_svg(
            {"into_stem": c.into_stem, "out_of_stem": c.out_of_stem}, "Switches by quarter", "quarter",
            "students")))
        acc, rec, prec = res.validation
        files.append(io.write_json(tables / "affinity_validation.json",
                                   {"accuracy": acc, "recall": rec, "precision": prec,
                                    "n_students": len(res.traces)}))
        sid = inputs.case_study or pick_case_study(res.traces)
        trace = next((t for t in res.traces if t.student_id == sid), None)
        if trace is not None:
            files.append(io.write_rows(plots / "case_study_trace.csv", ["student_id", "quarter", "gamma", "label"],
                                       ([trace.student_id, q + 1, _fp(g), "stem" if lab else "nonstem"]
                                        for q, (g, lab) in enumerate(zip(trace.affinities, trace.intent_labels)))))
            files.append(_write_svg(plots / "case_study_trace.svg", line_svg(
                {trace.student_id: [(q + 1, g) for q, g in enumerate(trace.affinities)]},
                "STEM affinity", "quarter", "affinity", trace.length, 1.0, threshold=0.5)))

    manifest = {
        "inputs": dict(sorted(inputs.input_fingerprints.items())),
        "files": {str(Path(f).relative_to(out).as_posix()): io.file_digest(f) for f in sorted(files)},
    }
    io.write_json(out / "manifest.json", manifest)
    return manifest
