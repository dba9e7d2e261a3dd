"""Assembly of the student-by-feature matrix from first-year transcripts."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .. import io
from ..errors import ConfigError, DatasetIntegrityError
from ..registrar import FIRST_YEAR_QUARTERS, MajorCatalog
from .geo import DEFAULT_CAMPUS, zip_block_means, zip_features
from .impute import impute_scores
from .registry import (
    CATEGORICAL_FIELDS,
    COURSE_GROUPS,
    PERF,
    QUARTER_DIFFS,
    SEASON_LEVELS,
    FeatureRegistry,
    build_registry,
)
from .stats import grade_transforms, is_credit_earning, offering_key, offering_stats, performance_block

PREFIX_MIN_STUDENTS = 6

DEFAULT_GATEKEEPERS = {
    "calculus": (("MATH", 124), ("MATH", 125), ("MATH", 126)),
    "biology": (("BIOL", 180), ("BIOL", 200), ("BIOL", 220)),
    # inorganic and organic chemistry are one series
    "chemistry": (("CHEM", 142), ("CHEM", 152), ("CHEM", 162),
                  ("CHEM", 237), ("CHEM", 238), ("CHEM", 239)),
    "physics": (("PHYS", 121), ("PHYS", 122), ("PHYS", 123)),
}


@dataclass
class FeatureMatrix:
    student_ids: list
    registry: FeatureRegistry
    values: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.label = np.asarray(self.label, dtype=int)
        if self.values.shape != (len(self.student_ids), len(self.registry)):
            raise ConfigError("matrix shape does not match ids x registry")
        if len(self.label) != len(self.student_ids):
            raise ConfigError("label count differs from row count")
        if not np.isfinite(self.values).all():
            raise DatasetIntegrityError("feature matrix contains missing or non-finite values")
        self._row = {sid: i for i, sid in enumerate(self.student_ids)}

    @property
    def shape(self):
        return self.values.shape

    def rows(self, ids) -> np.ndarray:
        return np.array([self._row[sid] for sid in ids], dtype=int)

    def X(self, ids=None) -> np.ndarray:
        return self.values if ids is None else self.values[self.rows(ids)]

    def y(self, ids=None) -> np.ndarray:
        return self.label if ids is None else self.label[self.rows(ids)]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.registry.index(name)]

    def presence(self, scope: str) -> np.ndarray:
        """1 where the student has any course (or a usable ZIP) in ``scope``."""
        col = self.column(self.registry.presence[scope])
        if scope == "zip":
            return (col == 0).astype(int)
        return (col > 0).astype(int)

    def to_csv(self, path):
        names = self.registry.names
        rows = (
            [sid, int(self.label[i])] + [io.fmt_num(float(v)) for v in self.values[i]]
            for i, sid in enumerate(self.student_ids)
        )
        io.write_rows(path, ["student_id", "label"] + names, rows)

    def write(self, directory):
        directory = Path(directory)
        self.to_csv(directory / "features.csv")
        io.write_json(directory / "registry.json", self.registry.to_json())

    @classmethod
    def read(cls, directory) -> "FeatureMatrix":
        directory = Path(directory)
        registry = FeatureRegistry.from_json(io.read_json(directory / "registry.json"))
        ids, labels, values = [], [], []
        with open(directory / "features.csv", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[2:] != registry.names:
                raise DatasetIntegrityError("features.csv columns do not match registry.json")
            for row in reader:
                ids.append(row[0])
                labels.append(int(row[1]))
                values.append([float(v) for v in row[2:]])
        return cls(ids, registry, np.array(values, dtype=float).reshape(len(ids), len(registry)),
                   np.array(labels))


def _midrank_percentiles(values: np.ndarray) -> np.ndarray:
    s = np.sort(values)
    lo = np.searchsorted(s, values, side="left")
    hi = np.searchsorted(s, values, side="right")
    return 100.0 * (lo + 0.5 * (hi - lo)) / len(values)


def _scope_measures(items, stats) -> list:
    """13 measures over ``items`` = list of (entry, transforms-or-None)."""
    entries = [e for e, _ in items]
    perf = list(performance_block(entries, stats))
    failed = sum(1 for e in entries if e.grade.is_numeric and e.grade.value == 0.0)
    withdrawn = sum(1 for e in entries if e.grade.kind == "withdrawal")
    passed = sum(1 for e in entries if is_credit_earning(e))
    sizes, means, diffs = [], [], []
    for e in entries:
        st = stats.get(offering_key(e))
        if st is None:
            continue
        sizes.append(st.size)
        means.append(st.mean_grade)
        if e.grade.is_numeric:
            diffs.append(st.max_grade - e.grade.value)
    size_stats = [math.fsum(sizes) / len(sizes), min(sizes), max(sizes)] if sizes else [0.0, 0.0, 0.0]
    return perf + [failed, withdrawn, passed] + size_stats + [
        math.fsum(means) / len(means) if means else 0.0,
        math.fsum(diffs) / len(diffs) if diffs else 0.0,
    ]


def _pstd(xs) -> float:
    if not xs:
        return 0.0
    m = math.fsum(xs) / len(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / len(xs))


def _course_groups(entry, gatekeepers) -> list:
    groups = []
    level = entry.course_number // 100
    if level == 0:
        groups.append("level_remedial")
    elif level <= 4:
        groups.append(f"level_{level}00")
    key = (entry.course_prefix, entry.course_number)
    in_gk = False
    for series, courses in gatekeepers.items():
        if key in courses:
            groups.append(f"gk_{series}")
            in_gk = True
    if in_gk:
        groups.append("gk_any")
    if 100 <= entry.course_number < 300:
        groups.append("lower_division")
    elif entry.course_number >= 300:
        groups.append("upper_division")
    return groups


def _first_year(students, transcripts) -> dict:
    """student_id -> list of (relative quarter, entry) within the first calendar year."""
    start = {s.student_id: s.first_enrollment.index for s in students}
    out = defaultdict(list)
    for e in transcripts:
        s0 = start.get(e.student_id)
        if s0 is None:
            continue
        rel = e.quarter.index - s0
        if 0 <= rel < FIRST_YEAR_QUARTERS:
            out[e.student_id].append((rel + 1, e))
    for items in out.values():
        items.sort(key=lambda p: (p[0], p[1].course_prefix, p[1].course_number))
    return out


def build_matrix(
    students,
    transcripts,
    majors,
    zip_table: Mapping,
    labels: Mapping,
    campus_coords=DEFAULT_CAMPUS,
    gatekeepers: Optional[Mapping] = None,
    prefix_min_students: int = PREFIX_MIN_STUDENTS,
) -> FeatureMatrix:
    """Feature matrix for every student in ``labels`` (rows sorted by student_id).

    Offering statistics (z-scores, percentiles, course sizes) are computed over
    all ``transcripts`` supplied, so they are cohort-level quantities.
    """
    catalog = MajorCatalog.from_majors(majors)
    gatekeepers = {k: set(v) for k, v in (gatekeepers or DEFAULT_GATEKEEPERS).items()}
    by_id = {s.student_id: s for s in students}
    missing = sorted(set(labels) - set(by_id))
    if missing:
        raise DatasetIntegrityError(f"labels reference unknown students, e.g. {missing[0]}")
    ids = sorted(labels)
    cohort = [by_id[sid] for sid in ids]
    transcripts = list(transcripts)
    stats = offering_stats(transcripts)
    year1 = _first_year(cohort, transcripts)

    declared = set()
    prefix_students = defaultdict(set)
    for sid, items in year1.items():
        for _, e in items:
            declared.add(catalog[e.declared_major].major_code)
            prefix_students[e.course_prefix].add(sid)
    prefixes = [p for p, who in prefix_students.items() if len(who) >= prefix_min_students]
    registry = build_registry(declared, prefixes)
    col = registry.index

    imputation = impute_scores(cohort)
    filled = {s.student_id: s for s in imputation.students}
    zip_fallback = zip_block_means(cohort, zip_table, campus_coords)

    X = np.zeros((len(ids), len(registry)))
    sat_all = np.array([filled[sid].sat_score for sid in ids], dtype=float)
    act_all = np.array([filled[sid].act_score for sid in ids], dtype=float)
    gpa_raw = np.array([np.nan if by_id[sid].hs_gpa is None else by_id[sid].hs_gpa for sid in ids])
    gpa_fill = float(np.nanmean(gpa_raw)) if np.isfinite(gpa_raw).any() else 0.0
    gpa_all = np.where(np.isnan(gpa_raw), gpa_fill, gpa_raw)
    pct = {
        "sat": _midrank_percentiles(sat_all),
        "act": _midrank_percentiles(act_all),
        "hs_gpa": _midrank_percentiles(gpa_all),
    }

    group_base = col("group.level_remedial.count")
    fy_base = col("fy.year.count")
    for r, sid in enumerate(ids):
        s = by_id[sid]
        row = X[r]
        # demographic block
        for prefix, attr, levels in CATEGORICAL_FIELDS:
            value = getattr(s, attr)
            row[col(f"demo.{prefix}.{value if value in levels else 'unknown'}")] = 1.0
        row[col(f"demo.entry_season.{SEASON_LEVELS[s.first_enrollment.season_ordinal]}")] = 1.0
        row[col("demo.first_enroll_year")] = s.first_enrollment.year
        row[col("demo.birth_year")] = s.birth_year
        row[col("demo.age_at_entry")] = s.first_enrollment.year - s.birth_year
        row[col("demo.sat")] = sat_all[r]
        row[col("demo.act")] = act_all[r]
        row[col("demo.hs_gpa")] = gpa_all[r]
        sat_imp = sid in imputation.imputed["sat"]
        act_imp = sid in imputation.imputed["act"]
        row[col("demo.sat_imputed")] = sat_imp
        row[col("demo.act_imputed")] = act_imp
        row[col("demo.hs_gpa_missing")] = s.hs_gpa is None
        row[col("demo.sat_cohort_pct")] = pct["sat"][r]
        row[col("demo.act_cohort_pct")] = pct["act"][r]
        row[col("demo.hs_gpa_cohort_pct")] = pct["hs_gpa"][r]
        row[col("demo.sat_act_both_missing")] = sat_imp and act_imp
        (income, pct_hs, pct_col, dist), zip_missing = zip_features(s, zip_table, campus_coords, zip_fallback)
        row[col("demo.zip_avg_income")] = income
        row[col("demo.zip_log_avg_income")] = math.log(income) if income > 0 else 0.0
        row[col("demo.zip_pct_hs")] = pct_hs
        row[col("demo.zip_pct_college")] = pct_col
        row[col("demo.zip_distance_km")] = dist
        row[col("demo.zip_log_distance_km")] = math.log1p(dist)
        row[col("demo.zip_missing")] = zip_missing

        # first-year summary block
        items = [(e, grade_transforms(e, stats)) for _, e in year1.get(sid, ())]
        rels = [rel for rel, _ in year1.get(sid, ())]
        by_q = defaultdict(list)
        for rel, item in zip(rels, items):
            by_q[rel].append(item)
        last = max(rels) if rels else None
        scopes = {"year": items, "q1": by_q[1], "q2": by_q[2], "q3": by_q[3], "q4": by_q[4],
                  "last": by_q[last] if last else []}
        scope_values = {}
        j = fy_base
        for name in ("year", "q1", "q2", "q3", "q4", "last"):
            vals = _scope_measures(scopes[name], stats)
            scope_values[name] = vals
            row[j:j + len(vals)] = vals
            j += len(vals)
        for a, b in QUARTER_DIFFS:
            for k in range(len(PERF)):
                row[j] = scope_values[a][k] - scope_values[b][k]
                j += 1
        for q in range(1, 5):
            row[j] = 1.0 if by_q[q] else 0.0
            j += 1
        enrolled = sum(1 for q in range(1, 5) if by_q[q])
        row[j] = enrolled
        j += 1
        entries = [e for e, _ in items]
        numeric = [e.grade.value for e in entries if e.grade.is_numeric]
        zs = [t[0] for _, t in items if t is not None]
        pcts = [t[1] for _, t in items if t is not None]
        majors_declared = {catalog[e.declared_major].major_code for e in entries}
        extras = [
            sum(1 for e in entries if e.grade.kind == "incomplete"),
            sum(1 for e in entries if e.grade.kind == "pass"),
            sum(1 for e in entries if e.grade.kind == "fail_nonnumeric"),
            math.fsum(e.credits for e in entries),
            _pstd(numeric), _pstd(zs), _pstd(pcts),
            min(numeric) if numeric else 0.0,
            max(numeric) if numeric else 0.0,
            len({e.course_prefix for e in entries}),
            len(majors_declared),
            1.0 if len(majors_declared) > 1 else 0.0,
            scope_values["year"][1] / enrolled if enrolled else 0.0,
        ]
        row[j:j + len(extras)] = extras

        # major dummies
        for code in majors_declared:
            row[col(f"major.{code}")] = 1.0

        # course groupings
        grouped = defaultdict(list)
        by_prefix = defaultdict(list)
        for e in entries:
            for g in _course_groups(e, gatekeepers):
                grouped[g].append(e)
            by_prefix[e.course_prefix].append(e)
        for gi, g in enumerate(COURSE_GROUPS):
            start = group_base + gi * len(PERF)
            row[start:start + len(PERF)] = performance_block(grouped.get(g, []), stats)
        for p in registry.prefixes:
            start = col(f"prefix.{p}.count")
            row[start:start + len(PERF)] = performance_block(by_prefix.get(p, []), stats)

    y = np.array([1 if labels[sid].is_stem_graduate else 0 for sid in ids])
    return FeatureMatrix(ids, registry, X, y)
