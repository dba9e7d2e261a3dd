"""Canonical, ordered catalog of feature columns.

Block layout (order fixed):

* ``demographic`` (52): one-hot gender/race/ethnicity/residency/parent
  education/entry season over fixed vocabularies, entry and birth year, test
  scores with imputation flags, cohort percentiles, census-by-ZIP values and
  distance to campus.
* ``first_year_summary`` (116): 13 measures for each of six scopes (whole
  year, relative quarters 1-4, last enrolled quarter), successive-quarter
  performance differences, enrollment pattern, and year-level extras.
* ``major_dummy`` (one per major declared in year 1).
* ``course_group`` (60): performance in 12 course groupings (course levels,
  gatekeeper series, lower/upper division).
* ``prefix`` (5 per departmental prefix taken by at least 6 students).

Presence of a grouping is carried by its ``count`` column (0 means the
student took nothing in that scope); ``presence_column`` records which
column that is, so no separate flag columns are needed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..errors import ConfigError

GENDER_LEVELS = ("female", "male", "other", "unknown")
RACE_LEVELS = ("african_american", "american_indian", "asian", "caucasian", "hawaiian_pacific",
               "two_or_more", "other", "unknown")
ETHNICITY_LEVELS = ("hispanic", "not_hispanic", "unknown")
RESIDENCY_LEVELS = ("resident", "nonresident", "international", "unknown")
PARENT_EDU_LEVELS = ("less_than_hs", "hs", "some_college", "associate", "bachelor", "master",
                     "doctorate", "professional", "unknown")
SEASON_LEVELS = ("winter", "spring", "summer", "autumn")

CATEGORICAL_FIELDS = (
    ("gender", "gender", GENDER_LEVELS),
    ("race", "race", RACE_LEVELS),
    ("ethnicity", "ethnicity", ETHNICITY_LEVELS),
    ("residency", "residency", RESIDENCY_LEVELS),
    ("parent_edu", "parent_education", PARENT_EDU_LEVELS),
)

DEMOGRAPHIC_NUMERIC = (
    "first_enroll_year", "birth_year", "age_at_entry",
    "sat", "act", "hs_gpa", "sat_imputed", "act_imputed", "hs_gpa_missing",
    "sat_cohort_pct", "act_cohort_pct", "hs_gpa_cohort_pct", "sat_act_both_missing",
    "zip_avg_income", "zip_log_avg_income", "zip_pct_hs", "zip_pct_college",
    "zip_distance_km", "zip_log_distance_km", "zip_missing",
)

PERF = ("count", "credits", "gpa", "z", "pct")
SCOPE_MEASURES = PERF + ("failed", "withdrawn", "passed", "size_mean", "size_min", "size_max",
                         "offering_mean_grade", "max_grade_diff")
YEAR_SCOPES = ("year", "q1", "q2", "q3", "q4", "last")
QUARTER_DIFFS = (("q2", "q1"), ("q3", "q2"), ("q4", "q3"), ("last", "q1"))
YEAR_EXTRAS = (
    "incomplete_count", "pass_kind_count", "nonnumeric_fail_count", "credits_attempted",
    "gpa_std", "z_std", "pct_std", "min_grade", "max_grade", "distinct_prefixes",
    "distinct_majors_declared", "changed_major", "credits_per_enrolled_quarter",
)

COURSE_GROUPS = ("level_remedial", "level_100", "level_200", "level_300", "level_400",
                 "gk_calculus", "gk_biology", "gk_chemistry", "gk_physics", "gk_any",
                 "lower_division", "upper_division")

BLOCK_SIZES = {"demographic": 52, "first_year_summary": 116, "course_group": 60}
PREFIX_BLOCK_WIDTH = len(PERF)
REGISTRY_VERSION = "1"


def demographic_names() -> list:
    names = []
    for prefix, _, levels in CATEGORICAL_FIELDS:
        names += [f"demo.{prefix}.{lvl}" for lvl in levels]
    names += [f"demo.entry_season.{s}" for s in SEASON_LEVELS]
    names += [f"demo.{n}" for n in DEMOGRAPHIC_NUMERIC]
    return names


def first_year_names() -> list:
    names = [f"fy.{scope}.{m}" for scope in YEAR_SCOPES for m in SCOPE_MEASURES]
    names += [f"fy.{a}_minus_{b}.{m}" for a, b in QUARTER_DIFFS for m in PERF]
    names += [f"fy.enrolled_q{k}" for k in range(1, 5)] + ["fy.n_enrolled_quarters"]
    names += [f"fy.year.{x}" for x in YEAR_EXTRAS]
    return names


def course_group_names() -> list:
    return [f"group.{g}.{m}" for g in COURSE_GROUPS for m in PERF]


@dataclass
class FeatureRegistry:
    """Ordered ``(name, block)`` entries plus presence-column metadata."""

    entries: list = field(default_factory=list)
    presence: dict = field(default_factory=dict)  # scope name -> column name carrying presence
    majors: tuple = ()
    prefixes: tuple = ()

    def __post_init__(self):
        self._index = {name: i for i, (name, _) in enumerate(self.entries)}
        if len(self._index) != len(self.entries):
            raise ConfigError("duplicate feature names in registry")

    def __len__(self):
        return len(self.entries)

    @property
    def names(self) -> list:
        return [n for n, _ in self.entries]

    def index(self, name: str) -> int:
        return self._index[name]

    def block_slice(self, block: str) -> slice:
        idx = [i for i, (_, b) in enumerate(self.entries) if b == block]
        return slice(idx[0], idx[-1] + 1) if idx else slice(0, 0)

    def fingerprint(self) -> str:
        payload = json.dumps({"version": REGISTRY_VERSION, "entries": self.entries})
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "version": REGISTRY_VERSION,
            "fingerprint": self.fingerprint(),
            "features": [{"name": n, "block": b, "index": i} for i, (n, b) in enumerate(self.entries)],
            "presence": dict(sorted(self.presence.items())),
        }

    @classmethod
    def from_json(cls, d: dict) -> "FeatureRegistry":
        entries = [(f["name"], f["block"]) for f in sorted(d["features"], key=lambda f: f["index"])]
        majors = tuple(n.split(".", 1)[1] for n, b in entries if b == "major_dummy")
        prefixes = tuple(dict.fromkeys(n.split(".")[1] for n, b in entries if b == "prefix"))
        return cls(entries, dict(d.get("presence", {})), majors, prefixes)


def expected_size(n_majors: int, n_prefixes: int) -> int:
    return (BLOCK_SIZES["demographic"] + BLOCK_SIZES["first_year_summary"] + n_majors
            + BLOCK_SIZES["course_group"] + PREFIX_BLOCK_WIDTH * n_prefixes)


def build_registry(majors, prefixes) -> FeatureRegistry:
    """Registry for the given year-1 major codes and eligible prefixes (both sorted here)."""
    majors = tuple(sorted(majors))
    prefixes = tuple(sorted(prefixes))
    entries = [(n, "demographic") for n in demographic_names()]
    entries += [(n, "first_year_summary") for n in first_year_names()]
    entries += [(f"major.{m}", "major_dummy") for m in majors]
    entries += [(n, "course_group") for n in course_group_names()]
    entries += [(f"prefix.{p}.{m}", "prefix") for p in prefixes for m in PERF]

    presence = {f"fy.{s}": f"fy.{s}.count" for s in YEAR_SCOPES}
    presence.update({f"group.{g}": f"group.{g}.count" for g in COURSE_GROUPS})
    presence.update({f"prefix.{p}": f"prefix.{p}.count" for p in prefixes})
    presence["zip"] = "demo.zip_missing"

    for block, size in BLOCK_SIZES.items():
        got = sum(1 for _, b in entries if b == block)
        if got != size:
            raise ConfigError(f"registry block {block} has {got} columns, expected {size}")
    registry = FeatureRegistry(entries, presence, majors, prefixes)
    if len(registry) != expected_size(len(majors), len(prefixes)):
        raise ConfigError(
            f"registry size {len(registry)} != 52 + 116 + {len(majors)} + 60 + 5*{len(prefixes)}"
        )
    return registry
