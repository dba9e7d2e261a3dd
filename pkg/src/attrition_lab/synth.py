"""Seeded generator of registrar-shaped datasets with planted ground truth.

Every draw comes from one ``numpy.random.Generator`` backed by the
counter-based Philox bit generator, consumed in this fixed order:

1. course catalog attributes (base grade, credits) in catalog order;
2. the ZIP table;
3. per student, in student order: one block of uniforms and one block of
   standard normals (``_Stream``), topped up in fixed-size chunks when a
   student exhausts them.  Within a student the draws are consumed as
   demographics, ability, pre-entry scores, ZIP, entry quarter, outcome
   latents, then quarter by quarter (enrollment, intent transition, course
   count, course picks, grade draws).

Identical ``SynthConfig`` (seed included) therefore yields byte-identical
files from :func:`write_synth`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from . import io
from .errors import ConfigError
from .registrar import (
    GRADUATION_WINDOW,
    CohortLabel,
    DegreeAward,
    GradeValue,
    MajorCatalog,
    MajorInfo,
    Quarter,
    StudentRecord,
    TranscriptEntry,
)

GENDERS = (("female", 0.45), ("male", 0.54), ("other", 0.005), ("unknown", 0.005))
RACES = (
    ("african_american", 0.03), ("american_indian", 0.015), ("asian", 0.32),
    ("caucasian", 0.50), ("hawaiian_pacific", 0.01), ("two_or_more", 0.035),
    ("other", 0.02), ("unknown", 0.07),
)
ETHNICITIES = (("hispanic", 0.05), ("not_hispanic", 0.93), ("unknown", 0.02))
RESIDENCIES = (("resident", 0.78), ("nonresident", 0.15), ("international", 0.05), ("unknown", 0.02))
PARENT_EDU = (
    ("less_than_hs", 0.04), ("hs", 0.12), ("some_college", 0.14), ("associate", 0.07),
    ("bachelor", 0.33), ("master", 0.18), ("doctorate", 0.05), ("professional", 0.04),
    ("unknown", 0.03),
)

STEM_PREFIXES = (
    "MATH", "CHEM", "PHYS", "BIOL", "CSE", "EE", "ME", "AMATH", "STAT", "ASTR",
    "ESS", "BIOC", "CEE", "MSE", "GENOME", "OCEAN", "ATMS", "AA", "CHEME", "BIOEN",
)
NONSTEM_PREFIXES = (
    "PSYCH", "ECON", "POLS", "SOC", "COM", "ENGL", "ANTH", "ACCTG", "FIN", "HIST",
    "ART", "MUSIC", "PHIL", "SPAN", "GEOG", "LING", "DRAMA", "GWSS", "JSIS", "ARCH",
)
SHARED_COURSES = (("ENGL", 131), ("GEN", 197), ("CHID", 110), ("INFO", 200), ("STAT", 220), ("ENGL", 281))

GATEKEEPER_SERIES = {
    "calculus": (("MATH", 124), ("MATH", 125), ("MATH", 126)),
    "chemistry": (("CHEM", 142), ("CHEM", 152), ("CHEM", 162)),
    "physics": (("PHYS", 121), ("PHYS", 122), ("PHYS", 123)),
    "biology": (("BIOL", 180), ("BIOL", 200), ("BIOL", 220)),
}
ORGANIC_CHEMISTRY = (("CHEM", 237), ("CHEM", 238), ("CHEM", 239))
REMEDIAL_COURSES = {"stem": ("MATH", 98), "nonstem": ("ENGL", 98)}

STEM_MAJORS = (
    ("MATH", "Mathematics", (("standard", True), ("applied", True), ("comprehensive", True),
                             ("teacher preparation", False))),
    ("CSE", "Computer Science", None), ("EE", "Electrical Engineering", None),
    ("ME", "Mechanical Engineering", None), ("BIOL", "Biology", None),
    ("CHEM", "Chemistry", None), ("PHYS", "Physics", None), ("AMATH", "Applied Mathematics", None),
    ("STAT", "Statistics", None), ("ASTR", "Astronomy", None), ("ESS", "Earth and Space Sciences", None),
    ("BIOC", "Biochemistry", None), ("CEE", "Civil Engineering", None),
    ("MSE", "Materials Science", None), ("BIOEN", "Bioengineering", None),
    ("AA", "Aeronautics", None), ("CHEME", "Chemical Engineering", None),
    ("ATMS", "Atmospheric Sciences", None), ("OCEAN", "Oceanography", None),
    ("GENOME", "Genome Sciences", None),
)
NONSTEM_MAJORS = (
    ("PSYCH", "Psychology", 0.20), ("ECON", "Economics", 0.12), ("POLS", "Political Science", 0.10),
    ("SOC", "Sociology", 0.09), ("COM", "Communications", 0.07), ("ENGL", "English", 0.06),
    ("ANTH", "Anthropology", 0.05), ("ACCTG", "Accounting", 0.05), ("FIN", "Finance", 0.04),
    ("HIST", "History", 0.04), ("INFOSYS", "Information Systems", 0.03),
    ("PUBH", "Public Health", 0.03), ("PHIL", "Philosophy", 0.02), ("ART", "Art", 0.02),
    ("MUSIC", "Music", 0.015), ("SPAN", "Spanish", 0.015), ("GEOG", "Geography", 0.015),
    ("LING", "Linguistics", 0.01), ("DRAMA", "Drama", 0.01), ("GWSS", "Gender Studies", 0.01),
    ("JSIS", "International Studies", 0.01), ("ARCH", "Architecture", 0.01),
    ("DESIGN", "Design", 0.01),
)
DESIGN_TRACKS = (("visual communication", False), ("industrial", False),
                 ("interaction", True), ("exhibition", False))
# pre-engineering students lean toward economics and business destinations
PREENG_DESTINATION_BOOST = {"ECON": 3.5, "ACCTG": 2.0, "FIN": 2.0, "INFOSYS": 2.0}

STEM_PREMAJORS = (
    ("PREENG", "Pre-Engineering", "pre-engineering", 0.40),
    ("PREHSC", "Pre-Health Sciences", "pre-health-sciences", 0.30),
    ("PREPSC", "Pre-Physical Sciences", "pre-physical-sciences", 0.20),
    ("PRESTEM", "Pre-Major (other STEM)", "other-stem-premajor", 0.10),
)
NONSTEM_PREMAJORS = (
    ("UNDECL", "Undeclared", "non-stem", 0.55), ("PRESOC", "Pre-Social Sciences", "non-stem", 0.20),
    ("PREBUS", "Pre-Business", "non-stem", 0.15), ("PREARTS", "Pre-Arts", "non-stem", 0.10),
)

CREDIT_CHOICES = ((5.0, 0.6), (3.0, 0.2), (4.0, 0.15), (2.0, 0.05))


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs. Probabilities are per calendar quarter unless noted."""

    n_students: int = 2000
    n_courses: int = 160  # per catalog (STEM and non-STEM), excluding gatekeepers
    stem_prior: float = 0.5
    quarterly_switch_out: float = 0.02
    quarterly_switch_in: float = 0.005
    grade_signal_strength: float = 0.7
    graduation_base_rate: float = 0.78
    seed: int = 0
    quarters_max: int = GRADUATION_WINDOW
    cohort_years: tuple = (2004,)
    attrition_wave: tuple = ()  # relative quarters with elevated switch-out
    wave_switch_out: float = 0.15
    ability_attrition: float = 1.5  # log-odds drop in switch-out per unit ability
    graduation_ability: float = 2.0  # weight of ability in the graduation latent
    catalog_purity: float = 0.85  # P(course from the intent catalog | not a shared course)
    shared_course_rate: float = 0.08
    summer_enroll_rate: float = 0.15
    stopout_rate: float = 0.02
    late_finish_rate: float = 0.06
    sat_present_rate: float = 0.94
    act_present_rate: float = 0.27
    direct_admit_rate: float = 0.10
    double_degree_rate: float = 0.03
    n_zips: int = 250

    def __post_init__(self):
        object.__setattr__(self, "cohort_years", tuple(int(y) for y in self.cohort_years))
        object.__setattr__(self, "attrition_wave", tuple(int(q) for q in self.attrition_wave))
        if self.n_students < 1 or self.n_courses < 1:
            raise ConfigError("n_students and n_courses must be >= 1")
        if self.quarters_max < 1 or self.n_zips < 1 or not self.cohort_years:
            raise ConfigError("quarters_max, n_zips and cohort_years must be non-empty / >= 1")
        for name in ("stem_prior", "quarterly_switch_out", "quarterly_switch_in",
                     "graduation_base_rate", "wave_switch_out", "catalog_purity",
                     "shared_course_rate", "summer_enroll_rate", "stopout_rate",
                     "late_finish_rate", "sat_present_rate", "act_present_rate",
                     "direct_admit_rate", "double_degree_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be a probability, got {value}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synth settings: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cohort_years"] = list(self.cohort_years)
        d["attrition_wave"] = list(self.attrition_wave)
        return d


@dataclass(frozen=True)
class StudentTruth:
    ability: float
    intention_path: tuple  # per relative calendar quarter 1..T, True = STEM intent
    true_outcome: CohortLabel
    planted_switch_quarters: tuple  # (quarter, direction)
    enrolled_quarters: tuple  # relative quarters with transcript entries
    starting_program: str  # first year-1 declaration label used by heatmap rows


@dataclass
class GroundTruth:
    students: dict = field(default_factory=dict)

    def __getitem__(self, sid) -> StudentTruth:
        return self.students[sid]

    def __len__(self):
        return len(self.students)

    def rows(self):
        for sid, truth in self.students.items():
            for t, intent in enumerate(truth.intention_path, start=1):
                yield [sid, t, int(intent)]


class SynthOutput(NamedTuple):
    students: list
    transcripts: list
    majors: MajorCatalog
    degrees: list
    zip_attrs: dict
    truth: GroundTruth

    @property
    def dataset(self) -> io.Dataset:
        return io.Dataset(self.students, self.transcripts, self.majors, self.degrees, self.zip_attrs)


class _Stream:
    """Cursor over pre-drawn uniform and normal blocks (keeps Python-level draws cheap)."""

    U_BLOCK = 384
    Z_BLOCK = 192

    def __init__(self, rng):
        self.rng = rng
        self.u = rng.random(self.U_BLOCK)
        self.z = rng.standard_normal(self.Z_BLOCK)
        self.iu = 0
        self.iz = 0

    def uniform(self) -> float:
        if self.iu == len(self.u):
            self.u = self.rng.random(self.U_BLOCK)
            self.iu = 0
        v = self.u[self.iu]
        self.iu += 1
        return float(v)

    def normal(self) -> float:
        if self.iz == len(self.z):
            self.z = self.rng.standard_normal(self.Z_BLOCK)
            self.iz = 0
        v = self.z[self.iz]
        self.iz += 1
        return float(v)

    def choice(self, weighted) -> object:
        """Pick a key from ``((key, weight), ...)``."""
        total = sum(w for _, w in weighted)
        r = self.uniform() * total
        acc = 0.0
        for key, w in weighted:
            acc += w
            if r < acc:
                return key
        return weighted[-1][0]

    def index(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)


def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def _switch_prob(rate: float, shift: float) -> float:
    if rate <= 0.0:
        return 0.0
    if rate >= 1.0:
        return 1.0
    return _sigmoid(math.log(rate / (1.0 - rate)) + shift)


@dataclass
class _Course:
    prefix: str
    number: int
    credits: float
    base: float
    catalog: str  # stem | nonstem | shared

    @property
    def level(self):
        return max(1, min(4, self.number // 100))


def build_majors() -> MajorCatalog:
    majors = []
    for code, name, tracks in STEM_MAJORS:
        majors.append(MajorInfo(code, name, tracks or (("standard", True),)))
    for code, name, _ in NONSTEM_MAJORS:
        tracks = DESIGN_TRACKS if code == "DESIGN" else (("standard", False),)
        majors.append(MajorInfo(code, name, tracks))
    for code, name, family, _ in STEM_PREMAJORS + NONSTEM_PREMAJORS:
        majors.append(MajorInfo(code, name, (), True, family))
    return MajorCatalog.from_majors(majors)


def _build_courses(config: SynthConfig, rng) -> list:
    specs = []
    taken = set()

    def add(prefix, number, catalog):
        while (prefix, number) in taken:
            number += 1
        taken.add((prefix, number))
        specs.append((prefix, number, catalog))

    for series in GATEKEEPER_SERIES.values():
        for prefix, number in series:
            add(prefix, number, "stem")
    for prefix, number in ORGANIC_CHEMISTRY:
        add(prefix, number, "stem")
    add(*REMEDIAL_COURSES["stem"], "stem")
    add(*REMEDIAL_COURSES["nonstem"], "nonstem")
    for prefix, number in SHARED_COURSES:
        add(prefix, number, "shared")
    for catalog, prefixes in (("stem", STEM_PREFIXES), ("nonstem", NONSTEM_PREFIXES)):
        for j in range(config.n_courses):
            prefix = prefixes[j % len(prefixes)]
            k = j // len(prefixes)
            level = 1 + k % 4
            add(prefix, 100 * level + 1 + 7 * (k // 4), catalog)

    courses = []
    for prefix, number, catalog in specs:
        u = rng.random(2)
        credits = CREDIT_CHOICES[-1][0]
        acc = 0.0
        for value, w in CREDIT_CHOICES:
            acc += w
            if u[0] < acc:
                credits = value
                break
        if prefix == "MATH" and number >= 100:
            base = 2.95 + 0.1 * (u[1] - 0.5)
        else:
            base = 2.7 + 0.8 * u[1]
        courses.append(_Course(prefix, number, credits, base, catalog))
    return courses


def _build_zips(config: SynthConfig, rng) -> dict:
    out = {}
    for i in range(config.n_zips):
        u = rng.random(6)
        if i % 5 == 4:  # out-of-state
            zip_code = f"{10000 + i * 317 % 80000:05d}"
            lat, lon = 25.0 + 23.0 * u[0], -124.0 + 54.0 * u[1]
        else:
            zip_code = f"{98001 + i:05d}"
            lat, lon = 45.6 + 3.3 * u[0], -124.5 + 7.5 * u[1]
        income = float(np.exp(10.6 + 0.45 * (u[2] - 0.5) * 2.0))
        pct_hs = 70.0 + 28.0 * u[3]
        pct_college = min(pct_hs, 10.0 + 60.0 * u[4])
        out[zip_code] = io.ZipAttributes(zip_code, round(income, 2), round(pct_hs, 2),
                                         round(pct_college, 2), round(lat, 6), round(lon, 6))
    return out


def generate(config: SynthConfig) -> SynthOutput:
    """Generate a full registrar dataset plus planted ground truth."""
    if not isinstance(config, SynthConfig):
        raise ConfigError("generate() needs a SynthConfig")
    rng = np.random.Generator(np.random.Philox(config.seed))
    majors = build_majors()
    courses = _build_courses(config, rng)
    zips = _build_zips(config, rng)
    zip_codes = list(zips)

    pools = {}
    for c in courses:
        if (c.prefix, c.number) in _SPECIAL_COURSES:
            continue
        pools.setdefault((c.catalog, c.level), []).append(c)
    by_key = {(c.prefix, c.number): c for c in courses}
    shared_pool = [c for c in courses if c.catalog == "shared"]
    own_catalog = {cat: [c for c in courses if c.catalog == cat] for cat in ("stem", "nonstem")}

    stem_major_codes = [m[0] for m in STEM_MAJORS]
    nonstem_weights = tuple((code, w) for code, _, w in NONSTEM_MAJORS)
    preeng_weights = tuple((code, w * PREENG_DESTINATION_BOOST.get(code, 1.0))
                           for code, _, w in NONSTEM_MAJORS)
    stem_premajor_weights = tuple((code, w) for code, _, _, w in STEM_PREMAJORS)
    nonstem_premajor_weights = tuple((code, w) for code, _, _, w in NONSTEM_PREMAJORS)
    family_of = {code: fam for code, _, fam, _ in STEM_PREMAJORS}

    grad_sd = math.sqrt(1.0 + config.graduation_ability ** 2)
    if config.graduation_base_rate <= 0.0:
        grad_threshold = math.inf
    elif config.graduation_base_rate >= 1.0:
        grad_threshold = -math.inf
    else:
        grad_threshold = -NormalDist().inv_cdf(config.graduation_base_rate) * grad_sd

    wave = set(config.attrition_wave)
    students, transcripts, degrees = [], [], []
    truth = GroundTruth()
    signal = config.grade_signal_strength

    for n in range(config.n_students):
        s = _Stream(rng)
        sid = f"S{n + 1:06d}"
        gender = s.choice(GENDERS)
        race = s.choice(RACES)
        ethnicity = s.choice(ETHNICITIES)
        residency = s.choice(RESIDENCIES)
        parent_edu = s.choice(PARENT_EDU)
        ability = s.normal()

        hs_gpa = min(4.0, max(2.0, 3.45 + 0.10 * ability + 0.25 * s.normal()))
        hs_gpa = round(hs_gpa, 2) if s.uniform() >= 0.02 else None
        sat_raw = 1180 + 45 * ability + 25 * (parent_edu in ("bachelor", "master", "doctorate", "professional")) \
            + 95 * s.normal()
        sat = int(round(min(1600, max(400, sat_raw)) / 10.0) * 10)
        sat = sat if s.uniform() < config.sat_present_rate else None
        act_raw = 26 + 1.2 * ability + 2.6 * s.normal()
        act = int(round(min(36, max(1, act_raw))))
        act = act if s.uniform() < config.act_present_rate else None

        u_zip = s.uniform()
        zip_pick = zip_codes[s.index(len(zip_codes))]
        if u_zip < 0.05:
            zip_code = None
        elif u_zip < 0.055:
            zip_code = zip_pick[:3] + "X" + zip_pick[4:]  # malformed
        else:
            zip_code = zip_pick

        year = config.cohort_years[s.index(len(config.cohort_years))]
        u_season = s.uniform()
        season = "autumn" if u_season < 0.9 else ("summer" if u_season < 0.95 else "winter")
        start = Quarter.of(year, season)
        birth_year = year - 18 - (1 if s.uniform() < 0.3 else 0)

        is_graduate_latent = config.graduation_ability * ability + s.normal() > grad_threshold
        if is_graduate_latent:
            terms_needed = 12 + int(round(1.1 * s.normal()))
            if s.uniform() < config.late_finish_rate:
                terms_needed += 5 + s.index(6)
            terms_needed = max(8, terms_needed)
        else:
            terms_needed = 1 + s.index(11)
        direct_admit = s.uniform() < config.direct_admit_rate
        intent = s.uniform() < config.stem_prior
        stem_premajor = s.choice(stem_premajor_weights)
        nonstem_premajor = s.choice(nonstem_premajor_weights)
        direct_major = stem_major_codes[s.index(len(stem_major_codes))]
        direct_nonstem = s.choice(nonstem_weights)
        weak_math = ability < -1.0 and s.uniform() < 0.7

        intents = []
        switches = []
        enrolled_rel = []
        taken = set()
        enrolled_count = 0
        rel = 0
        year1_stem_decl = None
        student_entries = []
        stem_decl_major = direct_major
        while enrolled_count < terms_needed:
            rel += 1
            q = start + (rel - 1)
            if rel > 1:
                if intent:
                    rate = config.wave_switch_out if rel in wave else config.quarterly_switch_out
                    p = _switch_prob(rate, -config.ability_attrition * ability)
                    if s.uniform() < p:
                        intent = False
                        switches.append((rel, "out_of_stem"))
                else:
                    p = _switch_prob(config.quarterly_switch_in, 0.0)
                    if s.uniform() < p:
                        intent = True
                        switches.append((rel, "into_stem"))
            intents.append(intent)

            summer = q.season == "summer"
            must_enroll = rel == 1 or enrolled_count == terms_needed - 1 and is_graduate_latent
            u_enroll = s.uniform()
            if not must_enroll:
                if summer and u_enroll >= config.summer_enroll_rate:
                    continue
                if not summer and u_enroll < config.stopout_rate:
                    continue
            enrolled_count += 1
            enrolled_rel.append(rel)

            if intent:
                if direct_admit or enrolled_count > 6:
                    declared = stem_decl_major
                else:
                    declared = stem_premajor
            else:
                if enrolled_count > 6:
                    declared = direct_nonstem
                elif direct_admit and not intents[0]:
                    declared = direct_nonstem
                else:
                    declared = nonstem_premajor
            if rel <= 4 and intent and year1_stem_decl is None:
                year1_stem_decl = declared

            n_courses = 1 + (s.uniform() < 0.5) if summer else s.choice(((3, 0.6), (2, 0.2), (4, 0.2)))
            picks = []
            if intent and enrolled_count <= 3:
                if weak_math and enrolled_count == 1:
                    picks.append(by_key[REMEDIAL_COURSES["stem"]])
                elif s.uniform() < 0.85:
                    series_pos = enrolled_count - 1 - (1 if weak_math else 0)
                    if series_pos >= 0:
                        picks.append(by_key[GATEKEEPER_SERIES["calculus"][series_pos]])
                u_sci = s.uniform()
                sci = "chemistry" if u_sci < 0.45 else ("physics" if u_sci < 0.7 else "biology")
                if s.uniform() < 0.6:
                    picks.append(by_key[GATEKEEPER_SERIES[sci][enrolled_count - 1]])
            elif intent and 4 <= enrolled_count <= 6 and s.uniform() < 0.3:
                picks.append(by_key[ORGANIC_CHEMISTRY[enrolled_count - 4]])
            elif not intent and enrolled_count == 1 and ability < -1.2 and s.uniform() < 0.5:
                picks.append(by_key[REMEDIAL_COURSES["nonstem"]])
            picks = [c for c in picks if (c.prefix, c.number) not in taken]
            target_level = min(4, 1 + (enrolled_count - 1) // 3)
            attempts = 0
            while len(picks) < n_courses and attempts < 12:
                attempts += 1
                u = s.uniform()
                if u < config.shared_course_rate:
                    pool = shared_pool
                else:
                    own = "stem" if intent else "nonstem"
                    other = "nonstem" if intent else "stem"
                    use = own if s.uniform() < config.catalog_purity else other
                    u_level = s.uniform()
                    level = target_level if u_level < 0.6 else max(1, min(4, target_level + (1 if u_level < 0.8 else -1)))
                    pool = pools[(use, level)]
                c = pool[s.index(len(pool))]
                if (c.prefix, c.number) in taken or c in picks:
                    continue
                picks.append(c)
            if not picks:
                # an enrolled quarter always carries at least one grade
                own = "stem" if intent else "nonstem"
                picks.append(next(c for c in own_catalog[own] if (c.prefix, c.number) not in taken))

            for c in picks:
                taken.add((c.prefix, c.number))
                u_kind = s.uniform()
                noise = s.normal()
                if u_kind < 0.035:
                    grade = GradeValue("withdrawal")
                elif u_kind < 0.055:
                    grade = GradeValue("pass")
                elif u_kind < 0.058:
                    grade = GradeValue("incomplete")
                elif u_kind < 0.060:
                    grade = GradeValue("fail_nonnumeric")
                else:
                    if c.prefix == "MATH":
                        effect = signal
                    elif c.catalog == "stem":
                        effect = 0.3 * signal
                    else:
                        effect = 0.15 * signal
                    g = c.base + effect * ability + 0.55 * noise
                    g = min(4.0, max(0.0, g))
                    g = 0.0 if g < 0.7 else round(g * 10) / 10
                    grade = GradeValue("numeric", g)
                student_entries.append(TranscriptEntry(sid, c.prefix, c.number, q, c.credits, grade, declared))

        final_intent = intents[-1]
        gap = rel - 1  # calendar quarters walked from first enrollment to the last enrolled one
        degree_quarter = start + gap
        stem_student = year1_stem_decl is not None
        student_degrees = []
        if is_graduate_latent:
            if final_intent:
                student_degrees.append(DegreeAward(sid, stem_decl_major, degree_quarter))
                if s.uniform() < config.double_degree_rate:
                    student_degrees.append(DegreeAward(sid, direct_nonstem, degree_quarter))
            else:
                starting_family = family_of.get(year1_stem_decl) if stem_student else None
                weights = preeng_weights if starting_family == "pre-engineering" else nonstem_weights
                destination = s.choice(weights)
                student_degrees.append(DegreeAward(sid, destination, degree_quarter))
                # keep the declared major consistent with the destination from the 7th term on
                student_entries = [
                    e if e.declared_major != direct_nonstem
                    else TranscriptEntry(e.student_id, e.course_prefix, e.course_number, e.quarter,
                                         e.credits, e.grade, destination)
                    for e in student_entries
                ]
        within = is_graduate_latent and gap <= config.quarters_max
        stem_awarded = within and any(d.major_code in _STEM_CODES for d in student_degrees)
        outcome = CohortLabel(sid, stem_student, within, stem_awarded, gap if within else None)

        if year1_stem_decl is None:
            starting = ""
        elif year1_stem_decl in family_of:
            starting = family_of[year1_stem_decl]
        else:
            starting = majors[year1_stem_decl].display_name

        students.append(StudentRecord(sid, gender, race, ethnicity, residency, birth_year, start,
                                      sat, act, hs_gpa, parent_edu, zip_code))
        transcripts.extend(student_entries)
        degrees.extend(student_degrees)
        truth.students[sid] = StudentTruth(ability, tuple(intents), outcome, tuple(switches),
                                           tuple(enrolled_rel), starting)

    return SynthOutput(students, transcripts, majors, degrees, zips, truth)


_SPECIAL_COURSES = set(
    [key for series in GATEKEEPER_SERIES.values() for key in series]
    + list(ORGANIC_CHEMISTRY) + list(REMEDIAL_COURSES.values())
)
_STEM_CODES = {code for code, _, _ in STEM_MAJORS}


def write_synth(out_dir, output: SynthOutput, config: SynthConfig) -> dict:
    """Write the dataset CSVs, ground_truth.csv and manifest.json; return the manifest."""
    out_dir = Path(out_dir)
    io.write_dataset(out_dir, output.dataset)
    io.write_rows(out_dir / "ground_truth.csv", io.GROUND_TRUTH_COLUMNS, output.truth.rows())
    files = sorted(list(io.DATASET_FILES.values()) + ["ground_truth.csv"])
    manifest = {
        "generator": "attrition_lab.synth",
        "bit_generator": "Philox4x64-10",
        "config": config.to_dict(),
        "seed": config.seed,
        "files": {name: io.file_digest(out_dir / name) for name in files},
    }
    io.write_json(out_dir / "manifest.json", manifest)
    return manifest
