"""Students, transcripts, majors and degree awards.

Covers cohort selection (who counts as a STEM student), outcome labeling
within the 24-quarter graduation window, and the first-year slice used by
the feature builder.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DatasetIntegrityError, InvalidCatalogError

SEASONS = ("winter", "spring", "summer", "autumn")
SEASON_ORDINAL = {name: i for i, name in enumerate(SEASONS)}

GRADE_KINDS = ("numeric", "withdrawal", "pass", "fail_nonnumeric", "incomplete")

STEM_PREMAJOR_FAMILIES = (
    "pre-engineering",
    "pre-health-sciences",
    "pre-physical-sciences",
    "other-stem-premajor",
)
PREMAJOR_FAMILIES = STEM_PREMAJOR_FAMILIES + ("non-stem",)

GRADUATION_WINDOW = 24
FIRST_YEAR_QUARTERS = 4


@dataclass(frozen=True, order=True)
class Quarter:
    """A calendar quarter. Ordered by ``index = 4 * year + season ordinal``."""

    year: int
    season_ordinal: int

    def __post_init__(self):
        if not 0 <= self.season_ordinal <= 3:
            raise ValueError(f"season ordinal out of range: {self.season_ordinal}")

    @classmethod
    def of(cls, year: int, season: str) -> "Quarter":
        try:
            return cls(int(year), SEASON_ORDINAL[season.strip().lower()])
        except KeyError:
            raise DatasetIntegrityError(f"unknown season {season!r}") from None

    @classmethod
    def from_index(cls, index: int) -> "Quarter":
        year, ordinal = divmod(int(index), 4)
        return cls(year, ordinal)

    @property
    def season(self) -> str:
        return SEASONS[self.season_ordinal]

    @property
    def index(self) -> int:
        return 4 * self.year + self.season_ordinal

    def __add__(self, n: int) -> "Quarter":
        return Quarter.from_index(self.index + n)

    def __sub__(self, other: "Quarter") -> int:
        return self.index - other.index

    def __str__(self):
        return f"{self.season}-{self.year}"


@dataclass(frozen=True)
class GradeValue:
    kind: str
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in GRADE_KINDS:
            raise DatasetIntegrityError(f"unknown grade kind {self.kind!r}")
        if self.kind == "numeric":
            if self.value is None:
                raise DatasetIntegrityError("numeric grade without a value")
            tenths = round(self.value * 10)
            if not 0 <= tenths <= 40 or abs(tenths - self.value * 10) > 1e-6:
                raise DatasetIntegrityError(f"numeric grade {self.value} not on the 0.0-4.0 / 0.1 grid")
            object.__setattr__(self, "value", tenths / 10)
        elif self.value is not None:
            raise DatasetIntegrityError(f"{self.kind} grade must not carry a value")

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"


@dataclass(frozen=True)
class StudentRecord:
    student_id: str
    gender: str
    race: str
    ethnicity: str
    residency: str
    birth_year: int
    first_enrollment: Quarter
    sat_score: Optional[int] = None
    act_score: Optional[int] = None
    hs_gpa: Optional[float] = None
    parent_education: str = "unknown"
    application_zip: Optional[str] = None


@dataclass(frozen=True)
class TranscriptEntry:
    student_id: str
    course_prefix: str
    course_number: int
    quarter: Quarter
    credits: float
    grade: GradeValue
    declared_major: str

    def __post_init__(self):
        if self.credits < 0:
            raise DatasetIntegrityError(f"negative credits for {self.student_id} {self.course_id}")

    @property
    def course_id(self) -> str:
        return f"{self.course_prefix} {self.course_number:03d}"

    @property
    def course_level(self) -> int:
        return self.course_number // 100


@dataclass(frozen=True)
class MajorInfo:
    major_code: str
    display_name: str
    tracks: tuple = ()  # (track_name, is_stem_track) pairs
    is_premajor: bool = False
    premajor_family: Optional[str] = None

    @property
    def is_stem_premajor(self) -> bool:
        return self.is_premajor and self.premajor_family in STEM_PREMAJOR_FAMILIES


@dataclass(frozen=True)
class DegreeAward:
    student_id: str
    major_code: str
    quarter_awarded: Quarter


@dataclass(frozen=True)
class CohortLabel:
    student_id: str
    is_stem_student: bool
    is_graduate: bool
    is_stem_graduate: bool
    quarters_to_degree: Optional[int] = None

    def __post_init__(self):
        if self.is_stem_graduate and not self.is_graduate:
            raise ValueError("STEM graduate must be a graduate")
        if self.is_graduate != (self.quarters_to_degree is not None):
            raise ValueError("quarters_to_degree must be present iff graduate")


@dataclass
class MajorCatalog:
    """Case-insensitive lookup of majors by code."""

    majors: dict = field(default_factory=dict)

    @classmethod
    def from_majors(cls, majors: Iterable[MajorInfo]) -> "MajorCatalog":
        if isinstance(majors, MajorCatalog):
            return majors
        return cls({m.major_code.upper(): m for m in majors})

    def __getitem__(self, code: str) -> MajorInfo:
        try:
            return self.majors[code.upper()]
        except KeyError:
            raise DatasetIntegrityError(f"major code {code!r} not in the major catalog") from None

    def __contains__(self, code: str) -> bool:
        return code.upper() in self.majors

    def __iter__(self):
        return iter(self.majors.values())

    def __len__(self):
        return len(self.majors)


def classify_major_stem(major: MajorInfo) -> bool:
    """True when at least half of the major's tracks are STEM tracks."""
    if not major.tracks:
        raise InvalidCatalogError(f"major {major.major_code!r} has no tracks")
    n_stem = sum(1 for _, is_stem in major.tracks if is_stem)
    return 2 * n_stem >= len(major.tracks)


def is_stem_declaration(major: MajorInfo) -> bool:
    """A declared major signals STEM intent if it is a STEM major or a STEM premajor."""
    if major.is_premajor:
        return major.is_stem_premajor
    return classify_major_stem(major)


def transcripts_by_student(transcripts: Iterable[TranscriptEntry]) -> dict:
    grouped = defaultdict(list)
    for entry in transcripts:
        grouped[entry.student_id].append(entry)
    return grouped


def select_stem_students(
    students: Iterable[StudentRecord],
    transcripts: Iterable[TranscriptEntry],
    majors,
) -> set:
    """IDs of students who carried a STEM major or STEM premajor in their first calendar year."""
    catalog = MajorCatalog.from_majors(majors)
    first = {s.student_id: s.first_enrollment.index for s in students}
    selected = set()
    for entry in transcripts:
        start = first.get(entry.student_id)
        if start is None:
            continue
        major = catalog[entry.declared_major]  # unknown codes are hard errors everywhere
        if entry.student_id in selected:
            continue
        if 0 <= entry.quarter.index - start < FIRST_YEAR_QUARTERS and is_stem_declaration(major):
            selected.add(entry.student_id)
    return selected


def label_outcome(
    student: StudentRecord,
    degrees: Iterable[DegreeAward],
    majors,
    is_stem_student: bool = True,
    window: int = GRADUATION_WINDOW,
) -> CohortLabel:
    """Graduation and STEM-graduation status within ``window`` quarters of first enrollment."""
    catalog = MajorCatalog.from_majors(majors)
    start = student.first_enrollment.index
    best_gap = None
    stem_grad = False
    for award in degrees:
        if award.student_id != student.student_id:
            continue
        gap = award.quarter_awarded.index - start
        if gap < 0:
            raise DatasetIntegrityError(
                f"degree for {student.student_id} awarded {award.quarter_awarded} before first enrollment"
            )
        if gap > window:
            continue
        best_gap = gap if best_gap is None else min(best_gap, gap)
        if classify_major_stem(catalog[award.major_code]):
            stem_grad = True
    return CohortLabel(
        student_id=student.student_id,
        is_stem_student=is_stem_student,
        is_graduate=best_gap is not None,
        is_stem_graduate=stem_grad,
        quarters_to_degree=best_gap,
    )


def label_cohort(students, transcripts, degrees, majors, window: int = GRADUATION_WINDOW) -> dict:
    """Labels for every STEM student, keyed by student_id."""
    catalog = MajorCatalog.from_majors(majors)
    students = list(students)
    stem_ids = select_stem_students(students, transcripts, catalog)
    by_student = defaultdict(list)
    for award in degrees:
        by_student[award.student_id].append(award)
    return {
        s.student_id: label_outcome(s, by_student.get(s.student_id, ()), catalog, True, window)
        for s in students
        if s.student_id in stem_ids
    }


def first_year_slice(student: StudentRecord, transcripts: Iterable[TranscriptEntry]) -> list:
    """``(relative_quarter, entry)`` pairs for the four calendar quarters starting at first enrollment.

    Relative quarters run 1-4; unenrolled quarters simply have no entries.
    """
    start = student.first_enrollment.index
    out = []
    for entry in transcripts:
        if entry.student_id != student.student_id:
            continue
        rel = entry.quarter.index - start
        if 0 <= rel < FIRST_YEAR_QUARTERS:
            out.append((rel + 1, entry))
    out.sort(key=lambda pair: (pair[0], pair[1].course_prefix, pair[1].course_number))
    return out


def last_enrolled_quarter(tagged: Sequence) -> Optional[int]:
    """Largest relative quarter with at least one entry, or None."""
    return max((rel for rel, _ in tagged), default=None)


DEMOGRAPHIC_SECTIONS = (
    ("gender", "gender"),
    ("race", "race"),
    ("ethnicity", "ethnicity"),
    ("residency", "residency"),
)


def cohort_summary(labels: Mapping[str, CohortLabel], students: Iterable[StudentRecord]) -> list:
    """STEM graduate / NC counts and graduation rate, overall and per demographic category.

    Rows are dicts with keys ``section, category, stem_grads, stem_ncs, grad_rate``;
    categories without members are omitted.
    """
    students = [s for s in students if s.student_id in labels]

    def row(section, category, members):
        grads = sum(1 for s in members if labels[s.student_id].is_stem_graduate)
        ncs = len(members) - grads
        return {
            "section": section,
            "category": category,
            "stem_grads": grads,
            "stem_ncs": ncs,
            "grad_rate": grads / (grads + ncs),
        }

    rows = []
    if students:
        rows.append(row("all", "all", students))
    for section, attr in DEMOGRAPHIC_SECTIONS:
        groups = defaultdict(list)
        for s in students:
            groups[getattr(s, attr)].append(s)
        for category in sorted(groups):
            rows.append(row(section, category, groups[category]))
    return rows
