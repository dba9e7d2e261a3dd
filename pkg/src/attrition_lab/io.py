"""Reading and writing the registrar CSV schemas.

All files are UTF-8, comma separated, with a header row; an empty string
means "missing". Writers emit LF line endings and fixed numeric formats so
identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import DatasetIntegrityError
from .registrar import (
    CohortLabel,
    DegreeAward,
    GradeValue,
    MajorCatalog,
    MajorInfo,
    Quarter,
    StudentRecord,
    TranscriptEntry,
)

STUDENT_COLUMNS = [
    "student_id", "gender", "race", "ethnicity", "residency", "birth_year",
    "first_enroll_year", "first_enroll_season", "sat", "act", "hs_gpa", "parent_edu", "zip",
]
TRANSCRIPT_COLUMNS = [
    "student_id", "prefix", "number", "year", "season", "credits", "grade_kind", "grade_value",
    "declared_major",
]
MAJOR_COLUMNS = ["major_code", "name", "track_name", "is_stem_track", "is_premajor", "premajor_family"]
DEGREE_COLUMNS = ["student_id", "major_code", "year", "season"]
ZIP_COLUMNS = ["zip", "avg_income", "pct_hs", "pct_college", "lat", "lon"]
GROUND_TRUTH_COLUMNS = ["student_id", "quarter_rel", "intent"]


@dataclass(frozen=True)
class ZipAttributes:
    zip: str
    avg_income: float
    pct_hs_grads: float
    pct_college_grads: float
    latitude: float
    longitude: float

    def __post_init__(self):
        for name in ("pct_hs_grads", "pct_college_grads"):
            if not 0.0 <= getattr(self, name) <= 100.0:
                raise DatasetIntegrityError(f"ZIP {self.zip}: {name} outside [0, 100]")
        if not -90.0 <= self.latitude <= 90.0 or not -180.0 <= self.longitude <= 180.0:
            raise DatasetIntegrityError(f"ZIP {self.zip}: coordinates out of range")


@dataclass
class Dataset:
    students: list
    transcripts: list
    majors: MajorCatalog
    degrees: list
    zip_attrs: dict = field(default_factory=dict)


def fmt_num(x) -> str:
    """Shortest round-trip decimal for floats; plain digits for ints."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def fmt_prob(x) -> str:
    """Probabilities get 17 significant digits (exact float round trip)."""
    return f"{float(x):.17g}"


def _opt(value: str, cast):
    value = value.strip()
    return cast(value) if value else None


def _bool(value: str) -> bool:
    value = value.strip().lower()
    if value in ("1", "true", "t", "yes", "y"):
        return True
    if value in ("0", "false", "f", "no", "n", ""):
        return False
    raise DatasetIntegrityError(f"not a boolean: {value!r}")


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        yield from csv.DictReader(fh)


def write_rows(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def read_students(path) -> list:
    out = []
    for r in _rows(path):
        zip_code = r["zip"].strip() or None
        out.append(StudentRecord(
            student_id=r["student_id"],
            gender=r["gender"],
            race=r["race"],
            ethnicity=r["ethnicity"],
            residency=r["residency"],
            birth_year=int(r["birth_year"]),
            first_enrollment=Quarter.of(int(r["first_enroll_year"]), r["first_enroll_season"]),
            sat_score=_opt(r["sat"], lambda v: int(float(v))),
            act_score=_opt(r["act"], lambda v: int(float(v))),
            hs_gpa=_opt(r["hs_gpa"], float),
            parent_education=r["parent_edu"] or "unknown",
            application_zip=zip_code,
        ))
    ids = [s.student_id for s in out]
    if len(set(ids)) != len(ids):
        raise DatasetIntegrityError(f"{path}: duplicate student_id")
    return out


def write_students(path, students: Iterable[StudentRecord]):
    write_rows(path, STUDENT_COLUMNS, (
        [s.student_id, s.gender, s.race, s.ethnicity, s.residency, s.birth_year,
         s.first_enrollment.year, s.first_enrollment.season, fmt_num(s.sat_score),
         fmt_num(s.act_score), "" if s.hs_gpa is None else f"{s.hs_gpa:.2f}",
         s.parent_education, s.application_zip or ""]
        for s in students
    ))


def read_transcripts(path) -> list:
    out = []
    seen = set()
    for r in _rows(path):
        kind = r["grade_kind"].strip()
        entry = TranscriptEntry(
            student_id=r["student_id"],
            course_prefix=r["prefix"].strip().upper(),
            course_number=int(r["number"]),
            quarter=Quarter.of(int(r["year"]), r["season"]),
            credits=float(r["credits"]),
            grade=GradeValue(kind, _opt(r["grade_value"], float) if kind == "numeric" else None),
            declared_major=r["declared_major"],
        )
        key = (entry.student_id, entry.course_prefix, entry.course_number, entry.quarter.index)
        if key in seen:
            raise DatasetIntegrityError(f"{path}: duplicate transcript entry {key}")
        seen.add(key)
        out.append(entry)
    return out


def write_transcripts(path, transcripts: Iterable[TranscriptEntry]):
    write_rows(path, TRANSCRIPT_COLUMNS, (
        [t.student_id, t.course_prefix, t.course_number, t.quarter.year, t.quarter.season,
         fmt_num(t.credits), t.grade.kind,
         "" if t.grade.value is None else f"{t.grade.value:.1f}", t.declared_major]
        for t in transcripts
    ))


def read_majors(path) -> MajorCatalog:
    grouped = OrderedDict()
    for r in _rows(path):
        code = r["major_code"].strip()
        rec = grouped.setdefault(code.upper(), {
            "code": code, "name": r["name"], "tracks": [],
            "is_premajor": _bool(r["is_premajor"]),
            "family": r["premajor_family"].strip() or None,
        })
        if r["track_name"].strip():
            rec["tracks"].append((r["track_name"].strip(), _bool(r["is_stem_track"])))
    return MajorCatalog.from_majors(
        MajorInfo(rec["code"], rec["name"], tuple(rec["tracks"]), rec["is_premajor"], rec["family"])
        for rec in grouped.values()
    )


def write_majors(path, majors: Iterable[MajorInfo]):
    rows = []
    for m in majors:
        family = m.premajor_family or ""
        if m.tracks:
            for track, is_stem in m.tracks:
                rows.append([m.major_code, m.display_name, track, fmt_num(is_stem),
                             fmt_num(m.is_premajor), family])
        else:
            rows.append([m.major_code, m.display_name, "", "", fmt_num(m.is_premajor), family])
    write_rows(path, MAJOR_COLUMNS, rows)


def read_degrees(path) -> list:
    return [
        DegreeAward(r["student_id"], r["major_code"], Quarter.of(int(r["year"]), r["season"]))
        for r in _rows(path)
    ]


def write_degrees(path, degrees: Iterable[DegreeAward]):
    write_rows(path, DEGREE_COLUMNS, (
        [d.student_id, d.major_code, d.quarter_awarded.year, d.quarter_awarded.season]
        for d in degrees
    ))


def read_zip_attrs(path) -> dict:
    out = {}
    for r in _rows(path):
        z = ZipAttributes(r["zip"].strip(), float(r["avg_income"]), float(r["pct_hs"]),
                          float(r["pct_college"]), float(r["lat"]), float(r["lon"]))
        out[z.zip] = z
    return out


def write_zip_attrs(path, zip_attrs):
    write_rows(path, ZIP_COLUMNS, (
        [z.zip, f"{z.avg_income:.2f}", f"{z.pct_hs_grads:.2f}", f"{z.pct_college_grads:.2f}",
         f"{z.latitude:.6f}", f"{z.longitude:.6f}"]
        for z in (zip_attrs.values() if isinstance(zip_attrs, dict) else zip_attrs)
    ))


DATASET_FILES = {
    "students": "students.csv",
    "transcripts": "transcripts.csv",
    "majors": "majors.csv",
    "degrees": "degrees.csv",
    "zip_attrs": "zip_attrs.csv",
}


def read_dataset(directory, paths: Optional[dict] = None) -> Dataset:
    """Load the five dataset CSVs from ``directory`` (or explicit ``paths``)."""
    directory = Path(directory) if directory is not None else None
    resolved = {}
    for key, name in DATASET_FILES.items():
        p = (paths or {}).get(key)
        resolved[key] = Path(p) if p else directory / name
    zip_path = resolved["zip_attrs"]
    return Dataset(
        students=read_students(resolved["students"]),
        transcripts=read_transcripts(resolved["transcripts"]),
        majors=read_majors(resolved["majors"]),
        degrees=read_degrees(resolved["degrees"]),
        zip_attrs=read_zip_attrs(zip_path) if zip_path.exists() else {},
    )


def write_dataset(directory, data: Dataset):
    directory = Path(directory)
    write_students(directory / DATASET_FILES["students"], data.students)
    write_transcripts(directory / DATASET_FILES["transcripts"], data.transcripts)
    write_majors(directory / DATASET_FILES["majors"], data.majors)
    write_degrees(directory / DATASET_FILES["degrees"], data.degrees)
    write_zip_attrs(directory / DATASET_FILES["zip_attrs"], data.zip_attrs)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def json_digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


LABEL_COLUMNS = ["student_id", "is_stem_student", "is_graduate", "is_stem_graduate", "quarters_to_degree"]


def write_labels(path, labels):
    return write_rows(path, LABEL_COLUMNS, (
        [sid, fmt_num(lab.is_stem_student), fmt_num(lab.is_graduate), fmt_num(lab.is_stem_graduate),
         fmt_num(lab.quarters_to_degree)]
        for sid, lab in sorted(labels.items())
    ))


def read_labels(path) -> dict:
    out = {}
    for r in _rows(path):
        q = r["quarters_to_degree"]
        out[r["student_id"]] = CohortLabel(r["student_id"], r["is_stem_student"] == "1", r["is_graduate"] == "1",
                                           r["is_stem_graduate"] == "1", int(q) if q else None)
    return out
