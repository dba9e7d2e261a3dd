import pytest

from attrition_lab.errors import DatasetIntegrityError, InvalidCatalogError
from attrition_lab.registrar import (
    CohortLabel,
    DegreeAward,
    GradeValue,
    MajorInfo,
    Quarter,
    StudentRecord,
    TranscriptEntry,
    classify_major_stem,
    cohort_summary,
    first_year_slice,
    is_stem_declaration,
    label_cohort,
    label_outcome,
    last_enrolled_quarter,
    select_stem_students,
)

MAJORS = [
    MajorInfo("MATH", "Mathematics", (("standard", True), ("applied", True), ("comprehensive", True),
                                      ("teacher preparation", False))),
    MajorInfo("DESIGN", "Design", (("visual", False), ("industrial", False), ("interaction", True),
                                   ("exhibition", False))),
    MajorInfo("HALF", "Half", (("a", True), ("b", False))),
    MajorInfo("PSYCH", "Psychology", (("general", False),)),
    MajorInfo("PREENG", "Pre-Engineering", (("pre", True),), True, "pre-engineering"),
    MajorInfo("UNDECL", "Undeclared", (("pre", False),), True, "non-stem"),
]


def student(sid="S1", year=2004, season="autumn"):
    return StudentRecord(sid, "female", "asian", "not_hispanic", "resident", 1986, Quarter.of(year, season))


def entry(sid, quarter, major, prefix="MATH", number=124):
    return TranscriptEntry(sid, prefix, number, quarter, 5.0, GradeValue("numeric", 3.0), major)


def test_quarter_index_and_arithmetic():
    q = Quarter.of(2004, "autumn")
    assert q.index == 4 * 2004 + 3
    assert Quarter.from_index(q.index) == q
    assert (q + 1) == Quarter.of(2005, "winter")
    assert (q + 24) - q == 24
    assert str(q) == "autumn-2004"
    assert Quarter.of(2004, "Winter") < Quarter.of(2004, "spring")


def test_unknown_season_rejected():
    with pytest.raises(DatasetIntegrityError):
        Quarter.of(2004, "monsoon")


@pytest.mark.parametrize("value", [4.1, -0.1, 3.25])
def test_numeric_grade_off_grid(value):
    with pytest.raises(DatasetIntegrityError):
        GradeValue("numeric", value)


def test_grade_kinds():
    assert GradeValue("numeric", 3.7).value == 3.7
    assert not GradeValue("withdrawal").is_numeric
    with pytest.raises(DatasetIntegrityError):
        GradeValue("pass", 4.0)
    with pytest.raises(DatasetIntegrityError):
        GradeValue("audit")


def test_stem_classification_by_track_share():
    by = {m.major_code: m for m in MAJORS}
    assert classify_major_stem(by["MATH"])  # 3 of 4 STEM tracks
    assert not classify_major_stem(by["DESIGN"])  # 1 of 4
    assert classify_major_stem(by["HALF"])  # exactly half counts
    assert is_stem_declaration(by["PREENG"])
    assert not is_stem_declaration(by["UNDECL"])
    with pytest.raises(InvalidCatalogError):
        classify_major_stem(MajorInfo("EMPTY", "Empty"))


def test_first_year_selection_uses_calendar_quarters():
    s1, s2, s3 = student("S1"), student("S2"), student("S3")
    start = s1.first_enrollment
    transcripts = [
        entry("S1", start + 3, "PREENG"),  # relative quarter 4: still year one
        entry("S2", start + 4, "MATH"),  # relative quarter 5: too late
        entry("S2", start, "UNDECL"),
        entry("S3", start, "PSYCH"),
    ]
    assert select_stem_students([s1, s2, s3], transcripts, MAJORS) == {"S1"}


def test_unknown_major_is_an_error():
    s = student()
    with pytest.raises(DatasetIntegrityError):
        select_stem_students([s], [entry("S1", s.first_enrollment, "NOPE")], MAJORS)


@pytest.mark.parametrize("gap, graduate", [(0, True), (12, True), (24, True), (25, False)])
def test_window_boundary(gap, graduate):
    s = student()
    award = DegreeAward("S1", "MATH", s.first_enrollment + gap)
    lab = label_outcome(s, [award], MAJORS)
    assert lab.is_graduate is graduate
    assert lab.is_stem_graduate is graduate
    assert lab.quarters_to_degree == (gap if graduate else None)


def test_nonstem_degree_is_a_non_completion():
    s = student()
    lab = label_outcome(s, [DegreeAward("S1", "PSYCH", s.first_enrollment + 12)], MAJORS)
    assert lab.is_graduate and not lab.is_stem_graduate


def test_double_degree_any_stem_counts_and_earliest_gap():
    s = student()
    awards = [DegreeAward("S1", "PSYCH", s.first_enrollment + 10),
              DegreeAward("S1", "MATH", s.first_enrollment + 14),
              DegreeAward("S1", "MATH", s.first_enrollment + 30)]
    lab = label_outcome(s, awards, MAJORS)
    assert lab.is_stem_graduate and lab.quarters_to_degree == 10


def test_degree_before_entry_rejected():
    s = student()
    with pytest.raises(DatasetIntegrityError):
        label_outcome(s, [DegreeAward("S1", "MATH", s.first_enrollment + -1)], MAJORS)


def test_label_invariants():
    with pytest.raises(ValueError):
        CohortLabel("S1", True, False, True)
    with pytest.raises(ValueError):
        CohortLabel("S1", True, True, False, None)


def test_first_year_slice_and_last_quarter():
    s = student()
    q0 = s.first_enrollment
    tx = [entry("S1", q0 + 2, "PREENG", "CHEM", 142), entry("S1", q0, "PREENG"),
          entry("S1", q0 + 5, "PREENG"), entry("S2", q0, "PREENG")]
    sl = first_year_slice(s, tx)
    assert [rel for rel, _ in sl] == [1, 3]
    assert last_enrolled_quarter(sl) == 3
    assert last_enrolled_quarter([]) is None


def test_cohort_summary_counts():
    students = [student("S1"), student("S2"), student("S3")]
    q0 = students[0].first_enrollment
    tx = [entry(s.student_id, q0, "PREENG") for s in students]
    degrees = [DegreeAward("S1", "MATH", q0 + 12), DegreeAward("S2", "PSYCH", q0 + 12)]
    labels = label_cohort(students, tx, degrees, MAJORS)
    rows = cohort_summary(labels, students)
    top = rows[0]
    assert (top["section"], top["stem_grads"], top["stem_ncs"]) == ("all", 1, 2)
    assert top["grad_rate"] == pytest.approx(1 / 3)
    assert {r["section"] for r in rows} == {"all", "gender", "race", "ethnicity", "residency"}


def test_labels_match_generator_truth(small_synth, small_labels):
    truth = small_synth.truth
    stem = {sid for sid, t in truth.students.items() if t.true_outcome.is_stem_student}
    assert set(small_labels) == stem
    for sid, lab in small_labels.items():
        assert lab == truth[sid].true_outcome
