import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrition_lab.errors import DatasetIntegrityError
from attrition_lab.features import (
    FeatureMatrix,
    FeatureRegistry,
    build_matrix,
    build_registry,
    expected_size,
    grade_transforms,
    haversine_km,
    impute_scores,
    normalize_zip,
    offering_stats,
    performance_block,
    zip_features,
)
from attrition_lab.io import ZipAttributes
from attrition_lab.registrar import (
    CohortLabel,
    GradeValue,
    MajorInfo,
    Quarter,
    StudentRecord,
    TranscriptEntry,
)

Q0 = Quarter.of(2004, "autumn")
MAJORS = [MajorInfo("PREENG", "Pre-Engineering", (("pre", True),), True, "pre-engineering"),
          MajorInfo("MATH", "Mathematics", (("std", True),))]


def grade(v):
    return GradeValue("numeric", v)


def tx(sid, q, g, prefix="MATH", number=124, credits=5.0, major="PREENG"):
    return TranscriptEntry(sid, prefix, number, q, credits, g, major)


def stud(sid, sat=1200, act=None, zip_code="98105"):
    return StudentRecord(sid, "male", "asian", "not_hispanic", "resident", 1986, Q0, sat, act, 3.5,
                         "bachelor", zip_code)


def test_offering_std_is_population():
    entries = [tx(f"S{i}", Q0, grade(g)) for i, g in enumerate([3.0, 3.5, 4.0])]
    st_ = offering_stats(entries)[("MATH", 124, Q0.index)]
    assert st_.mean_grade == pytest.approx(3.5)
    assert st_.std_grade == pytest.approx(math.sqrt(1 / 6), abs=1e-12)
    assert round(st_.std_grade, 4) == 0.4082


def test_z_and_midrank_percentile():
    entries = [tx("A", Q0, grade(2.0)), tx("B", Q0, grade(4.0))]
    stats = offering_stats(entries)
    z, pct = grade_transforms(entries[1], stats)
    assert z == pytest.approx(1.0) and pct == pytest.approx(75.0)
    assert grade_transforms(tx("C", Q0, GradeValue("withdrawal")), stats) is None


def test_constant_offering_has_zero_z():
    entries = [tx("A", Q0, grade(3.0)), tx("B", Q0, grade(3.0))]
    z, pct = grade_transforms(entries[0], offering_stats(entries))
    assert z == 0.0 and pct == 50.0
    tenths = [tx(f"S{i}", Q0, grade(0.1)) for i in range(3)]  # 0.1 is not exact in binary
    assert grade_transforms(tenths[0], offering_stats(tenths)) == (0.0, 50.0)


def test_performance_block_numeric_only_averages():
    entries = [tx("A", Q0, grade(3.0)), tx("A", Q0, GradeValue("pass"), number=125, credits=3.0),
               tx("A", Q0, grade(0.0), number=126), tx("A", Q0, GradeValue("withdrawal"), number=127)]
    others = [tx("B", Q0, grade(1.0)), tx("B", Q0, grade(2.0), number=126)]
    stats = offering_stats(entries + others)
    count, credits, gpa, z, pct = performance_block(entries, stats)
    assert count == 4
    assert credits == 8.0  # the 3.0 and the pass; a 0.0 earns nothing
    assert gpa == pytest.approx(1.5)
    assert performance_block([], stats) == (0.0, 0.0, 0.0, 0.0, 50.0)


def test_haversine_quarter_meridian():
    assert haversine_km(90.0, 0.0, 0.0, 0.0) == pytest.approx(math.pi / 2 * 6371.0)
    assert round(float(haversine_km(0.0, 0.0, 90.0, 0.0)), 1) == 10007.5
    assert haversine_km(47.0, -122.0, 47.0, -122.0) == 0.0


@pytest.mark.parametrize("raw, want", [("98105", "98105"), (" 98105-1234 ", "98105"), ("981X5", None),
                                       ("", None), (None, None)])
def test_normalize_zip(raw, want):
    assert normalize_zip(raw) == want


def test_zip_fallback_flag():
    table = {"98105": ZipAttributes("98105", 60000.0, 90.0, 50.0, 47.66, -122.30)}
    vals, missing = zip_features(stud("A"), table, fallback=(1.0, 2.0, 3.0, 4.0))
    assert missing == 0 and vals[3] < 2.0
    vals, missing = zip_features(stud("B", zip_code="99999"), table, fallback=(1.0, 2.0, 3.0, 4.0))
    assert missing == 1 and vals == (1.0, 2.0, 3.0, 4.0)


def test_imputation_recovers_linear_sat():
    rng = np.random.default_rng(0)
    students = []
    for i in range(200):
        gpa = round(float(rng.uniform(2.5, 4.0)), 2)
        sat = int(round(400 + 250 * gpa))
        students.append(StudentRecord(f"S{i:03d}", "male", "asian", "not_hispanic", "resident", 1986, Q0,
                                      sat if i % 5 else None, None, gpa, "bachelor", None))
    res = impute_scores(students)
    assert res.method["sat"] == "ols"
    for s in res.students:
        if s.student_id in res.imputed["sat"]:
            assert abs(s.sat_score - (400 + 250 * s.hs_gpa)) <= 1
    assert len(res.imputed["sat"]) == 40


def test_registry_sizes():
    reg = build_registry([f"M{i:03d}" for i in range(150)], [f"P{i:03d}" for i in range(200)])
    assert len(reg) == expected_size(150, 200) == 1378
    assert len(build_registry([], [])) == 228
    assert reg.names[:1] == ["demo.gender.female"]
    assert reg.presence["prefix.P000"] == "prefix.P000.count"


def test_registry_json_round_trip():
    reg = build_registry(["MATH", "PREENG"], ["CHEM", "MATH"])
    back = FeatureRegistry.from_json(reg.to_json())
    assert back.names == reg.names and back.fingerprint() == reg.fingerprint()
    assert back.majors == reg.majors and back.prefixes == reg.prefixes


def _tiny_dataset():
    students = [stud(f"S{i}") for i in range(8)]
    transcripts = []
    for i, s in enumerate(students):
        transcripts.append(tx(s.student_id, Q0, grade(2.0 + 0.2 * i)))
        transcripts.append(tx(s.student_id, Q0 + 1, grade(3.0), prefix="CHEM", number=142))
        transcripts.append(tx(s.student_id, Q0 + 5, grade(1.0), prefix="PHYS", number=321, major="MATH"))
    labels = {s.student_id: CohortLabel(s.student_id, True, True, i % 2 == 0, 12)
              for i, s in enumerate(students)}
    return students, transcripts, labels


def test_tiny_matrix_values():
    students, transcripts, labels = _tiny_dataset()
    m = build_matrix(students, transcripts, MAJORS, {}, labels)
    assert m.shape == (8, len(m.registry))
    assert list(m.registry.majors) == ["PREENG"]  # MATH is only declared after year one
    assert set(m.registry.prefixes) == {"CHEM", "MATH"}  # PHYS never appears in year one
    np.testing.assert_allclose(m.column("fy.year.count"), 2.0)
    np.testing.assert_allclose(m.column("prefix.MATH.gpa"), [2.0 + 0.2 * i for i in range(8)])
    np.testing.assert_allclose(m.column("group.gk_calculus.count"), 1.0)
    np.testing.assert_allclose(m.column("fy.q3.count"), 0.0)
    np.testing.assert_allclose(m.column("fy.last.gpa"), 3.0)
    np.testing.assert_allclose(m.column("demo.zip_missing"), 1.0)
    assert m.presence("fy.q2").tolist() == [1] * 8
    assert m.presence("fy.q3").tolist() == [0] * 8
    assert m.y().tolist() == [1, 0] * 4


def test_later_quarters_do_not_leak():
    students, transcripts, labels = _tiny_dataset()
    base = build_matrix(students, transcripts, MAJORS, {}, labels)
    changed = [replace(e, grade=grade(4.0)) if e.quarter.index >= Q0.index + 4 else e for e in transcripts]
    flipped = {k: replace(v, is_stem_graduate=not v.is_stem_graduate) for k, v in labels.items()}
    again = build_matrix(students, changed, MAJORS, {}, flipped)
    np.testing.assert_array_equal(base.values, again.values)
    assert base.registry.fingerprint() == again.registry.fingerprint()


def test_unknown_label_ids_rejected():
    students, transcripts, labels = _tiny_dataset()
    labels["GHOST"] = CohortLabel("GHOST", True, False, False)
    with pytest.raises(DatasetIntegrityError):
        build_matrix(students, transcripts, MAJORS, {}, labels)


def test_matrix_write_read(tmp_path, small_matrix):
    small_matrix.write(tmp_path)
    back = FeatureMatrix.read(tmp_path)
    assert back.student_ids == small_matrix.student_ids
    np.testing.assert_array_equal(back.values, small_matrix.values)
    assert back.registry.fingerprint() == small_matrix.registry.fingerprint()


def test_synthetic_matrix_is_complete(small_matrix):
    reg = small_matrix.registry
    assert len(reg) == expected_size(len(reg.majors), len(reg.prefixes))
    assert np.isfinite(small_matrix.values).all()
    pct = small_matrix.column("fy.year.pct")
    assert pct.min() >= 0.0 and pct.max() <= 100.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=30))
def test_offering_transform_properties(tenths):
    entries = [tx(f"S{i}", Q0, grade(t / 10)) for i, t in enumerate(tenths)]
    stats = offering_stats(entries)
    pairs = [grade_transforms(e, stats) for e in entries]
    zs = np.array([p[0] for p in pairs])
    pcts = np.array([p[1] for p in pairs])
    assert abs(zs.mean()) < 1e-9
    assert np.all((pcts > 0) & (pcts <= 100))
    assert pcts.mean() == pytest.approx(50.0)  # midranks average to the middle
    order = np.argsort(tenths, kind="mergesort")
    assert np.all(np.diff(pcts[order]) >= 0)
