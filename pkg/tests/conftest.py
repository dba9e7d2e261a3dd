import numpy as np
import pytest

from attrition_lab.features import build_matrix
from attrition_lab.registrar import label_cohort
from attrition_lab.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n_students=1500, seed=7))


@pytest.fixture(scope="session")
def small_labels(small_synth):
    ds = small_synth.dataset
    return label_cohort(ds.students, ds.transcripts, ds.degrees, ds.majors)


@pytest.fixture(scope="session")
def small_matrix(small_synth, small_labels):
    ds = small_synth.dataset
    return build_matrix(ds.students, ds.transcripts, ds.majors, ds.zip_attrs, small_labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
