"""Hidden-state model of quarter-by-quarter STEM intent.

Each calendar quarter carries a binary hidden state (STEM or not) that emits
a plate of conditionally independent Bernoulli course indicators over the full
course vocabulary. Smoothed posteriors of the STEM state are the student's
"affinity"; thresholding them at 0.5 gives intent labels and switches.

State index 0 is STEM and 1 is non-STEM throughout, so the transition matrix
is ``[[a, 1 - a], [1 - b, b]]``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from . import io
from .errors import ConfigError, DatasetIntegrityError, NumericalError
from .registrar import MajorCatalog, label_outcome, transcripts_by_student

log = logging.getLogger(__name__)

THRESHOLD = 0.5
DEFAULT_SWITCH_PENALTY = 0.1
DEFAULT_DURATION = 12
DEFAULT_SWITCH_QUARTERS = 11
ITERATION_THRESHOLD = 0.5
OUT_OF_STEM = "out_of_stem"
INTO_STEM = "into_stem"


def default_grid() -> tuple:
    """Persistence values 0.50, 0.51, ..., 0.99 plus 0.999, in thousandths."""
    return tuple(range(500, 1000, 10)) + (999,)


@dataclass(frozen=True)
class CourseVocabulary:
    courses: tuple

    def __post_init__(self):
        if len(set(self.courses)) != len(self.courses):
            raise DatasetIntegrityError("course vocabulary has duplicate entries")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.courses)})

    def __len__(self):
        return len(self.courses)

    def index(self, course: str) -> int:
        return self._index[course]

    def __contains__(self, course):
        return course in self._index

    @classmethod
    def from_transcripts(cls, transcripts) -> "CourseVocabulary":
        return cls(tuple(sorted({course_key(e) for e in transcripts})))


def course_key(entry) -> str:
    return f"{entry.course_prefix} {entry.course_number}"


@dataclass(frozen=True)
class ObservationSequence:
    """Course indices per calendar quarter ``1..T``; gap quarters are empty tuples."""

    student_id: str
    quarters: tuple

    def __post_init__(self):
        if not self.quarters:
            raise DatasetIntegrityError(f"observation sequence for {self.student_id} is empty")
        object.__setattr__(self, "quarters", tuple(tuple(sorted(set(q))) for q in self.quarters))

    @property
    def length(self) -> int:
        return len(self.quarters)

    def check(self, n_courses: int):
        for q in self.quarters:
            if any(i < 0 or i >= n_courses for i in q):
                raise DatasetIntegrityError(f"course index out of range in sequence {self.student_id}")


@dataclass
class AffinityModel:
    prior: float
    transition: np.ndarray
    emissions: np.ndarray  # (2, N): row 0 STEM, row 1 non-STEM
    vocabulary: CourseVocabulary = None

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.emissions = np.asarray(self.emissions, dtype=float)
        if not 0.0 <= self.prior <= 1.0:
            raise ConfigError("prior must lie in [0, 1]")
        if self.transition.shape != (2, 2) or np.any(self.transition < 0):
            raise ConfigError("transition must be a non-negative 2x2 matrix")
        if np.any(np.abs(self.transition.sum(axis=1) - 1.0) > 1e-12):
            raise ConfigError("transition rows must sum to 1")
        if self.emissions.ndim != 2 or self.emissions.shape[0] != 2:
            raise ConfigError("emissions must have shape (2, N)")
        if np.any(self.emissions <= 0) or np.any(self.emissions >= 1):
            raise ConfigError("emission probabilities must lie strictly inside (0, 1)")
        if self.vocabulary is not None and len(self.vocabulary) != self.emissions.shape[1]:
            raise ConfigError("vocabulary size does not match emissions")

    @property
    def n_courses(self) -> int:
        return self.emissions.shape[1]

    def with_transition(self, transition) -> "AffinityModel":
        return AffinityModel(self.prior, transition, self.emissions, self.vocabulary)

    def with_emissions(self, emissions) -> "AffinityModel":
        return AffinityModel(self.prior, self.transition, emissions, self.vocabulary)

    def to_json(self) -> dict:
        return {
            "prior": io.fmt_prob(self.prior),
            "transition": [[io.fmt_prob(v) for v in row] for row in self.transition],
            "states": ["stem", "nonstem"],
            "vocabulary": list(self.vocabulary.courses) if self.vocabulary else None,
            "emissions": {
                "stem": [io.fmt_prob(v) for v in self.emissions[0]],
                "nonstem": [io.fmt_prob(v) for v in self.emissions[1]],
            },
        }

    @classmethod
    def from_json(cls, d) -> "AffinityModel":
        vocab = CourseVocabulary(tuple(d["vocabulary"])) if d.get("vocabulary") else None
        em = np.array([[float(v) for v in d["emissions"]["stem"]],
                       [float(v) for v in d["emissions"]["nonstem"]]])
        return cls(float(d["prior"]), np.array([[float(v) for v in r] for r in d["transition"]]), em, vocab)


def transition_matrix(a: float, b: float) -> np.ndarray:
    return np.array([[a, 1.0 - a], [1.0 - b, b]])


@dataclass(frozen=True)
class AffinityTrace:
    student_id: str
    affinities: tuple
    intent_labels: tuple
    switches: tuple  # (quarter, direction)

    @property
    def length(self) -> int:
        return len(self.affinities)


@dataclass(frozen=True)
class AffinityDataset:
    sequences: tuple
    final_labels: tuple  # True = STEM degree
    vocabulary: CourseVocabulary
    cohort_year: int


# ---------------------------------------------------------------- data assembly

def build_sequence(student, entries, vocabulary: CourseVocabulary) -> ObservationSequence:
    """Calendar-aligned course sets from first enrollment through the last enrolled quarter."""
    start = student.first_enrollment.index
    by_rel = {}
    for e in entries:
        rel = e.quarter.index - start
        if rel < 0:
            raise DatasetIntegrityError(f"course for {student.student_id} precedes first enrollment")
        by_rel.setdefault(rel, []).append(vocabulary.index(course_key(e)))
    if not by_rel:
        raise DatasetIntegrityError(f"student {student.student_id} has no transcript entries")
    T = max(by_rel) + 1
    return ObservationSequence(student.student_id, tuple(tuple(by_rel.get(t, ())) for t in range(T)))


def affinity_dataset(students, transcripts, degrees, majors, cohort_year: int,
                     window: int = 24) -> AffinityDataset:
    """Graduates (within ``window``) whose first enrollment falls in ``cohort_year``.

    The vocabulary spans every course these students ever took.
    """
    catalog = MajorCatalog.from_majors(majors)
    by_student = transcripts_by_student(transcripts)
    deg_by = {}
    for d in degrees:
        deg_by.setdefault(d.student_id, []).append(d)
    chosen = []
    for s in sorted(students, key=lambda r: r.student_id):
        if s.first_enrollment.year != cohort_year or s.student_id not in by_student:
            continue
        lab = label_outcome(s, deg_by.get(s.student_id, ()), catalog, is_stem_student=False, window=window)
        if lab.is_graduate:
            chosen.append((s, lab.is_stem_graduate))
    if not chosen:
        raise DatasetIntegrityError(f"no graduates found for cohort year {cohort_year}")
    vocab = CourseVocabulary.from_transcripts(e for s, _ in chosen for e in by_student[s.student_id])
    seqs = tuple(build_sequence(s, by_student[s.student_id], vocab) for s, _ in chosen)
    return AffinityDataset(seqs, tuple(bool(y) for _, y in chosen), vocab, cohort_year)


# ---------------------------------------------------------------- estimation

def estimate_prior(final_labels) -> float:
    labels = list(final_labels)
    if not labels:
        raise DatasetIntegrityError("cannot estimate a prior from zero students")
    return sum(1 for y in labels if y) / len(labels)


def estimate_emissions(sequences, final_labels, vocabulary) -> np.ndarray:
    """Laplace-smoothed share of each class's students who ever took each course."""
    n = len(vocabulary)
    counts = np.zeros((2, n))
    sizes = np.zeros(2)
    for seq, y in zip(sequences, final_labels):
        s = 0 if y else 1
        sizes[s] += 1
        ever = sorted({i for q in seq.quarters for i in q})
        counts[s, ever] += 1
    if np.any(sizes == 0):
        raise DatasetIntegrityError("emission estimation needs at least one student in each class")
    return (counts + 1.0) / (sizes[:, None] + 2.0)


# ---------------------------------------------------------------- inference

@dataclass
class _Batch:
    """Padded per-quarter course indicators for many sequences as one sparse matrix."""

    lengths: np.ndarray
    t_max: int
    indicators: sparse.csr_matrix  # (n_seq * t_max, N)

    @classmethod
    def build(cls, sequences, n_courses: int) -> "_Batch":
        seqs = list(sequences)
        lengths = np.array([s.length for s in seqs], dtype=np.int64)
        t_max = int(lengths.max()) if len(seqs) else 0
        rows, cols = [], []
        for k, seq in enumerate(seqs):
            seq.check(n_courses)
            for t, q in enumerate(seq.quarters):
                rows.extend([k * t_max + t] * len(q))
                cols.extend(q)
        data = np.ones(len(rows))
        mat = sparse.csr_matrix((data, (rows, cols)), shape=(len(seqs) * t_max, n_courses))
        return cls(lengths, t_max, mat)

    @property
    def mask(self) -> np.ndarray:
        return np.arange(self.t_max)[None, :] < self.lengths[:, None]


def emission_loglik(emissions: np.ndarray, batch: _Batch) -> np.ndarray:
    """(n_seq, t_max, 2) per-quarter log-likelihoods; padding quarters are 0 (uninformative)."""
    log_p = np.log(emissions)
    log_q = np.log1p(-emissions)
    base = log_q.sum(axis=1)
    delta = (log_p - log_q).T  # (N, 2)
    ll = (batch.indicators @ delta).reshape(len(batch.lengths), batch.t_max, 2) + base
    ll[~batch.mask] = 0.0
    if not np.all(np.isfinite(ll)):
        raise NumericalError("non-finite emission log-likelihood")
    return ll


def _log_normalize(x):
    z = np.logaddexp(x[..., 0], x[..., 1])
    return x - z[..., None], z


def posterior_batch(model: AffinityModel, batch: _Batch, ll=None):
    """Exact smoothed posteriors in log space.

    Returns (gamma (n_seq, t_max, 2) with zeros on padding, per-sequence log-likelihood).
    """
    if ll is None:
        ll = emission_loglik(model.emissions, batch)
    n, T = len(batch.lengths), batch.t_max
    with np.errstate(divide="ignore"):
        log_a = np.log(model.transition)
        log_pi = np.log(np.array([model.prior, 1.0 - model.prior]))
    log_alpha = np.empty((n, T, 2))
    loglik = np.zeros(n)
    prev = np.broadcast_to(log_pi, (n, 2))
    mask = batch.mask
    for t in range(T):
        pred = np.stack([np.logaddexp(prev[:, 0] + log_a[0, s], prev[:, 1] + log_a[1, s]) for s in (0, 1)],
                        axis=1)
        joint, z = _log_normalize(pred + ll[:, t])
        log_alpha[:, t] = joint
        loglik += np.where(mask[:, t], z, 0.0)
        prev = joint
    log_beta = np.zeros((n, T, 2))
    nxt = np.zeros((n, 2))
    for t in range(T - 2, -1, -1):
        w = ll[:, t + 1] + nxt
        b = np.stack([np.logaddexp(log_a[s, 0] + w[:, 0], log_a[s, 1] + w[:, 1]) for s in (0, 1)], axis=1)
        b, _ = _log_normalize(b)
        b = np.where((t + 1 < batch.lengths)[:, None], b, 0.0)
        log_beta[:, t] = b
        nxt = b
    log_gamma, _ = _log_normalize(log_alpha + log_beta)
    gamma = np.exp(log_gamma)
    gamma[~mask] = 0.0
    if not np.all(np.isfinite(gamma)) or not np.all(np.isfinite(loglik)):
        raise NumericalError("non-finite posterior in forward-backward")
    return gamma, loglik


def forward_backward(model: AffinityModel, sequence: ObservationSequence) -> np.ndarray:
    """P(STEM at quarter t | all of the student's quarters) for t = 1..T."""
    gamma, _ = posterior_batch(model, _Batch.build([sequence], model.n_courses))
    return gamma[0, : sequence.length, 0].copy()


def log_likelihood(model: AffinityModel, sequences) -> float:
    _, ll = posterior_batch(model, _Batch.build(sequences, model.n_courses))
    return math.fsum(ll)


def switches_from_labels(labels) -> tuple:
    out = []
    for t in range(1, len(labels)):
        if labels[t] != labels[t - 1]:
            out.append((t + 1, INTO_STEM if labels[t] else OUT_OF_STEM))
    return tuple(out)


def _make_trace(student_id, gammas) -> AffinityTrace:
    labels = tuple(bool(g >= THRESHOLD) for g in gammas)
    return AffinityTrace(student_id, tuple(float(g) for g in gammas), labels, switches_from_labels(labels))


def trace_student(model: AffinityModel, sequence: ObservationSequence) -> AffinityTrace:
    return _make_trace(sequence.student_id, forward_backward(model, sequence))


def trace_all(model: AffinityModel, sequences) -> list:
    seqs = list(sequences)
    gamma, _ = posterior_batch(model, _Batch.build(seqs, model.n_courses))
    return [_make_trace(s.student_id, gamma[k, : s.length, 0]) for k, s in enumerate(seqs)]


# ---------------------------------------------------------------- transition search

@dataclass
class TransitionFit:
    matrix: np.ndarray
    a: float
    b: float
    score: float
    matches: int
    switchers: int
    penalty: float
    table: list = field(default_factory=list)  # (a_milli, b_milli, matches, switchers)


def _grid_counts(r, lengths, prior, a, b):
    """Final-quarter matches and switcher counts for each (a, b) pair at once.

    ``r`` is the (n_seq, t_max) STEM-minus-nonSTEM per-quarter log-likelihood
    ratio. With two states, forward filtering and backward smoothing reduce to
    recursions on log-odds, which this evaluates for a block of grid points.
    Returns (final STEM labels (G, n), switched (G, n)).
    """
    n, T = r.shape
    a = a[:, None]
    b = b[:, None]
    lf = np.empty((T, len(a), n))
    f = np.full((len(a), n), prior)
    for t in range(T):
        q = f * a + (1.0 - f) * (1.0 - b)
        lf[t] = np.log(q) - np.log1p(-q) + r[:, t]
        f = expit(lf[t])
    last = lengths - 1
    rows = np.arange(n)
    final = lf[last, :, rows].T >= 0.0
    L = np.zeros((len(a), n))
    label_next = None
    switched = np.zeros((len(a), n), dtype=bool)
    for t in range(T - 1, -1, -1):
        active = t <= last
        label = (lf[t] + L) >= 0.0
        if label_next is not None:
            pair = active & (t + 1 <= last)
            switched |= pair & (label != label_next)
        label_next = label
        if t > 0:
            k = expit(r[:, t] + L)
            bs = a * k + (1.0 - a) * (1.0 - k)
            bn = (1.0 - b) * k + b * (1.0 - k)
            L = np.where(t - 1 >= last, 0.0, np.log(bs) - np.log(bn))
    return final, switched


def fit_transitions(sequences, final_labels, prior: float, emissions, penalty: float = DEFAULT_SWITCH_PENALTY,
                    grid=None, workers: int = 1, block: int = 64) -> TransitionFit:
    """Grid search for the persistence pair maximizing matches - penalty * switchers.

    Matches count students whose final-quarter label agrees with their degree
    category; switchers count students with at least one switch after their
    first quarter. Ties go to the larger a + b, then the larger a.
    """
    if penalty < 0:
        raise ConfigError("switch penalty must be non-negative")
    grid = tuple(default_grid() if grid is None else grid)
    if not grid or any(not 0 < g < 1000 for g in grid):
        raise ConfigError("grid values are thousandths strictly between 0 and 1000")
    seqs = list(sequences)
    y = np.array([bool(v) for v in final_labels])
    emissions = np.asarray(emissions, dtype=float)
    batch = _Batch.build(seqs, emissions.shape[1])
    ll = emission_loglik(emissions, batch)
    r = ll[:, :, 0] - ll[:, :, 1]
    pairs = [(ga, gb) for ga in grid for gb in grid]
    blocks = [pairs[i:i + block] for i in range(0, len(pairs), block)]

    def run(chunk):
        a = np.array([p[0] for p in chunk]) / 1000.0
        b = np.array([p[1] for p in chunk]) / 1000.0
        final, switched = _grid_counts(r, batch.lengths, prior, a, b)
        return (final == y[None, :]).sum(axis=1), switched.sum(axis=1)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, blocks))
    else:
        results = [run(c) for c in blocks]
    table = []
    for chunk, (m, s) in zip(blocks, results):
        table.extend((pa, pb, int(mi), int(si)) for (pa, pb), mi, si in zip(chunk, m, s))
    best = max(table, key=lambda row: (row[2] - penalty * row[3], row[0] + row[1], row[0]))
    a, b = best[0] / 1000.0, best[1] / 1000.0
    return TransitionFit(transition_matrix(a, b), a, b, best[2] - penalty * best[3], best[2], best[3],
                         penalty, table)


# ---------------------------------------------------------------- iterative refinement

def penalized_log_likelihood(model: AffinityModel, batch: _Batch) -> float:
    """Data log-likelihood plus the log Beta(2, 2) density matching add-one smoothing."""
    _, ll = posterior_batch(model, batch)
    e = model.emissions
    return math.fsum(ll) + float(np.sum(np.log(e) + np.log1p(-e)))


def iterate_emissions(model: AffinityModel, sequences, threshold: float = ITERATION_THRESHOLD,
                      max_iter: int = 200):
    """EM re-estimation of per-quarter emissions from soft state counts.

    The prior and transitions stay fixed. Smoothing is the MAP estimate under a
    Beta(2, 2) prior, so the penalized log-likelihood logged at each iteration
    never decreases. Stops once an iteration improves it by less than ``threshold``.
    Returns (model, log) where log rows are (iteration, penalized log-likelihood, improvement).
    """
    batch = _Batch.build(list(sequences), model.n_courses)
    current = penalized_log_likelihood(model, batch)
    history = [(0, current, float("nan"))]
    for it in range(1, max_iter + 1):
        gamma, _ = posterior_batch(model, batch)
        flat = gamma.reshape(-1, 2)
        num = batch.indicators.T @ flat  # (N, 2)
        den = flat.sum(axis=0)
        model = model.with_emissions(((num + 1.0) / (den + 2.0)).T)
        new = penalized_log_likelihood(model, batch)
        improvement = new - current
        history.append((it, new, improvement))
        current = new
        if improvement < threshold:
            break
    return model, history


# ---------------------------------------------------------------- evaluation

def validate_final_term(model: AffinityModel, sequences, final_labels):
    """(accuracy, recall, precision) of the final-quarter label against degree category."""
    seqs = list(sequences)
    if not seqs:
        raise DatasetIntegrityError("no sequences to validate")
    traces = trace_all(model, seqs)
    return final_term_rates([t.intent_labels[-1] for t in traces], final_labels)


def final_term_rates(predicted, actual):
    pred = np.array([bool(p) for p in predicted])
    y = np.array([bool(v) for v in actual])
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    acc = float(np.mean(pred == y))
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    return acc, recall, precision


@dataclass
class AffinityCurves:
    duration: int
    n_duration_students: int
    stem_proportion: list  # per quarter 1..duration
    switch_quarters: int
    into_stem: list  # per quarter 1..switch_quarters
    out_of_stem: list


def aggregate_curves(traces, duration: int = DEFAULT_DURATION,
                     switch_quarters: int = DEFAULT_SWITCH_QUARTERS) -> AffinityCurves:
    """STEM-label share by quarter among students whose sequence lasts exactly ``duration``
    quarters, and switch counts by quarter over all students."""
    traces = list(traces)
    cohort = [t for t in traces if t.length == duration]
    if not cohort:
        log.warning("no students with a %d-quarter sequence; proportion curve is empty", duration)
        prop = []
    else:
        prop = [sum(1 for t in cohort if t.intent_labels[q]) / len(cohort) for q in range(duration)]
    into = [0] * switch_quarters
    out = [0] * switch_quarters
    for tr in traces:
        for q, direction in tr.switches:
            if q <= switch_quarters:
                (into if direction == INTO_STEM else out)[q - 1] += 1
    return AffinityCurves(duration, len(cohort), prop, switch_quarters, into, out)


# ---------------------------------------------------------------- pipeline

@dataclass
class AffinityResult:
    dataset: AffinityDataset
    model: AffinityModel
    transition_fit: TransitionFit
    traces: list
    validation: tuple
    curves: AffinityCurves
    mode: str = "single"
    iteration_log: list = field(default_factory=list)


def fit_affinity(dataset: AffinityDataset, penalty: float = DEFAULT_SWITCH_PENALTY, grid=None,
                 mode: str = "single", duration: int = DEFAULT_DURATION,
                 switch_quarters: int = DEFAULT_SWITCH_QUARTERS, workers: int = 1,
                 threshold: float = ITERATION_THRESHOLD) -> AffinityResult:
    if mode not in ("single", "iterative"):
        raise ConfigError(f"unknown affinity mode {mode!r}")
    seqs, labels = dataset.sequences, dataset.final_labels
    prior = estimate_prior(labels)
    emissions = estimate_emissions(seqs, labels, dataset.vocabulary)
    fit = fit_transitions(seqs, labels, prior, emissions, penalty, grid, workers)
    model = AffinityModel(prior, fit.matrix, emissions, dataset.vocabulary)
    history = []
    if mode == "iterative":
        model, history = iterate_emissions(model, seqs, threshold)
    traces = trace_all(model, seqs)
    validation = final_term_rates([t.intent_labels[-1] for t in traces], labels)
    curves = aggregate_curves(traces, duration, switch_quarters)
    return AffinityResult(dataset, model, fit, traces, validation, curves, mode, history)


def write_affinity(out_dir, result: AffinityResult) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fit = result.transition_fit
    model_doc = result.model.to_json()
    model_doc["fit"] = {
        "mode": result.mode, "penalty": fit.penalty, "a": fit.a, "b": fit.b, "score": fit.score,
        "matches": fit.matches, "switchers": fit.switchers, "cohort_year": result.dataset.cohort_year,
        "n_students": len(result.dataset.sequences),
    }
    acc, rec, prec = result.validation
    model_doc["validation"] = {"accuracy": acc, "recall": rec, "precision": prec}
    written = [io.write_json(out / "affinity_model.json", model_doc)]
    written.append(io.write_rows(
        out / "traces.csv", ["student_id", "quarter", "gamma", "label"],
        ([t.student_id, q + 1, io.fmt_prob(g), "stem" if lab else "nonstem"]
         for t in result.traces for q, (g, lab) in enumerate(zip(t.affinities, t.intent_labels))),
    ))
    written.append(io.write_rows(
        out / "switches.csv", ["student_id", "quarter", "direction"],
        ([t.student_id, q, d] for t in result.traces for q, d in t.switches),
    ))
    c = result.curves
    written.append(io.write_rows(
        out / "curves.csv", ["quarter", "stem_proportion", "n_students"],
        ([q + 1, io.fmt_prob(p), c.n_duration_students] for q, p in enumerate(c.stem_proportion)),
    ))
    written.append(io.write_rows(
        out / "switch_counts.csv", ["quarter", "into_stem", "out_of_stem"],
        ([q + 1, i, o] for q, (i, o) in enumerate(zip(c.into_stem, c.out_of_stem))),
    ))
    written.append(io.write_rows(
        out / "transition_grid.csv", ["a", "b", "matches", "switchers"],
        ([io.fmt_num(pa / 1000), io.fmt_num(pb / 1000), m, s] for pa, pb, m, s in fit.table),
    ))
    if result.iteration_log:
        written.append(io.write_rows(
            out / "iterations.csv", ["iteration", "log_likelihood", "improvement"],
            ([it, io.fmt_prob(ll), "" if math.isnan(imp) else io.fmt_prob(imp)]
             for it, ll, imp in result.iteration_log),
        ))
    return written


@dataclass
class AffinitySummary:
    """What the report writer needs, reloaded from a written affinity directory."""

    traces: list
    validation: tuple
    curves: AffinityCurves


def read_traces(path) -> list:
    rows = {}
    for r in io._rows(path):
        rows.setdefault(r["student_id"], []).append((int(r["quarter"]), float(r["gamma"]), r["label"] == "stem"))
    out = []
    for sid in sorted(rows):
        pts = sorted(rows[sid])
        labels = tuple(lab for _, _, lab in pts)
        out.append(AffinityTrace(sid, tuple(g for _, g, _ in pts), labels, switches_from_labels(labels)))
    return out


def read_affinity_summary(directory, duration: int = DEFAULT_DURATION,
                          switch_quarters: int = DEFAULT_SWITCH_QUARTERS) -> AffinitySummary:
    directory = Path(directory)
    traces = read_traces(directory / "traces.csv")
    v = io.read_json(directory / "affinity_model.json")["validation"]
    return AffinitySummary(traces, (v["accuracy"], v["recall"], v["precision"]),
                           aggregate_curves(traces, duration, switch_quarters))
