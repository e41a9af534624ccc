"""Attribute-fusion evidential classifier.

Training fits one Gaussian mixture per (attribute, class). At prediction
time each attribute's class densities are normalized by their maximum into
support degrees, turned into a product-form mass function, prepared on its
own qubit register, and all attributes are fused by the conjunctive rule on
the circuit. The pignistic transform of the fused mass gives the decision.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources as _resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import circuit as qc
from .dst import (
    DSTError,
    Frame,
    MassFunction,
    Pignistic,
    PossMF,
    TotalConflictError,
    betp,
    cdbft,
    combine_conjunctive,
)

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2 * math.pi)


# -- Gaussian mixtures -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood_trace: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.weights.shape == self.means.shape == self.variances.shape):
            raise ValueError("weights, means and variances must have the same length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must be non-negative and sum to 1: {self.weights}")
        if np.any(self.variances <= 0):
            raise ValueError(f"variances must be positive: {self.variances}")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def to_json(self) -> list[dict]:
        return [
            {"weight": float(w), "mean": float(m), "variance": float(v)}
            for w, m, v in zip(self.weights, self.means, self.variances)
        ]

    @classmethod
    def from_json(cls, doc: Sequence[dict]) -> "GmmModel":
        return cls(
            [c["weight"] for c in doc], [c["mean"] for c in doc], [c["variance"] for c in doc]
        )


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - top), axis=axis, keepdims=True)) + top
    return np.squeeze(out, axis=axis)


def _component_logpdf(x: np.ndarray, means, variances) -> np.ndarray:
    # shape (len(x), N)
    x = np.asarray(x, dtype=float)[..., None]
    return -0.5 * (_LOG_2PI + np.log(variances) + (x - means) ** 2 / variances)


def gmm_logpdf(model: GmmModel, x):
    with np.errstate(divide="ignore"):
        logw = np.log(model.weights)
    out = _logsumexp(logw + _component_logpdf(x, model.means, model.variances), axis=-1)
    return out if np.ndim(out) else float(out)


def gmm_pdf(model: GmmModel, x):
    """Mixture density ``sum_k w_k N(x | mu_k, var_k)``."""
    return np.exp(gmm_logpdf(model, x))


def fit_gmm_em(
    samples,
    n_components: int,
    *,
    max_iter: int = 200,
    tol: float = 1e-6,
    variance_floor_ratio: float = 1e-6,
) -> GmmModel:
    """Fit a one-dimensional Gaussian mixture by expectation-maximization.

    Initialization is deterministic: means at the sample quantiles
    ``(k + 0.5) / N``, every variance equal to the sample variance, uniform
    weights. Iteration stops once the total log-likelihood changes by less
    than ``tol`` or after ``max_iter`` iterations. Variances are kept above
    ``variance_floor_ratio`` times the sample variance (at least 1e-12).

    The returned model carries the log-likelihood after every iteration in
    ``log_likelihood_trace`` (the first entry is the initial value).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples to fit")
    if n_components < 1:
        raise ValueError("need at least one component")
    if x.size < n_components:
        raise ValueError(f"{x.size} samples cannot support {n_components} components")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")

    L = x.size
    data_var = float(x.var())
    floor = max(variance_floor_ratio * data_var, 1e-12)
    weights = np.full(n_components, 1.0 / n_components)
    means = np.quantile(x, (np.arange(n_components) + 0.5) / n_components)
    variances = np.full(n_components, max(data_var, floor))

    def e_step(weights, means, variances):
        with np.errstate(divide="ignore"):
            joint = np.log(weights) + _component_logpdf(x, means, variances)
        norm = _logsumexp(joint, axis=1)
        return np.exp(joint - norm[:, None]), float(norm.sum())

    resp, ll = e_step(weights, means, variances)
    trace = [ll]
    for _ in range(max_iter):
        nk = resp.sum(axis=0)
        live = nk > 1e-300
        weights = nk / L
        new_means = means.copy()
        new_means[live] = (resp[:, live] * x[:, None]).sum(axis=0) / nk[live]
        new_vars = variances.copy()
        new_vars[live] = (resp[:, live] * (x[:, None] - new_means[live]) ** 2).sum(axis=0) / nk[live]
        means, variances = new_means, np.maximum(new_vars, floor)
        resp, new_ll = e_step(weights, means, variances)
        trace.append(new_ll)
        converged = abs(new_ll - ll) < tol
        ll = new_ll
        if converged:
            break
    weights = weights / weights.sum()
    return GmmModel(weights, means, variances, tuple(trace))


# -- evidence --------------------------------------------------------------------


def normalize_densities(densities, frame: Frame) -> PossMF:
    """Support degrees as densities divided by their maximum.

    When every density is zero the attribute carries no evidence and all
    support degrees are 1.
    """
    d = np.asarray(densities, dtype=float)
    top = d.max()
    if top <= 0:
        return PossMF(frame, np.ones(frame.n))
    return PossMF(frame, d / top)


def possmf_for_attribute(models: Sequence[GmmModel], x: float, frame: Frame) -> PossMF:
    """Support degrees for one attribute value from the per-class mixtures.

    The ratio to the largest density is taken in log space, so values far
    from every class still produce a proper normalization instead of an
    underflowed 0/0.
    """
    logd = np.array([gmm_logpdf(m, x) for m in models])
    top = logd.max()
    if not np.isfinite(top):
        return PossMF(frame, np.ones(frame.n))
    return PossMF(frame, np.exp(logd - top))


# -- model -----------------------------------------------------------------------


@dataclass(frozen=True)
class Backend:
    """``exact`` reads the output marginal; ``shots`` samples it."""

    kind: str = "exact"
    shots: int = 1024

    def __post_init__(self):
        if self.kind not in ("exact", "shots"):
            raise ValueError(f"unknown backend {self.kind!r}")
        if self.kind == "shots" and self.shots < 1:
            raise ValueError("shots must be at least 1")


EXACT = Backend()


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    frame: Frame
    attributes: tuple[str, ...]
    grid: tuple[tuple[GmmModel, ...], ...]  # grid[j][i]: attribute j, class i
    n_components: int = 3
    backend: Backend = EXACT

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "grid", tuple(tuple(row) for row in self.grid))
        if len(self.grid) != len(self.attributes) or any(
            len(row) != self.frame.n for row in self.grid
        ):
            raise ValueError("model grid must hold one mixture per (attribute, class)")

    def evidence(self, x) -> list[PossMF]:
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self.attributes),):
            raise ValueError(f"expected {len(self.attributes)} attribute values, got {x.shape}")
        return [possmf_for_attribute(row, xj, self.frame) for row, xj in zip(self.grid, x)]

    def to_json(self) -> dict:
        return {
            "frame": list(self.frame.elements),
            "attributes": list(self.attributes),
            "components": self.n_components,
            "backend": {"kind": self.backend.kind, "shots": self.backend.shots},
            "grid": [[m.to_json() for m in row] for row in self.grid],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ClassifierModel":
        backend = Backend(**doc.get("backend", {}))
        return cls(
            Frame(doc["frame"]),
            doc["attributes"],
            [[GmmModel.from_json(c) for c in row] for row in doc["grid"]],
            doc.get("components", 3),
            backend,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        with open(path) as f:
            return cls.from_json(json.load(f))


def train(
    X, y: Sequence[str], n_components: int = 3, *, frame: Frame | None = None,
    attributes: Sequence[str] | None = None, backend: Backend = EXACT, **em_options,
) -> ClassifierModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if frame is None:
        frame = Frame(dict.fromkeys(y.tolist()))
    if attributes is None:
        attributes = [f"x{j + 1}" for j in range(X.shape[1])]
    grid = []
    for j in range(X.shape[1]):
        row = []
        for label in frame.elements:
            column = X[y == label, j]
            if column.size == 0:
                raise ValueError(f"no training samples for class {label!r}")
            row.append(fit_gmm_em(column, n_components, **em_options))
        grid.append(row)
    return ClassifierModel(frame, attributes, grid, n_components, backend)


# -- prediction ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Prediction:
    label: str
    index: int
    pignistic: Pignistic
    mass: MassFunction


def _decide(mass: MassFunction) -> Prediction:
    try:
        probs = betp(mass)
    except TotalConflictError as exc:
        exc.mass = mass
        raise
    k = probs.decision()
    return Prediction(mass.frame.elements[k], k, probs, mass)


def fuse_on_circuit(evidence: Sequence[PossMF], backend: Backend = EXACT, rng=None) -> MassFunction:
    frame = evidence[0].frame
    dist = qc.output_distribution(qc.classifier_circuit(evidence))
    if backend.kind == "shots":
        dist = qc.sample(dist, backend.shots, rng).frequencies
    return MassFunction(frame, dist)


def classify(model: ClassifierModel, x, rng=None) -> Prediction:
    """Fuse the attribute evidence on the circuit and take the pignistic argmax.

    ``rng`` (a seed or Generator) drives the shot sampling of a ``shots``
    backend and is ignored by the exact backend.
    """
    mass = fuse_on_circuit(model.evidence(x), model.backend, rng)
    return _decide(mass)


def classify_classical(model: ClassifierModel, x) -> Prediction:
    """Same decision computed with the enumeration-based combination."""
    masses = [cdbft(p) for p in model.evidence(x)]
    mass = masses[0] if len(masses) == 1 else combine_conjunctive(masses)
    return _decide(mass)


# -- datasets --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    attributes: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    classes: Frame

    def __len__(self):
        return len(self.y)


class DatasetError(ValueError):
    pass


def read_dataset(path) -> Dataset:
    """CSV with a header, attribute columns, then a class-label column."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if len(header) < 2:
            raise DatasetError(f"{path}: header needs attribute columns and a class column")
        rows, labels = [], []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            line = reader.line_num
            if len(row) != len(header):
                raise DatasetError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(c) for c in row[:-1]]
            except ValueError as exc:
                raise DatasetError(f"{path}:{line}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError(f"{path}:{line}: non-finite attribute value")
            label = row[-1].strip()
            if not label:
                raise DatasetError(f"{path}:{line}: missing class label")
            rows.append(values)
            labels.append(label)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    y = np.array(labels)
    return Dataset(tuple(h.strip() for h in header[:-1]), np.array(rows), y,
                   Frame(dict.fromkeys(labels)))


def load_iris() -> Dataset:
    """The 150-sample Iris table bundled with the package."""
    with _resources.as_file(_resources.files("qdst") / "datasets" / "iris.csv") as p:
        return read_dataset(p)


# -- evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class RepeatResult:
    fraction: float
    repeat: int
    seed: int
    accuracy: float


@dataclass(frozen=True)
class FractionSummary:
    fraction: float
    mean: float
    std: float
    repeats: int


@dataclass
class EvalReport:
    runs: list[RepeatResult]

    def summary(self) -> list[FractionSummary]:
        out = []
        for frac in dict.fromkeys(r.fraction for r in self.runs):
            acc = np.array([r.accuracy for r in self.runs if r.fraction == frac])
            std = float(acc.std(ddof=1)) if acc.size > 1 else 0.0
            out.append(FractionSummary(frac, float(acc.mean()), std, int(acc.size)))
        return out

    def write_csv(self, path_or_file) -> None:
        """Per-repeat rows, a blank line, then one summary row per fraction."""
        own = isinstance(path_or_file, (str, Path))
        f = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["fraction", "repeat", "seed", "accuracy"])
            for r in self.runs:
                w.writerow([f"{r.fraction:g}", r.repeat, r.seed, repr(r.accuracy)])
            w.writerow([])
            w.writerow(["fraction", "mean_accuracy", "std_accuracy", "repeats"])
            for s in self.summary():
                w.writerow([f"{s.fraction:g}", repr(s.mean), repr(s.std), s.repeats])
        finally:
            if own:
                f.close()


def repeat_seed(master_seed: int, fraction_index: int, repeat: int) -> int:
    """Seed of one (fraction, repeat) job, derived from the master seed."""
    ss = np.random.SeedSequence([master_seed, fraction_index, repeat])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def split_indices(y: np.ndarray, fraction: float, rng, stratified: bool = True):
    """Train/test index arrays; ``fraction`` of each class goes to training."""
    n = len(y)
    if fraction >= 1.0:
        idx = np.arange(n)
        return idx, idx
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"training fraction must be in (0, 1], got {fraction}")
    if not stratified:
        perm = rng.permutation(n)
        k = int(round(fraction * n))
        return np.sort(perm[:k]), np.sort(perm[k:])
    train_idx = []
    for label in dict.fromkeys(y.tolist()):
        members = np.flatnonzero(y == label)
        k = min(max(int(round(fraction * members.size)), 1), members.size)
        train_idx.append(rng.choice(members, size=k, replace=False))
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.setdiff1d(np.arange(n), train_idx)
    return train_idx, test_idx


def _splittable(y_train, classes: Frame, n_components: int) -> bool:
    return all(np.count_nonzero(y_train == c) >= n_components for c in classes.elements)


def run_split(
    data: Dataset, fraction: float, seed: int, n_components: int = 3,
    backend: Backend = EXACT, *, stratified: bool = True, max_resample: int = 100,
    classical: bool = False,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Train on one seeded split and classify its test set.

    Returns the accuracy, the test indices and the predicted class indices.
    A split leaving some class with fewer training samples than mixture
    components is redrawn.
    """
    split_rng = np.random.default_rng([seed, 0])
    shot_rng = np.random.default_rng([seed, 1])
    for attempt in range(max_resample + 1):
        train_idx, test_idx = split_indices(data.y, fraction, split_rng, stratified)
        if _splittable(data.y[train_idx], data.classes, n_components):
            break
        log.warning("split (fraction=%g, seed=%d) lacks training samples for a class; "
                    "resampling (attempt %d)", fraction, seed, attempt + 1)
    else:
        raise ValueError(f"could not draw a usable split at fraction {fraction}")
    model = train(data.X[train_idx], data.y[train_idx], n_components, frame=data.classes,
                  attributes=data.attributes, backend=backend)
    truth = np.array([data.classes.position(c) for c in data.y[test_idx]])
    predict = (lambda x: classify_classical(model, x)) if classical else (
        lambda x: classify(model, x, shot_rng))
    pred = np.empty(len(test_idx), dtype=int)
    for slot, i in enumerate(test_idx):
        try:
            pred[slot] = predict(data.X[i]).index
        except TotalConflictError:
            # no decision is possible; scored as a miss
            log.debug("total conflict on sample %d (fraction=%g, seed=%d)", i, fraction, seed)
            pred[slot] = -1
    acc = float(np.mean(pred == truth)) if len(test_idx) else float("nan")
    return acc, test_idx, pred


def evaluate(
    data: Dataset, fractions: Sequence[float], repeats: int = 100, n_components: int = 3,
    backend: Backend = EXACT, master_seed: int = 0, *, stratified: bool = True,
    classical: bool = False,
) -> EvalReport:
    """Mean and spread of test accuracy over seeded random splits.

    Repeat ``r`` at fraction index ``f`` uses ``repeat_seed(master_seed, f, r)``
    for both its split and its shot sampling, so runs with different
    backends see identical splits.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    runs = []
    for fi, frac in enumerate(fractions):
        for r in range(repeats):
            seed = repeat_seed(master_seed, fi, r)
            acc, _, _ = run_split(data, frac, seed, n_components, backend,
                                  stratified=stratified, classical=classical)
            runs.append(RepeatResult(float(frac), r, seed, acc))
    return EvalReport(runs)


__all__ = [
    "Backend", "ClassifierModel", "Dataset", "DatasetError", "DSTError", "EvalReport",
    "GmmModel", "Prediction", "classify", "classify_classical", "evaluate", "fit_gmm_em",
    "gmm_pdf", "load_iris", "normalize_densities", "possmf_for_attribute", "read_dataset",
    "run_split", "train",
]
