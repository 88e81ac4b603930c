"""Experimental protocol: 70/30 split, 10-fold CV, native Logistic Regression
and Naive Bayes classifiers, random grid search, and the seven-metric report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from venuetrace import kernels
from venuetrace.records import FEATURE_LENGTH, FEATURE_SCHEMA, GROUP_OFFSETS

METRIC_COLUMNS = ("Accuracy", "AUC", "Recall", "Precision", "F1", "Kappa", "MCC")


class SingleClassTrainingSet(ValueError):
    pass


class TooFewRecords(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass
class LabeledDataset:
    """One-hot feature matrix with binary labels and per-row identifiers."""

    features: np.ndarray  # (n, FEATURE_LENGTH) uint8 one-hot
    labels: np.ndarray  # (n,) int8 of {0, 1}
    ids: np.ndarray  # (n,) object, opaque record identifiers
    _indices: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (len(self.features) == len(self.labels) == len(self.ids)):
            raise ValueError("features, labels and ids must have equal length")
        if len(self.labels) and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be binary")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[rows], self.labels[rows], self.ids[rows])

    def feature_indices(self) -> np.ndarray:
        """(n, groups) int32 active-column form consumed by the kernels."""
        if self._indices is None:
            cols = []
            for attr, _field, levels in FEATURE_SCHEMA:
                off = GROUP_OFFSETS[attr]
                group = self.features[:, off : off + len(levels)]
                if not (group.sum(axis=1) == 1).all():
                    raise ValueError(f"group {attr} is not one-hot")
                cols.append(off + group.argmax(axis=1))
            self._indices = np.column_stack(cols).astype(np.int32)
        return self._indices


class ModelKind(Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    NAIVE_BAYES = "naive_bayes"


@dataclass(frozen=True)
class HyperParams:
    learning_rate: float = 0.2
    iterations: int = 800
    l2_strength: float = 0.001
    nb_smoothing: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be non-negative")
        if self.nb_smoothing <= 0:
            raise ValueError("nb_smoothing must be positive")


@dataclass
class ClassifierModel:
    kind: ModelKind
    # LR: weights (d,) + bias. NB: class log priors (2,) + per-column
    # smoothed log level frequencies (2, d).
    weights: np.ndarray
    bias: float = 0.0
    feature_log_prob: np.ndarray | None = None
    class_log_prior: np.ndarray | None = None
    hyperparams: HyperParams = HyperParams()

    def to_json(self) -> dict:
        doc = {
            "kind": self.kind.value,
            "feature_length": FEATURE_LENGTH,
            "hyperparams": {
                "learning_rate": self.hyperparams.learning_rate,
                "iterations": self.hyperparams.iterations,
                "l2_strength": self.hyperparams.l2_strength,
                "nb_smoothing": self.hyperparams.nb_smoothing,
            },
        }
        if self.kind is ModelKind.LOGISTIC_REGRESSION:
            doc["weights"] = self.weights.tolist()
            doc["bias"] = self.bias
        else:
            doc["class_log_prior"] = self.class_log_prior.tolist()
            doc["feature_log_prob"] = self.feature_log_prob.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ClassifierModel":
        kind = ModelKind(doc["kind"])
        hp = HyperParams(**doc.get("hyperparams", {}))
        if kind is ModelKind.LOGISTIC_REGRESSION:
            return cls(kind, np.asarray(doc["weights"], dtype=np.float64), float(doc["bias"]), hyperparams=hp)
        return cls(
            kind,
            np.zeros(0),
            feature_log_prob=np.asarray(doc["feature_log_prob"], dtype=np.float64),
            class_log_prior=np.asarray(doc["class_log_prior"], dtype=np.float64),
            hyperparams=hp,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    auc: float
    recall: float
    precision: float
    f1: float
    kappa: float
    mcc: float
    # names of metrics whose denominator was zero; they are reported as 0
    undefined: tuple[str, ...] = ()

    def as_row(self) -> tuple[float, ...]:
        return (self.accuracy, self.auc, self.recall, self.precision, self.f1, self.kappa, self.mcc)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(METRIC_COLUMNS, self.as_row()))


def split(dataset: LabeledDataset, fraction: float = 0.7, seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    """Seed-deterministic shuffle split; train gets round(fraction * n) rows."""
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fraction * n))
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


def kfold_indices(n: int, k: int = 10) -> list[tuple[np.ndarray, np.ndarray]]:
    """Contiguous (fit, holdout) index pairs; holdouts partition range(n)."""
    if n < k:
        raise TooFewRecords(f"{n} records cannot form {k} folds")
    all_rows = np.arange(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    pairs = []
    start = 0
    for size in sizes:
        holdout = all_rows[start : start + size]
        fit = np.concatenate([all_rows[:start], all_rows[start + size :]])
        pairs.append((fit, holdout))
        start += size
    return pairs


def kfold(train: LabeledDataset, k: int = 10) -> list[tuple[LabeledDataset, LabeledDataset]]:
    """Materialized k-fold pairs; every record is held out exactly once."""
    return [(train.subset(fit), train.subset(hold)) for fit, hold in kfold_indices(len(train), k)]


def _require_both_classes(labels: np.ndarray) -> None:
    if len(np.unique(labels)) < 2:
        raise SingleClassTrainingSet("training set must contain both classes")


def train_logreg(train: LabeledDataset, hp: HyperParams = HyperParams()) -> ClassifierModel:
    """L2-regularized logistic regression by full-batch gradient descent."""
    _require_both_classes(train.labels)
    w, b = kernels.logreg_fit(
        train.feature_indices(),
        FEATURE_LENGTH,
        train.labels.astype(np.float64),
        hp.learning_rate,
        hp.iterations,
        hp.l2_strength,
    )
    return ClassifierModel(ModelKind.LOGISTIC_REGRESSION, w, b, hyperparams=hp)


def logreg_loss(model: ClassifierModel, dataset: LabeledDataset) -> float:
    """Mean regularized logistic loss; used for the descent diagnostics."""
    z = kernels.logreg_margins(dataset.feature_indices(), model.weights, model.bias)
    y = dataset.labels.astype(np.float64)
    nll = np.logaddexp(0.0, z) - y * z
    l2 = model.hyperparams.l2_strength
    return float(nll.mean() + 0.5 * l2 * np.dot(model.weights, model.weights) / len(dataset))


def train_nb(train: LabeledDataset, smoothing: float = 1.0) -> ClassifierModel:
    """Categorical Naive Bayes with additive smoothing over each level group."""
    _require_both_classes(train.labels)
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    counts = np.zeros((2, FEATURE_LENGTH))
    for cls in (0, 1):
        rows = train.features[train.labels == cls]
        counts[cls] = rows.sum(axis=0)
    n_class = np.array([(train.labels == 0).sum(), (train.labels == 1).sum()], dtype=np.float64)
    log_prob = np.zeros((2, FEATURE_LENGTH))
    with np.errstate(divide="ignore"):
        for attr, _field, levels in FEATURE_SCHEMA:
            off = GROUP_OFFSETS[attr]
            width = len(levels)
            smoothed = counts[:, off : off + width] + smoothing
            log_prob[:, off : off + width] = np.log(smoothed) - np.log(
                n_class[:, None] + smoothing * width
            )
        prior = np.log(n_class) - np.log(n_class.sum())
    hp = replace(HyperParams(), nb_smoothing=smoothing) if smoothing > 0 else HyperParams()
    return ClassifierModel(
        ModelKind.NAIVE_BAYES,
        np.zeros(0),
        feature_log_prob=log_prob,
        class_log_prior=prior,
        hyperparams=hp,
    )


def predict_proba(model: ClassifierModel, features: np.ndarray) -> np.ndarray | float:
    """Positive-class probability for a feature vector or (n, d) matrix."""
    arr = np.asarray(features, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != FEATURE_LENGTH:
        raise DimensionMismatch(f"expected {FEATURE_LENGTH} features, got {arr.shape[1]}")
    if model.kind is ModelKind.LOGISTIC_REGRESSION:
        proba = expit(arr @ model.weights + model.bias)
    else:
        joint = model.class_log_prior[None, :] + arr @ model.feature_log_prob.T
        # normalized two-class posterior via the log-odds
        proba = expit(joint[:, 1] - joint[:, 0])
    return float(proba[0]) if single else proba


def _scores(model: ClassifierModel, dataset: LabeledDataset) -> np.ndarray:
    return predict_proba(model, dataset.features.astype(np.float64))


def auc_score(scores: np.ndarray, labels: np.ndarray) -> tuple[float, bool]:
    """Rank-statistic AUC with ties counted half; returns (auc, defined)."""
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return 0.0, False
    ranks = rankdata(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)), True


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int, auc: float = 0.0, auc_defined: bool = True) -> MetricsReport:
    """The seven-metric report from confusion counts (AUC supplied separately)."""
    total = tp + fp + tn + fn
    undefined = [] if auc_defined else ["AUC"]
    accuracy = (tp + tn) / total if total else 0.0

    def ratio(num: float, den: float, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    precision = ratio(tp, tp + fp, "Precision")
    recall = ratio(tp, tp + fn, "Recall")
    f1 = ratio(2 * precision * recall, precision + recall, "F1")
    expected = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / total**2 if total else 0.0
    kappa = ratio(accuracy - expected, 1 - expected, "Kappa")
    mcc_den = float((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = ratio(tp * tn - fp * fn, np.sqrt(mcc_den), "MCC")
    return MetricsReport(accuracy, auc, recall, precision, f1, kappa, mcc, tuple(undefined))


def evaluate(model: ClassifierModel, test: LabeledDataset, threshold: float = 0.5) -> MetricsReport:
    """Score the test partition at the given decision threshold."""
    if len(test) == 0:
        raise ValueError("test set is empty")
    scores = _scores(model, test)
    return evaluate_scores(scores, test.labels, threshold)


def evaluate_scores(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> MetricsReport:
    predictions = scores >= threshold
    actual = labels == 1
    tp = int((predictions & actual).sum())
    fp = int((predictions & ~actual).sum())
    tn = int((~predictions & ~actual).sum())
    fn = int((~predictions & actual).sum())
    auc, auc_defined = auc_score(scores, labels)
    return metrics_from_counts(tp, fp, tn, fn, auc, auc_defined)


@dataclass(frozen=True)
class GridSpec:
    """Log-uniform sampling ranges for the random hyperparameter search."""

    learning_rate: tuple[float, float] = (1e-3, 1.0)
    iterations: tuple[int, int] = (50, 2000)
    l2_strength: tuple[float, float] = (1e-3, 10.0)
    nb_smoothing: tuple[float, float] = (0.1, 10.0)


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    if lo <= 0:
        raise ValueError("log-uniform range needs a positive lower bound")
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def sample_hyperparams(rng: np.random.Generator, grid: GridSpec) -> HyperParams:
    return HyperParams(
        learning_rate=_log_uniform(rng, *grid.learning_rate),
        iterations=int(round(_log_uniform(rng, *grid.iterations))),
        l2_strength=_log_uniform(rng, *grid.l2_strength),
        nb_smoothing=_log_uniform(rng, *grid.nb_smoothing),
    )


def _train(kind: ModelKind, data: LabeledDataset, hp: HyperParams) -> ClassifierModel:
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return train_logreg(data, hp)
    return train_nb(data, hp.nb_smoothing)


def cross_validate(
    train: LabeledDataset, kind: ModelKind, hp: HyperParams, k: int = 10
) -> MetricsReport:
    """Mean metrics over the k holdouts."""
    rows = []
    for fit_idx, hold_idx in kfold_indices(len(train), k):
        model = _train(kind, train.subset(fit_idx), hp)
        rows.append(evaluate(model, train.subset(hold_idx)).as_row())
    mean = np.mean(rows, axis=0)
    return MetricsReport(*mean)


def tune(
    train: LabeledDataset,
    grid: GridSpec = GridSpec(),
    n_draws: int = 8,
    seed: int = 0,
    kind: ModelKind = ModelKind.LOGISTIC_REGRESSION,
    k: int = 10,
) -> tuple[HyperParams, MetricsReport]:
    """Random grid search scored by mean CV accuracy, then F1, then draw order."""
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    rng = np.random.default_rng(seed)
    best: tuple[HyperParams, MetricsReport] | None = None
    for _ in range(n_draws):
        hp = sample_hyperparams(rng, grid)
        report = cross_validate(train, kind, hp, k)
        if best is None or (report.accuracy, report.f1) > (best[1].accuracy, best[1].f1):
            best = (hp, report)
    return best


def format_metrics_table(rows: dict[str, MetricsReport]) -> str:
    """Text table in the canonical column order."""
    name_width = max(len("Model"), *(len(name) for name in rows)) if rows else 5
    header = "Model".ljust(name_width) + "".join(c.rjust(11) for c in METRIC_COLUMNS)
    lines = [header, "-" * len(header)]
    for name, report in rows.items():
        lines.append(name.ljust(name_width) + "".join(f"{v:11.3f}" for v in report.as_row()))
    return "\n".join(lines)
