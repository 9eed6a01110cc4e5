"""Linear-probe evaluation with repeated stratified cross-validation."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.eval import EmbeddingMatrix
from smae.seeding import stream

logger = logging.getLogger(__name__)

PROBE_ITERATIONS = 500
PROBE_LR = 0.1
PROBE_LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0)
INNER_FOLDS = 3
STD_FLOOR = 1e-12


class ProbeErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class Probe(ErrorGeneratorMixin):
    """Error table of the probe."""

    PROBE_ERR_LABELS = 900
    PROBE_ERR_CLASS_SIZE = 901
    PROBE_ERR_TOO_FEW = 902
    _ERRORS = {
        PROBE_ERR_LABELS: ProbeErrorDescriptor(
            PROBE_ERR_LABELS,
            "Missing labels",
            "linear probe needs graph labels",
        ),
        PROBE_ERR_CLASS_SIZE: ProbeErrorDescriptor(
            PROBE_ERR_CLASS_SIZE,
            "Class too small",
            "class {label} has {count} member(s), at least 2 are needed",
        ),
        PROBE_ERR_TOO_FEW: ProbeErrorDescriptor(
            PROBE_ERR_TOO_FEW,
            "Too few graphs",
            "{count} graphs cannot be split into {folds} folds",
        ),
    }


class CVReport:
    """Accuracy summary of repeated cross-validation."""

    def __init__(
        self,
        fold_accuracies: Sequence[Sequence[float]],
        seed: int,
        settings: Dict[str, Any],
    ):
        """Initialize.

        :param fold_accuracies: One list of fold accuracies per repeat
        :param seed: Master seed
        :param settings: Classifier settings
        """
        self.fold_accuracies = [list(map(float, r)) for r in fold_accuracies]
        flat = np.array([a for r in self.fold_accuracies for a in r])
        self.mean_accuracy = float(flat.mean())
        self.std_accuracy = float(flat.std())
        self.seed = seed
        self.settings = dict(settings)

    def to_dict(self) -> Dict[str, Any]:
        """Get dictionary representation."""
        return {
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "fold_accuracies": self.fold_accuracies,
            "seed": self.seed,
            "settings": self.settings,
        }

    def __repr__(self):
        """Get representation."""
        return "CVReport({:.4f} +/- {:.4f})".format(
            self.mean_accuracy, self.std_accuracy
        )


def stratified_folds(
    labels: np.ndarray, folds: int, rng: np.random.Generator
) -> List[np.ndarray]:
    """Split indices into class-stratified folds.

    Members of each class are shuffled and dealt round-robin, the dealing
    position carrying over from one class to the next.

    :param labels: Class of each item
    :param folds: Number of folds
    :param rng: Random stream
    :return: Ascending index array per fold
    """
    assignment = np.empty(labels.shape[0], dtype=int)
    offset = 0
    for label in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == label))
        assignment[members] = (offset + np.arange(members.size)) % folds
        offset += members.size
    return [np.flatnonzero(assignment == k) for k in range(folds)]


class Standardizer:
    """Per-column standardization fit on training rows."""

    def __init__(self, rows: np.ndarray):
        """Initialize.

        :param rows: Training rows
        """
        self.mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        self.std = np.where(std < STD_FLOOR, 1.0, std)

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        """Transform rows."""
        return (rows - self.mean) / self.std


class LogisticRegression:
    """Multinomial logistic regression trained by full-batch gradient
    descent with an L2 penalty on the weights.
    """

    def __init__(
        self,
        classes: int,
        lam: float,
        iterations: int = PROBE_ITERATIONS,
        lr: float = PROBE_LR,
    ):
        """Initialize.

        :param classes: Number of classes
        :param lam: L2 coefficient
        :param iterations: Gradient steps
        :param lr: Step size
        """
        self.classes = classes
        self.lam = lam
        self.iterations = iterations
        self.lr = lr
        self.weight = None
        self.bias = None

    @staticmethod
    def _softmax(logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        return exp / exp.sum(axis=1, keepdims=True)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LogisticRegression":
        """Fit to rows ``x`` with classes ``y`` in [0, classes)."""
        n, d = x.shape
        onehot = np.zeros((n, self.classes))
        onehot[np.arange(n), y] = 1.0
        self.weight = np.zeros((d, self.classes))
        self.bias = np.zeros(self.classes)
        for _ in range(self.iterations):
            probs = self._softmax(x @ self.weight + self.bias)
            diff = (probs - onehot) / n
            self.weight -= self.lr * (x.T @ diff + self.lam * self.weight)
            self.bias -= self.lr * diff.sum(axis=0)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predict classes."""
        return np.argmax(x @ self.weight + self.bias, axis=1)

    def accuracy(self, x: np.ndarray, y: np.ndarray) -> float:
        """Get the fraction of correct predictions."""
        return float(np.mean(self.predict(x) == y))


def select_lambda(
    x: np.ndarray,
    y: np.ndarray,
    classes: int,
    rng: np.random.Generator,
    lambdas: Sequence[float] = PROBE_LAMBDAS,
) -> float:
    """Choose the L2 coefficient by inner stratified cross-validation.

    The first coefficient reaching the best mean accuracy wins.
    """
    folds = stratified_folds(y, INNER_FOLDS, rng)
    best, best_acc = lambdas[0], -1.0
    for lam in lambdas:
        scores = []
        for held in folds:
            if held.size == 0:
                continue
            train = np.setdiff1d(np.arange(y.size), held)
            scale = Standardizer(x[train])
            model = LogisticRegression(classes, lam).fit(
                scale(x[train]), y[train]
            )
            scores.append(model.accuracy(scale(x[held]), y[held]))
        acc = float(np.mean(scores))
        if acc > best_acc:
            best, best_acc = lam, acc
    return best


def fit_fold(
    x: np.ndarray,
    y: np.ndarray,
    classes: int,
    held: np.ndarray,
    rng: np.random.Generator,
) -> Tuple[Standardizer, LogisticRegression]:
    """Fit the scaler and the classifier of one fold.

    Only rows outside ``held`` are seen; the held-out rows never influence
    the fitted parameters.

    :param x: All rows
    :param y: Class of each row
    :param classes: Number of classes
    :param held: Indices of the test fold
    :param rng: Stream used for the inner lambda search
    :return: Fitted scaler and classifier
    """
    train = np.setdiff1d(np.arange(y.size), held)
    lam = select_lambda(x[train], y[train], classes, rng)
    scale = Standardizer(x[train])
    model = LogisticRegression(classes, lam).fit(scale(x[train]), y[train])
    return scale, model


def _check_labels(emb: EmbeddingMatrix, folds: int) -> Tuple[np.ndarray, int]:
    if emb.labels is None:
        raise Probe.get_error_from_code(Probe.PROBE_ERR_LABELS)
    if len(emb) < folds:
        raise Probe.get_error_from_code(
            Probe.PROBE_ERR_TOO_FEW, count=len(emb), folds=folds
        )
    values, y, counts = np.unique(
        emb.labels, return_inverse=True, return_counts=True
    )
    for label, count in zip(values, counts):
        if count < 2:
            raise Probe.get_error_from_code(
                Probe.PROBE_ERR_CLASS_SIZE, label=int(label), count=int(count)
            )
    return y.reshape(-1), values.size


def _repeat(
    x: np.ndarray, y: np.ndarray, classes: int, folds: int, seed: int, r: int
) -> List[float]:
    rng = stream(seed, "cv", r)
    accuracies = []
    for held in stratified_folds(y, folds, rng):
        scale, model = fit_fold(x, y, classes, held, rng)
        accuracies.append(model.accuracy(scale(x[held]), y[held]))
    logger.debug("repeat %d: mean accuracy %.4f", r, np.mean(accuracies))
    return accuracies


def linear_probe_cv(
    emb: EmbeddingMatrix,
    folds: int = 10,
    repeats: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> CVReport:
    """Cross-validate a linear classifier on frozen embeddings.

    :param emb: Labelled embeddings
    :param folds: Folds per repeat
    :param repeats: Repeats, each with its own split
    :param seed: Master seed
    :param threads: Worker threads (one repeat per task)
    :return: Report over ``folds * repeats`` evaluations
    """
    y, classes = _check_labels(emb, folds)
    x = emb.rows

    def _run(r):
        return _repeat(x, y, classes, folds, seed, r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run, range(repeats)))
    else:
        results = [_run(r) for r in range(repeats)]
    report = CVReport(
        results,
        seed,
        {
            "classifier": "logistic_regression",
            "folds": folds,
            "repeats": repeats,
            "iterations": PROBE_ITERATIONS,
            "lr": PROBE_LR,
            "lambdas": list(PROBE_LAMBDAS),
            "inner_folds": INNER_FOLDS,
        },
    )
    logger.info("linear probe accuracy %s", report)
    return report
