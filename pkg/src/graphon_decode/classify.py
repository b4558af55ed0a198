"""Ridge-regression stimulus classification with bootstrap statistics.

The classifier regresses one-hot class indicators on low-dimensional
coordinates with an L2 penalty on the weights (never on the intercept) and
predicts by argmax of the class scores.  Accuracy uncertainty comes from a
percentile bootstrap over per-trial correctness; method comparisons use
paired differences with Cohen's d and a normal-approximation sample-size
estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ParameterError, SingularSystemError
from .sbm import _readonly


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray  # (dims, classes)
    intercepts: np.ndarray  # (classes,)
    lam: float
    class_order: tuple[str, ...]


@dataclass
class EvalReport:
    """Cross-validated accuracy with its bootstrap CI and confusion matrix.

    ``correct`` holds the pooled out-of-fold correctness per trial in dataset
    order, which is what paired method comparisons consume.
    """

    accuracy: float
    per_class_accuracy: dict[str, float]
    confusion: np.ndarray  # rows true class, columns predicted
    ci95: tuple[float, float]
    n: int
    class_order: tuple[str, ...]
    correct: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        lo, hi = self.ci95
        if not lo - 1e-12 <= self.accuracy <= hi + 1e-12:
            raise ParameterError("accuracy must lie inside its confidence interval")
        if self.confusion.sum() != self.n:
            raise ParameterError("confusion matrix total must equal the trial count")


def ridge_fit(coords, labels, lam: float = 1.0) -> RidgeModel:
    """Closed-form ridge regression of one-hot labels on coordinates.

    Features and targets are centered so the penalty never touches the
    intercept.  With lam = 0 and collinear features the normal equations are
    singular and a SingularSystemError advises regularizing.
    """
    x = np.asarray(coords, dtype=float)
    if x.ndim != 2:
        raise ParameterError("coords must be 2-D (trials x dims)")
    labels = list(labels)
    if len(labels) != x.shape[0]:
        raise ParameterError("one label per coordinate row required")
    if lam < 0:
        raise ParameterError("lam must be nonnegative")
    class_order = tuple(sorted(set(labels)))
    if len(class_order) < 2:
        raise ParameterError("need at least two distinct classes")
    y = np.zeros((x.shape[0], len(class_order)))
    col = {lab: k for k, lab in enumerate(class_order)}
    for row, lab in enumerate(labels):
        y[row, col[lab]] = 1.0

    x_mean = x.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x - x_mean
    gram = xc.T @ xc + lam * np.eye(x.shape[1])
    if lam == 0.0:
        rank = np.linalg.matrix_rank(gram)
        if rank < x.shape[1]:
            raise SingularSystemError(
                "normal equations are singular (collinear features at lam=0); "
                "refit with lam > 0"
            )
    weights = np.linalg.solve(gram, xc.T @ (y - y_mean))
    intercepts = y_mean - x_mean @ weights
    return RidgeModel(
        weights=_readonly(weights),
        intercepts=_readonly(intercepts),
        lam=float(lam),
        class_order=class_order,
    )


def predict(model: RidgeModel, coords) -> list[str]:
    """Argmax of class scores; exact ties resolve to the earliest class in
    ``class_order``."""
    x = np.asarray(coords, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.weights.shape[0]:
        raise ParameterError(
            f"feature dimension {x.shape[1]} does not match model ({model.weights.shape[0]})"
        )
    scores = x @ model.weights + model.intercepts
    picks = np.argmax(scores, axis=1)  # first maximum wins ties
    return [model.class_order[k] for k in picks]


def stratified_folds(labels, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Shuffled per-class round-robin assignment into ``folds`` test folds."""
    labels = np.asarray(labels)
    if folds < 2:
        raise ParameterError("need at least two folds")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    assignment = np.empty(labels.size, dtype=int)
    for lab in sorted(set(labels.tolist())):
        idx = np.nonzero(labels == lab)[0]
        if idx.size < folds:
            raise ParameterError(
                f"class {lab!r} has {idx.size} trials, fewer than {folds} folds"
            )
        idx = rng.permutation(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def bootstrap_mean_ci(
    values, resamples: int = 10_000, seed: int = 0, level: float = 0.95
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean of ``values``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ParameterError("empty sample")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    draws = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[draws].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


def _evaluate_predictions(labels, predicted, class_order, resamples, seed) -> EvalReport:
    labels = np.asarray(labels)
    predicted = np.asarray(predicted)
    correct = (labels == predicted).astype(float)
    k = len(class_order)
    col = {lab: i for i, lab in enumerate(class_order)}
    confusion = np.zeros((k, k), dtype=int)
    for true, pred in zip(labels, predicted):
        confusion[col[true], col[pred]] += 1
    per_class = {}
    for lab in class_order:
        sel = labels == lab
        per_class[lab] = float(correct[sel].mean()) if sel.any() else float("nan")
    ci = bootstrap_mean_ci(correct, resamples=resamples, seed=seed)
    return EvalReport(
        accuracy=float(correct.mean()),
        per_class_accuracy=per_class,
        confusion=confusion,
        ci95=ci,
        n=int(labels.size),
        class_order=tuple(class_order),
        correct=correct,
    )


def select_lambda(
    coords, labels, grid=(0.01, 0.1, 1.0, 10.0), folds: int = 3, seed: int = 0
) -> float:
    """Inner cross-validation over a penalty grid; ties go to the larger
    penalty.  Falls back to the median candidate when the classes are too
    small to split further."""
    labels = np.asarray(labels)
    grid = sorted(float(g) for g in grid)
    smallest = min(int((labels == lab).sum()) for lab in set(labels.tolist()))
    inner = min(folds, smallest)
    if inner < 2:
        return grid[len(grid) // 2]
    fold_indices = stratified_folds(labels, inner, seed=seed)
    coords = np.asarray(coords, dtype=float)
    best_lam, best_acc = grid[0], -1.0
    for lam in grid:
        hits = 0
        for test_idx in fold_indices:
            train_mask = np.ones(labels.size, dtype=bool)
            train_mask[test_idx] = False
            model = ridge_fit(coords[train_mask], labels[train_mask], lam=lam)
            hits += int(np.sum(np.asarray(predict(model, coords[test_idx])) == labels[test_idx]))
        acc = hits / labels.size
        if acc >= best_acc:  # >= so ties prefer the larger (more regularized) lam
            best_lam, best_acc = lam, acc
    return best_lam


def cross_validated_accuracy(
    dataset,
    embedder,
    folds: int = 7,
    lam: float = 1.0,
    seed: int = 0,
    resamples: int = 10_000,
    lam_grid=None,
) -> EvalReport:
    """Stratified k-fold accuracy with the embedding fitted on train folds only.

    ``dataset`` is a LabeledDataset; ``embedder`` maps (train_matrix,
    test_matrix, dataset) to a (train_coords, test_coords) pair, so methods
    with a fitting step (PCA) cannot leak test data, while fixed bases simply
    ignore the split.  With ``lam_grid`` set, the penalty is chosen per outer
    fold by inner cross-validation on that fold's training data; otherwise
    ``lam`` is used as-is.  The report pools out-of-fold predictions.
    """
    labels = np.asarray(dataset.labels)
    mat = dataset.matrix()
    fold_indices = stratified_folds(labels, folds, seed=seed)
    predicted = np.empty(labels.size, dtype=object)
    for test_idx in fold_indices:
        train_mask = np.ones(labels.size, dtype=bool)
        train_mask[test_idx] = False
        train_coords, test_coords = embedder(mat[train_mask], mat[test_idx], dataset)
        lam_fold = lam
        if lam_grid is not None:
            lam_fold = select_lambda(train_coords, labels[train_mask], lam_grid, seed=seed)
        model = ridge_fit(train_coords, labels[train_mask], lam=lam_fold)
        predicted[test_idx] = predict(model, test_coords)
    class_order = tuple(sorted(set(labels.tolist())))
    return _evaluate_predictions(
        labels, predicted.astype(str), class_order, resamples, seed
    )


def training_accuracy(coords, labels, lam: float = 1e-6) -> float:
    """Accuracy of a linear separator fitted and evaluated on the same data."""
    model = ridge_fit(coords, labels, lam=lam)
    predicted = predict(model, coords)
    return float(np.mean(np.asarray(predicted) == np.asarray(labels)))


# ---------------------------------------------------------------------------
# paired comparison statistics


@dataclass(frozen=True)
class PairedStats:
    mean_difference: float
    diff_ci95: tuple[float, float]
    effect_size: float
    required_n: float  # trials per paired sample for 80 percent power


def required_n_for_power(
    effect_size: float, power: float = 0.80, alpha: float = 0.05
) -> float:
    """Paired-sample size for a two-sided test at the given significance and
    power under the normal approximation: n = ((z_{1-a/2} + z_{power}) / d)^2,
    rounded up."""
    if effect_size == 0:
        return math.inf
    z_alpha = stats.norm.ppf(1.0 - alpha / 2.0)
    z_power = stats.norm.ppf(power)
    return float(math.ceil(((z_alpha + z_power) / abs(effect_size)) ** 2))


def power_from_n(n: float, effect_size: float, alpha: float = 0.05) -> float:
    """Power of the same normal-approximation test at sample size n."""
    z_alpha = stats.norm.ppf(1.0 - alpha / 2.0)
    return float(stats.norm.cdf(math.sqrt(n) * abs(effect_size) - z_alpha))


def paired_difference_stats(
    correct_a, correct_b, resamples: int = 10_000, seed: int = 0
) -> PairedStats:
    """Bootstrap CI of the mean paired difference, Cohen's d on the
    differences, and the sample size needed for 80 percent power.

    Identical vectors are a meaningful degenerate case (no difference at all:
    effect 0, CI collapsed at 0).  A constant nonzero difference has no
    variance to standardize by, so the effect size is undefined and an error
    is raised.
    """
    a = np.asarray(correct_a, dtype=float)
    b = np.asarray(correct_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ParameterError("need two equal-length 1-D vectors with >= 2 entries")
    diff = a - b
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return PairedStats(
                mean_difference=0.0,
                diff_ci95=(0.0, 0.0),
                effect_size=0.0,
                required_n=math.inf,
            )
        raise ParameterError(
            "paired differences have zero variance with nonzero mean; "
            "effect size is undefined"
        )
    effect = mean / sd
    ci = bootstrap_mean_ci(diff, resamples=resamples, seed=seed)
    return PairedStats(
        mean_difference=mean,
        diff_ci95=ci,
        effect_size=effect,
        required_n=required_n_for_power(effect),
    )


# ---------------------------------------------------------------------------
# report files


def write_report(path, report: EvalReport, paired: PairedStats | None = None, extra: dict | None = None) -> None:
    """Key,value lines followed by the confusion matrix; one file per method."""
    lines = ["key,value"]
    lines.append(f"n,{report.n}")
    lines.append(f"accuracy,{repr(report.accuracy)}")
    lines.append(f"ci95_low,{repr(report.ci95[0])}")
    lines.append(f"ci95_high,{repr(report.ci95[1])}")
    for lab in report.class_order:
        lines.append(f"accuracy_{lab},{repr(report.per_class_accuracy[lab])}")
    if paired is not None:
        lines.append(f"paired_mean_difference,{repr(paired.mean_difference)}")
        lines.append(f"paired_diff_ci95_low,{repr(paired.diff_ci95[0])}")
        lines.append(f"paired_diff_ci95_high,{repr(paired.diff_ci95[1])}")
        lines.append(f"effect_size,{repr(paired.effect_size)}")
        lines.append(f"required_n_for_80pct_power,{repr(paired.required_n)}")
    for key in sorted(extra or {}):
        lines.append(f"{key},{extra[key]}")
    lines.append("confusion_rows_true_cols_predicted," + "|".join(report.class_order))
    for lab, row in zip(report.class_order, report.confusion):
        lines.append(f"confusion_{lab}," + "|".join(str(int(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_correctness_csv(path) -> np.ndarray:
    """trial_id,correct file with correct in {0, 1}, ordered by trial_id."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["trial_id", "correct"]:
            raise ParameterError(f"{path}: header must be trial_id,correct")
        for row in reader:
            if not row:
                continue
            if len(row) != 2 or row[1] not in ("0", "1"):
                raise ParameterError(f"{path}: bad row {row!r}")
            rows.append((int(row[0]), float(row[1])))
    rows.sort()
    return np.array([value for _, value in rows])
