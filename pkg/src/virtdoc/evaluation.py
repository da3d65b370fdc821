"""Model evaluation: ROC/AUC, the DeLong paired comparison, a one-sided t-test
on AUC distributions, a label-permutation test, and the capacity sweep.

AUC uses the rank (Mann-Whitney) formulation with average ranks for ties, so
it matches brute-force pair counting exactly, half credit for ties.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as spstats

from .dataset import (
    FEATURE_SETS,
    Cohort,
    SplitSpec,
    balance_subsample,
    feature_matrix,
    fit_normalization,
    split,
)
from .errors import (
    InvalidConfigError,
    LengthMismatchError,
    SingleClassError,
    ZeroVarianceError,
)
from .neuralnet import NetworkConfig, forward_batch, init_network, train


@dataclass(frozen=True)
class RocCurve:
    """ROC points swept over descending score thresholds, ties grouped."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))


@dataclass(frozen=True)
class AucComparison:
    auc_a: float
    auc_b: float
    z: float
    p_value: float
    sided: str
    degenerate: bool = False


@dataclass(frozen=True)
class PermutationResult:
    observed_auc: float
    permuted_aucs: np.ndarray
    p_value: float


@dataclass(frozen=True)
class SweepPoint:
    depth: int
    width: int
    mean_auc: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]

    def mean_auc(self, depth: int, width: int) -> float:
        for p in self.points:
            if p.depth == depth and p.width == width:
                return p.mean_auc
        raise KeyError((depth, width))


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatchError("scores and labels must be 1-D and aligned")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not set(labels.tolist()) <= {0, 1}:
        raise ValueError("labels must be 0 or 1")
    if labels.min() == labels.max():
        raise SingleClassError("both classes must be present")
    return scores, labels


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties 0.5)."""
    scores, labels = _check_scores_labels(scores, labels)
    ranks = spstats.rankdata(scores)  # average ranks for ties
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve(scores, labels) -> RocCurve:
    """ROC with thresholds at the unique scores, descending; starts at (0,0)."""
    scores, labels = _check_scores_labels(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # group tied scores so each unique threshold moves counts in one step
    distinct = np.flatnonzero(np.diff(s)) if len(s) > 1 else np.array([], dtype=int)
    last = np.concatenate([distinct, [len(s) - 1]])
    tp = np.cumsum(y)[last].astype(float)
    fp = (last + 1 - np.cumsum(y)[last]).astype(float)
    n_pos = float(np.sum(y))
    n_neg = float(len(y) - n_pos)
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    thresholds = np.concatenate([[np.inf], s[last]])
    area = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=area)


def delong_test(scores_a, scores_b, labels, sided: str = "two") -> AucComparison:
    """Paired DeLong comparison of two models' AUCs on the same observations.

    One-sided tests the alternative AUC_a > AUC_b. Identical structural
    components (e.g. a self-comparison) are reported as degenerate with
    z = 0 instead of dividing by zero.
    """
    if sided not in ("one", "two"):
        raise InvalidConfigError(f"sided must be 'one' or 'two', got {sided!r}")
    scores_a, labels_arr = _check_scores_labels(scores_a, labels)
    scores_b, _ = _check_scores_labels(scores_b, labels)

    def components(scores):
        pos = scores[labels_arr == 1]
        neg = scores[labels_arr == 0]
        psi = (pos[:, None] > neg[None, :]).astype(float)
        psi += 0.5 * (pos[:, None] == neg[None, :])
        return psi.mean(axis=1), psi.mean(axis=0)  # V10 (per pos), V01 (per neg)

    v10_a, v01_a = components(scores_a)
    v10_b, v01_b = components(scores_b)
    auc_a = float(v10_a.mean())
    auc_b = float(v10_b.mean())
    n_pos = len(v10_a)
    n_neg = len(v01_a)
    if n_pos < 2 or n_neg < 2:
        raise SingleClassError("need at least 2 observations per class")
    s10 = np.cov(np.vstack([v10_a, v10_b]), ddof=1)
    s01 = np.cov(np.vstack([v01_a, v01_b]), ddof=1)
    var_diff = (s10[0, 0] + s10[1, 1] - 2 * s10[0, 1]) / n_pos \
        + (s01[0, 0] + s01[1, 1] - 2 * s01[0, 1]) / n_neg
    if var_diff <= 1e-15:
        p = 1.0 if sided == "two" else 0.5
        return AucComparison(auc_a=auc_a, auc_b=auc_b, z=0.0, p_value=p,
                             sided=sided, degenerate=True)
    z = (auc_a - auc_b) / np.sqrt(var_diff)
    if sided == "two":
        p = float(2.0 * spstats.norm.sf(abs(z)))
    else:
        p = float(spstats.norm.sf(z))
    return AucComparison(auc_a=auc_a, auc_b=auc_b, z=float(z), p_value=p, sided=sided)


def auc_t_test(aucs, mu0: float = 0.5) -> tuple[float, float]:
    """One-sample, one-sided Student's t-test (alternative: mean > mu0)."""
    aucs = np.asarray(aucs, dtype=float)
    if len(aucs) < 2:
        raise InvalidConfigError("need at least 2 AUC values")
    sd = float(np.std(aucs, ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("AUC values are all identical")
    n = len(aucs)
    t = (float(np.mean(aucs)) - mu0) / (sd / np.sqrt(n))
    p = float(spstats.t.sf(t, df=n - 1))
    return t, p


def permutation_test(scores, labels, n_permutations: int = 1000, seed: int = 0) -> PermutationResult:
    """AUC significance by randomly permuting the class labels."""
    if n_permutations < 99:
        raise InvalidConfigError(f"need at least 99 permutations, got {n_permutations}")
    scores, labels = _check_scores_labels(scores, labels)
    observed = auc(scores, labels)
    ranks = spstats.rankdata(scores)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    offset = n_pos * (n_pos + 1) / 2.0
    rng = np.random.default_rng(seed)
    permuted = np.empty(n_permutations)
    for b in range(n_permutations):
        perm = rng.permutation(labels)
        permuted[b] = (float(np.sum(ranks[perm == 1])) - offset) / (n_pos * n_neg)
    p = (1.0 + float(np.sum(permuted >= observed))) / (n_permutations + 1.0)
    return PermutationResult(observed_auc=observed, permuted_aucs=permuted, p_value=p)


def _derive_seeds(*entropy) -> list[int]:
    ss = np.random.SeedSequence([int(e) for e in entropy])
    return [int(s) for s in ss.generate_state(3)]


def train_test_auc(
    cohort: Cohort,
    config: NetworkConfig,
    feature_set: str,
    split_seed: int,
    subsample_seed: int,
    net_seed: int,
    train_fraction: float = 0.8,
    balance: bool = True,
) -> float:
    """One full pipeline pass: split, balance, normalize, train, test AUC."""
    features = FEATURE_SETS[feature_set]
    train_cohort, test_cohort = split(
        cohort, SplitSpec(train_fraction=train_fraction, seed=split_seed)
    )
    if balance:
        train_cohort = balance_subsample(train_cohort, seed=subsample_seed)
    stats = fit_normalization(train_cohort, features)
    cfg = replace(config, input_dim=1 + len(features), seed=net_seed)
    net = init_network(cfg, feature_set=feature_set, norm_stats=stats)
    X, y = feature_matrix(train_cohort, stats)
    trained, _ = train(net, X, y, cfg)
    X_test, y_test = feature_matrix(test_cohort, stats)
    return auc(forward_batch(trained, X_test), y_test.astype(int))


def auc_distribution(
    cohort: Cohort,
    config: NetworkConfig,
    repeats: int,
    seed: int,
    feature_set: str = "basic",
    train_fraction: float = 0.8,
    balance: bool = True,
) -> list[float]:
    """Test AUC over repeated seed-derived splits, one fresh model per repeat."""
    if repeats < 2:
        raise InvalidConfigError(f"need repeats >= 2, got {repeats}")
    out = []
    for r in range(repeats):
        split_seed, subsample_seed, net_seed = _derive_seeds(seed, r)
        out.append(
            train_test_auc(
                cohort, config, feature_set,
                split_seed=split_seed, subsample_seed=subsample_seed, net_seed=net_seed,
                train_fraction=train_fraction, balance=balance,
            )
        )
    return out


def sweep(
    cohort: Cohort,
    config: NetworkConfig,
    depths=(1, 2, 3),
    widths=range(1, 21),
    repeats: int = 5,
    seed: int = 0,
    feature_set: str = "basic",
) -> SweepResult:
    """Mean test AUC per (depth, width) grid point via auc_distribution."""
    points = []
    for depth in depths:
        for width in widths:
            cfg = replace(config, hidden_layers=(int(width),) * int(depth))
            point_seed = int(np.random.SeedSequence([seed, depth, width]).generate_state(1)[0])
            aucs = auc_distribution(
                cohort, cfg, repeats=repeats, seed=point_seed, feature_set=feature_set
            )
            points.append(SweepPoint(depth=int(depth), width=int(width),
                                     mean_auc=float(np.mean(aucs))))
    return SweepResult(points=tuple(points))
