"""Score calibration: map raw classifier scores to class probabilities.

Two methods are provided. The density-fit method fits each class's score
distribution by maximum likelihood over a small family battery (normal,
logistic), keeps the best-likelihood family per class, and combines the
densities with class priors through Bayes' rule. The baseline is a Platt-style
two-parameter sigmoid fitted with smoothed targets. Expected calibration error
uses equal-width reliability bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as spstats

from .errors import (
    DegenerateClassError,
    InvalidConfigError,
    LengthMismatchError,
    SingleClassError,
    TooFewSamplesError,
)
from .numerics import sigmoid

MIN_PER_CLASS = 10
DENSITY_FAMILIES = ("normal", "logistic")


@dataclass(frozen=True)
class ClassDensity:
    """One fitted score density: family tag plus location/scale."""

    family: str
    loc: float
    scale: float

    def logpdf(self, x):
        if self.family == "normal":
            return spstats.norm.logpdf(x, loc=self.loc, scale=self.scale)
        if self.family == "logistic":
            return spstats.logistic.logpdf(x, loc=self.loc, scale=self.scale)
        raise ValueError(f"unknown density family {self.family!r}")


@dataclass(frozen=True)
class GuessModel:
    """Class-conditional score densities plus class priors."""

    neg: ClassDensity
    pos: ClassDensity
    prior_neg: float
    prior_pos: float

    def to_dict(self) -> dict:
        return {
            "neg": {"family": self.neg.family, "loc": self.neg.loc, "scale": self.neg.scale},
            "pos": {"family": self.pos.family, "loc": self.pos.loc, "scale": self.pos.scale},
            "prior_neg": self.prior_neg,
            "prior_pos": self.prior_pos,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GuessModel":
        return cls(
            neg=ClassDensity(d["neg"]["family"], float(d["neg"]["loc"]), float(d["neg"]["scale"])),
            pos=ClassDensity(d["pos"]["family"], float(d["pos"]["loc"]), float(d["pos"]["scale"])),
            prior_neg=float(d["prior_neg"]),
            prior_pos=float(d["prior_pos"]),
        )


@dataclass(frozen=True)
class PlattModel:
    """Sigmoid map p = 1 / (1 + exp(a * score + b))."""

    a: float
    b: float

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "PlattModel":
        return cls(a=float(d["a"]), b=float(d["b"]))


@dataclass(frozen=True)
class ReliabilityBin:
    """One equal-width confidence bin: [lo, hi), count, confidence, accuracy."""

    lo: float
    hi: float
    count: int
    mean_confidence: float
    accuracy: float


def _fit_normal(x: np.ndarray) -> ClassDensity:
    return ClassDensity("normal", float(np.mean(x)), float(np.std(x, ddof=1)))


def _fit_logistic(x: np.ndarray) -> ClassDensity:
    """Moment estimate, then one Newton refinement pass on (loc, scale)."""
    loc = float(np.mean(x))
    scale = float(np.std(x, ddof=1) * np.sqrt(3.0) / np.pi)

    def loc_step(loc, scale):
        u = (x - loc) / scale
        s = sigmoid(u)
        grad = np.sum(2.0 * s - 1.0) / scale
        hess = -2.0 * np.sum(s * (1.0 - s)) / scale**2
        if hess >= 0:
            return loc
        return loc - grad / hess

    def scale_step(loc, scale):
        def score(sc):
            u = (x - loc) / sc
            return float(np.sum(u * (2.0 * sigmoid(u) - 1.0) - 1.0) / sc)

        h = scale * 1e-6
        deriv = (score(scale + h) - score(scale - h)) / (2.0 * h)
        if deriv >= 0:
            return scale
        refined = scale - score(scale) / deriv
        return refined if refined > 0 else scale

    new_loc = loc_step(loc, scale)
    new_scale = scale_step(new_loc, scale)
    return ClassDensity("logistic", float(new_loc), float(new_scale))


_FITTERS = {"normal": _fit_normal, "logistic": _fit_logistic}


def fit_guess(
    scores,
    labels,
    families: tuple[str, ...] = DENSITY_FAMILIES,
    priors: tuple[float, float] | None = None,
) -> GuessModel:
    """Fit per-class score densities by ML; keep the best family per class.

    Priors default to the empirical class proportions; pass priors to
    override (e.g. with the source cohort's natural prevalence when the
    training set was balanced by subsampling).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape:
        raise LengthMismatchError("scores and labels must align")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not set(labels.tolist()) <= {0, 1}:
        raise ValueError("labels must be 0 or 1")
    if priors is not None and abs(priors[0] + priors[1] - 1.0) > 1e-9:
        raise InvalidConfigError("priors must sum to 1")
    fitted = {}
    for cls in (0, 1):
        x = scores[labels == cls]
        if len(x) < MIN_PER_CLASS:
            raise TooFewSamplesError(
                f"need >= {MIN_PER_CLASS} scores for class {cls}, got {len(x)}"
            )
        sd = float(np.std(x, ddof=1))
        if sd <= 1e-12 * max(1.0, float(abs(np.mean(x)))):
            raise DegenerateClassError(f"class {cls} scores have zero variance")
        best = None
        best_ll = -np.inf
        for family in families:
            density = _FITTERS[family](x)
            ll = float(np.sum(density.logpdf(x)))
            if ll > best_ll:
                best, best_ll = density, ll
        fitted[cls] = best
    if priors is None:
        prior_pos = float(np.mean(labels == 1))
        priors = (1.0 - prior_pos, prior_pos)
    return GuessModel(neg=fitted[0], pos=fitted[1], prior_neg=priors[0], prior_pos=priors[1])


def calibrate_guess(model: GuessModel, score):
    """Posterior P(y=1 | score) via Bayes' rule, evaluated in log space."""
    log_pos = np.log(model.prior_pos) + model.pos.logpdf(score)
    log_neg = np.log(model.prior_neg) + model.neg.logpdf(score)
    return sigmoid(log_pos - log_neg)


def fit_platt(scores, labels, max_iter: int = 100, tol: float = 1e-8) -> PlattModel:
    """Fit the sigmoid map by Newton iterations on the smoothed-target likelihood.

    Targets are (n_pos + 1) / (n_pos + 2) for positives and 1 / (n_neg + 2)
    for negatives, which keeps (a, b) finite even for separable scores.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape:
        raise LengthMismatchError("scores and labels must align")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("both classes must be present")
    t = np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a = 0.0
    b = float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    for _ in range(max_iter):
        p = sigmoid(-(a * scores + b))
        grad = np.array([np.sum((t - p) * scores), np.sum(t - p)])
        if float(np.max(np.abs(grad))) < tol:
            break
        w = p * (1.0 - p)
        hess = np.array([
            [np.sum(w * scores**2), np.sum(w * scores)],
            [np.sum(w * scores), np.sum(w)],
        ])
        hess += 1e-12 * np.eye(2)
        da, db = np.linalg.solve(hess, grad)
        a -= da
        b -= db
    return PlattModel(a=float(a), b=float(b))


def calibrate_platt(model: PlattModel, score):
    """Apply the fitted sigmoid map."""
    s = np.asarray(score, dtype=float)
    return sigmoid(-(model.a * s + model.b))


def reliability_bins(probs, labels, bins: int = 10) -> list[ReliabilityBin]:
    """Partition [0, 1] into equal-width bins of predicted probability."""
    if bins < 1:
        raise InvalidConfigError(f"bins must be >= 1, got {bins}")
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.shape != labels.shape or probs.ndim != 1:
        raise LengthMismatchError("probs and labels must be 1-D and aligned")
    if len(probs) == 0:
        raise LengthMismatchError("empty input")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    idx = np.minimum((probs * bins).astype(int), bins - 1)
    out = []
    for b in range(bins):
        mask = idx == b
        count = int(np.sum(mask))
        out.append(
            ReliabilityBin(
                lo=b / bins,
                hi=(b + 1) / bins,
                count=count,
                mean_confidence=float(np.mean(probs[mask])) if count else 0.0,
                accuracy=float(np.mean(labels[mask])) if count else 0.0,
            )
        )
    return out


def expected_calibration_error(probs, labels, bins: int = 10) -> float:
    """Bin-weighted mean absolute gap between confidence and accuracy."""
    detail = reliability_bins(probs, labels, bins)
    n = sum(b.count for b in detail)
    return float(
        sum(b.count / n * abs(b.accuracy - b.mean_confidence) for b in detail if b.count)
    )
