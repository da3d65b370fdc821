"""Small numerically-stable primitives used across the modeling modules."""

import numpy as np

# Probabilities are clamped away from {0, 1} so logs and logits stay finite.
PROB_EPS = 1e-12


def sigmoid(z):
    """Logistic function, computed branch-stably for large |z|.

    Accepts scalars or arrays; returns the same shape.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def logit(p):
    """Inverse of the logistic function."""
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    if out.ndim == 0:
        return float(out)
    return out


def log1pexp(z):
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=float)
    out = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    if out.ndim == 0:
        return float(out)
    return out


def clamp_probability(p):
    """Pull a probability into the open interval (0, 1)."""
    return float(min(max(p, PROB_EPS), 1.0 - PROB_EPS))
