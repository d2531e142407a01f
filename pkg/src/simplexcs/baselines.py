"""Comparator constructions.

Coordinatewise aggregation of two-horse KT wealths (Bonferroni and
mixture), plus the non-time-uniform sets: Sanov-style, Mardia-style, and
exact Clopper-Pearson intervals combined by Bonferroni.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import kl_divergence, log_binomial_tail, logsumexp
from .simplex import validate_count_vector, validate_prob_vector
from .wealth import DirichletPrior, kt_log_wealth

__all__ = [
    "coordinate_log_wealths",
    "bonferroni_membership",
    "mixture_membership",
    "sanov_radius",
    "sanov_membership",
    "mardia_gate",
    "mardia_radius",
    "mardia_membership",
    "clopper_pearson_interval",
]


def coordinate_log_wealths(counts, m, prior=None):
    """Per-coordinate KT(2) log wealths: coordinate j reduces to the binary
    sequence with counts (k_j, t - k_j) against candidate (m_j, 1 - m_j)."""
    counts, t = validate_count_vector(counts)
    m = validate_prob_vector(m)
    K = m.size
    if prior is None:
        prior = DirichletPrior.jeffreys(2)
    out = np.empty(K)
    for j in range(K):
        mj = min(max(m[j], 0.0), 1.0)
        out[j] = kt_log_wealth(
            np.array([counts[j], t - counts[j]], dtype=float),
            np.array([mj, 1.0 - mj]),
            prior,
        )
    return out


def bonferroni_membership(coord_log_wealths, delta):
    """In iff every coordinate log-wealth < ln(K/delta)."""
    w = np.asarray(coord_log_wealths, dtype=float)
    K = w.size
    return bool(np.all(w < math.log(K) - math.log(delta)))


def mixture_membership(coord_log_wealths, delta):
    """In iff the averaged wealth (1/K) sum_j W_j stays strictly below 1/delta."""
    w = np.asarray(coord_log_wealths, dtype=float)
    K = w.size
    if np.any(np.isinf(w) & (w > 0)):
        return False
    return bool(logsumexp(w) - math.log(K) < -math.log(delta))


def sanov_radius(t, K, delta):
    """KL radius ln(1/delta)/t + (K/t) ln(t+1); fixed-t guarantee only."""
    if t < 1:
        raise ValueError("sanov_radius requires t >= 1")
    return -math.log(delta) / t + K / t * math.log(t + 1.0)


def sanov_membership(mu_hat, m, t, delta):
    mu_hat = validate_prob_vector(mu_hat)
    m = validate_prob_vector(m)
    return kl_divergence(mu_hat, m) < sanov_radius(t, mu_hat.size, delta)


def mardia_gate(K):
    """Smallest t at which the Mardia-style bound applies: t >= 8 pi (K/e)^3."""
    return 8.0 * math.pi * (K / math.e) ** 3


def mardia_radius(t, K, delta):
    """KL radius (K-1)/t * ln(2(K-1)/delta), valid only past the gate."""
    return (K - 1) / t * math.log(2.0 * (K - 1) / delta)


def mardia_membership(mu_hat, m, t, delta):
    """Membership test, or None when t is below the applicability gate."""
    mu_hat = validate_prob_vector(mu_hat)
    m = validate_prob_vector(m)
    K = mu_hat.size
    if t < mardia_gate(K):
        return None
    return kl_divergence(mu_hat, m) < mardia_radius(t, K, delta)


def _solve_tail(n, k, side, target_log, tol=1e-10):
    """Bisect for p in [0, 1] with log tail(n, k, p, side) == target_log."""
    lo, hi = 0.0, 1.0
    increasing = side == "upper"  # P(X >= k) grows with p; P(X <= k) shrinks
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        val = log_binomial_tail(n, k, mid, side)
        if (val < target_log) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def clopper_pearson_interval(k, n, delta_prime):
    """Exact two-sided Clopper-Pearson interval at level 1 - delta_prime."""
    if not (0 <= k <= n) or n < 1:
        raise ValueError("clopper_pearson_interval requires 0 <= k <= n, n >= 1")
    if not (0.0 < delta_prime < 1.0):
        raise ValueError("delta_prime must lie in (0, 1)")
    target = math.log(delta_prime / 2.0)
    lower = 0.0 if k == 0 else _solve_tail(n, k, "upper", target)
    upper = 1.0 if k == n else _solve_tail(n, k, "lower", target)
    return lower, upper
