"""Gambling wealth kernels.

Every kernel returns log-wealth for a candidate mean: the KT mixture for
categorical data, the constant bettor and Cover-style universal portfolio
for probability-vector data, and the without-replacement variants
(plug-in KT, per-round plug-in, posterior-prior ratio).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .numerics import log_multi_beta, logsumexp
from .simplex import (
    GRID_CAP,
    enumerate_grid,
    grid_size,
    rank_many,
    validate_count_vector,
    validate_prob_vector,
)

__all__ = [
    "DirichletPrior",
    "q_kt",
    "kt_log_wealth",
    "kt_log_wealth_many",
    "constant_bettor_log_wealth",
    "UPState",
    "wor_mean_transform",
    "wor_kt_log_wealth",
    "perround_wor_log_wealth",
    "ppr_log_wealth",
]


class DirichletPrior:
    """Dirichlet mixing weights over constant bets; default alpha = 1/2."""

    def __init__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 1 or np.any(alpha <= 0.0):
            raise ValueError("Dirichlet prior requires positive alpha")
        self.alpha = alpha
        self.log_beta = log_multi_beta(alpha)

    @classmethod
    def jeffreys(cls, K):
        return cls(np.full(K, 0.5))

    def __repr__(self):
        return f"DirichletPrior({self.alpha.tolist()})"


def _resolve_prior(prior, K):
    if prior is None:
        return DirichletPrior.jeffreys(K)
    if prior.alpha.size != K:
        raise ValueError("prior dimension mismatch")
    return prior


def q_kt(x, prior=None):
    """log of q(x) = B(x + alpha) / B(alpha) for a nonnegative real vector x."""
    x = np.asarray(x, dtype=float)
    prior = _resolve_prior(prior, x.size)
    a = x + prior.alpha
    if np.any(a <= 0.0):
        raise ValueError("q_kt requires x + alpha > 0")
    return log_multi_beta(a) - prior.log_beta


def kt_log_wealth(counts, m, prior=None):
    """Log KT mixture wealth at candidate mean m given the count vector.

    Accepts fractional counts (needed for the KL form at t * mu_hat).
    m_j = 0 with a positive count excludes m with certainty (+inf);
    m_j = 0 with a zero count contributes nothing (0^0 = 1 convention).
    """
    counts = np.asarray(counts, dtype=float)
    m = validate_prob_vector(m)
    if counts.shape != m.shape:
        raise ValueError("kt_log_wealth: dimension mismatch")
    if np.any((m == 0.0) & (counts > 0.0)):
        return math.inf
    pos = m > 0.0
    return float(-np.sum(counts[pos] * np.log(m[pos]))) + q_kt(counts, prior)


def kt_log_wealth_many(counts, cands, prior=None):
    """Vectorized kt_log_wealth over an (A, K) array of candidate means."""
    counts = np.asarray(counts, dtype=float)
    cands = np.asarray(cands, dtype=float)
    q = q_kt(counts, prior)
    with np.errstate(divide="ignore", invalid="ignore"):
        neglog = -np.log(cands)
        terms = np.where(counts[None, :] > 0.0, neglog * counts[None, :], 0.0)
    return terms.sum(axis=1) + q


def constant_bettor_log_wealth(obs, b, m):
    """Log wealth of a constant bettor b against candidate mean m.

    Per-round gain is sum_j b_j y_ij / m_j; a round with zero gain
    bankrupts the bettor (-inf), it is not an error.
    """
    obs = np.asarray(obs, dtype=float)
    if obs.size == 0:
        return 0.0
    if obs.ndim != 2:
        raise ValueError("obs must be a (t, K) array")
    b = validate_prob_vector(b)
    m = validate_prob_vector(m)
    if obs.shape[1] != m.size or b.size != m.size:
        raise ValueError("constant_bettor_log_wealth: dimension mismatch")
    zero = m == 0.0
    if np.any(obs[:, zero] > 0.0):
        raise ValueError("m_j = 0 requires y_ij = 0 for all rounds")
    pos = ~zero
    gains = obs[:, pos] @ (b[pos] / m[pos])
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(gains)))


# ---------------------------------------------------------------------------
# Universal portfolio dynamic program
# ---------------------------------------------------------------------------

# per-(K, t) enumeration, predecessor-index, and q-term caches; bounded so
# that one-shot huge grids (K=5, t~100) do not pin gigabytes
_CACHE_ENTRY_LIMIT = 300_000
_grid_cache = {}
_fgrid_cache = {}
_pred_cache = {}
_qterm_cache = {}


def _cached_grid(K, t, cap=GRID_CAP):
    key = (K, t)
    g = _grid_cache.get(key)
    if g is None:
        g = enumerate_grid(K, t, cap=cap)
        if g.shape[0] <= _CACHE_ENTRY_LIMIT:
            _grid_cache[key] = g
    return g


def _cached_fgrid(K, t, cap=GRID_CAP):
    key = (K, t)
    g = _fgrid_cache.get(key)
    if g is None:
        g = _cached_grid(K, t, cap=cap).astype(float)
        if g.shape[0] <= _CACHE_ENTRY_LIMIT:
            _fgrid_cache[key] = g
    return g


def _pred_maps(K, t, cap=GRID_CAP):
    """For each j: (positions in G(K,t) with k_j >= 1, ranks of k - e_j)."""
    key = (K, t)
    maps = _pred_cache.get(key)
    if maps is None:
        grid = _cached_grid(K, t, cap=cap)
        maps = []
        for j in range(K):
            pos = np.flatnonzero(grid[:, j] >= 1)
            pred = grid[pos]
            pred[:, j] -= 1
            idx = rank_many(pred)
            maps.append((pos.astype(np.int64), idx))
        if grid.shape[0] <= _CACHE_ENTRY_LIMIT:
            _pred_cache[key] = maps
    return maps


def _q_terms(K, t, prior, cap=GRID_CAP):
    """log q(k) for every k in G(K, t), in colex order."""
    key = (K, t, tuple(prior.alpha))
    q = _qterm_cache.get(key)
    if q is None:
        grid = _cached_grid(K, t, cap=cap)
        # counts are integers in [0, t]: per-coordinate gammaln lookup tables
        luts = {}
        q = np.full(grid.shape[0], -gammaln(t + prior.alpha.sum()) - prior.log_beta)
        for j in range(K):
            aj = prior.alpha[j]
            if aj not in luts:
                luts[aj] = gammaln(np.arange(t + 1, dtype=float) + aj)
            q += luts[aj][grid[:, j]]
        if grid.shape[0] <= _CACHE_ENTRY_LIMIT:
            _qterm_cache[key] = q
    return q


class UPState:
    """Dynamic-programming state of the universal-portfolio wealth.

    table[r] holds log y^t[k] for the rank-r element of G(K, t); entries
    sum (in probability scale) to 1 whenever all absorbed observations lie
    on the simplex.  States are values: absorb returns a new state.
    """

    __slots__ = (
        "K", "t", "prior", "table", "grid_cap", "_weights", "_supp", "_aug",
    )

    def __init__(self, K, prior=None, grid_cap=GRID_CAP):
        if K < 2:
            raise ValueError("UPState requires K >= 2")
        self.K = K
        self.prior = _resolve_prior(prior, K)
        self.t = 0
        self.table = np.zeros(1)
        self.grid_cap = grid_cap
        self._weights = None
        self._supp = None
        self._aug = None

    def _with(self, t, table):
        s = UPState.__new__(UPState)
        s.K = self.K
        s.prior = self.prior
        s.t = t
        s.table = table
        s.grid_cap = self.grid_cap
        s._weights = None
        s._supp = None
        s._aug = None
        return s

    @property
    def grid(self):
        return _cached_grid(self.K, self.t, cap=self.grid_cap)

    def absorb(self, y):
        """Absorb one simplex-valued observation; returns the new state."""
        y = validate_prob_vector(y)
        if y.size != self.K:
            raise ValueError("observation dimension mismatch")
        t1 = self.t + 1
        n1 = grid_size(self.K, t1)
        new_table = np.full(n1, -math.inf)
        maps = _pred_maps(self.K, t1, cap=self.grid_cap)
        for j in range(self.K):
            if y[j] == 0.0:
                continue
            pos, idx = maps[j]
            contrib = self.table[idx] + math.log(y[j])
            new_table[pos] = np.logaddexp(new_table[pos], contrib)
        return self._with(t1, new_table)

    def _log_weights(self):
        """table[k] + log q(k), the m-independent part of the UP wealth."""
        if self._weights is None:
            self._weights = self.table + _q_terms(
                self.K, self.t, self.prior, cap=self.grid_cap
            )
        return self._weights

    def _support(self):
        """Per-coordinate flag: does any k with k_j >= 1 carry mass?"""
        if self._supp is None:
            grid = self.grid
            alive = self.table > -math.inf
            self._supp = np.array(
                [bool(np.any(alive & (grid[:, j] >= 1))) for j in range(self.K)]
            )
        return self._supp

    def _augmented(self):
        """Float [grid | log-weight] block restricted to rows with mass, so
        the weight add rides along with the matmul."""
        if self._aug is None:
            grid = _cached_fgrid(self.K, self.t, cap=self.grid_cap)
            w = self._log_weights()
            alive = w > -math.inf
            if not np.all(alive):
                grid = grid[alive]
                w = w[alive]
            aug = np.empty((grid.shape[0], self.K + 1))
            aug[:, : self.K] = grid
            aug[:, self.K] = w
            self._aug = aug
        return self._aug

    def log_wealth_many(self, cands, chunk=256):
        """Log UP wealth at each row of an (A, K) array of candidate means."""
        cands = np.asarray(cands, dtype=float)
        if cands.ndim != 2 or cands.shape[1] != self.K:
            raise ValueError("candidates must be (A, K)")
        A = cands.shape[0]
        if self.t == 0:
            return np.zeros(A)
        aug = self._augmented()
        if aug.shape[0] == 0:
            return np.full(A, -math.inf)
        out = np.empty(A)
        support = self._support()
        zero_mask = cands == 0.0
        # candidates with a zero coordinate that already carries mass diverge
        diverged = np.any(zero_mask & support[None, :], axis=1)
        neglog = np.empty((A, self.K + 1))
        neglog[:, : self.K] = np.where(
            zero_mask, 0.0, -np.log(np.where(zero_mask, 1.0, cands))
        )
        neglog[:, self.K] = 1.0
        for lo in range(0, A, chunk):
            hi = min(lo + chunk, A)
            L = aug @ neglog[lo:hi].T  # (M, chunk)
            mx = L.max(axis=0)
            L -= mx[None, :]
            np.exp(L, out=L)
            out[lo:hi] = mx + np.log(L.sum(axis=0))
        out[diverged] = math.inf
        return out

    def log_wealth(self, m):
        """Log UP wealth at a single candidate mean."""
        m = validate_prob_vector(m)
        return float(self.log_wealth_many(m[None, :])[0])

    def table_mass(self):
        """sum_k exp(table[k]); equals 1 for simplex-valued histories."""
        finite = self.table[self.table > -math.inf]
        if finite.size == 0:
            return 0.0
        return float(np.exp(logsumexp(finite)))


# ---------------------------------------------------------------------------
# Sampling without replacement
# ---------------------------------------------------------------------------


def wor_mean_transform(m, drawn, N):
    """Mean of the remaining population under hypothesis m: (N m - drawn)/(N - t).

    Coordinates may come out negative; an infeasible hypothesis is the
    caller's to exclude, not an error here.
    """
    m = np.asarray(m, dtype=float)
    drawn, t = validate_count_vector(drawn)
    if t >= N:
        raise ValueError("wor_mean_transform requires sum(drawn) < N")
    return (N * m - drawn) / (N - t)


def wor_kt_log_wealth(drawn, m, N, prior=None):
    """Log KT wealth with the final WoR plug-in mean in place of m.

    A category already exhausted (or over-drawn) under m while having been
    drawn diverges to +inf: the census is excluded with certainty.
    """
    drawn, t = validate_count_vector(drawn)
    m = np.asarray(m, dtype=float)
    if m.shape != drawn.shape:
        raise ValueError("wor_kt_log_wealth: dimension mismatch")
    if t > N - 1:
        raise ValueError("wor_kt_log_wealth requires sum(drawn) <= N - 1")
    rem = N * m - drawn
    if np.any((rem <= 0.0) & (drawn >= 1)) or np.any(rem < 0.0):
        return math.inf
    val = q_kt(drawn, prior)
    pos = drawn >= 1
    val -= float(np.sum(drawn[pos] * (np.log(rem[pos]) - math.log(N - t))))
    return val


def perround_wor_log_wealth(draws, m, N, prior=None):
    """Log wealth of the round-by-round WoR plug-in, in closed form.

    Defined for census hypotheses only: N * m must be integer-valued.
    Uses falling factorials; the literal sequential product is kept as a
    test oracle.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2:
        raise ValueError("draws must be a (t, K) array of one-hot vectors")
    for row in draws:
        validate_prob_vector(row)
        if not np.all((row == 0.0) | (row == 1.0)):
            raise ValueError("perround_wor_log_wealth requires one-hot draws")
    counts, t = validate_count_vector(draws.sum(axis=0))
    m = np.asarray(m, dtype=float)
    if t > N - 1:
        raise ValueError("perround_wor_log_wealth requires t <= N - 1")
    nm = N * m
    nmi = np.rint(nm)
    if np.any(np.abs(nm - nmi) > 1e-9):
        raise ValueError("N * m must be integer-valued (census hypothesis)")
    nmi = nmi.astype(np.int64)
    if np.any(nmi < counts):
        return math.inf
    val = q_kt(counts, prior)
    # log (N)_t, falling factorial
    val += float(gammaln(N + 1.0) - gammaln(N - t + 1.0))
    # minus sum_j log (N m_j)_{K_tj}
    val -= float(np.sum(gammaln(nmi + 1.0) - gammaln(nmi - counts + 1.0)))
    return val


def ppr_log_wealth(drawn, census, prior=None):
    """Log posterior-prior-ratio wealth at an integer census hypothesis."""
    drawn, t = validate_count_vector(drawn)
    census, N = validate_count_vector(census)
    if drawn.shape != census.shape:
        raise ValueError("ppr_log_wealth: dimension mismatch")
    if t > N - 1:
        raise ValueError("ppr_log_wealth requires sum(drawn) <= N - 1")
    if np.any(census < drawn):
        return math.inf
    val = q_kt(drawn, prior)
    log_multinom_full = float(gammaln(N + 1.0) - np.sum(gammaln(census + 1.0)))
    remaining = census - drawn
    log_multinom_rem = float(
        gammaln(N - t + 1.0) - np.sum(gammaln(remaining + 1.0))
    )
    return val + log_multinom_full - log_multinom_rem
