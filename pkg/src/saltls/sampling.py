"""Bernoulli observation of a symmetric matrix and sample splitting.

A sample observes unordered index pairs: the diagonal entry (i, i) is
one trial, and an off-diagonal pair {(i, j), (j, i)} is one trial that
reveals both positions.  Observed entries are stored as a coordinate
list sorted and grouped by row so per-row projections are O(|Omega_i|).

``split`` turns one Bernoulli(p) sample into t mutually independent
Bernoulli(q) samples over the same entries, with q = 1 - (1-p)^(1/t).
That q is the largest per-output rate for which t independent streams
have union rate exactly p, so no observed entry is discarded: each
entry receives a multiplicity m ~ Binomial(t, q) conditioned on m >= 1
and lands in a uniformly random m-subset of the outputs.  Each output
records its own exact marginal rate q for downstream 1/q scaling, and
q >= p/t always holds.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import as_generator
from .errors import InvalidProbability, InvalidSplit, UsageError
from .textio import FLOAT_FMT


def _check_probability(p):
    p = float(p)
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise InvalidProbability(f"p = {p!r} outside (0, 1]")
    return p


class ObservedSample:
    """Observed entries of an n x n symmetric matrix at Bernoulli rate p.

    Entries come in symmetric closure: (i, j, v) is stored iff
    (j, i, v) is.  Constructed from upper-triangle triples.
    """

    def __init__(self, n, p, pair_rows, pair_cols, pair_vals):
        self.n = int(n)
        self.p = _check_probability(p)
        pi = np.asarray(pair_rows, dtype=np.int64).ravel()
        pj = np.asarray(pair_cols, dtype=np.int64).ravel()
        pv = np.asarray(pair_vals, dtype=float).ravel()
        if not (pi.shape == pj.shape == pv.shape):
            raise ValueError("pair arrays must have matching lengths")
        if pi.size:
            if pi.min() < 0 or pj.max() >= self.n:
                raise ValueError("pair indices out of range")
            if np.any(pi > pj):
                raise ValueError("pairs must satisfy i <= j")
            if not np.all(np.isfinite(pv)):
                raise ValueError("pair values must be finite")
        order = np.lexsort((pj, pi))
        self.pair_rows = pi[order]
        self.pair_cols = pj[order]
        self.pair_vals = pv[order]
        if pi.size > 1:
            same = (np.diff(self.pair_rows) == 0) & (np.diff(self.pair_cols) == 0)
            if np.any(same):
                raise ValueError("duplicate pairs in sample")
        off = self.pair_rows != self.pair_cols
        rows = np.concatenate([self.pair_rows, self.pair_cols[off]])
        cols = np.concatenate([self.pair_cols, self.pair_rows[off]])
        vals = np.concatenate([self.pair_vals, self.pair_vals[off]])
        order = np.lexsort((cols, rows))
        self.rows = rows[order]
        self.cols = cols[order]
        self.vals = vals[order]
        self.indptr = np.searchsorted(self.rows, np.arange(self.n + 1))

    @property
    def n_pairs(self):
        return int(self.pair_rows.size)

    @property
    def n_entries(self):
        return int(self.rows.size)

    def row(self, i):
        """Observed columns and values of row i (sorted by column)."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.cols[lo:hi], self.vals[lo:hi]

    def contains(self, i, j):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = np.searchsorted(self.cols[lo:hi], j)
        return pos < hi - lo and self.cols[lo + pos] == j


@dataclass(frozen=True)
class RowProjection:
    """The scaled row projector for row i: (1/p) sum_{j in Omega_i} e_j e_j^T."""

    row: int
    indices: np.ndarray
    scale: float


def bernoulli_sample(A, p, seed):
    """Observe each unordered index pair of symmetric A with probability p."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
        raise ValueError("matrix is not symmetric")
    p = _check_probability(p)
    n = A.shape[0]
    rng = as_generator(seed)
    iu, ju = np.triu_indices(n)
    keep = rng.random(iu.size) < p
    pi, pj = iu[keep], ju[keep]
    return ObservedSample(n, p, pi, pj, A[pi, pj])


def p_omega(sample):
    """Dense unbiased estimate: observed entries scaled by 1/p, zeros elsewhere."""
    out = np.zeros((sample.n, sample.n))
    out[sample.rows, sample.cols] = sample.vals / sample.p
    return out


def row_projection(sample, i):
    """The projector data for row i of the sample."""
    if not 0 <= i < sample.n:
        raise ValueError(f"row {i} out of range")
    cols, _ = sample.row(i)
    return RowProjection(row=int(i), indices=cols.copy(), scale=1.0 / sample.p)


def _conditional_multiplicities(t, q, size, rng):
    """Draw Binomial(t, q) conditioned on >= 1, vectorized."""
    if q >= 1.0:
        return np.full(size, t, dtype=np.int64)
    j = np.arange(1, t + 1)
    logpmf = (
        np.array([math.lgamma(t + 1) - math.lgamma(m + 1) - math.lgamma(t - m + 1) for m in j])
        + j * math.log(q)
        + (t - j) * math.log1p(-q)
    )
    pmf = np.exp(logpmf)
    pmf /= pmf.sum()
    return rng.choice(j, size=size, p=pmf)


def split(sample, t, seed, return_assignments=False):
    """Split a sample into t independent samples at rate q = 1-(1-p)^(1/t).

    Every output includes every matrix entry with marginal probability
    exactly q, outputs are mutually independent, and each output's
    entries appear in the input with identical values.  The union of
    the outputs is the whole input: multiplicities m ~ Binomial(t, q | m >= 1)
    route each observed pair to m distinct outputs.
    """
    if not isinstance(t, (int, np.integer)) or t < 1:
        raise InvalidSplit(f"t = {t!r} must be an int >= 1")
    t = int(t)
    rng = as_generator(seed)
    p = sample.p
    q = 1.0 if p == 1.0 else 1.0 - (1.0 - p) ** (1.0 / t)
    m_pairs = sample.n_pairs
    mult = _conditional_multiplicities(t, q, m_pairs, rng)
    # uniformly random m-subset per pair: rank a random matrix per row
    noise = rng.random((m_pairs, t))
    ranks = np.argsort(np.argsort(noise, axis=1, kind="stable"), axis=1, kind="stable")
    assigned = ranks < mult[:, None]
    outputs = []
    for piece in range(t):
        sel = assigned[:, piece]
        outputs.append(
            ObservedSample(
                sample.n,
                q,
                sample.pair_rows[sel],
                sample.pair_cols[sel],
                sample.pair_vals[sel],
            )
        )
    if return_assignments:
        return outputs, assigned
    return outputs


def write_sample(path, sample):
    """Text form: header ``n p entry_count``, then one ``i j value`` line
    per upper-triangle entry, sorted by (i, j), indices 0-based."""
    with open(path, "w") as fh:
        fh.write("%d %s %d\n" % (sample.n, FLOAT_FMT % sample.p, sample.n_pairs))
        for i, j, v in zip(sample.pair_rows, sample.pair_cols, sample.pair_vals):
            fh.write("%d %d %s\n" % (i, j, FLOAT_FMT % v))


def read_sample(path):
    """Read a sample written by :func:`write_sample`; line order is free."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise UsageError(f"{path}: expected 'n p entry_count' header")
        try:
            n, p, count = int(header[0]), float(header[1]), int(header[2])
        except ValueError as exc:
            raise UsageError(f"{path}: bad header {header!r}") from exc
        pi = np.empty(count, dtype=np.int64)
        pj = np.empty(count, dtype=np.int64)
        pv = np.empty(count)
        for idx in range(count):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise UsageError(f"{path}: entry {idx} malformed")
            a, b = int(parts[0]), int(parts[1])
            pi[idx], pj[idx] = min(a, b), max(a, b)
            pv[idx] = float(parts[2])
    try:
        return ObservedSample(n, p, pi, pj, pv)
    except (ValueError, InvalidProbability) as exc:
        raise UsageError(f"{path}: {exc}") from exc
