import math

import numpy as np
import pytest

from saltls.errors import InvalidProbability, InvalidSplit, UsageError
from saltls.sampling import (
    ObservedSample,
    bernoulli_sample,
    p_omega,
    read_sample,
    row_projection,
    split,
    write_sample,
)


def sym(rng, n):
    Z = rng.standard_normal((n, n))
    return (Z + Z.T) / 2.0


def test_full_observation():
    rng = np.random.default_rng(1)
    A = sym(rng, 7)
    s = bernoulli_sample(A, 1.0, seed=0)
    assert s.n_pairs == 7 * 8 // 2
    assert s.n_entries == 49
    assert np.array_equal(p_omega(s), A)
    for i in range(7):
        cols, vals = s.row(i)
        assert np.array_equal(cols, np.arange(7))
        assert np.array_equal(vals, A[i])


def test_sample_is_symmetric_and_matches_matrix():
    rng = np.random.default_rng(2)
    A = sym(rng, 20)
    s = bernoulli_sample(A, 0.4, seed=3)
    for i, j, v in zip(s.rows, s.cols, s.vals):
        assert v == A[i, j]
        assert s.contains(j, i), "closure must contain the transpose"
    assert not s.contains(0, 1) or (0, 1) in set(zip(s.rows.tolist(), s.cols.tolist()))


def test_pair_count_statistics():
    rng = np.random.default_rng(4)
    A = sym(rng, 30)
    m = 30 * 31 // 2
    p = 0.3
    counts = [bernoulli_sample(A, p, seed=s).n_pairs for s in range(200)]
    mean = np.mean(counts)
    sigma = math.sqrt(m * p * (1 - p) / 200)
    assert abs(mean - m * p) < 4 * sigma


def test_sample_determinism_and_validation():
    rng = np.random.default_rng(5)
    A = sym(rng, 12)
    s1 = bernoulli_sample(A, 0.5, seed=9)
    s2 = bernoulli_sample(A, 0.5, seed=9)
    assert np.array_equal(s1.pair_rows, s2.pair_rows)
    assert np.array_equal(s1.pair_vals, s2.pair_vals)
    for bad in (0.0, -0.1, 1.5, float("nan")):
        with pytest.raises(InvalidProbability):
            bernoulli_sample(A, bad, seed=0)
    with pytest.raises(ValueError):
        bernoulli_sample(np.arange(9.0).reshape(3, 3), 0.5, seed=0)
    with pytest.raises(ValueError):
        ObservedSample(4, 0.5, [1], [0], [2.0])  # i > j
    with pytest.raises(ValueError):
        ObservedSample(4, 0.5, [1, 1], [2, 2], [1.0, 1.0])  # duplicate


def test_p_omega_unbiased():
    rng = np.random.default_rng(6)
    A = sym(rng, 10)
    acc = np.zeros_like(A)
    reps = 400
    for s in range(reps):
        acc += p_omega(bernoulli_sample(A, 0.3, seed=s))
    est = acc / reps
    scale = math.sqrt((1 - 0.3) / (0.3 * reps))
    assert np.max(np.abs(est - A)) < 5 * scale * np.max(np.abs(A))


def test_row_projection():
    rng = np.random.default_rng(7)
    A = sym(rng, 9)
    s = bernoulli_sample(A, 0.6, seed=1)
    proj = row_projection(s, 4)
    cols, _ = s.row(4)
    assert proj.row == 4
    assert np.array_equal(proj.indices, cols)
    assert proj.scale == pytest.approx(1 / 0.6)
    with pytest.raises(ValueError):
        row_projection(s, 9)


def test_split_rate_formula():
    rng = np.random.default_rng(8)
    A = sym(rng, 15)
    s = bernoulli_sample(A, 0.7, seed=2)
    pieces = split(s, 3, seed=5)
    q = 1 - (1 - 0.7) ** (1 / 3)
    assert len(pieces) == 3
    for piece in pieces:
        assert piece.p == pytest.approx(q)
        assert piece.n == s.n


def test_split_union_and_membership():
    rng = np.random.default_rng(9)
    A = sym(rng, 18)
    s = bernoulli_sample(A, 0.5, seed=4)
    pieces, assigned = split(s, 4, seed=6, return_assignments=True)
    # every observed pair appears in at least one piece, never discarded
    assert np.all(assigned.sum(axis=1) >= 1)
    union = set()
    for piece in pieces:
        here = set(zip(piece.pair_rows.tolist(), piece.pair_cols.tolist()))
        union |= here
        # piece entries come from the input with identical values
        for i, j, v in zip(piece.pair_rows, piece.pair_cols, piece.pair_vals):
            assert v == A[i, j]
    whole = set(zip(s.pair_rows.tolist(), s.pair_cols.tolist()))
    assert union == whole


def test_split_degenerate_cases():
    rng = np.random.default_rng(10)
    A = sym(rng, 10)
    s = bernoulli_sample(A, 0.6, seed=3)
    only = split(s, 1, seed=7)
    assert len(only) == 1
    assert only[0].p == pytest.approx(0.6)
    assert np.array_equal(only[0].pair_rows, s.pair_rows)
    assert np.array_equal(only[0].pair_vals, s.pair_vals)

    full = bernoulli_sample(A, 1.0, seed=3)
    copies = split(full, 5, seed=8)
    for piece in copies:
        assert piece.p == 1.0
        assert piece.n_pairs == full.n_pairs

    with pytest.raises(InvalidSplit):
        split(s, 0, seed=0)
    with pytest.raises(InvalidSplit):
        split(s, 2.5, seed=0)


def test_split_marginals_and_independence():
    # fixed sample; over many split seeds each pair lands in piece j with
    # conditional rate q/p, and distinct pieces are uncorrelated
    rng = np.random.default_rng(11)
    A = sym(rng, 25)
    p, t = 0.5, 4
    s = bernoulli_sample(A, p, seed=12)
    q = 1 - (1 - p) ** (1 / t)
    reps = 300
    hits = np.zeros(t)
    joint01 = 0
    total = reps * s.n_pairs
    for seedval in range(reps):
        _, assigned = split(s, t, seed=seedval, return_assignments=True)
        hits += assigned.sum(axis=0)
        joint01 += int(np.sum(assigned[:, 0] & assigned[:, 1]))
    cond = q / p
    sigma = math.sqrt(cond * (1 - cond) / total)
    for j in range(t):
        assert abs(hits[j] / total - cond) < 4 * sigma, f"piece {j} marginal off"
    # unconditional pairwise product q^2 means conditional q^2/p
    joint_expect = q * q / p
    sigma_j = math.sqrt(joint_expect * (1 - joint_expect) / total)
    assert abs(joint01 / total - joint_expect) < 4 * sigma_j


def test_split_determinism():
    rng = np.random.default_rng(13)
    A = sym(rng, 12)
    s = bernoulli_sample(A, 0.8, seed=1)
    a = split(s, 3, seed=42)
    b = split(s, 3, seed=42)
    for x, y in zip(a, b):
        assert np.array_equal(x.pair_rows, y.pair_rows)
        assert np.array_equal(x.pair_cols, y.pair_cols)


def test_sample_file_round_trip(tmp_path):
    rng = np.random.default_rng(14)
    A = sym(rng, 11)
    s = bernoulli_sample(A, 0.45, seed=2)
    path = tmp_path / "sample.txt"
    write_sample(path, s)
    back = read_sample(path)
    assert back.n == s.n
    assert back.p == s.p
    assert np.array_equal(back.pair_rows, s.pair_rows)
    assert np.array_equal(back.pair_cols, s.pair_cols)
    assert np.array_equal(back.pair_vals, s.pair_vals)


def test_read_sample_normalizes_order(tmp_path):
    path = tmp_path / "sample.txt"
    path.write_text("3 0.5 2\n2 1 7.5\n0 0 -1\n")
    s = read_sample(path)
    assert s.n_pairs == 2
    assert s.contains(1, 2) and s.contains(2, 1) and s.contains(0, 0)
    path.write_text("3 0.5 2\n0 1 1.0\n")
    with pytest.raises(UsageError):
        read_sample(path)
    path.write_text("3 0.5\n")
    with pytest.raises(UsageError):
        read_sample(path)
