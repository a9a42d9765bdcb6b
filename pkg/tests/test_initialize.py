import math

import numpy as np
import pytest

from saltls.generators import InstanceSpec, generate_instance
from saltls.initialize import (
    clip_entries,
    initialize,
    power_method_topk,
    random_orthonormal,
)
from saltls.linalg import principal_angle
from saltls.sampling import bernoulli_sample
from saltls.truth import spectral_split


def planted(n, k, seed, mu_target=8.0):
    spec = InstanceSpec(n=n, k=k, mu_target=mu_target, seed=seed, condition_number=2.0)
    return generate_instance(spec)


def test_power_method_matches_eigensolver():
    rng = np.random.default_rng(0)
    for trial in range(10):
        n, k = 40, 3
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = np.concatenate([[8.0, 6.0, 4.0], rng.uniform(0.0, 1.0, n - 3)])
        B = (Q * lam) @ Q.T
        X = power_method_topk(B, k, iters=80, seed=trial)
        U, _, _ = spectral_split(B, k)
        ang = principal_angle(U, X)
        assert ang.sine < 1e-10, f"trial {trial}: sine {ang.sine:.3e}"


def test_power_method_validation():
    with pytest.raises(ValueError):
        power_method_topk(np.zeros((3, 4)), 1, 5, seed=0)
    with pytest.raises(ValueError):
        power_method_topk(np.eye(3), 4, 5, seed=0)
    with pytest.raises(ValueError):
        power_method_topk(np.eye(3), 1, -1, seed=0)


def test_random_orthonormal():
    O1 = random_orthonormal(4, seed=5)
    O2 = random_orthonormal(4, seed=5)
    O3 = random_orthonormal(4, seed=6)
    assert np.allclose(O1.data.T @ O1.data, np.eye(4), atol=1e-12)
    assert np.array_equal(O1.data, O2.data)
    assert not np.array_equal(O1.data, O3.data)


def test_clip_entries():
    W = np.array([[0.5, -2.0], [3.0, 0.1]])
    out = clip_entries(W, 1.0)
    assert np.array_equal(out, [[0.5, -1.0], [1.0, 0.1]])
    with pytest.raises(ValueError):
        clip_entries(W, 0.0)


def test_initialize_full_observation_recovers_subspace():
    truth = planted(100, 3, seed=1)
    sample = bernoulli_sample(truth.matrix, 1.0, seed=0)
    report = initialize(sample, 3, truth.mu_u, seed=2, truth=truth)
    # full observation, generous clip level: exactly the top subspace
    assert report.sin_theta < 1e-8
    assert report.sin_theta_fro < 1e-7
    assert report.clip_level == pytest.approx(
        math.sqrt(8 * truth.mu_u * math.log(100) / 100)
    )


def test_initialize_partial_observation_quality():
    # moderate scale version of the start guarantee: small angle and
    # controlled coherence at a comfortable sampling rate
    hits = 0
    for seed in range(10):
        truth = planted(150, 2, seed=100 + seed, mu_target=6.0)
        sample = bernoulli_sample(truth.matrix, 0.6, seed=seed)
        report = initialize(sample, 2, truth.mu_u, seed=seed, truth=truth)
        if report.sin_theta_fro <= 0.25 and report.coherence <= 32 * truth.mu_u * math.log(150):
            hits += 1
    assert hits >= 9


def test_initialize_determinism():
    truth = planted(60, 2, seed=3)
    sample = bernoulli_sample(truth.matrix, 0.7, seed=4)
    a = initialize(sample, 2, 5.0, seed=5)
    b = initialize(sample, 2, 5.0, seed=5)
    assert np.array_equal(a.x0.data, b.x0.data)


def test_initialize_validation():
    truth = planted(20, 2, seed=6)
    sample = bernoulli_sample(truth.matrix, 0.9, seed=7)
    with pytest.raises(ValueError):
        initialize(sample, 2, 0.0, seed=0)
