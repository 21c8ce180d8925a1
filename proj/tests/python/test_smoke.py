import math

import numpy as np
import pytest

import markov_approx as ma


def test_constants():
    p = ma.stable_constants(1.5, 1)
    assert p.levy_density == pytest.approx(math.gamma(2.5) * math.sin(0.75 * math.pi) / math.pi, rel=1e-12)
    assert ma.sphere_area(3) == pytest.approx(4 * math.pi)
    with pytest.raises(ValueError):
        ma.stable_constants(2.5, 1)


def test_stable_samples_cf():
    z = ma.stable_samples(1.5, 2, 200000, seed=3)
    assert z.shape == (200000, 2)
    cf = np.cos(z[:, 0]).mean()
    assert abs(cf - math.exp(-1.0)) < 3 / math.sqrt(200000)
    r = np.linalg.norm(ma.pareto_samples(1.5, 2, 1000, seed=4), axis=1)
    assert (r > 1).all()


def test_w1():
    assert ma.w1(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 3.0]))[0] == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
    v, _ = ma.w1(a, b, method="assignment")
    perm = ma.solve_assignment(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2))
    assert v == pytest.approx(np.linalg.norm(a - b[perm], axis=1).mean())
    with pytest.raises(ValueError):
        ma.w1(a, b, method="bogus")


def test_chain_identity():
    p1 = np.array([[0.9, 0.1], [0.2, 0.8]])
    q1 = np.array([[0.7, 0.3], [0.4, 0.6]])
    lhs, rhs = ma.chain_identity(p1, q1, 5, np.array([1.0, -1.0]), 0)
    assert lhs == pytest.approx(rhs, abs=1e-14)
    assert ma.verify_identity(50, 5, 6, seed=1) < 1e-10


def test_pairs_and_clt():
    sgd, sde = ma.sgd_pair(np.array([1.0, 2.0]), 0.1, 20, np.array([1.0, 1.0]), 5000, seed=2)
    assert sgd.shape == sde.shape == (5000, 2)
    exact, em = ma.stable_ou_pair(1.5, 0.25, 8, np.array([0.0]), 5000, seed=2)
    assert exact.shape == em.shape == (5000, 1)
    s = ma.clt_partial_sums(1, "rademacher", 4, 1000, seed=5)
    assert set(np.unique(s)) <= {-2.0, -1.0, 0.0, 1.0, 2.0}
    assert ma.theorem_bound(1, 1, ma.expected_gaussian_norm(1), 1.0, 1.0) == pytest.approx(
        5 / 3 * math.sqrt(2 / math.pi) + 4 / 3
    )


def test_sweep():
    out = ma.run_sweep("clt", [4, 16, 64, 256], {"d": "1", "innovation": "rademacher"}, n_paths=20000, seed=9)
    assert len(out["rows"]) == 4
    assert out["expected_exponent"] == -0.5
    assert all(r["w1"] <= r["bound"] for r in out["rows"])
    with pytest.raises(ValueError):
        ma.run_sweep("clt", [4, 16], n_paths=10)
