"""Shared toy constructions."""

import numpy as np
import pytest

from varorder import toys
from varorder.exactify import stationary_distribution


def test_q0_kernel_mixture_structure():
    Q = toys.q0_kernel(0.4)
    # eps * uniform + (1 - eps) * flip
    assert Q.matrix[0, 0] == pytest.approx(0.2)
    assert Q.matrix[0, 1] == pytest.approx(0.8)
    with pytest.raises(ValueError):
        toys.q0_kernel(0.0)


def test_simulated_trace_matches_kernel_statistics():
    eps = 0.3
    rng = np.random.default_rng(9)
    trace = toys.simulate_q0_trace(eps, 200_000, rng)
    assert trace[0] == 1.0
    assert set(np.unique(trace)) == {-1.0, 1.0}
    stay = np.mean(trace[1:] == trace[:-1])
    assert stay == pytest.approx(eps / 2.0, abs=0.01)


def test_registry_toy_weights_are_consistent_and_nonconstant():
    m = toys.registry_toy()
    assert np.allclose((m.rcheck * m.w).sum(axis=1), 1.0, atol=1e-12)
    assert np.ptp(m.w) > 0.1


def test_conjugate_toy_structure():
    c = toys.conjugate_toy()
    # S ignores u; T redraws from R at the proposed point
    assert np.allclose(c.S[:, 0, :], c.S[:, 1, :], atol=0)
    for u in range(c.U.size):
        assert np.allclose(c.T[:, u, :, :], c.r[None, :, :], atol=1e-15)


def test_gimh_toy_weights_average_to_one():
    """sum_u rcheck(y, u) w(y, u) = 1: the estimator is unbiased in u."""
    g, tab = toys.finite_gimh_toy()
    assert np.allclose((g.rcheck * g.w).sum(axis=1), 1.0, atol=1e-12)
    assert g.U.size == len(tab["V"]) ** tab["N"]
