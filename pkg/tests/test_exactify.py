"""Exact transition matrices of the augmented-target samplers on finite toys."""

import numpy as np
import pytest

from varorder import exactify, toys
from varorder.exactify import (FiniteAugmentedModel, ReducibleKernelError,
                               accept_kernel, check_refresh_kernel,
                               extract_kernel, marginal_kernel,
                               marginal_mh_proposal, random_refresh_kernel,
                               stationary_distribution, systematic_refresh_kernel,
                               total_variation, y_marginal_of)
from varorder.kernels import FiniteKernel, detailed_balance_check


@pytest.fixture
def model():
    return toys.registry_toy()


# ---- model validation ----

def test_r_rows_must_sum_to_one(model):
    bad = model.r.copy()
    bad[0, 0] += 0.1
    with pytest.raises(ValueError):
        FiniteAugmentedModel(Y=model.Y, U=model.U, pi_star=model.pi_star,
                             S=model.S, T=model.T, r=bad)


def test_rcheck_needs_weights(model):
    with pytest.raises(ValueError):
        FiniteAugmentedModel(Y=model.Y, U=model.U, pi_star=model.pi_star,
                             S=model.S, T=model.T, rcheck=model.rcheck)


def test_inconsistent_factorization_rejected(model):
    with pytest.raises(ValueError):
        FiniteAugmentedModel(Y=model.Y, U=model.U, pi_star=model.pi_star,
                             S=model.S, T=model.T, r=model.rcheck,
                             rcheck=model.rcheck, w=model.w)


def test_joint_pi_marginalizes_to_pi_star(model):
    ym = y_marginal_of(model.joint_pi, model)
    assert np.allclose(ym.weights, model.pi_star, atol=1e-14)


def test_joint_space_size_cap():
    with pytest.raises(ValueError):
        FiniteAugmentedModel(Y=toys.StateSpace(range(20)),
                             U=toys.StateSpace(range(20)),
                             pi_star=np.full(20, 0.05),
                             S=np.zeros((20, 20, 20)),
                             T=np.zeros((20, 20, 20, 20)),
                             r=np.full((20, 20), 0.05))


# ---- component kernels ----

def test_accept_kernel_is_pi_reversible(model):
    assert detailed_balance_check(accept_kernel(model), model.joint_pi).holds


def test_refresh_kernels_hold_y_fixed(model):
    ny, nu = model.Y.size, model.U.size
    for K in (systematic_refresh_kernel(model), check_refresh_kernel(model),
              random_refresh_kernel(model)):
        M = K.matrix.reshape(ny, nu, ny, nu)
        off = M.sum(axis=3) - np.eye(ny)[:, None, :] * M.sum(axis=3)
        assert np.max(np.abs(off)) < 1e-14


def test_systematic_refresh_rows_are_r(model):
    M = systematic_refresh_kernel(model).matrix.reshape(
        model.Y.size, model.U.size, model.Y.size, model.U.size)
    for y in range(model.Y.size):
        for u in range(model.U.size):
            assert np.allclose(M[y, u, y], model.r[y], atol=0)


def test_random_refresh_kernel_is_pi_reversible(model):
    assert detailed_balance_check(random_refresh_kernel(model),
                                  model.joint_pi).holds


def test_random_refresh_reduces_to_systematic_when_weights_constant():
    m = toys.registry_toy()
    flat = FiniteAugmentedModel(Y=m.Y, U=m.U, pi_star=m.pi_star, S=m.S, T=m.T,
                                rcheck=m.rcheck,
                                w=np.ones_like(m.rcheck))
    assert np.allclose(random_refresh_kernel(flat).matrix,
                       check_refresh_kernel(flat).matrix, atol=1e-14)


# ---- full algorithm kernels ----

def test_all_extracted_kernels_leave_pi_invariant_except_noisy(model):
    pi = model.joint_pi.weights
    for alg in ("freeze", "systematic", "random_refresh"):
        K = extract_kernel(alg, model).kernel
        assert np.max(np.abs(pi @ K.matrix - pi)) < 1e-13, alg
    noisy = extract_kernel("noisy", model).kernel
    assert np.max(np.abs(pi @ noisy.matrix - pi)) > 1e-4


def test_extracted_kernel_matches_simulation(model):
    """Stochastic oracle: one-step frequencies of the simulated freeze chain
    agree with the exact matrix."""
    from varorder.samplers import ChainState, RngStream, freeze_step, run_chain
    from varorder.pseudo_marginal import ImportanceModel  # noqa: F401  (env check)
    exact = extract_kernel("freeze", model).kernel

    import math
    from varorder.samplers import (AugmentedTargetModel, ProposalS, ProposalT,
                                   Refresh)
    Y, U = model.Y.labels, model.U.labels
    yi = {y: i for i, y in enumerate(Y)}
    ui = {u: i for i, u in enumerate(U)}
    m = AugmentedTargetModel(
        log_pi_star=lambda y: math.log(model.pi_star[yi[y]]),
        refresh=Refresh(
            sample=lambda gen, y: U[gen.choice(len(U), p=model.r[yi[y]])],
            log_density=lambda y, u: math.log(model.r[yi[y], ui[u]])),
        S=ProposalS(
            sample=lambda gen, y, u: Y[gen.choice(len(Y), p=model.S[yi[y], ui[u]])],
            log_density=lambda y, u, yh: math.log(model.S[yi[y], ui[u], yi[yh]])),
        T=ProposalT(
            sample=lambda gen, y, u, yh: U[gen.choice(
                len(U), p=model.T[yi[y], ui[u], yi[yh]])],
            log_density=lambda y, u, yh, uh: math.log(
                model.T[yi[y], ui[u], yi[yh], ui[uh]])))
    rng = RngStream("freeze", seed=42)
    trace = run_chain(freeze_step, m, ChainState(y=Y[0], u=U[0]), 40_000, rng)
    states = [(s.y, s.u) for s in trace.states]
    freq = exactify.empirical_one_step_frequencies(states, model.joint_space)
    visited = freq.sum(axis=1) > 0
    assert np.max(np.abs(freq[visited] - exact.matrix[visited])) < 0.03


def test_marginal_mh_proposal_rows_sum_to_one(model):
    k = marginal_mh_proposal(model)
    assert np.allclose(k.sum(axis=1), 1.0, atol=1e-12)


def test_marginal_mh_kernel_reversible_for_pi_star(model):
    K = extract_kernel("marginal_mh", model).kernel
    assert detailed_balance_check(K, model.pi_star_vector).holds


def test_unknown_algorithm_is_rejected(model):
    with pytest.raises(ValueError):
        extract_kernel("metropolis-lite", model)


# ---- stationary analysis ----

def test_stationary_distribution_on_known_chain():
    K = FiniteKernel([[0.9, 0.1], [0.2, 0.8]])
    pi = stationary_distribution(K)
    assert np.allclose(pi.weights, [2 / 3, 1 / 3], atol=1e-12)


def test_stationary_distribution_rejects_reducible():
    K = FiniteKernel(np.eye(3))
    with pytest.raises(ReducibleKernelError):
        stationary_distribution(K)


def test_marginal_kernel_of_systematic_is_pi_star_reversible(model):
    KY = marginal_kernel(extract_kernel("systematic", model), model)
    assert detailed_balance_check(KY, model.pi_star_vector).holds


def test_total_variation_bounds():
    p = stationary_distribution(FiniteKernel([[0.9, 0.1], [0.2, 0.8]]))
    assert total_variation(p, p) == 0.0
