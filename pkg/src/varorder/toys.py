"""Shared finite toy models: the two-state counterexample kernels, the
registry augmented model, and the finite GIMH/MCWM toy."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .exactify import FiniteAugmentedModel
from .kernels import FiniteKernel, FunctionVector, ProbVector, StateSpace


def two_state_space() -> StateSpace:
    return StateSpace([-1, 1])


def uniform_two_state() -> ProbVector:
    return ProbVector([0.5, 0.5], two_state_space())


def q0_kernel(eps: float) -> FiniteKernel:
    """Q0(eps) = eps * Pi + (1 - eps) * flip on {-1, 1}."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    stay = eps / 2.0
    return FiniteKernel([[stay, 1.0 - stay], [1.0 - stay, stay]], two_state_space())


def flip_kernel() -> FiniteKernel:
    """Deterministic sign flip x -> -x (periodic; spectral radius 1)."""
    return FiniteKernel([[0.0, 1.0], [1.0, 0.0]], two_state_space())


def identity_function() -> FunctionVector:
    return FunctionVector([-1.0, 1.0], two_state_space())


def simulate_q0_trace(eps: float, n: int, rng: np.random.Generator,
                      x0: int = 1) -> np.ndarray:
    """Vectorized length-(n+1) trace of the Q0(eps) chain on {-1, 1}.

    Each step flips with probability 1 - eps/2, so the path is x0 times a
    cumulative product of signs.
    """
    flips = rng.random(n) < (1.0 - eps / 2.0)
    signs = np.where(flips, -1.0, 1.0)
    return np.concatenate([[float(x0)], float(x0) * np.cumprod(signs)])


def registry_toy() -> FiniteAugmentedModel:
    """The standard finite augmented model: |Y| = 3, |U| = 2, non-constant
    weights, S depending on (y, u) and T on (y, u, yhat).

    All densities are strictly positive so every sampler in the package is
    well defined on it.
    """
    Y = StateSpace(["a", "b", "c"])
    U = StateSpace([0, 1])
    pi_star = np.array([0.5, 0.3, 0.2])
    rcheck = np.array([[0.6, 0.4],
                       [0.3, 0.7],
                       [0.5, 0.5]])
    raw_w = np.array([[1.0, 2.0],
                      [0.5, 1.5],
                      [2.0, 1.0]])
    w = raw_w / (rcheck * raw_w).sum(axis=1, keepdims=True)
    S = np.zeros((3, 2, 3))
    base = np.array([[0.5, 0.3, 0.2],
                     [0.2, 0.5, 0.3],
                     [0.3, 0.2, 0.5]])
    tilt = np.array([[0.4, 0.4, 0.2],
                     [0.3, 0.3, 0.4],
                     [0.2, 0.5, 0.3]])
    S[:, 0, :] = base
    S[:, 1, :] = tilt
    T = np.zeros((3, 2, 3, 2))
    for y in range(3):
        for u in range(2):
            for yh in range(3):
                p = 0.3 + 0.4 * ((y + u + yh) % 2)  # in (0, 1), varies with all args
                T[y, u, yh] = [p, 1.0 - p]
    return FiniteAugmentedModel(Y=Y, U=U, pi_star=pi_star, S=S, T=T,
                                rcheck=rcheck, w=w)


def conjugate_toy() -> FiniteAugmentedModel:
    """Variant of the registry toy in the refresh-conjugate subclass: S
    ignores u and T redraws the auxiliary from R at the proposed point.

    On this subclass the refresh and accept kernels commute, so the
    random-refreshment joint kernel satisfies detailed balance exactly (not
    only in its y-flow).  Weights stay non-constant.
    """
    g = registry_toy()
    base = np.array([[0.5, 0.3, 0.2],
                     [0.2, 0.5, 0.3],
                     [0.3, 0.2, 0.5]])
    S = np.zeros_like(g.S)
    S[:, 0, :] = base
    S[:, 1, :] = base
    T = np.zeros_like(g.T)
    for y in range(3):
        for u in range(2):
            T[y, u, :, :] = g.r
    return FiniteAugmentedModel(Y=g.Y, U=g.U, pi_star=g.pi_star, S=S, T=T,
                                rcheck=g.rcheck, w=g.w)


def finite_gimh_toy(N: int = 2) -> tuple[FiniteAugmentedModel, dict]:
    """Finite GIMH model: |Y| = 2, |V| = 2, U = V^N.

    Returns the augmented model (with both the exact r and the (rcheck, w)
    factorization, so the same toy drives GIMH and MCWM analyses) plus a
    dict of the underlying tables.
    """
    Y = StateSpace(["y0", "y1"])
    V = ["v0", "v1"]
    # unnormalized joint pi_bar(y, v) and proposal q_y(v)
    pi_bar = np.array([[0.30, 0.10],
                       [0.15, 0.45]])
    q = np.array([[0.6, 0.4],
                  [0.5, 0.5]])
    pi_star = pi_bar.sum(axis=1)
    s_prop = np.array([[0.4, 0.6],
                       [0.7, 0.3]])  # proposal on Y, independent of u
    u_labels = list(itertools.product(range(len(V)), repeat=N))
    U = StateSpace(u_labels)
    ny, nu = 2, len(u_labels)

    def estimate(y, u):
        return sum(pi_bar[y, v] / q[y, v] for v in u) / N

    rcheck = np.zeros((ny, nu))
    w = np.zeros((ny, nu))
    for ui, u in enumerate(u_labels):
        for y in range(ny):
            rcheck[y, ui] = math.prod(q[y, v] for v in u)
            w[y, ui] = estimate(y, u) / pi_star[y]
    S = np.zeros((ny, nu, ny))
    T = np.zeros((ny, nu, ny, nu))
    for ui in range(nu):
        S[:, ui, :] = s_prop
        for y in range(ny):
            for yh in range(ny):
                T[y, ui, yh, :] = rcheck[yh, :]
    model = FiniteAugmentedModel(Y=Y, U=U, pi_star=pi_star / pi_star.sum(),
                                 S=S, T=T, rcheck=rcheck, w=w)
    tables = {"pi_bar": pi_bar, "q": q, "pi_star": pi_star, "s_prop": s_prop,
              "V": V, "N": N, "u_labels": u_labels}
    return model, tables


def random_lazy_quadruple(rng: np.random.Generator, n: int):
    """Random covariance-ordered quadruple (P0, P1, Q0, Q1) plus (pi, f), built
    from two random reversible kernels via lazy mixing."""
    from .kernels import lazy_pair, random_reversible_kernel
    P1, pi = random_reversible_kernel(rng, n)
    Q1, _ = random_reversible_kernel(rng, n, pi=pi)
    a = rng.uniform(0.1, 0.9)
    b = rng.uniform(0.1, 0.9)
    P0, _ = lazy_pair(P1, a)
    Q0, _ = lazy_pair(Q1, b)
    f = FunctionVector(rng.normal(size=n), pi.space)
    return P0, P1, Q0, Q1, pi, f
