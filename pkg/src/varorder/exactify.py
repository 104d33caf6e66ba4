"""Exact transition matrices for the augmented-target samplers on finite toys.

Given a finite model with enumerable proposal randomness, every sampler in
this package reduces to a dense transition matrix obtained by summing
acceptance-weighted proposal probabilities, with the rejection mass assigned
to the diagonal.  These matrices are the ground truth behind the package's
exact reversibility and variance-ordering checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import (ENTRY_TOL, FiniteKernel, ProbVector, StateSpace)

MAX_JOINT_STATES = 256

ALGORITHMS = ("freeze", "systematic", "random_refresh", "noisy", "marginal_mh")


class ReducibleKernelError(ValueError):
    """Eigenvalue 1 has multiplicity above one: no unique stationary law."""


@dataclass(frozen=True)
class FiniteAugmentedModel:
    """Finite augmented target: pi(y, u) = pi_star(y) r(y, u).

    The refresh kernel is given either directly (r) or in the pseudo-marginal
    factorized form (rcheck, w) with r = rcheck * w.  S maps (y, u) to a
    distribution over proposed y; T maps (y, u, yhat) to a distribution
    over proposed u.
    """

    Y: StateSpace
    U: StateSpace
    pi_star: np.ndarray
    S: np.ndarray                      # (ny, nu, ny)
    T: np.ndarray                      # (ny, nu, ny, nu)
    r: Optional[np.ndarray] = None     # (ny, nu)
    rcheck: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None

    def __post_init__(self):
        ny, nu = self.Y.size, self.U.size
        if ny * nu > MAX_JOINT_STATES:
            raise ValueError(f"joint space too large ({ny * nu} > {MAX_JOINT_STATES})")
        object.__setattr__(self, "pi_star", np.asarray(self.pi_star, dtype=float))
        object.__setattr__(self, "S", np.asarray(self.S, dtype=float))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float))
        if np.any(self.pi_star <= 0):
            raise ValueError("pi_star must be strictly positive")
        if abs(self.pi_star.sum() - 1.0) > ENTRY_TOL:
            raise ValueError("pi_star must be normalized")
        if self.r is None and self.rcheck is None:
            raise ValueError("either r or (rcheck, w) must be supplied")
        if self.rcheck is not None:
            if self.w is None:
                raise ValueError("rcheck requires the weight table w")
            object.__setattr__(self, "rcheck", np.asarray(self.rcheck, dtype=float))
            object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
            derived = self.rcheck * self.w
            if self.r is not None:
                if np.max(np.abs(np.asarray(self.r) - derived)) > 1e-10:
                    raise ValueError("r and rcheck * w disagree")
            object.__setattr__(self, "r", derived)
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        for name, mat in (("r", self.r),) + (
                (("rcheck", self.rcheck),) if self.rcheck is not None else ()):
            rowsum = mat.sum(axis=1)
            if np.max(np.abs(rowsum - 1.0)) > 1e-10:
                raise ValueError(f"{name} rows must sum to 1")
        if np.max(np.abs(self.S.sum(axis=2) - 1.0)) > 1e-10:
            raise ValueError("S slices must be distributions over proposed y")
        if np.max(np.abs(self.T.sum(axis=3) - 1.0)) > 1e-10:
            raise ValueError("T slices must be distributions over proposed u")

    @property
    def joint_space(self) -> StateSpace:
        return StateSpace([(y, u) for y in self.Y.labels for u in self.U.labels])

    @property
    def joint_pi(self) -> ProbVector:
        flat = (self.pi_star[:, None] * self.r).reshape(-1)
        return ProbVector(flat / flat.sum(), self.joint_space)

    @property
    def pi_star_vector(self) -> ProbVector:
        return ProbVector(self.pi_star, self.Y)


@dataclass(frozen=True)
class ExtractedKernel:
    kernel: FiniteKernel
    algorithm: str

    def to_document(self, pi: ProbVector) -> dict:
        from .kernels import kernel_to_document
        return kernel_to_document(self.kernel, pi, algorithm=self.algorithm)


def freeze_acceptance_table(m: FiniteAugmentedModel) -> np.ndarray:
    """alpha[y, u, yhat, uhat] for the freeze move, clamped at 1."""
    ny, nu = m.Y.size, m.U.size
    alpha = np.empty((ny, nu, ny, nu))
    for y in range(ny):
        for u in range(nu):
            denom_base = m.pi_star[y] * m.r[y, u]
            for yh in range(ny):
                for uh in range(nu):
                    num_ = (m.pi_star[yh] * m.r[yh, uh]
                            * m.S[yh, uh, y] * m.T[yh, uh, y, u])
                    den_ = denom_base * m.S[y, u, yh] * m.T[y, u, yh, uh]
                    alpha[y, u, yh, uh] = min(1.0, num_ / den_) if den_ > 0 else 1.0
    return alpha


def accept_kernel(m: FiniteAugmentedModel) -> FiniteKernel:
    """The freeze accept/reject kernel Q on the joint space."""
    ny, nu = m.Y.size, m.U.size
    alpha = freeze_acceptance_table(m)
    prop = m.S[:, :, :, None] * m.T  # proposal probability of (yhat, uhat) from (y, u)
    K = np.zeros((ny * nu, ny * nu))
    for y in range(ny):
        for u in range(nu):
            i = y * nu + u
            accepted = prop[y, u] * alpha[y, u]
            K[i] = accepted.reshape(-1)
            # rejection mass stays put; computed as a complement so rows are stochastic
            K[i, i] += 1.0 - accepted.sum()
    return FiniteKernel(K, m.joint_space)


def systematic_refresh_kernel(m: FiniteAugmentedModel) -> FiniteKernel:
    """P2: (y, u) -> (y, u') with u' ~ R(y, .); first coordinate held fixed."""
    ny, nu = m.Y.size, m.U.size
    K = np.zeros((ny * nu, ny * nu))
    for y in range(ny):
        for u in range(nu):
            K[y * nu + u, y * nu: (y + 1) * nu] = m.r[y]
    return FiniteKernel(K, m.joint_space)


def check_refresh_kernel(m: FiniteAugmentedModel) -> FiniteKernel:
    """Unconditional refresh through rcheck (the noisy algorithm's step (i))."""
    if m.rcheck is None:
        raise ValueError("model has no rcheck refresh")
    ny, nu = m.Y.size, m.U.size
    K = np.zeros((ny * nu, ny * nu))
    for y in range(ny):
        for u in range(nu):
            K[y * nu + u, y * nu: (y + 1) * nu] = m.rcheck[y]
    return FiniteKernel(K, m.joint_space)


def random_refresh_kernel(m: FiniteAugmentedModel) -> FiniteKernel:
    """P3: propose u' ~ rcheck(y, .), accept with 1 ^ w[y,u']/w[y,u]."""
    if m.rcheck is None:
        raise ValueError("model has no (rcheck, w) refresh")
    ny, nu = m.Y.size, m.U.size
    K = np.zeros((ny * nu, ny * nu))
    for y in range(ny):
        for u in range(nu):
            i = y * nu + u
            acc = m.rcheck[y] * np.minimum(1.0, m.w[y] / m.w[y, u])
            K[i, y * nu: (y + 1) * nu] = acc
            K[i, i] += 1.0 - acc.sum()
    return FiniteKernel(K, m.joint_space)


def marginal_mh_proposal(m: FiniteAugmentedModel) -> np.ndarray:
    """k(y, yhat) = sum_u r(y, u) S[y, u, yhat] (the marginalized proposal)."""
    return np.einsum("yu,yuz->yz", m.r, m.S)


def marginal_mh_exact_kernel(m: FiniteAugmentedModel) -> FiniteKernel:
    """Classical MH kernel on Y with the marginalized proposal k."""
    k = marginal_mh_proposal(m)
    ny = m.Y.size
    K = np.zeros((ny, ny))
    for y in range(ny):
        for yh in range(ny):
            ratio = m.pi_star[yh] * k[yh, y] / (m.pi_star[y] * k[y, yh])
            K[y, yh] = k[y, yh] * min(1.0, ratio)
        K[y, y] += 1.0 - K[y].sum()
    return FiniteKernel(K, m.Y)


def extract_kernel(algorithm: str, m: FiniteAugmentedModel) -> ExtractedKernel:
    """Exact transition matrix of the named sampler on the finite model.

    freeze / systematic / random_refresh / noisy are returned on the joint
    space (the product-kernel embeddings P_i Q); marginal_mh lives on Y.
    """
    if algorithm == "freeze":
        K = accept_kernel(m)
    elif algorithm == "systematic":
        K = FiniteKernel(systematic_refresh_kernel(m).matrix @ accept_kernel(m).matrix,
                         m.joint_space)
    elif algorithm == "random_refresh":
        K = FiniteKernel(random_refresh_kernel(m).matrix @ accept_kernel(m).matrix,
                         m.joint_space)
    elif algorithm == "noisy":
        K = FiniteKernel(check_refresh_kernel(m).matrix @ accept_kernel(m).matrix,
                         m.joint_space)
    elif algorithm == "marginal_mh":
        K = marginal_mh_exact_kernel(m)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    return ExtractedKernel(kernel=K, algorithm=algorithm)


def marginal_kernel(K: ExtractedKernel, m: FiniteAugmentedModel,
                    refresh: str = "r") -> FiniteKernel:
    """Y-marginal kernel K_Y(y, yhat) = sum_u p(u|y) sum_uhat K(y,u; yhat,uhat).

    Valid only when the algorithm's y-process is Markov (systematic
    refreshment, noisy, marginal MH); this is a caller-asserted precondition
    that cannot be detected here.
    """
    if K.kernel.space.size == m.Y.size:
        return K.kernel  # already marginal
    probs = m.r if refresh == "r" else m.rcheck
    if probs is None:
        raise ValueError(f"model has no {refresh!r} refresh table")
    ny, nu = m.Y.size, m.U.size
    J = K.kernel.matrix.reshape(ny, nu, ny, nu)
    KY = np.einsum("yu,yuzv->yz", probs, J)
    return FiniteKernel(KY / KY.sum(axis=1, keepdims=True), m.Y)


def stationary_distribution(K: FiniteKernel) -> ProbVector:
    """Unique pi with pi K = pi, via a deflated linear solve.

    Raises ReducibleKernelError when the eigenvalue 1 is not simple.
    """
    n = K.size
    eigs = np.linalg.eigvals(K.matrix)
    if int(np.sum(np.abs(eigs - 1.0) < 1e-9)) != 1:
        raise ReducibleKernelError("reducible kernel")
    A = np.vstack([K.matrix.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.maximum(pi, 0.0)
    pi = pi / pi.sum()
    resid = np.max(np.abs(pi @ K.matrix - pi))
    if resid > 1e-12:
        raise ReducibleKernelError(f"stationary solve residual {resid:.3e} too large")
    return ProbVector(pi, K.space)


def total_variation(p: ProbVector, q: ProbVector) -> float:
    return 0.5 * float(np.sum(np.abs(p.weights - q.weights)))


def y_marginal_of(pi: ProbVector, m: FiniteAugmentedModel) -> ProbVector:
    """Project a joint-space distribution onto Y."""
    flat = pi.weights.reshape(m.Y.size, m.U.size).sum(axis=1)
    return ProbVector(flat / flat.sum(), m.Y)


def empirical_one_step_frequencies(states: list, sp: StateSpace) -> np.ndarray:
    """Row-normalized transition counts of a trace over labeled states."""
    n = sp.size
    idx = {label: i for i, label in enumerate(sp.labels)}
    counts = np.zeros((n, n))
    for a, b in itertools.pairwise(states):
        counts[idx[a], idx[b]] += 1.0
    rows = counts.sum(axis=1, keepdims=True)
    rows[rows == 0] = 1.0
    return counts / rows
