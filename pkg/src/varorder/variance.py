"""Asymptotic variance of finite chains: closed forms, series oracle, estimators.

The closed forms cover homogeneous chains and chains alternating between two
kernels; the truncated-series routine is an independent oracle for the
alternating closed form, and the batch-means / autocovariance estimators work
on raw traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import FiniteKernel, FunctionVector, ProbVector, _require_same_space

INVARIANCE_TOL = 1e-12
EIGENVALUE_ONE_TOL = 1e-9
SPECTRAL_MARGIN = 1e-9

VALID_METHODS = ("closed_form", "truncated_series", "batch_means")


class ReducibleChainError(ValueError):
    """The centered operator has an eigenvalue at 1: stationary behavior not unique."""


class SummabilityError(ValueError):
    """The absolute-summability precondition fails (spectral radius too close to 1)."""

    def __init__(self, message: str, spectral_radius: float):
        super().__init__(message)
        self.spectral_radius = spectral_radius


@dataclass(frozen=True)
class VarianceReport:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in VALID_METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.value < -1e-10:
            raise ValueError(f"asymptotic variance {self.value!r} is negative")

    def to_document(self) -> dict:
        return {"value": self.value, "method": self.method,
                "diagnostics": dict(self.diagnostics)}


@dataclass(frozen=True)
class AlternatingModel:
    """A chain applying P at even steps and Q at odd steps, started from pi."""

    P: FiniteKernel
    Q: FiniteKernel
    pi: ProbVector
    f: FunctionVector

    def __post_init__(self):
        _require_same_space(self.P, self.Q)
        for name, K in (("P", self.P), ("Q", self.Q)):
            resid = np.max(np.abs(self.pi.weights @ K.matrix - self.pi.weights))
            if resid > INVARIANCE_TOL:
                raise ValueError(f"pi is not invariant for {name} (residual {resid:.3e})")


def _centered(f: FunctionVector, pi: ProbVector) -> np.ndarray:
    return f.values - float(np.sum(pi.weights * f.values))


def _deflate(M: np.ndarray, pi: ProbVector) -> np.ndarray:
    """Remove the constant direction: replaces the eigenvalue 1 of M by 0."""
    return M - np.outer(np.ones(M.shape[0]), pi.weights)


def centered_spectral_radius(M: np.ndarray, pi: ProbVector) -> float:
    """Spectral radius of a pi-stationary kernel matrix on the centered subspace."""
    return float(np.max(np.abs(np.linalg.eigvals(_deflate(M, pi)))))


def _geometric_tail_solve(M: np.ndarray, pi: ProbVector, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - M) g = rhs on the centered subspace (rhs assumed centered)."""
    n = M.shape[0]
    A = np.eye(n) - _deflate(M, pi)
    return np.linalg.solve(A, rhs)


def _inner(pi: ProbVector, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(pi.weights * a * b))


def asvar_homogeneous(P: FiniteKernel, pi: ProbVector, f: FunctionVector) -> VarianceReport:
    """Exact asymptotic variance of a homogeneous pi-stationary chain.

    Uses v = pi fbar^2 + 2 <fbar, g> with (I - P) g = P fbar solved on the
    centered subspace.
    """
    resid = np.max(np.abs(pi.weights @ P.matrix - pi.weights))
    if resid > INVARIANCE_TOL:
        raise ValueError(f"pi is not invariant for P (residual {resid:.3e})")
    eigs = np.linalg.eigvals(_deflate(P.matrix, pi))
    if np.any(np.abs(eigs - 1.0) < EIGENVALUE_ONE_TOL):
        raise ReducibleChainError("stationary behavior not unique")
    fbar = _centered(f, pi)
    g = _geometric_tail_solve(P.matrix, pi, P.matrix @ fbar)
    value = _inner(pi, fbar, fbar) + 2.0 * _inner(pi, fbar, g)
    return VarianceReport(value=max(value, 0.0), method="closed_form",
                          diagnostics={"variance_of_f": _inner(pi, fbar, fbar)})


def asvar_alternating(m: AlternatingModel) -> VarianceReport:
    """Exact asymptotic variance of the alternating P,Q,P,Q,... chain.

    The two covariance series (anchored at X_0 and at X_1) are split into
    even/odd lags and each geometric tail is resolved by one linear solve.
    """
    A = m.P.matrix @ m.Q.matrix
    B = m.Q.matrix @ m.P.matrix
    rho = max(centered_spectral_radius(A, m.pi), centered_spectral_radius(B, m.pi))
    if rho >= 1.0 - SPECTRAL_MARGIN:
        raise SummabilityError(
            f"absolute-summability condition fails: centered spectral radius {rho:.12f}",
            spectral_radius=rho)
    fbar = _centered(m.f, m.pi)
    # X_0 series: lags 2n -> <fbar, A^n fbar> (n>=1), 2n+1 -> <fbar, A^n P fbar> (n>=0)
    tail_even0 = _geometric_tail_solve(A, m.pi, _deflate(A, m.pi) @ fbar)
    tail_odd0 = _geometric_tail_solve(A, m.pi, _deflate(m.P.matrix, m.pi) @ fbar)
    # X_1 series: lags 2n -> <fbar, B^n fbar> (n>=1), 2n+1 -> <fbar, B^n Q fbar> (n>=0)
    tail_even1 = _geometric_tail_solve(B, m.pi, _deflate(B, m.pi) @ fbar)
    tail_odd1 = _geometric_tail_solve(B, m.pi, _deflate(m.Q.matrix, m.pi) @ fbar)
    value = (_inner(m.pi, fbar, fbar)
             + _inner(m.pi, fbar, tail_even0) + _inner(m.pi, fbar, tail_odd0)
             + _inner(m.pi, fbar, tail_even1) + _inner(m.pi, fbar, tail_odd1))
    return VarianceReport(value=max(value, 0.0), method="closed_form",
                          diagnostics={"spectral_radius": rho})


def truncated_autocov_series(m: AlternatingModel, K: int) -> VarianceReport:
    """Series oracle: both covariance series truncated at lag K.

    Independent of the linear-solve path in asvar_alternating; the reported
    remainder bound is the geometric tail 4 rho^K pi(fbar^2) / (1 - rho).
    """
    if K < 1:
        raise ValueError("truncation length must be >= 1")
    A = _deflate(m.P.matrix @ m.Q.matrix, m.pi)
    B = _deflate(m.Q.matrix @ m.P.matrix, m.pi)
    Pd = _deflate(m.P.matrix, m.pi)
    Qd = _deflate(m.Q.matrix, m.pi)
    fbar = _centered(m.f, m.pi)
    var_f = _inner(m.pi, fbar, fbar)
    total = var_f
    # running vectors A^n fbar, B^n fbar and A^n P fbar, B^n Q fbar
    va, vb = fbar.copy(), fbar.copy()
    vpa, vqb = Pd @ fbar, Qd @ fbar
    for lag in range(1, K + 1):
        if lag % 2 == 1:  # lag 2n+1 terms (PQ)^n P fbar and (QP)^n Q fbar
            total += _inner(m.pi, fbar, vpa) + _inner(m.pi, fbar, vqb)
        else:
            va, vb = A @ va, B @ vb
            vpa, vqb = A @ vpa, B @ vqb
            total += _inner(m.pi, fbar, va) + _inner(m.pi, fbar, vb)
    rho = max(float(np.max(np.abs(np.linalg.eigvals(A)))),
              float(np.max(np.abs(np.linalg.eigvals(B)))))
    if rho < 1.0:
        remainder = 4.0 * rho ** K * var_f / (1.0 - rho)
    else:
        remainder = float("inf")
    return VarianceReport(value=max(total, 0.0), method="truncated_series",
                          diagnostics={"truncation": K, "remainder_bound": remainder,
                                       "spectral_radius": rho})


def alternating_partial_sum_variance(m: AlternatingModel, n: int) -> float:
    """Exact Var(sum_{k<n} f(X_k)) for the alternating chain, by enumeration.

    Quadratic in n; intended for desk-scale counterexample checks (the flip
    kernel sits outside asvar_alternating's summability precondition).
    """
    fbar = _centered(m.f, m.pi)
    var_f = _inner(m.pi, fbar, fbar)
    total = n * var_f
    kernels = [m.P.matrix, m.Q.matrix]
    for i in range(n):
        w = m.pi.weights * fbar  # signed measure fbar dpi propagated forward
        for j in range(i + 1, n):
            w = w @ kernels[(j - 1) % 2]
            total += 2.0 * float(w @ fbar)
    return total


def batch_means_variance(trace: Sequence[float], batch_count: int = 100) -> VarianceReport:
    """Batch-means estimate of the asymptotic variance from a single trace."""
    x = np.asarray(trace, dtype=float)
    if batch_count < 1:
        raise ValueError("batch count must be positive")
    if x.size < 2 * batch_count:
        raise ValueError("trace too short for the requested batch count")
    blen = x.size // batch_count
    means = x[:blen * batch_count].reshape(batch_count, blen).mean(axis=1)
    sample_var = float(np.var(means))  # ddof 0; the prefactor restores ddof 1
    value = batch_count / (batch_count - 1) * blen * sample_var
    stderr = value * np.sqrt(2.0 / (batch_count - 1))
    return VarianceReport(value=value, method="batch_means",
                          diagnostics={"batch_count": batch_count,
                                       "batch_length": blen,
                                       "standard_error": stderr})


def empirical_autocov(trace: Sequence[float], lag: int) -> float:
    """Sample covariance between trace[:n-lag] and trace[lag:]."""
    x = np.asarray(trace, dtype=float)
    if lag < 0 or lag >= x.size:
        raise ValueError("lag out of range")
    a, b = x[:x.size - lag], x[lag:]
    return float(np.mean(a * b) - np.mean(a) * np.mean(b))
