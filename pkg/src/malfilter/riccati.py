"""Generalized algebraic Riccati equations and the optimal performance level.

The two equations solved here carry the indefinite quadratic correction
-gamma^-2 * (disturbance term), so the usual LQR solvers do not apply
directly.  The stabilizing (minimal positive definite) solution is taken
from the stable invariant subspace of the associated Hamiltonian matrix and
polished with Newton-Kleinman iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import SystemMatrices, ValidationError, _sym

#: Relative Frobenius-residual tolerance for accepted GARE solutions.
RESIDUAL_TOL = 1e-8

#: Hamiltonian eigenvalues closer than this to the imaginary axis mark
#: the feasibility boundary.
AXIS_TOL = 1e-8

#: Upper cap on the gamma bracket search.
GAMMA_CAP = 1e6


class SolverFailure(RuntimeError):
    """Numerical failure distinct from problem infeasibility."""


class SynthesisInfeasible(RuntimeError):
    """No feasible performance level exists below the search cap."""


@dataclass(frozen=True)
class RiccatiSolution:
    """Both GARE solutions at a common performance level gamma."""

    Z: np.ndarray
    Sigma: np.ndarray
    gamma: float
    residual_Z: float
    residual_Sigma: float


def spectral_radius(M: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValidationError("spectral_radius requires finite entries")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _solve_care_stabilizing(A, S, Q, newton_iters: int = 25):
    """Stabilizing solution X of A'X + XA - X S X + Q = 0.

    S may be indefinite.  Returns (X, relative_residual) or None when no
    positive semidefinite stabilizing solution exists.  Raises SolverFailure
    when the Newton refinement stalls above the residual tolerance.
    """
    n = A.shape[0]
    Q = _sym(Q)
    S = _sym(S)
    denom = max(np.linalg.norm(Q, "fro"), 1.0)

    Ham = np.block([[A, -S], [-Q, -A.T]])
    eigs = np.linalg.eigvals(Ham)
    if np.min(np.abs(eigs.real)) < AXIS_TOL:
        return None  # eigenvalues on the imaginary axis: boundary of feasibility
    try:
        _, U, sdim = linalg.schur(Ham, output="real", sort="lhp")
    except linalg.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise SolverFailure(f"ordered Schur decomposition failed: {exc}") from exc
    if sdim != n:
        return None  # stable invariant subspace has the wrong dimension
    U1 = U[:n, :n]
    U2 = U[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        return None
    X = _sym(linalg.solve(U1.T, U2.T).T)

    residual = _care_residual(A, S, Q, X) / denom
    for _ in range(newton_iters):
        if residual <= RESIDUAL_TOL:
            break
        Acl = A - S @ X
        try:
            X_new = _sym(linalg.solve_continuous_lyapunov(Acl.T, -(Q + X @ S @ X)))
        except linalg.LinAlgError:
            break
        new_residual = _care_residual(A, S, Q, X_new) / denom
        if not np.isfinite(new_residual) or new_residual >= residual:
            break
        X, residual = X_new, new_residual
    if residual > RESIDUAL_TOL:
        raise SolverFailure(f"GARE residual {residual:.3e} above tolerance")

    if np.min(np.linalg.eigvalsh(X)) < -1e-8 * max(1.0, np.linalg.norm(X, 2)):
        return None  # stabilizing candidate is not positive (semi)definite
    return X, residual


def _care_residual(A, S, Q, X) -> float:
    return np.linalg.norm(A.T @ X + X @ A - X @ S @ X + Q, "fro")


def _controller_terms(sys: SystemMatrices, gamma: float):
    Ri = np.linalg.inv(sys.G.T @ sys.G)
    S = sys.B @ Ri @ sys.B.T - gamma**-2 * sys.D @ sys.D.T
    return S, sys.H.T @ sys.H


def _estimator_terms(sys: SystemMatrices, gamma: float):
    Ni = np.linalg.inv(sys.N)
    S = sys.C.T @ Ni @ sys.C - gamma**-2 * sys.H.T @ sys.H
    return S, sys.D @ sys.D.T


def solve_controller_gare(sys: SystemMatrices, gamma: float):
    """Minimal positive definite Z of the control-side GARE at level gamma.

    Solves A'Z + ZA - Z (B (G'G)^-1 B' - gamma^-2 D D') Z + H'H = 0 and
    returns (Z, relative_residual), or None when the equation is infeasible
    at this gamma.
    """
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    sys.validate()
    S, Q = _controller_terms(sys, gamma)
    return _solve_care_stabilizing(sys.A, S, Q)


def solve_estimator_gare(sys: SystemMatrices, gamma: float):
    """Minimal positive definite Sigma of the estimation-side GARE.

    Solves A Sigma + Sigma A' - Sigma (C'N^-1 C - gamma^-2 H'H) Sigma
    + D D' = 0; returns (Sigma, relative_residual) or None if infeasible.
    """
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    sys.validate()
    S, Q = _estimator_terms(sys, gamma)
    return _solve_care_stabilizing(sys.A.T, S, Q)


def solve_gares(sys: SystemMatrices, gamma: float) -> RiccatiSolution | None:
    """Solve both GAREs and check the spectral-radius coupling condition.

    Returns None when either equation is infeasible or when
    rho(Sigma Z) >= gamma^2.
    """
    rc = solve_controller_gare(sys, gamma)
    if rc is None:
        return None
    re = solve_estimator_gare(sys, gamma)
    if re is None:
        return None
    Z, res_z = rc
    Sigma, res_s = re
    if spectral_radius(Sigma @ Z) >= gamma**2:
        return None
    return RiccatiSolution(Z=Z, Sigma=Sigma, gamma=float(gamma),
                           residual_Z=res_z, residual_Sigma=res_s)


def _feasible(sys: SystemMatrices, gamma: float) -> bool:
    try:
        return solve_gares(sys, gamma) is not None
    except SolverFailure:
        return False


def find_gamma_star(sys: SystemMatrices, tol: float = 1e-4) -> float:
    """Smallest performance level with feasible GAREs and rho(Sigma Z) < gamma^2.

    Brackets by geometric expansion (factor 2) upward from gamma = 1 until a
    feasible level is found, then downward until an infeasible one is found,
    and bisects to relative tolerance `tol`.  Returns 0.0 when every probed
    level down to 1e-9 is feasible (no disturbance path or no cost).
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    sys.validate()

    hi = 1.0
    while not _feasible(sys, hi):
        hi *= 2.0
        if hi > GAMMA_CAP:
            raise SynthesisInfeasible(
                f"no feasible gamma found below cap {GAMMA_CAP:g}")
    lo = hi / 2.0
    while _feasible(sys, lo):
        hi = lo
        lo /= 2.0
        if lo < 1e-9:
            return 0.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _feasible(sys, mid):
            hi = mid
        else:
            lo = mid
    return hi
