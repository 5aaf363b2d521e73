"""Linear network model: plant, measurement, and cost matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when model matrices violate the assumptions of the synthesis."""


@dataclass(frozen=True)
class SystemMatrices:
    """The plant defining dynamics, measurement, and cost.

    A : n x n  per-unit-time decay of in-flight malware (Hurwitz in practice)
    B : n x n  filtering effectiveness, -b on the diagonal
    C : n x n  measurement scaling
    D : n x n  malware routing/propagation
    N : n x n  measurement-noise shaping, N = E E^T
    H : n x n  state cost weight
    G : n x n  control cost weight

    The controlled output is the stacked pair (H x, G u), so the state and
    control cost channels are orthogonal and the quadratic cost is
    x' H'H x + u' G'G u.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    N: np.ndarray
    H: np.ndarray
    G: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "N", "H", "G"):
            M = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, M)
            if M.shape != (self.A.shape[0], self.A.shape[0]):
                raise ValidationError(f"{name} must be square n x n, got {M.shape}")
            if not np.all(np.isfinite(M)):
                raise ValidationError(f"{name} contains non-finite entries")

    def validate(self):
        """Check the structural assumptions required by the synthesis.

        Raises ValidationError naming the violated assumption.
        """
        if np.min(np.linalg.eigvalsh(_sym(self.G.T @ self.G))) <= 0:
            raise ValidationError("G'G must be positive definite")
        if np.min(np.linalg.eigvalsh(_sym(self.N))) <= 0:
            raise ValidationError("N must be positive definite")
        _check_pbh(self.A, self.B, "stabilizable (A, B)")
        _check_pbh(self.A, self.D, "stabilizable (A, D)")
        _check_pbh(self.A.T, self.H.T, "detectable (A, H)")
        _check_pbh(self.A.T, self.C.T, "detectable (A, C)")
        return self


def _sym(M):
    return (M + M.T) / 2


def _check_pbh(A, B, what):
    """PBH rank test over closed right-half-plane eigenvalues of A."""
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real < -1e-10:
            continue
        M = np.hstack([lam * np.eye(n) - A, B.astype(complex)])
        if np.linalg.matrix_rank(M, tol=1e-10) < n:
            raise ValidationError(f"system is not {what}: PBH test fails at {lam}")


def propagation_matrix(n: int, group_size: int = 3, within_bias: float = 4.0) -> np.ndarray:
    """Group-biased malware routing matrix.

    Zero diagonal, columns summing to 1; entries within a node's group of
    `group_size` carry `within_bias` times the weight of cross-group entries.
    """
    if n < 2:
        return np.ones((n, n)) - np.eye(n)  # n=1 gives the zero matrix
    D = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            D[i, j] = within_bias if i // group_size == j // group_size else 1.0
        D[:, j] /= D[:, j].sum()
    return D


def control_cost_weight(f_l: float, f_a: float, b: float) -> float:
    """Scalar control weight g = f_l (1 - b) + f_a.

    f_l is the cost of filtering a legitimate packet, f_a the cost of the
    filtering action itself, b the proportion of filtered packets that are
    actually malware.
    """
    if not 0 < b <= 1:
        raise ValidationError("b must lie in (0, 1]")
    if f_l < 0 or f_a < 0:
        raise ValidationError("f_l and f_a must be nonnegative")
    return f_l * (1 - b) + f_a


def network_system(
    n: int = 9,
    a: float = -1.0,
    b: float = 0.5,
    c: float = 2.0,
    cost_ratio: float = 100.0,
    g: float = 1.0,
    group_size: int = 3,
    within_bias: float = 4.0,
    h_boost: dict[int, float] | None = None,
) -> SystemMatrices:
    """Build the n-sub-network filtering plant.

    cost_ratio is the ratio of the quadratic cost on in-flight malware to the
    quadratic cost on filtering (e.g. 100 for 100:1), so the state weight is
    h = sqrt(cost_ratio) * g.  h_boost maps node index -> multiplicative
    factor on that node's state weight (a more valuable sub-network).
    """
    if b <= 0 or b > 1:
        raise ValidationError("b must lie in (0, 1]")
    if cost_ratio <= 0:
        raise ValidationError("cost_ratio must be positive")
    h = np.sqrt(cost_ratio) * g
    Hdiag = np.full(n, h)
    if h_boost:
        for idx, factor in h_boost.items():
            Hdiag[idx] *= factor
    return SystemMatrices(
        A=a * np.eye(n),
        B=-b * np.eye(n),
        C=c * np.eye(n),
        D=propagation_matrix(n, group_size=group_size, within_bias=within_bias),
        N=np.eye(n),
        H=np.diag(Hdiag),
        G=g * np.eye(n),
    )
