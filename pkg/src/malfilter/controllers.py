"""Response policies: the robust output-feedback controller and its rivals.

Policy kinds mirror the five responses compared in the experiments:
R1 no response, R2 robust output feedback (with a decentralized scalar
variant R2D), R3 fixed-rate threshold trigger, R4 remove-everything-detected,
R5 LQG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import SystemMatrices, ValidationError
from .riccati import (
    RiccatiSolution,
    find_gamma_star,
    solve_controller_gare,
    solve_estimator_gare,
    solve_gares,
)

#: Largest internal integrator step for the estimator ODE; calls with a
#: larger dt are split into substeps to keep RK4 stable at stiff gains.
MAX_ESTIMATOR_STEP = 0.01


@dataclass
class HinfController:
    """Linear feedback on a worst-case-aware state estimate.

    The estimate evolves as
        xhat' = estimator_A xhat + estimator_L (y - C xhat)
    and the (unclamped) control is u = gain_K xhat.
    """

    gain_K: np.ndarray
    estimator_A: np.ndarray
    estimator_L: np.ndarray
    C: np.ndarray
    gamma: float
    gamma_star: float = 0.0
    Z: np.ndarray | None = None
    Sigma: np.ndarray | None = None
    x_hat: np.ndarray = None

    def __post_init__(self):
        if self.x_hat is None:
            self.x_hat = np.zeros(self.gain_K.shape[0])

    def reset(self):
        self.x_hat = np.zeros_like(self.x_hat)

    def copy(self) -> "HinfController":
        c = HinfController(self.gain_K, self.estimator_A, self.estimator_L,
                           self.C, self.gamma, self.gamma_star, self.Z, self.Sigma)
        c.x_hat = self.x_hat.copy()
        return c


@dataclass
class ControllerPolicy:
    """One of the response policies, mapping measurements to filtering rates.

    kind is one of {"R1", "R2", "R2D", "R3", "R4", "R5"}.  R2/R2D/R5 carry a
    controller with estimator state; R3 carries trigger_level (packets) and
    fixed_rate (packets per time unit).
    """

    kind: str
    controller: HinfController | None = None
    trigger_level: float = 5.0
    fixed_rate: float = 10.0

    def reset(self):
        if self.controller is not None:
            self.controller.reset()


def synthesize_hinf(sys: SystemMatrices, gamma_margin: float = 1.05,
                    gamma: float | None = None) -> HinfController:
    """Build the robust output-feedback controller at gamma_margin * gamma*.

    An explicit `gamma` overrides the margin.  Raises SynthesisInfeasible
    (from the Riccati layer) when no feasible level exists.
    """
    if gamma is None:
        if gamma_margin <= 1:
            raise ValidationError("gamma_margin must exceed 1")
        gamma_star = find_gamma_star(sys)
        gamma = gamma_margin * max(gamma_star, 1e-9)
    else:
        gamma_star = float("nan")
    sol = solve_gares(sys, gamma)
    if sol is None:
        raise ValidationError(f"synthesis level gamma={gamma:g} is infeasible")
    return _assemble(sys, sol, gamma_star)


def _assemble(sys: SystemMatrices, sol: RiccatiSolution, gamma_star: float) -> HinfController:
    Ri = np.linalg.inv(sys.G.T @ sys.G)
    Ni = np.linalg.inv(sys.N)
    gamma = sol.gamma
    S = sys.B @ Ri @ sys.B.T - gamma**-2 * sys.D @ sys.D.T
    est_A = sys.A - S @ sol.Z
    coupling = np.eye(sys.n) - gamma**-2 * sol.Sigma @ sol.Z
    est_L = np.linalg.solve(coupling, sol.Sigma) @ sys.C.T @ Ni
    gain_K = -Ri @ sys.B.T @ sol.Z
    return HinfController(gain_K=gain_K, estimator_A=est_A, estimator_L=est_L,
                          C=sys.C.copy(), gamma=gamma, gamma_star=gamma_star,
                          Z=sol.Z, Sigma=sol.Sigma)


def synthesize_lqg(sys: SystemMatrices) -> ControllerPolicy:
    """R5: LQR state feedback on a Kalman-filter estimate.

    This is the limit of the robust design as gamma grows without bound: the
    disturbance-correction terms vanish from both Riccati equations and the
    estimator becomes xhat' = A xhat + B u + Sigma C'N^-1 (y - C xhat).
    """
    sys.validate()
    big = 1e9  # effectively drops the gamma^-2 terms
    rc = solve_controller_gare(sys, big)
    re = solve_estimator_gare(sys, big)
    if rc is None or re is None:
        raise ValidationError("LQG Riccati equations are infeasible")
    Z, _ = rc
    Sigma, _ = re
    Ri = np.linalg.inv(sys.G.T @ sys.G)
    gain_K = -Ri @ sys.B.T @ Z
    est_L = Sigma @ sys.C.T @ np.linalg.inv(sys.N)
    est_A = sys.A + sys.B @ gain_K
    ctrl = HinfController(gain_K=gain_K, estimator_A=est_A, estimator_L=est_L,
                          C=sys.C.copy(), gamma=np.inf, Z=Z, Sigma=Sigma)
    return ControllerPolicy(kind="R5", controller=ctrl)


def synthesize_decentralized(sys: SystemMatrices, gamma_margin: float = 1.05) -> ControllerPolicy:
    """R2D: independent scalar robust controllers, one per sub-network.

    Each node uses its own scalar plant with unit disturbance weight,
    ignoring the routing matrix.  Requires diagonal A, B, C, N, H, G.
    """
    for name in ("A", "B", "C", "N", "H", "G"):
        M = getattr(sys, name)
        if np.any(M - np.diag(np.diag(M))):
            raise ValidationError(f"decentralized synthesis requires diagonal {name}")
    n = sys.n
    K = np.zeros((n, n))
    est_A = np.zeros((n, n))
    est_L = np.zeros((n, n))
    gammas = np.zeros(n)
    for i in range(n):
        scalar = SystemMatrices(
            A=sys.A[i:i + 1, i:i + 1], B=sys.B[i:i + 1, i:i + 1],
            C=sys.C[i:i + 1, i:i + 1], D=np.ones((1, 1)),
            N=sys.N[i:i + 1, i:i + 1], H=sys.H[i:i + 1, i:i + 1],
            G=sys.G[i:i + 1, i:i + 1])
        ctrl = synthesize_hinf(scalar, gamma_margin=gamma_margin)
        K[i, i] = ctrl.gain_K[0, 0]
        est_A[i, i] = ctrl.estimator_A[0, 0]
        est_L[i, i] = ctrl.estimator_L[0, 0]
        gammas[i] = ctrl.gamma
    ctrl = HinfController(gain_K=K, estimator_A=est_A, estimator_L=est_L,
                          C=sys.C.copy(), gamma=float(np.max(gammas)),
                          gamma_star=float(np.max(gammas)) / gamma_margin)
    return ControllerPolicy(kind="R2D", controller=ctrl)


def step_estimator(ctrl: HinfController, y: np.ndarray, dt: float) -> np.ndarray:
    """Advance the state estimate one step with y held constant.

    Classic RK4, internally substepped so no stage exceeds
    MAX_ESTIMATOR_STEP.  Returns (and stores) the updated estimate.
    """
    if dt <= 0:
        raise ValidationError("dt must be positive")
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValidationError("measurement contains non-finite entries")
    nsub = max(1, int(np.ceil(dt / MAX_ESTIMATOR_STEP - 1e-12)))
    h = dt / nsub
    A, L, C = ctrl.estimator_A, ctrl.estimator_L, ctrl.C
    x = ctrl.x_hat
    for _ in range(nsub):
        k1 = A @ x + L @ (y - C @ x)
        x2 = x + 0.5 * h * k1
        k2 = A @ x2 + L @ (y - C @ x2)
        x3 = x + 0.5 * h * k2
        k3 = A @ x3 + L @ (y - C @ x3)
        x4 = x + h * k3
        k4 = A @ x4 + L @ (y - C @ x4)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    ctrl.x_hat = x
    return x


def policy_output(policy: ControllerPolicy, y: np.ndarray, dt: float) -> np.ndarray:
    """Filtering rates commanded by a policy for measurement y over dt.

    Output components are clamped to u >= 0: a physical filter cannot
    inject packets.  Estimator-based policies advance their internal state.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValidationError("measurement contains non-finite entries")
    kind = policy.kind
    if kind == "R1":
        return np.zeros_like(y)
    if kind == "R4":
        return y.copy()
    if kind == "R3":
        return np.where(y >= policy.trigger_level, policy.fixed_rate, 0.0)
    if kind in ("R2", "R2D", "R5"):
        x_hat = step_estimator(policy.controller, y, dt)
        u = policy.controller.gain_K @ x_hat
        return np.maximum(u, 0.0)
    raise ValidationError(f"unknown policy kind {kind!r}")


def make_policy(sys: SystemMatrices, kind: str, gamma_margin: float = 1.05,
                trigger_level: float = 5.0, fixed_rate: float = 10.0) -> ControllerPolicy:
    """Construct any response policy by kind, synthesizing where needed."""
    if kind == "R2":
        return ControllerPolicy(kind="R2",
                                controller=synthesize_hinf(sys, gamma_margin))
    if kind == "R2D":
        return synthesize_decentralized(sys, gamma_margin)
    if kind == "R5":
        return synthesize_lqg(sys)
    if kind == "R3":
        return ControllerPolicy(kind="R3", trigger_level=trigger_level,
                                fixed_rate=fixed_rate)
    if kind in ("R1", "R4"):
        return ControllerPolicy(kind=kind)
    raise ValidationError(f"unknown policy kind {kind!r}")


def worst_case_disturbance(sys: SystemMatrices, Z: np.ndarray, gamma: float,
                           x: np.ndarray) -> np.ndarray:
    """Maximizing attack of the underlying zero-sum game: gamma^-2 D' Z x."""
    return gamma**-2 * sys.D.T @ Z @ np.asarray(x, dtype=float)


def save_gains(path, ctrl: HinfController):
    """Write controller matrices as plain text: header "n gamma", then the
    gain, estimator drift, innovation gain, and measurement matrices
    row-major, whitespace separated."""
    n = ctrl.gain_K.shape[0]
    with open(path, "w") as f:
        f.write(f"{n} {float(ctrl.gamma)!r}\n")
        for M in (ctrl.gain_K, ctrl.estimator_A, ctrl.estimator_L, ctrl.C):
            for row in M:
                f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_gains(path) -> HinfController:
    """Inverse of save_gains."""
    with open(path) as f:
        header = f.readline().split()
        n = int(header[0])
        gamma = float(header[1])
        rows = [list(map(float, f.readline().split())) for _ in range(4 * n)]
    mats = [np.array(rows[k * n:(k + 1) * n]) for k in range(4)]
    return HinfController(gain_K=mats[0], estimator_A=mats[1],
                          estimator_L=mats[2], C=mats[3], gamma=gamma)
