"""Riccati layer: closed forms, stabilizing property, gamma* search."""

import numpy as np
import pytest
import scipy.linalg

from malfilter import (
    SynthesisInfeasible,
    find_gamma_star,
    network_system,
    solve_controller_gare,
    solve_estimator_gare,
    solve_gares,
    spectral_radius,
)
from malfilter.model import SystemMatrices, ValidationError


def scalar_system(a=-1.0, b=-0.5, c=2.0, d=1.0, h=10.0, g=1.0, nn=1.0):
    return SystemMatrices(A=[[a]], B=[[b]], C=[[c]], D=[[d]],
                          N=[[nn]], H=[[h]], G=[[g]])


def scalar_controller_root(a, b, g, h, d, gamma):
    """Stabilizing root of 2 a Z - s Z^2 + h^2 = 0 with s = b^2/g^2 - d^2/gamma^2."""
    s = b * b / (g * g) - d * d / gamma**2
    return (a + np.sqrt(a * a + s * h * h)) / s


def scalar_estimator_root(a, c, nn, h, d, gamma):
    s = c * c / nn - h * h / gamma**2
    if abs(s) < 1e-12:  # degenerate: 2 a Sigma + d^2 = 0
        return -d * d / (2 * a)
    return (a + np.sqrt(a * a + s * d * d)) / s


@pytest.mark.parametrize("gamma", [7.0, 50.0, 1e4])
def test_scalar_closed_forms(gamma):
    a, b, c, d, h, g, nn = -1.0, -0.5, 2.0, 1.0, 10.0, 1.0, 1.0
    sys1 = scalar_system(a, b, c, d, h, g, nn)
    Z, res_z = solve_controller_gare(sys1, gamma)
    Sig, res_s = solve_estimator_gare(sys1, gamma)
    assert abs(Z[0, 0] - scalar_controller_root(a, b, g, h, d, gamma)) < 1e-10
    assert abs(Sig[0, 0] - scalar_estimator_root(a, c, nn, h, d, gamma)) < 1e-10
    assert res_z < 1e-8 and res_s < 1e-8


def test_scalar_degenerate_estimator():
    # gamma where the estimator quadratic coefficient vanishes (c^2/N = h^2/gamma^2)
    sys1 = scalar_system()
    Sig, _ = solve_estimator_gare(sys1, 5.0)
    assert abs(Sig[0, 0] - 0.5) < 1e-9


def random_system(rng, n):
    A = rng.normal(size=(n, n))
    A -= (np.max(np.linalg.eigvals(A).real) + 0.5 + rng.uniform(0, 1)) * np.eye(n)
    B = rng.normal(size=(n, n))
    C = rng.normal(size=(n, n)) + 0.3 * np.eye(n)
    D = rng.normal(size=(n, n))
    H = np.diag(rng.uniform(0.5, 3.0, n))
    G = np.diag(rng.uniform(0.5, 3.0, n))
    M = rng.normal(size=(n, n))
    N = M @ M.T + np.eye(n)
    return SystemMatrices(A=A, B=B, C=C, D=D, N=N, H=H, G=G)


def test_stabilizing_and_residual_on_random_systems(rng):
    """The returned solution is symmetric PD, solves the equation, and
    stabilizes the closed loop -- which uniquely characterizes it."""
    for _ in range(20):
        n = int(rng.choice([1, 2, 4, 9]))
        sysm = random_system(rng, n)
        gamma = 1e3  # near the well-posed large-gamma regime
        Z, res = solve_controller_gare(sysm, gamma)
        assert res < 1e-8
        assert np.allclose(Z, Z.T, atol=1e-9)
        assert np.all(np.linalg.eigvalsh(Z) > 0)
        Ri = np.linalg.inv(sysm.G.T @ sysm.G)
        S = sysm.B @ Ri @ sysm.B.T - gamma**-2 * sysm.D @ sysm.D.T
        assert np.max(np.linalg.eigvals(sysm.A - S @ Z).real) < 0


def test_gamma_to_infinity_matches_scipy_care(sys9):
    """Independent oracle: at huge gamma the equations reduce to the
    standard regulator/estimator equations scipy can solve."""
    gamma = 1e6
    Z, _ = solve_controller_gare(sys9, gamma)
    Z_ref = scipy.linalg.solve_continuous_are(
        sys9.A, sys9.B, sys9.H.T @ sys9.H, sys9.G.T @ sys9.G)
    assert np.max(np.abs(Z - Z_ref)) / np.max(np.abs(Z_ref)) < 1e-3

    Sig, _ = solve_estimator_gare(sys9, gamma)
    Sig_ref = scipy.linalg.solve_continuous_are(
        sys9.A.T, sys9.C.T, sys9.D @ sys9.D.T, sys9.N)
    assert np.max(np.abs(Sig - Sig_ref)) / np.max(np.abs(Sig_ref)) < 1e-3


def test_gamma_star_scalar_grid_oracle():
    """Brute-force feasibility grid from the closed forms agrees with the
    bisection search."""
    a, b, c, d, h, g, nn = -1.0, -0.5, 2.0, 1.0, 10.0, 1.0, 1.0
    sys1 = scalar_system(a, b, c, d, h, g, nn)
    gs = find_gamma_star(sys1)

    def feasible(gamma):
        s = b * b / (g * g) - d * d / gamma**2
        se = c * c / nn - h * h / gamma**2
        if a * a + s * h * h < 0 or a * a + se * d * d < 0:
            return False
        Z = scalar_controller_root(a, b, g, h, d, gamma)
        Sig = scalar_estimator_root(a, c, nn, h, d, gamma)
        return Z > 0 and Sig > 0 and Sig * Z < gamma**2

    grid = np.linspace(1.0, 20.0, 40001)
    gs_grid = grid[[feasible(gam) for gam in grid]][0]
    assert abs(gs - gs_grid) / gs_grid < 1e-3


def test_gamma_star_boundary(sys9):
    gs = find_gamma_star(sys9)
    assert solve_gares(sys9, 1.01 * gs) is not None
    assert solve_gares(sys9, 0.99 * gs) is None


def test_feasibility_monotone(sys9):
    gs = find_gamma_star(sys9)
    for factor in (1.1, 2.0, 10.0, 100.0):
        assert solve_gares(sys9, factor * gs) is not None
    for factor in (0.9, 0.5, 0.25):
        assert solve_gares(sys9, factor * gs) is None


def test_coupling_condition_enforced(sys9):
    gs = find_gamma_star(sys9)
    sol = solve_gares(sys9, 1.05 * gs)
    assert spectral_radius(sol.Sigma @ sol.Z) < (1.05 * gs) ** 2


def test_no_disturbance_gives_zero_gamma_star():
    sys1 = scalar_system(d=0.0)
    assert find_gamma_star(sys1) == 0.0


def test_infeasible_raises_below_cap():
    # enormous state weight pushes gamma* beyond the search cap
    sys1 = scalar_system(h=1e8)
    with pytest.raises(SynthesisInfeasible):
        find_gamma_star(sys1)


def test_bad_tol_rejected(sys9):
    with pytest.raises(ValidationError):
        find_gamma_star(sys9, tol=0.0)
