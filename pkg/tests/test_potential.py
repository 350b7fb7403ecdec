import numpy as np
import pytest

from coronalab.matpoly import MatPoly
from coronalab.pointwise import CoronaInstance, delta_range, polydisk_grid
from coronalab.potential import (
    chart_bounds,
    det_derivative_check,
    laplacian_phi,
    laplacian_phi_grid,
    laplacian_psi_grid,
    potentials_at,
    potentials_grid,
    verify_potentials,
)

SQ2 = np.sqrt(2.0)


def f_1z():
    return MatPoly(1, 2, 1, {(0,): [[1 / SQ2, 0]], (1,): [[0, 1 / SQ2]]})


def f_z_half():
    s = np.sqrt(1.25)
    return MatPoly(1, 2, 1, {(0,): [[0, 0.5 / s]], (1,): [[1 / s, 0]]})


def random_instance(rng, rows=2, cols=4, nvars=1, degree=2, name="rand"):
    # F0 = [0.4 I | G(z)]: the identity block certifies F F* >= (0.4 s)^2 I exactly
    base = np.zeros((rows, cols), dtype=complex)
    base[:, :rows] = 0.4 * np.eye(rows)
    coeffs = {(0,) * nvars: base}
    for alpha in np.ndindex(*((degree + 1,) * nvars)):
        tail = np.zeros((rows, cols), dtype=complex)
        tail[:, rows:] = 0.25 * (rng.standard_normal((rows, cols - rows))
                                 + 1j * rng.standard_normal((rows, cols - rows)))
        coeffs[alpha] = coeffs.get(alpha, 0) + tail
    F0 = MatPoly(rows, cols, nvars, coeffs)
    _, sup = delta_range(F0, 8)
    scale = 1.0 / np.sqrt(sup * (1 + 1e-6))
    F = F0.scale(scale)
    delta_sq = 0.16 * scale ** 2
    g = MatPoly.constant(np.ones((rows, 1)) / np.sqrt(rows), nvars)
    return CoronaInstance(F, g, delta_sq, 2.0, name)


class TestDetDerivative:
    def test_diagonal_path(self):
        A = lambda t: np.diag([1.0 + t, 2.0])
        assert det_derivative_check(A, 0.3) < 1e-9

    def test_unipotent_path(self):
        A = lambda t: np.array([[1.0, t], [0.0, 1.0]])
        assert det_derivative_check(A, 0.7) < 1e-12

    def test_random_smooth_path(self):
        rng = np.random.default_rng(0)
        B = rng.standard_normal((4, 4))
        C = rng.standard_normal((4, 4))
        A = lambda t: np.eye(4) * 2 + np.sin(t) * B + np.cos(2 * t) * C * 0.3
        dA = lambda t: np.cos(t) * B - 2 * np.sin(2 * t) * C * 0.3
        for t in (0.0, 0.5, 1.2):
            assert det_derivative_check(A, t, h=1e-5) < 1e-6
            assert det_derivative_check(A, t, h=1e-5, dA=dA) < 1e-6

    def test_singular_path_raises(self):
        A = lambda t: np.array([[t, 0.0], [0.0, 0.0]])
        with pytest.raises(np.linalg.LinAlgError):
            det_derivative_check(A, 1.0)


class TestPotentials:
    def test_fubini_study_phi(self):
        # F = [1, z]/sqrt2, delta^2 = 1/2: phi = log(1 + |z|^2)
        F = f_1z()
        phi0, _, _ = potentials_at(F, 0.5, [0.0])
        assert abs(phi0) < 1e-14
        phiT, _, _ = potentials_at(F, 0.5, [np.exp(1.3j)])
        assert abs(phiT - np.log(2.0)) < 1e-14
        K, _ = chart_bounds(0.5, 1)
        assert abs(phiT - K) < 1e-14

    def test_constant_unitary(self):
        U, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((3, 3)))
        F = MatPoly.constant(U, 1)
        phi, lam, psi = potentials_at(F, 1.0, [0.4j])
        assert abs(phi) < 1e-13
        assert abs(lam - 3.0) < 1e-13
        assert abs(psi - 3.0) < 1e-13

    def test_phi_in_range_on_grid(self):
        rng = np.random.default_rng(2)
        inst = random_instance(rng)
        Z = polydisk_grid(1, 16)
        phi, _, _ = potentials_grid(inst.F, inst.delta_sq, Z)
        K, _ = chart_bounds(inst.delta_sq, inst.rows)
        assert np.min(phi) >= -1e-10
        assert np.max(phi) <= K + 1e-10


class TestLaplacianPhi:
    def test_fubini_study_spot_value(self):
        assert abs(laplacian_phi(f_1z(), [0.0]) - 1.0) < 1e-6

    def test_constant_f_zero(self):
        F = MatPoly.constant(np.array([[0.3, 0.1], [0.0, 0.4]]), 1)
        assert abs(laplacian_phi(F, [0.2 + 0.1j])) < 1e-15

    def test_matches_fd_laplacian(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng)
        F, dsq = inst.F, inst.delta_sq
        h = 1e-3
        for z in (0.1 + 0.2j, -0.4j, 0.5):
            closed = laplacian_phi(F, [z])
            stencil = np.array([[z + h], [z - h], [z + 1j * h], [z - 1j * h], [z]])
            phi, _, _ = potentials_grid(F, dsq, stencil)
            fd = (phi[0] + phi[1] + phi[2] + phi[3] - 4 * phi[4]) / (4.0 * h * h)
            assert abs(closed - fd) < 1e-5

    def test_psi_matches_fd_laplacian(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng)
        F, dsq = inst.F, inst.delta_sq

        def fd_lap(z, h):
            stencil = np.array([[z + h], [z - h], [z + 1j * h], [z - 1j * h], [z]])
            _, _, psi = potentials_grid(F, dsq, stencil)
            return (psi[0] + psi[1] + psi[2] + psi[3] - 4 * psi[4]) / (4.0 * h * h)

        for z in (0.15 - 0.1j, 0.3 + 0.3j):
            closed = laplacian_psi_grid(F, dsq, np.array([[z]]))[0]
            # Richardson-extrapolated 5-point stencil kills the h^2 term
            fd = (4.0 * fd_lap(z, 5e-4) - fd_lap(z, 1e-3)) / 3.0
            assert abs(closed - fd) < 1e-5 * max(1.0, abs(closed))


class TestVerifyPotentials:
    def test_hand_instance(self):
        g = MatPoly.constant([[1.0]], 1)
        inst = CoronaInstance(f_z_half(), g, 0.2, 2.0, "hand")
        rep = verify_potentials(inst)
        assert rep.passed
        assert abs(rep.K - np.log(5.0)) < 1e-12
        assert rep.hypothesis_ok

    def test_constant_f_gaps_zero(self):
        F = MatPoly.constant(np.array([[0.5, 0.0, 0.0]]), 1)
        g = MatPoly.constant([[1.0]], 1)
        inst = CoronaInstance(F, g, 0.25, 2.0, "const")
        rep = verify_potentials(inst)
        assert rep.passed
        assert abs(rep.worst_gap_phi) < 1e-14
        assert abs(rep.worst_gap_psi) < 1e-14

    def test_random_suite(self):
        rng = np.random.default_rng(5)
        for k in range(10):
            inst = random_instance(rng, rows=int(rng.integers(1, 3)),
                                   cols=int(rng.integers(3, 6)), name=f"r{k}")
            rep = verify_potentials(inst, grid_density=12)
            assert rep.passed, rep

    def test_bidisk_instance(self):
        rng = np.random.default_rng(6)
        inst = random_instance(rng, rows=1, cols=3, nvars=2, degree=1)
        rep = verify_potentials(inst, grid_density=10)
        assert rep.passed

    def test_hypothesis_flag(self):
        # delta^2 > 1/e: still reports, but flags the hypothesis
        U = np.array([[1.0, 0.0]], dtype=complex)
        inst = CoronaInstance(MatPoly.constant(U, 1), MatPoly.constant([[1.0]], 1),
                              0.9, 2.0, "wide-delta")
        rep = verify_potentials(inst)
        assert not rep.hypothesis_ok

    def test_phi_attains_infimum_r1(self):
        # with delta^2 equal to the grid minimum and r = 1, min phi ~ 0
        F = f_1z()
        lo, _ = delta_range(F)
        g = MatPoly.constant([[1.0]], 1)
        inst = CoronaInstance(F, g, lo, 2.0, "attain")
        rep = verify_potentials(inst, grid_density=24)
        assert rep.min_phi >= -1e-10
        assert rep.min_phi < 1e-3
