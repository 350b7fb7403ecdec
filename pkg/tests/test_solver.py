import math

import numpy as np
import pytest
import scipy.linalg

from coronalab.matpoly import MatPoly
from coronalab.pointwise import CoronaInstance, delta_range
from coronalab.quad import make_quadrature
from coronalab.solver import (
    CORONA_CONSTANT,
    TRENT_CONSTANT,
    corona_bound,
    dual_functional_bound,
    f0_baseline,
    hp_least_norm,
    least_norm_solve,
    riesz_constant,
    solve_and_report,
    _constraint_system,
)

E = math.e


def hand_instance(c=0.5, nvars=1):
    s = math.sqrt(1 + c * c)
    if nvars == 1:
        F = MatPoly(1, 2, 1, {(0,): [[0, c / s]], (1,): [[1 / s, 0]]})
    else:
        F = MatPoly(1, 2, 2, {(0, 0): [[0, c / s]], (1, 1): [[1 / s, 0]]})
    g = MatPoly.constant([[1.0]], nvars)
    return CoronaInstance(F, g, c * c / (1 + c * c), 2.0, "hand")


def random_instance(rng, rows=1, cols=3, nvars=1, degree=2, c=0.5, name="rand"):
    base = np.zeros((rows, cols), dtype=complex)
    base[:, :rows] = c * np.eye(rows)
    coeffs = {(0,) * nvars: base}
    for alpha in np.ndindex(*((degree + 1,) * nvars)):
        tail = np.zeros((rows, cols), dtype=complex)
        tail[:, rows:] = 0.3 * (rng.standard_normal((rows, cols - rows))
                                + 1j * rng.standard_normal((rows, cols - rows)))
        coeffs[alpha] = coeffs.get(alpha, 0) + tail
    F0 = MatPoly(rows, cols, nvars, coeffs)
    _, sup = delta_range(F0, 8)
    scale = 1.0 / np.sqrt(sup * (1 + 1e-6))
    F = F0.scale(scale)
    gc = {a: rng.standard_normal((rows, 1)) + 1j * rng.standard_normal((rows, 1))
          for a in np.ndindex(*((2,) * nvars))}
    g = MatPoly(rows, 1, nvars, gc)
    g = g.scale(1.0 / g.l2_norm())
    return CoronaInstance(F, g, c * c * scale ** 2, 2.0, name)


class TestConstants:
    def test_corona_constant(self):
        assert abs(CORONA_CONSTANT - 8.38934) < 5e-6

    def test_trent_constant(self):
        assert abs(TRENT_CONSTANT - 10.9859) < 5e-5

    def test_riesz_constant(self):
        assert riesz_constant(2.0) == pytest.approx(1.0)
        assert riesz_constant(4.0) == pytest.approx(math.sqrt(2.0))
        assert riesz_constant(4.0 / 3.0) == pytest.approx(math.sqrt(2.0))


class TestCoronaBound:
    def test_disk_boundary_delta(self):
        # p=2, r=1, delta^2 = 1/e: C e + sqrt(e)
        val = corona_bound(2.0, 1, 1.0 / E, 1)
        assert abs(val - (CORONA_CONSTANT * E + math.sqrt(E))) < 1e-12
        assert abs(val - 24.4538) < 1e-3

    def test_disk_hand_delta(self):
        val = corona_bound(2.0, 1, 0.2, 1)
        expected = CORONA_CONSTANT / 0.2 * math.log(5.0) + 1.0 / math.sqrt(0.2)
        assert abs(val - expected) < 1e-12
        assert abs(val - 69.745) < 5e-3

    def test_bidisk_p4(self):
        val = corona_bound(4.0, 1, 1.0 / E, 2)
        expected = 2 * CORONA_CONSTANT * 2.0 * E + math.sqrt(E)
        assert abs(val - expected) < 1e-10
        assert abs(val - 92.87) < 5e-2

    def test_bidisk_p2_sqrt_factor(self):
        val = corona_bound(2.0, 1, 1.0 / E, 2)
        expected = math.sqrt(2.0) * CORONA_CONSTANT * E + math.sqrt(E)
        assert abs(val - expected) < 1e-10

    def test_hypothesis_violation(self):
        with pytest.raises(ValueError):
            corona_bound(2.0, 1, 0.5, 1)

    def test_dual_bound(self):
        assert abs(dual_functional_bound(1, 0.2)
                   - CORONA_CONSTANT / 0.2 * math.log(5.0)) < 1e-12


class TestLeastNormSolve:
    def test_constant_unitary(self):
        rng = np.random.default_rng(0)
        U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        g = MatPoly.random(3, 1, 1, 2, rng)
        inst = CoronaInstance(MatPoly.constant(U, 1), g, 1.0, 2.0, "unitary")
        res = least_norm_solve(inst, 6)
        assert res.feasible and res.residual_l2 < 1e-12
        assert abs(res.norm_p - g.l2_norm()) < 1e-12
        # f = U* g coefficientwise
        for a, c in g.coeffs.items():
            assert np.allclose(res.f.coeff(a), U.conj().T @ c, atol=1e-12)

    def test_hand_instance(self):
        res = least_norm_solve(hand_instance(), 16)
        assert res.feasible
        assert res.residual_l2 < 1e-10
        assert abs(res.norm_p - math.sqrt(5.0)) < 1e-9
        # minimizer is the constant second-component solution
        assert np.allclose(res.f.coeff((0,)), [[0.0], [2 * math.sqrt(1.25)]], atol=1e-9)

    def test_bidisk_hand_instance(self):
        res = least_norm_solve(hand_instance(nvars=2), 6)
        assert res.feasible
        assert abs(res.norm_p - math.sqrt(5.0)) < 1e-9

    def test_truncation_stability(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng)
        res1 = least_norm_solve(inst)
        res2 = least_norm_solve(inst, 2 * res1.truncation)
        assert abs(res1.norm_p - res2.norm_p) < 1e-8

    def test_minimal_norm_orthogonal_to_nullspace(self):
        rng = np.random.default_rng(2)
        inst = random_instance(rng)
        res = least_norm_solve(inst)
        A, b, col_box = _constraint_system(inst, res.truncation)
        x = np.zeros(A.shape[1], dtype=complex)
        pos = {bx: j for j, bx in enumerate(col_box)}
        m = inst.cols
        for beta, cmat in res.f.coeffs.items():
            x[pos[beta] * m:(pos[beta] + 1) * m] = cmat[:, 0]
        _, sv, Vh = scipy.linalg.svd(A)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        # null(A) is spanned by the conjugate-transposed trailing rows of Vh;
        # the component of x along basis vector Vh[i]^H is Vh[i] @ x
        null_proj = Vh[rank:] @ x
        assert np.linalg.norm(null_proj) < 1e-10 * max(1.0, np.linalg.norm(x))

    def test_truncation_below_degree_rejected(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng)
        with pytest.raises(ValueError):
            least_norm_solve(inst, 0)


class TestHpLeastNorm:
    def test_p2_agrees_with_least_norm(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng)
        a = least_norm_solve(inst)
        b = hp_least_norm(inst, p=2.0)
        assert abs(a.norm_p - b.norm_p) < 1e-8

    def test_constant_unitary_any_p(self):
        rng = np.random.default_rng(5)
        U, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        g = MatPoly.random(2, 1, 1, 1, rng)
        inst = CoronaInstance(MatPoly.constant(U, 1), g, 1.0, 2.0, "unitary")
        res = hp_least_norm(inst, 4, p=4.0)
        for a, c in g.coeffs.items():
            assert np.allclose(res.f.coeff(a), U.conj().T @ c, atol=1e-8)

    def test_p4_below_l2_solution(self):
        inst = hand_instance()
        l2 = least_norm_solve(inst, 12)
        res = hp_least_norm(inst, 12, p=4.0)
        # 4-norm of the minimizer is at most the 4-norm of the L2 minimizer
        nodes = np.exp(2j * np.pi * np.arange(512) / 512).reshape(-1, 1)

        def p4(f):
            v = f.eval_grid(nodes)
            return float(np.mean(np.sum(np.abs(v) ** 2, axis=(-2, -1)) ** 2) ** 0.25)

        assert res.norm_p <= p4(l2.f) + 1e-9

    def test_objective_monotone(self):
        rng = np.random.default_rng(6)
        inst = random_instance(rng)
        res = hp_least_norm(inst, p=3.0)
        diffs = np.diff(res.irls_objectives)
        assert np.all(diffs <= 1e-12)

    def test_rejects_endpoints(self):
        inst = hand_instance()
        with pytest.raises(ValueError):
            hp_least_norm(inst, p=1.0)


class TestF0Baseline:
    def test_flat_data(self):
        F = MatPoly.constant([[1.0, 0.0]], 1)
        g = MatPoly.constant([[1.0]], 1)
        inst = CoronaInstance(F, g, 1.0, 2.0, "flat")
        Q = make_quadrature(32, 64)
        rep = f0_baseline(inst, Q)
        assert abs(rep.boundary_norm - 1.0) < 1e-12
        assert abs(rep.bound - 1.0) < 1e-12
        assert rep.passed

    def test_constant_unitary(self):
        rng = np.random.default_rng(7)
        U, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        g = MatPoly.random(2, 1, 1, 2, rng)
        inst = CoronaInstance(MatPoly.constant(U, 1), g, 1.0, 2.0, "unitary")
        rep = f0_baseline(inst, make_quadrature(32, 64))
        assert abs(rep.boundary_norm - g.l2_norm()) < 1e-10

    def test_random_ratio_bound(self):
        rng = np.random.default_rng(8)
        inst = random_instance(rng)
        rep = f0_baseline(inst, make_quadrature(32, 64))
        assert rep.sup_ratio <= 1.0 / math.sqrt(inst.delta_sq) + 1e-10
        assert rep.passed


class TestSolveAndReport:
    def test_hand_report(self):
        rep = solve_and_report(hand_instance(), 16, 2.0)
        assert rep.passed
        assert abs(rep.achieved_norm - 2.2360679) < 1e-6
        assert abs(rep.bound_value - 69.745) < 5e-3
        assert rep.trent_bound is not None and rep.trent_bound > rep.bound_value

    def test_suite_bound_holds(self):
        rng = np.random.default_rng(9)
        for k in range(5):
            inst = random_instance(rng, rows=int(rng.integers(1, 3)),
                                   cols=int(rng.integers(3, 5)), c=0.45, name=f"s{k}")
            assert inst.delta_sq <= 1.0 / E
            rep = solve_and_report(inst)
            assert rep.passed, rep

    def test_hypothesis_flagged(self):
        F = MatPoly.constant([[1.0, 0.0]], 1)
        g = MatPoly.constant([[1.0]], 1)
        inst = CoronaInstance(F, g, 0.9, 2.0, "wide")
        rep = solve_and_report(inst)
        assert rep.passed is None
        assert rep.bound_value is None
        assert not rep.hypothesis_ok

    def test_bidisk_sqrt2_bound(self):
        rng = np.random.default_rng(10)
        inst = random_instance(rng, nvars=2, degree=1, c=0.45, name="bi")
        rep = solve_and_report(inst, 8)
        assert rep.passed
        expected = corona_bound(2.0, inst.rows, inst.delta_sq, 2)
        assert abs(rep.bound_value - expected * inst.g.l2_norm()) < 1e-9
