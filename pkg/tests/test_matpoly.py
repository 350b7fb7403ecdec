import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coronalab.matpoly import AntiPoly, MatPoly, hstack


def naive_eval(P, z):
    """Independent oracle: plain sum over monomials."""
    out = np.zeros((P.rows, P.cols), dtype=complex)
    for alpha, c in P.coeffs.items():
        mono = 1.0 + 0j
        for zi, a in zip(np.atleast_1d(z), alpha):
            mono *= zi ** a
        out += mono * c
    return out


def row_1_z():
    # P = [1, z], 1x2, one variable
    return MatPoly(1, 2, 1, {(0,): [[1.0, 0.0]], (1,): [[0.0, 1.0]]})


def random_poly(rng, rows=2, cols=3, nvars=1, degree=3):
    return MatPoly.random(rows, cols, nvars, degree, rng)


class TestEval:
    def test_constant_term_at_zero(self):
        P = row_1_z()
        assert np.allclose(P.eval([0.0]), [[1.0, 0.0]])

    def test_direct_substitution(self):
        P = row_1_z()
        assert np.allclose(P.eval([1j]), [[1.0, 1j]])

    def test_matches_monomial_sum_oracle(self):
        rng = np.random.default_rng(7)
        for nvars in (1, 2, 3):
            P = random_poly(rng, nvars=nvars, degree=3)
            for _ in range(10):
                z = rng.uniform(0, 0.95, nvars) * np.exp(2j * np.pi * rng.uniform(size=nvars))
                assert np.max(np.abs(P.eval(z) - naive_eval(P, z))) < 1e-14

    def test_eval_grid_agrees_with_pointwise(self):
        rng = np.random.default_rng(8)
        P = random_poly(rng, nvars=2, degree=2)
        Z = 0.8 * (rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2)))
        vals = P.eval_grid(Z)
        for k in range(40):
            assert np.max(np.abs(vals[k] - P.eval(Z[k]))) < 1e-13

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            row_1_z().eval([1.0, 2.0])


class TestDz:
    def test_monomial_rule(self):
        P = row_1_z()
        dP = P.dz(1)
        assert np.allclose(dP.eval([0.3 + 0.1j]), [[0.0, 1.0]])

    def test_constant_derivative_is_zero(self):
        P = MatPoly.constant(np.eye(2), nvars=2)
        assert not P.dz(1).coeffs and not P.dz(2).coeffs

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            row_1_z().dz(2)

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(11)
        P = random_poly(rng, degree=4)
        dP = P.dz(1)
        h = 1e-6
        for _ in range(5):
            z = 0.5 * (rng.standard_normal() + 1j * rng.standard_normal())
            fd = (P.eval([z + h]) - P.eval([z])) / h
            assert np.max(np.abs(fd - dP.eval([z]))) < 1e-5


class TestMul:
    def test_hand_convolution(self):
        # [1, z] . [z; 1] = 2 z
        P = row_1_z()
        Q = MatPoly(2, 1, 1, {(0,): [[0.0], [1.0]], (1,): [[1.0], [0.0]]})
        R = P.mul(Q)
        assert set(R.coeffs) == {(1,)}
        assert np.allclose(R.coeff((1,)), [[2.0]])

    def test_identity_case(self):
        rng = np.random.default_rng(3)
        P = random_poly(rng, rows=2, cols=2)
        I = MatPoly.constant(np.eye(2), nvars=1)
        R = P.mul(I)
        for a in set(P.coeffs) | set(R.coeffs):
            assert np.allclose(P.coeff(a), R.coeff(a))

    def test_pointwise_product(self):
        rng = np.random.default_rng(4)
        P = random_poly(rng, rows=2, cols=3, nvars=2, degree=2)
        Q = random_poly(rng, rows=3, cols=2, nvars=2, degree=2)
        R = P.mul(Q)
        for _ in range(20):
            z = 0.8 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
            err = np.max(np.abs(R.eval(z) - P.eval(z) @ Q.eval(z)))
            assert err < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            row_1_z().mul(row_1_z())

    def test_associativity_at_points(self):
        rng = np.random.default_rng(5)
        P = random_poly(rng, 2, 3)
        Q = random_poly(rng, 3, 2)
        R = random_poly(rng, 2, 2)
        lhs = P.mul(Q).mul(R)
        rhs = P.mul(Q.mul(R))
        for _ in range(20):
            z = 0.9 * (rng.standard_normal() + 1j * rng.standard_normal())
            assert np.max(np.abs(lhs.eval([z]) - rhs.eval([z]))) < 1e-12


class TestAdjointEval:
    def test_conjugate_transpose(self):
        P = row_1_z()
        assert np.allclose(P.adjoint_eval([1j]), [[1.0], [-1j]])

    def test_real_constant_transposes(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        P = MatPoly.constant(M, nvars=1)
        assert np.allclose(P.adjoint_eval([0.5]), M.T)

    def test_double_adjoint(self):
        rng = np.random.default_rng(6)
        P = random_poly(rng)
        for _ in range(5):
            z = 0.6 * (rng.standard_normal() + 1j * rng.standard_normal())
            assert np.max(np.abs(P.adjoint_eval([z]).conj().T - P.eval([z]))) < 1e-15


@st.composite
def small_polys(draw):
    nterms = draw(st.integers(1, 4))
    coeffs = {}
    for _ in range(nterms):
        a = draw(st.integers(0, 3))
        re = draw(st.floats(-2, 2, allow_nan=False))
        im = draw(st.floats(-2, 2, allow_nan=False))
        coeffs[(a,)] = coeffs.get((a,), 0) + np.array([[re + 1j * im]])
    return MatPoly(1, 1, 1, coeffs)


@settings(max_examples=60, deadline=None)
@given(small_polys(), small_polys(), st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False))
def test_eval_is_linear_in_coefficients(P, Q, z):
    lhs = (P + Q).eval([z])
    rhs = P.eval([z]) + Q.eval([z])
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * (1 + np.max(np.abs(rhs)))


@settings(max_examples=60, deadline=None)
@given(small_polys(), small_polys())
def test_dz_product_rule(P, Q):
    rng = np.random.default_rng(0)
    lhs = P.mul(Q).dz(1)
    rhs = P.dz(1).mul(Q) + P.mul(Q.dz(1))
    for _ in range(5):
        z = 0.8 * (rng.standard_normal() + 1j * rng.standard_normal())
        scale = 1 + np.max(np.abs(rhs.eval([z])))
        assert np.max(np.abs(lhs.eval([z]) - rhs.eval([z]))) < 1e-10 * scale


def test_dz_commutes_with_addition():
    rng = np.random.default_rng(12)
    P, Q = random_poly(rng), random_poly(rng)
    lhs = (P + Q).dz(1)
    rhs = P.dz(1) + Q.dz(1)
    for a in set(lhs.coeffs) | set(rhs.coeffs):
        assert np.allclose(lhs.coeff(a), rhs.coeff(a))


def test_partial_eval_slices_bidisk():
    rng = np.random.default_rng(13)
    P = random_poly(rng, nvars=2, degree=3)
    w = 0.4 - 0.2j
    S = P.partial_eval(2, w)
    assert S.nvars == 1
    for _ in range(5):
        z = 0.7 * (rng.standard_normal() + 1j * rng.standard_normal())
        assert np.max(np.abs(S.eval([z]) - P.eval([z, w]))) < 1e-12


def test_hstack_blocks():
    A = MatPoly.constant([[0.5, 0.0]], nvars=1)
    B = MatPoly(1, 1, 1, {(1,): [[1.0]]})
    F = hstack([A, B])
    assert F.shape == (1, 3)
    assert np.allclose(F.eval([0.3]), [[0.5, 0.0, 0.3]])


class TestAntiPoly:
    def test_eval_conjugates_the_point(self):
        h = AntiPoly.from_coeffs(2, 1, 1, {(1,): [[1.0], [0.0]]})
        z = 0.3 + 0.4j
        assert np.allclose(h.eval([z]), [[np.conj(z)], [0.0]])

    def test_dzbar(self):
        h = AntiPoly.from_coeffs(1, 1, 1, {(2,): [[1.0]]})
        dh = h.dzbar(1)
        z = 0.5 - 0.2j
        assert np.allclose(dh.eval([z]), [[2 * np.conj(z)]])

    def test_value_at_zero(self):
        h = AntiPoly.from_coeffs(1, 1, 1, {(0,): [[2.0]], (1,): [[1.0]]})
        assert np.allclose(h.value_at_zero(), [[2.0]])
