"""Quadrature on the disk for the Green-potential measure, and the checks
built on it.

The area measure is ``dmu = (2/pi) log(1/|z|) dx dy`` (total mass 1) and
``dm`` is normalized arc length on the circle.  Green's formula in the
normalized Laplacian ``lap = (1/4) Laplace`` reads

    int_T u dm - u(0) = int_D lap(u) dmu,

and everything here — the Littlewood-Paley identity, the Carleson
embedding ratio, the bundle embeddings for ``xi = Pi h``, and the dual
functional with its I + II + III split — is a quantitative instance of
it.

The radial rule is a true Gauss rule for the weight ``4 r log(1/r)`` on
(0, 1): its recurrence coefficients come from a discretized Stieltjes
procedure over a dense log-substituted Gauss-Legendre mesh (``r =
exp(-s)``, ``s in [0, 40]``, truncation error < 1e-16), and nodes and
weights from the Golub-Welsch eigenproblem.  The rule integrates
polynomials in ``|z|^2`` exactly through degree ``radial_count - 1`` and
all its nodes are strictly interior, which keeps finite differencing of
the bundle projection safe.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import roots_legendre

from .matpoly import AntiPoly, MatPoly
from .pointwise import CoronaInstance, gram_grid, pi_grid

_S_MAX = 40.0
_MESH_SIZE = 8192


@dataclass(frozen=True)
class DiskQuadrature:
    """Nodes and weights for dmu on the disk plus uniform circle nodes for dm."""

    nodes: np.ndarray          # complex, shape (radial_count * angular_count,)
    weights: np.ndarray        # positive, sums to ~1
    circle_nodes: np.ndarray   # complex, equispaced on |z| = 1
    radial_count: int
    angular_count: int

    @property
    def circle_weight(self) -> float:
        return 1.0 / self.circle_nodes.size

    def disk_integral(self, values: np.ndarray) -> complex:
        """Integrate sampled values against dmu (deterministic pairwise sum)."""
        return np.sum(self.weights * values)

    def circle_mean(self, values: np.ndarray) -> complex:
        return np.sum(values) / self.circle_nodes.size


@functools.lru_cache(maxsize=16)
def _log_weight_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for ``4 r log(1/r) dr`` on (0, 1).

    Stieltjes on the exp-substituted mesh builds the Jacobi matrix with
    orthonormal-polynomial recurrences; Golub-Welsch turns it into the
    rule.  The mesh integrates every polynomial moment the procedure
    touches to machine precision.
    """
    x, w = roots_legendre(_MESH_SIZE)
    s = 0.5 * (x + 1.0) * _S_MAX
    r = np.exp(-s)
    wm = (0.5 * _S_MAX) * w * 4.0 * s * np.exp(-2.0 * s)
    mass = np.sum(wm)
    alpha = np.zeros(n)
    beta = np.zeros(n)
    p_prev = np.zeros_like(r)
    p = np.ones_like(r) / np.sqrt(mass)
    for k in range(n):
        alpha[k] = np.sum(wm * r * p * p)
        if k == n - 1:
            break
        q = (r - alpha[k]) * p - (beta[k] if k > 0 else 0.0) * p_prev
        beta[k + 1] = np.sqrt(np.sum(wm * q * q))
        p_prev, p = p, q / beta[k + 1]
    nodes, vectors = eigh_tridiagonal(alpha, beta[1:])
    weights = (vectors[0] ** 2) * mass
    return nodes, weights


def make_quadrature(radial_count: int = 128, angular_count: int = 256) -> DiskQuadrature:
    """Product rule for dmu: Gauss log-weight radii x uniform angles."""
    if radial_count < 16 or angular_count < 32:
        raise ValueError("need radial_count >= 16 and angular_count >= 32")
    radii, wr = _log_weight_gauss(radial_count)
    angles = np.exp(2j * np.pi * np.arange(angular_count) / angular_count)
    nodes = (radii[:, None] * angles[None, :]).ravel()
    weights = np.repeat(wr / angular_count, angular_count)
    mass = float(np.sum(weights))
    if abs(mass - 1.0) > 1e-10:
        raise AssertionError(f"quadrature mass {mass} deviates from 1")
    circle = np.exp(2j * np.pi * np.arange(angular_count) / angular_count)
    return DiskQuadrature(nodes=nodes, weights=weights, circle_nodes=circle,
                          radial_count=radial_count, angular_count=angular_count)


def green_residual(u: Callable, lap_u: Callable, Q: DiskQuadrature) -> float:
    """|int_T u dm - u(0) - int_D lap(u) dmu| for a smooth sampled u."""
    boundary = Q.circle_mean(u(Q.circle_nodes))
    center = complex(np.asarray(u(np.zeros(1)))[0])
    area = Q.disk_integral(lap_u(Q.nodes))
    return float(abs(boundary - center - area))


def littlewood_paley_residual(g: MatPoly, Q: DiskQuadrature) -> float:
    """|int ||g'||^2 dmu - (||g||_2^2 - ||g(0)||^2)| for an analytic column."""
    if g.nvars != 1:
        raise ValueError("one-variable check")
    gp = g.dz(1)
    vals = gp.eval_grid(Q.nodes.reshape(-1, 1))
    area = Q.disk_integral(np.sum(np.abs(vals) ** 2, axis=(-2, -1)))
    bvals = g.eval_grid(Q.circle_nodes.reshape(-1, 1))
    bnorm = Q.circle_mean(np.sum(np.abs(bvals) ** 2, axis=(-2, -1)))
    g0 = np.sum(np.abs(g.eval([0.0])) ** 2)
    return float(abs(area - (bnorm - g0)))


@dataclass(frozen=True)
class EmbeddingReport:
    ratio: float
    bound: float
    passed: bool


def carleson_ratio(phi: Callable, lap_phi: Callable, f: MatPoly,
                   Q: DiskQuadrature, slack: float = 1e-6) -> EmbeddingReport:
    """Embedding ratio ``int lap(phi) ||f||^2 dmu / (||phi||_inf ||f||_2^2)``.

    For non-negative bounded subharmonic phi and analytic f the ratio is
    at most e.  ``phi`` and ``lap_phi`` are sampled callables; the sup
    norm is taken over the disk and circle nodes.
    """
    fvals = f.eval_grid(Q.nodes.reshape(-1, 1))
    lhs = float(np.real(Q.disk_integral(lap_phi(Q.nodes) * np.sum(np.abs(fvals) ** 2, axis=(-2, -1)))))
    sup_phi = float(max(np.max(np.real(phi(Q.nodes))), np.max(np.real(phi(Q.circle_nodes)))))
    if sup_phi <= 0:
        raise ValueError("phi must have positive sup norm")
    bvals = f.eval_grid(Q.circle_nodes.reshape(-1, 1))
    f2 = float(np.real(Q.circle_mean(np.sum(np.abs(bvals) ** 2, axis=(-2, -1)))))
    if f2 <= 0:
        raise ValueError("f vanishes identically")
    ratio = lhs / (sup_phi * f2)
    return EmbeddingReport(ratio=ratio, bound=math.e, passed=ratio <= math.e + slack)


# ----------------------------------------------------------------------
# bundle-valued objects xi = Pi h
# ----------------------------------------------------------------------
def _dbar_pi_fd(F: MatPoly, Z: np.ndarray, h: float) -> np.ndarray:
    """Central-difference anti-analytic derivative of Pi on a batch of points."""
    def pi_at(offset):
        return pi_grid(F, (Z + offset).reshape(-1, 1))
    dx = (pi_at(+h) - pi_at(-h)) / (2.0 * h)
    dy = (pi_at(+1j * h) - pi_at(-1j * h)) / (2.0 * h)
    return 0.5 * (dx + 1j * dy)


def _require_h_zero(h: AntiPoly):
    if np.max(np.abs(h.value_at_zero())) > 0:
        raise ValueError("h must vanish at the origin (h(0) = 0)")


def _vec_norm_sq(v: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(v) ** 2, axis=(-2, -1))


def xi_embedding_check(instance: CoronaInstance, h: AntiPoly, Q: DiskQuadrature,
                       fd_step: float = 1e-5, tol: float = 1e-6
                       ) -> tuple[EmbeddingReport, EmbeddingReport]:
    """The two bundle embeddings for ``xi = Pi h`` with anti-analytic h, h(0)=0.

    First: ``int lap(phi) ||xi||^2 dmu <= e K e^K ||xi||_2^2``; second:
    ``int ||dbar xi||^2 dmu <= (1 + e K e^K) ||xi||_2^2``, where phi is
    the log-det potential of the instance and ``K = log(1/delta^{2r})``.
    ``dbar xi`` is the finite difference of Pi applied to h plus Pi times
    the exact derivative of h.
    """
    if instance.nvars != 1:
        raise ValueError("one-variable check")
    _require_h_zero(h)
    F, dsq = instance.F, instance.delta_sq
    K = instance.rows * math.log(1.0 / dsq)
    cap = math.e * K * math.exp(K)

    from .potential import laplacian_phi_grid
    Zd = Q.nodes.reshape(-1, 1)
    Pi_d = pi_grid(F, Zd)
    hvals = h.eval_grid(Zd)
    xi_d = Pi_d @ hvals
    lap_phi = laplacian_phi_grid(F, Zd)
    lhs1 = float(np.real(Q.disk_integral(lap_phi * _vec_norm_sq(xi_d))))

    dbar_xi = _dbar_pi_fd(F, Q.nodes, fd_step) @ hvals + Pi_d @ h.dzbar(1).eval_grid(Zd)
    lhs2 = float(np.real(Q.disk_integral(_vec_norm_sq(dbar_xi))))

    Zc = Q.circle_nodes.reshape(-1, 1)
    xi_c = pi_grid(F, Zc) @ h.eval_grid(Zc)
    xi2 = float(np.real(Q.circle_mean(_vec_norm_sq(xi_c))))

    rep1 = EmbeddingReport(ratio=lhs1, bound=cap * xi2, passed=lhs1 <= cap * xi2 + tol)
    rep2 = EmbeddingReport(ratio=lhs2, bound=(1.0 + cap) * xi2,
                           passed=lhs2 <= (1.0 + cap) * xi2 + tol)
    return rep1, rep2


class FunctionalSplit(NamedTuple):
    """Boundary value of the dual functional and its area decomposition."""

    boundary_value: complex
    term_i: complex
    term_ii: complex
    term_iii: complex

    @property
    def area_value(self) -> complex:
        return self.term_i + self.term_ii + self.term_iii

    @property
    def split_residual(self) -> float:
        return abs(self.boundary_value - self.area_value)


def functional_L(instance: CoronaInstance, h: AntiPoly, Q: DiskQuadrature,
                 fd_step: float = 1e-5) -> FunctionalSplit:
    """The conjugate-linear functional on ``xi = Pi h`` and its three pieces.

    boundary = int_T <Phi g, h> dm, and over the disk

        I   = int <Phi F' Phi g, (d Pi) xi> dmu
        II  = int <dbar(Phi) g', xi> dmu
        III = int <dbar(Phi) g, dbar(xi)> dmu,

    which by Green's formula sum to the boundary value.  Derivatives of
    Pi and Phi enter through their closed forms; ``dbar xi`` is finite
    differenced as in :func:`xi_embedding_check`.
    """
    if instance.nvars != 1:
        raise ValueError("one-variable functional; slice polydisk data first")
    _require_h_zero(h)
    F, g = instance.F, instance.g

    Zc = Q.circle_nodes.reshape(-1, 1)
    vals_c = F.eval_grid(Zc)
    Gc = gram_grid(F, Zc)
    Phi_c = np.conj(np.swapaxes(vals_c, -1, -2)) @ np.linalg.inv(Gc)
    f0_c = Phi_c @ g.eval_grid(Zc)
    h_c = h.eval_grid(Zc)
    boundary = complex(Q.circle_mean(np.sum(np.conj(h_c) * f0_c, axis=(-2, -1))))

    Zd = Q.nodes.reshape(-1, 1)
    vals = F.eval_grid(Zd)
    adj = np.conj(np.swapaxes(vals, -1, -2))
    G = gram_grid(F, Zd)
    Ginv = np.linalg.inv(G)
    Phi = adj @ Ginv
    Pi = np.eye(F.cols, dtype=complex) - Phi @ vals
    Pi = 0.5 * (Pi + np.conj(np.swapaxes(Pi, -1, -2)))
    Fp = F.dz(1).eval_grid(Zd)
    dPi = -adj @ Ginv @ Fp @ Pi
    dbarPhi = Pi @ np.conj(np.swapaxes(Fp, -1, -2)) @ Ginv

    gv = g.eval_grid(Zd)
    gpv = g.dz(1).eval_grid(Zd)
    hv = h.eval_grid(Zd)
    xi = Pi @ hv
    dbar_xi = _dbar_pi_fd(F, Q.nodes, fd_step) @ hv + Pi @ h.dzbar(1).eval_grid(Zd)

    def pair(a, b):
        # <a, b> integrated over the disk
        return complex(Q.disk_integral(np.sum(np.conj(b) * a, axis=(-2, -1))))

    term_i = pair(Phi @ Fp @ Phi @ gv, dPi @ xi)
    term_ii = pair(dbarPhi @ gpv, xi)
    term_iii = pair(dbarPhi @ gv, dbar_xi)
    return FunctionalSplit(boundary, term_i, term_ii, term_iii)


def xi_circle_norm(instance: CoronaInstance, h: AntiPoly, Q: DiskQuadrature) -> float:
    """Boundary L2 norm of xi = Pi h."""
    Zc = Q.circle_nodes.reshape(-1, 1)
    xi_c = pi_grid(instance.F, Zc) @ h.eval_grid(Zc)
    return float(np.sqrt(np.real(Q.circle_mean(_vec_norm_sq(xi_c)))))


def functional_L_bidisk(instance: CoronaInstance, h: AntiPoly, var: int,
                        Q: DiskQuadrature, circle_count: int = 64,
                        fd_step: float = 1e-5) -> FunctionalSplit:
    """Variable-``var`` functional on the bidisk, averaged over the other circle.

    Slices the data at each node of the complementary circle, applies the
    one-variable functional in ``z_var`` and integrates.  Valid for
    witnesses ``xi = Pi h`` with h anti-analytic in both variables and
    strictly so in ``z_var``.
    """
    if instance.nvars != 2:
        raise ValueError("bidisk functional needs two variables")
    if var not in (1, 2):
        raise ValueError("var must be 1 or 2")
    other = 2 if var == 1 else 1
    wgrid = np.exp(2j * np.pi * np.arange(circle_count) / circle_count)
    acc = np.zeros(4, dtype=complex)
    for w in wgrid:
        Fs = instance.F.partial_eval(other, w)
        gs = instance.g.partial_eval(other, w)
        # slicing an anti-analytic h at z_other = w means conjugate substitution
        hs = AntiPoly(h.poly.partial_eval(other, np.conj(w)))
        sliced = CoronaInstance(Fs, gs, instance.delta_sq, instance.p,
                                f"{instance.name}|z{other}={w:.3f}")
        out = functional_L(sliced, hs, Q, fd_step)
        acc += np.array([out.boundary_value, out.term_i, out.term_ii, out.term_iii])
    acc /= circle_count
    return FunctionalSplit(*acc)
