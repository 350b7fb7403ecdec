"""Subharmonic potentials built from the Gram matrix of the corona data.

With ``G = F F*`` and a certified lower bound ``delta^2 <= lambda_min(G)``
the three potentials are

    phi    = tr log(delta^{-2} G) = log(delta^{-2r} det G),
    lambda = tr(G^{-1}),
    psi    = lambda + delta^{-2} phi,

squeezed into ``0 <= phi <= K := log(1/delta^{2r})`` and
``0 <= psi <= L := (2/delta^2) K``.  Their normalized Laplacians
(``(1/4) Laplace``, taken per variable on the polydisk) have closed
forms whose lower bounds ``|d Pi|^2`` and ``|Phi F' Phi|^2`` drive the
Carleson-type embeddings; this module evaluates the closed forms and
verifies the bounds on grids.

The exponent in K uses r = dim of the target space (the row count of
F); the per-variable Laplacian gap is checked for each variable
separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matpoly import MatPoly
from .pointwise import CoronaInstance, gram_grid, polydisk_grid


@dataclass(frozen=True)
class PotentialReport:
    """Grid extrema of the potentials and their worst Laplacian gaps."""

    K: float
    L: float
    min_phi: float
    max_phi: float
    min_psi: float
    max_psi: float
    worst_gap_phi: float
    worst_gap_psi: float
    grid_points: int
    hypothesis_ok: bool   # delta^2 <= 1/e; informational only when False
    passed: bool


def det_derivative_check(A, t: float, h: float = 1e-5, dA=None) -> float:
    """Residual of the determinant-derivative identity along a matrix path.

    ``A`` maps a real parameter to a square matrix.  Compares the central
    finite difference of ``det A(t)`` against ``det(A) tr(A^{-1} A')``;
    ``A'`` comes from ``dA`` when given, otherwise from the same central
    difference.
    """
    At = np.asarray(A(t), dtype=complex)
    if At.shape[0] != At.shape[1]:
        raise ValueError("matrix path must be square")
    fd_det = (np.linalg.det(A(t + h)) - np.linalg.det(A(t - h))) / (2.0 * h)
    Ap = np.asarray(dA(t), dtype=complex) if dA is not None else \
        (np.asarray(A(t + h), dtype=complex) - np.asarray(A(t - h), dtype=complex)) / (2.0 * h)
    formula = np.linalg.det(At) * np.trace(np.linalg.solve(At, Ap))
    return float(abs(fd_det - formula))


def _logdet_hermitian(G: np.ndarray) -> np.ndarray:
    """Batched log det of Hermitian positive definite matrices via Cholesky."""
    C = np.linalg.cholesky(G)
    diag = np.real(np.diagonal(C, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log(diag), axis=-1)


def potentials_grid(F: MatPoly, delta_sq: float, Z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched ``(phi, lambda, psi)`` on a set of points."""
    G = gram_grid(F, Z)
    r = F.rows
    try:
        logdet = _logdet_hermitian(G)
    except np.linalg.LinAlgError as e:
        raise ValueError("Gram determinant not positive on the grid") from e
    phi = r * np.log(1.0 / delta_sq) + logdet
    lam = np.real(np.trace(np.linalg.inv(G), axis1=-2, axis2=-1))
    psi = lam + phi / delta_sq
    return phi, lam, psi


def potentials_at(F: MatPoly, delta_sq: float, z) -> tuple[float, float, float]:
    Z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(1, -1)
    phi, lam, psi = potentials_grid(F, delta_sq, Z)
    return float(phi[0]), float(lam[0]), float(psi[0])


def _grad_pieces(F: MatPoly, Z, var: int):
    """Shared factors for the Laplacian closed forms in one variable."""
    vals = F.eval_grid(Z)
    adj = np.conj(np.swapaxes(vals, -1, -2))
    G = gram_grid(F, Z)
    Ginv = np.linalg.inv(G)
    Phi = adj @ Ginv
    Pi = np.eye(F.cols, dtype=complex) - Phi @ vals
    Pi = 0.5 * (Pi + np.conj(np.swapaxes(Pi, -1, -2)))
    Fp = F.dz(var).eval_grid(Z)
    return Ginv, Phi, Pi, Fp


def laplacian_phi_grid(F: MatPoly, Z, var: int = 1) -> np.ndarray:
    """Closed form ``tr[(FF*)^{-1} F' Pi (F')*]`` of the phi Laplacian."""
    Ginv, _, Pi, Fp = _grad_pieces(F, Z, var)
    M = Ginv @ Fp @ Pi @ np.conj(np.swapaxes(Fp, -1, -2))
    return np.real(np.trace(M, axis1=-2, axis2=-1))


def laplacian_phi(F: MatPoly, z, var: int = 1) -> float:
    Z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(1, -1)
    return float(laplacian_phi_grid(F, Z, var)[0])


def laplacian_psi_grid(F: MatPoly, delta_sq: float, Z, var: int = 1) -> np.ndarray:
    """Closed form of the psi Laplacian in one variable.

    psi = lambda + delta^{-2} phi with
    lap(lambda) = tr[Phi* (F')* G^{-1} F' Phi] - tr[G^{-1} F' Pi (F')* G^{-1}].
    """
    Ginv, Phi, Pi, Fp = _grad_pieces(F, Z, var)
    Fp_adj = np.conj(np.swapaxes(Fp, -1, -2))
    t1 = np.real(np.trace(np.conj(np.swapaxes(Phi, -1, -2)) @ Fp_adj @ Ginv @ Fp @ Phi,
                          axis1=-2, axis2=-1))
    t2 = np.real(np.trace(Ginv @ Fp @ Pi @ Fp_adj @ Ginv, axis1=-2, axis2=-1))
    t3 = np.real(np.trace(Ginv @ Fp @ Pi @ Fp_adj, axis1=-2, axis2=-1))
    return t1 - t2 + t3 / delta_sq


def _spec_norm_sq(A: np.ndarray) -> np.ndarray:
    """Batched squared spectral norm via the top eigenvalue of A A*."""
    AA = A @ np.conj(np.swapaxes(A, -1, -2))
    return np.linalg.eigvalsh(AA)[..., -1]


def chart_bounds(delta_sq: float, r: int) -> tuple[float, float]:
    """The sup bounds K and L for phi and psi."""
    K = r * np.log(1.0 / delta_sq)
    return float(K), float(2.0 * K / delta_sq)


def verify_potentials(instance: CoronaInstance, grid_density: int = 24) -> PotentialReport:
    """Grid sweep of the potential bounds and Laplacian gaps.

    Passes iff phi and psi stay inside their [0, K] / [0, L] boxes and the
    per-variable Laplacians dominate ``|d Pi|^2`` resp. ``|Phi F' Phi|^2``,
    all with 1e-8 slack.  For ``delta^2 > 1/e`` the report is
    informational only.
    """
    F, dsq = instance.F, instance.delta_sq
    K, L = chart_bounds(dsq, F.rows)
    Z = polydisk_grid(F.nvars, grid_density)
    phi, _, psi = potentials_grid(F, dsq, Z)

    worst_gap_phi = np.inf
    worst_gap_psi = np.inf
    for var in range(1, F.nvars + 1):
        lap_phi = laplacian_phi_grid(F, Z, var)
        lap_psi = laplacian_psi_grid(F, dsq, Z, var)
        Ginv, Phi, Pi, Fp = _grad_pieces(F, Z, var)
        dPi = -np.conj(np.swapaxes(F.eval_grid(Z), -1, -2)) @ Ginv @ Fp @ Pi
        gap_phi = lap_phi - _spec_norm_sq(dPi)
        gap_psi = lap_psi - _spec_norm_sq(Phi @ Fp @ Phi)
        worst_gap_phi = min(worst_gap_phi, float(np.min(gap_phi)))
        worst_gap_psi = min(worst_gap_psi, float(np.min(gap_psi)))

    tol = 1e-8
    ok = (worst_gap_phi >= -tol and worst_gap_psi >= -tol
          and float(np.min(phi)) >= -tol and float(np.max(phi)) <= K + tol
          and float(np.min(psi)) >= -tol and float(np.max(psi)) <= L + tol)
    return PotentialReport(
        K=K, L=L,
        min_phi=float(np.min(phi)), max_phi=float(np.max(phi)),
        min_psi=float(np.min(psi)), max_psi=float(np.max(psi)),
        worst_gap_phi=worst_gap_phi, worst_gap_psi=worst_gap_psi,
        grid_points=Z.shape[0],
        hypothesis_ok=bool(dsq <= 1.0 / np.e + 1e-15),
        passed=ok,
    )
