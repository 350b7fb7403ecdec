"""Pointwise geometry of the corona data on the (poly)disk.

For an r-by-m analytic symbol ``F`` with ``delta^2 I <= F F* <= I`` the
basic objects are the Gram matrix ``G = F F*``, the pointwise right
inverse ``Phi = F* G^{-1}`` (so ``F Phi = I``), and the orthogonal
projection ``Pi = I - F* G^{-1} F`` onto ``ker F(z)``.  This module
evaluates them on grids, estimates the corona constants, and verifies
the differential identities relating their Wirtinger derivatives by
central finite differences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatPoly


class GramSingularError(ValueError):
    """The Gram matrix F F* dips below the tolerated spectral floor."""

    def __init__(self, lambda_min: float, message: str | None = None):
        self.lambda_min = float(lambda_min)
        super().__init__(message or f"Gram matrix near singular: lambda_min={lambda_min:.3e}")


@dataclass(frozen=True)
class CoronaInstance:
    """A full corona problem: data F, right-hand side g, certified delta^2."""

    F: MatPoly
    g: MatPoly
    delta_sq: float
    p: float = 2.0
    name: str = "instance"

    def __post_init__(self):
        if not 0.0 < self.delta_sq <= 1.0:
            raise ValueError(f"delta_sq must lie in (0, 1], got {self.delta_sq}")
        if self.g.nvars != self.F.nvars:
            raise ValueError("F and g must share the variable count")
        if self.g.rows != self.F.rows or self.g.cols != 1:
            raise ValueError(
                f"g must be a {self.F.rows}x1 column, got {self.g.shape}")

    @property
    def rows(self) -> int:
        return self.F.rows

    @property
    def cols(self) -> int:
        return self.F.cols

    @property
    def nvars(self) -> int:
        return self.F.nvars


@dataclass(frozen=True)
class IdentityResidualReport:
    """Maximum residual per differential identity over the evaluated grid."""

    residuals: dict[str, float] = field(default_factory=dict)
    grid_size: int = 0
    h_step: float = 0.0

    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


# ----------------------------------------------------------------------
# batched pointwise maps
# ----------------------------------------------------------------------
def gram_grid(F: MatPoly, Z) -> np.ndarray:
    """Gram matrices ``F(z) F(z)*`` for a batch of points, shape (..., r, r)."""
    vals = F.eval_grid(Z)
    g = vals @ np.conj(np.swapaxes(vals, -1, -2))
    # symmetrize to kill rounding skew before any eigen/Cholesky work
    return 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))


def gram(F: MatPoly, z) -> np.ndarray:
    """Gram matrix at a single point; Hermitian positive semidefinite."""
    v = F.eval(z)
    g = v @ v.conj().T
    return 0.5 * (g + g.conj().T)


def _guard_lambda_min(G: np.ndarray, delta_sq: float | None):
    if delta_sq is None:
        return
    lmin = float(np.min(np.linalg.eigvalsh(G)))
    if lmin < 0.5 * delta_sq:
        raise GramSingularError(lmin)


def phi_grid(F: MatPoly, Z, delta_sq: float | None = None) -> np.ndarray:
    """Pointwise right inverse ``Phi = F* (F F*)^{-1}``, shape (..., m, r)."""
    vals = F.eval_grid(Z)
    G = vals @ np.conj(np.swapaxes(vals, -1, -2))
    _guard_lambda_min(G, delta_sq)
    return np.conj(np.swapaxes(vals, -1, -2)) @ np.linalg.inv(G)


def phi_map(F: MatPoly, delta_sq: float, z) -> np.ndarray:
    """Phi at a single point, guarded by ``lambda_min >= delta_sq / 2``."""
    Z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(1, -1)
    return phi_grid(F, Z, delta_sq)[0]


def pi_grid(F: MatPoly, Z, delta_sq: float | None = None) -> np.ndarray:
    """Kernel-bundle projection ``Pi = I - F*(FF*)^{-1}F``, shape (..., m, m)."""
    vals = F.eval_grid(Z)
    G = vals @ np.conj(np.swapaxes(vals, -1, -2))
    _guard_lambda_min(G, delta_sq)
    adj = np.conj(np.swapaxes(vals, -1, -2))
    P = np.broadcast_to(np.eye(F.cols, dtype=complex), vals.shape[:-2] + (F.cols, F.cols)).copy()
    P -= adj @ np.linalg.solve(G, vals)
    # exact Hermiticity helps the projection identities downstream
    return 0.5 * (P + np.conj(np.swapaxes(P, -1, -2)))


def pi_map(F: MatPoly, delta_sq: float, z) -> np.ndarray:
    Z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(1, -1)
    return pi_grid(F, Z, delta_sq)[0]


# ----------------------------------------------------------------------
# polydisk sampling and the corona constants
# ----------------------------------------------------------------------
def polydisk_grid(nvars: int, density: int, rmax: float = 1.0) -> np.ndarray:
    """Sample grid on the closed polydisk, shape (npoints, nvars).

    Per variable: ``density`` radii from 0 to ``rmax`` (both included)
    crossed with ``2 * density`` angles.  The center is kept once.
    """
    radii = np.linspace(0.0, rmax, density)
    angles = np.exp(2j * np.pi * np.arange(2 * density) / (2 * density))
    pts = np.unique(np.round((radii[:, None] * angles[None, :]).ravel(), 15))
    if nvars == 1:
        return pts.reshape(-1, 1)
    grids = np.meshgrid(*([pts] * nvars), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _lambda_extremes(F: MatPoly, Z, chunk: int = 200_000) -> tuple[float, float]:
    lmin, lmax = np.inf, -np.inf
    for start in range(0, Z.shape[0], chunk):
        G = gram_grid(F, Z[start:start + chunk])
        ev = np.linalg.eigvalsh(G)
        lmin = min(lmin, float(ev[..., 0].min()))
        lmax = max(lmax, float(ev[..., -1].max()))
    return lmin, lmax


def delta_range(F: MatPoly, grid_density: int = 8,
                max_points: int = 600_000) -> tuple[float, float]:
    """Grid estimates of ``min lambda_min(FF*)`` and ``max lambda_max(FF*)``.

    Sweeps the closed polydisk (interior and boundary samples), doubling
    the per-variable density until the relative change of both extremes
    drops below 1e-4.  The results are estimates: the minimum is an upper
    bound for the true infimum, the maximum a lower bound for the
    supremum.

    Raises :class:`GramSingularError` when the Gram matrix is numerically
    singular somewhere (corona condition failure).
    """
    if grid_density < 8:
        raise ValueError("grid_density must be at least 8")
    density = grid_density
    prev = None
    while True:
        Z = polydisk_grid(F.nvars, density)
        est = _lambda_extremes(F, Z)
        if est[0] < 1e-12:
            raise GramSingularError(est[0], "corona condition fails: FF* numerically singular on the grid")
        if prev is not None:
            rel = max(abs(est[0] - prev[0]) / max(abs(prev[0]), 1e-300),
                      abs(est[1] - prev[1]) / max(abs(prev[1]), 1e-300))
            if rel < 1e-4:
                return est
        prev = est
        next_density = 2 * density
        n_pts = (next_density * 2 * next_density) ** F.nvars
        if n_pts > max_points:
            return est
        density = next_density


# ----------------------------------------------------------------------
# finite-difference identity checks (Wirtinger calculus)
# ----------------------------------------------------------------------
def _fd_wirtinger(fun, Z, var: int, h: float):
    """Central-difference Wirtinger derivatives of a matrix-valued map.

    Returns ``(d, dbar)`` with ``d = (d/dx - i d/dy)/2`` applied in the
    chosen variable.
    """
    def shifted(offset):
        Zs = np.array(Z, dtype=complex)
        Zs[..., var] = Zs[..., var] + offset
        return fun(Zs)

    dx = (shifted(+h) - shifted(-h)) / (2.0 * h)
    dy = (shifted(+1j * h) - shifted(-1j * h)) / (2.0 * h)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def _fro(A: np.ndarray) -> np.ndarray:
    """Batched Frobenius norm over the trailing matrix axes."""
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(-2, -1)))


def check_identities_grid(F: MatPoly, Z, h_step: float = 1e-5,
                          var: int = 1) -> IdentityResidualReport:
    """Verify the derivative identities of Pi and Phi on a batch of points.

    All first derivatives are taken by central finite differences with the
    given step; the mixed derivative of Phi is the finite difference of
    the (separately verified) closed form of its anti-analytic derivative.
    Points must stay at distance ``2 * h_step`` from the boundary.
    """
    if h_step < 1e-9:
        raise ValueError("finite-difference step underflow (h_step < 1e-9)")
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    if np.any(np.abs(Z) > 1.0 - 2.0 * h_step):
        raise ValueError("identity checks need interior points (|z_j| <= 1 - 2 h_step)")
    j = var - 1

    vals = F.eval_grid(Z)
    adj = np.conj(np.swapaxes(vals, -1, -2))
    G = gram_grid(F, Z)
    Ginv = np.linalg.inv(G)
    Phi = adj @ Ginv
    m = F.cols
    Pi = np.eye(m, dtype=complex) - Phi @ vals
    Pi = 0.5 * (Pi + np.conj(np.swapaxes(Pi, -1, -2)))
    dF = F.dz(var)
    Fp = dF.eval_grid(Z)
    Fp_adj = np.conj(np.swapaxes(Fp, -1, -2))

    dPi_formula = -adj @ Ginv @ Fp @ Pi
    dbarPhi_formula = Pi @ Fp_adj @ Ginv

    dPi_fd, dbarPi_fd = _fd_wirtinger(lambda W: pi_grid(F, W), Z, j, h_step)
    _, dbarPhi_fd = _fd_wirtinger(lambda W: phi_grid(F, W), Z, j, h_step)

    def dbar_phi_closed(W):
        vW = F.eval_grid(W)
        aW = np.conj(np.swapaxes(vW, -1, -2))
        GW = vW @ aW
        GinvW = np.linalg.inv(GW)
        PiW = np.eye(m, dtype=complex) - aW @ GinvW @ vW
        FpW = dF.eval_grid(W)
        return PiW @ np.conj(np.swapaxes(FpW, -1, -2)) @ GinvW

    ddbarPhi_fd, _ = _fd_wirtinger(dbar_phi_closed, Z, j, h_step)
    ddbarPhi_formula = (dPi_formula @ dbarPhi_formula
                        + np.conj(np.swapaxes(dPi_formula, -1, -2)) @ Phi @ Fp @ Phi)

    res = {
        "dPi": float(np.max(_fro(dPi_fd - dPi_formula))),
        "dbarPhi": float(np.max(_fro(dbarPhi_fd - dbarPhi_formula))),
        "ddbarPhi": float(np.max(_fro(ddbarPhi_fd - ddbarPhi_formula))),
        "Pi_dPi": float(np.max(_fro(Pi @ dPi_fd))),
        "dPi_Pi": float(np.max(_fro(dPi_fd @ Pi - dPi_fd))),
        "dbarPi_Pi": float(np.max(_fro(dbarPi_fd @ Pi))),
        "Pi_dbarPi": float(np.max(_fro(Pi @ dbarPi_fd - dbarPi_fd))),
    }
    return IdentityResidualReport(residuals=res, grid_size=int(np.prod(Z.shape[:-1])),
                                  h_step=h_step)


def check_identities(F: MatPoly, z, h_step: float = 1e-5,
                     var: int = 1) -> IdentityResidualReport:
    """Single-point version of :func:`check_identities_grid`."""
    Z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(1, -1)
    return check_identities_grid(F, Z, h_step=h_step, var=var)


def identity_check_disk_grid(density: int = 32, rmax: float = 0.9) -> np.ndarray:
    """Polar grid of interior disk points used by the identity suite."""
    radii = np.linspace(0.05, rmax, density)
    angles = np.exp(2j * np.pi * np.arange(density) / density)
    return (radii[:, None] * angles[None, :]).ravel().reshape(-1, 1)
