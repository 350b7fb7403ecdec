"""Truncated Fourier analysis on the torus: Riesz projections, subspace
decompositions over the kernel bundle, outer functions, and empirical
projection norms.

A :class:`FourierTensor` is a vector-valued trigonometric polynomial on
the n-torus with coefficients on the symmetric index box
``[-B, B]^n``.  Analytic-in-one-variable subspaces are coefficient
masks; the bundle subspace ``Pi L^2`` is realized by pointwise
multiplication with the projection ``Pi(z)`` on an evaluation grid.  The
two kinds of projection do not commute for non-constant data, so the
orthogonal projections onto their intersections (the ``Q_j`` spaces) run
von Neumann alternating projections on the grid.

All closures are approximated by band-limited sections at the grid
resolution; convergence is the caller's to test by doubling the band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matpoly import MatPoly
from .pointwise import pi_grid


@dataclass(frozen=True)
class FourierTensor:
    """Vector trigonometric polynomial with indices in ``[-band, band]^nvars``.

    ``coeffs`` has shape ``(2 band + 1,)*nvars + (dim,)``; axis position
    ``i`` along a variable corresponds to frequency ``i - band``.  The
    l2 norm of the coefficients equals the boundary L2 norm (Parseval).
    """

    nvars: int
    band: int
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        want = (2 * self.band + 1,) * self.nvars + (self.dim,)
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != want:
            raise ValueError(f"coefficient array has shape {arr.shape}, expected {want}")
        object.__setattr__(self, "coeffs", arr)

    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int, band: int, dim: int) -> "FourierTensor":
        return cls(nvars, band, dim, np.zeros((2 * band + 1,) * nvars + (dim,), complex))

    @classmethod
    def from_terms(cls, nvars: int, band: int, dim: int, terms: dict) -> "FourierTensor":
        """Build from ``{frequency tuple: vector}``."""
        out = np.zeros((2 * band + 1,) * nvars + (dim,), complex)
        for idx, vec in terms.items():
            if len(idx) != nvars:
                raise ValueError(f"index {idx} has wrong length")
            if any(abs(k) > band for k in idx):
                raise ValueError(f"index {idx} exceeds band {band}")
            pos = tuple(k + band for k in idx)
            out[pos] = np.asarray(vec, complex).ravel()
        return cls(nvars, band, dim, out)

    def term(self, idx: tuple[int, ...]) -> np.ndarray:
        return self.coeffs[tuple(k + self.band for k in idx)]

    def norm2(self) -> float:
        return float(np.linalg.norm(self.coeffs.ravel()))

    def __add__(self, other: "FourierTensor") -> "FourierTensor":
        self._compat(other)
        return FourierTensor(self.nvars, self.band, self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "FourierTensor") -> "FourierTensor":
        self._compat(other)
        return FourierTensor(self.nvars, self.band, self.dim, self.coeffs - other.coeffs)

    def scale(self, c: complex) -> "FourierTensor":
        return FourierTensor(self.nvars, self.band, self.dim, c * self.coeffs)

    def _compat(self, other: "FourierTensor"):
        if (self.nvars, self.band, self.dim) != (other.nvars, other.band, other.dim):
            raise ValueError("tensors live on different index boxes")

    # ------------------------------------------------------------------
    # grid transport
    # ------------------------------------------------------------------
    def _grid_positions(self, N: int) -> np.ndarray:
        # DFT bin of each stored frequency -band..band
        return np.concatenate([np.arange(N - self.band, N), np.arange(0, self.band + 1)])

    def values_on_grid(self, grid_size: int) -> np.ndarray:
        """Evaluate on the uniform torus grid, shape ``(grid_size,)*nvars + (dim,)``."""
        N = grid_size
        if N < 2 * self.band + 2:
            raise ValueError("grid too coarse for the band")
        spec = np.zeros((N,) * self.nvars + (self.dim,), complex)
        pos = self._grid_positions(N)
        spec[np.ix_(*([pos] * self.nvars), np.arange(self.dim))] = self.coeffs
        axes = tuple(range(self.nvars))
        return np.fft.ifftn(spec, axes=axes) * (N ** self.nvars)

    @classmethod
    def from_grid(cls, values: np.ndarray, band: int) -> "FourierTensor":
        """Truncated inverse transform of grid samples (last axis = components)."""
        nvars = values.ndim - 1
        N = values.shape[0]
        if band > N // 2 - 1:
            raise ValueError("band exceeds grid Nyquist range")
        axes = tuple(range(nvars))
        spec = np.fft.fftn(values, axes=axes) / (N ** nvars)
        pos = np.concatenate([np.arange(N - band, N), np.arange(0, band + 1)])
        out = spec[np.ix_(*([pos] * nvars), np.arange(values.shape[-1]))]
        return cls(nvars, band, values.shape[-1], out)

    def lq_norm(self, q: float, grid_size: int | None = None) -> float:
        """Boundary Lq norm by uniform grid quadrature of the pointwise norm."""
        N = grid_size or max(4 * (self.band + 1), 64)
        vals = self.values_on_grid(N)
        point = np.sqrt(np.sum(np.abs(vals) ** 2, axis=-1))
        if q == math.inf:
            return float(np.max(point))
        return float(np.mean(point ** q) ** (1.0 / q))


# ----------------------------------------------------------------------
# coefficient masks: Riesz projections and (H^2)-perp decompositions
# ----------------------------------------------------------------------
def _axis_freqs(band: int) -> np.ndarray:
    return np.arange(-band, band + 1)


def riesz_project(x: FourierTensor, var: int, sign: str = "analytic") -> FourierTensor:
    """One-variable Riesz projection as a coefficient mask.

    ``analytic`` keeps frequencies >= 0 in the chosen variable,
    ``anti-analytic`` keeps frequencies < 0.  Idempotent and
    L2-contractive by construction.
    """
    if not 1 <= var <= x.nvars:
        raise ValueError(f"variable index {var} out of range")
    if sign not in ("analytic", "anti-analytic"):
        raise ValueError("sign must be 'analytic' or 'anti-analytic'")
    freqs = _axis_freqs(x.band)
    keep = freqs >= 0 if sign == "analytic" else freqs < 0
    shape = [1] * (x.nvars + 1)
    shape[var - 1] = freqs.size
    mask = keep.reshape(shape)
    return FourierTensor(x.nvars, x.band, x.dim, x.coeffs * mask)


def in_hperp(h: FourierTensor, tol: float = 0.0) -> bool:
    """Whether h is orthogonal to H^2: no all-nonnegative frequency support."""
    sub = h.coeffs[(slice(h.band, None),) * h.nvars]
    return bool(np.max(np.abs(sub)) <= tol)


def decompose_hperp(h: FourierTensor) -> list[FourierTensor]:
    """Split ``h in (H^2)-perp`` into per-variable anti-analytic pieces.

    ``h_k = (I - P_k) P_{k-1} ... P_1 h`` with ``P_j`` the mask onto
    H^2_j; the parts sum back to h exactly at the coefficient level and
    ``h_k`` has no frequency with ``k``-th index >= 0.
    """
    if not in_hperp(h):
        raise ValueError("h has an all-nonnegative coefficient: not in (H^2)-perp")
    parts = []
    rest = h
    for j in range(1, h.nvars + 1):
        keep = riesz_project(rest, j, "analytic")
        parts.append(rest - keep)
        rest = keep
    # rest is now supported on the all-nonnegative box, hence zero
    return parts


# ----------------------------------------------------------------------
# the bundle subspace Pi L^2 and the Q_j projections
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class GridContext:
    """Precomputed torus grid data for one symbol F."""

    F: MatPoly
    grid_size: int
    pi_values: np.ndarray = field(repr=False)   # (N,)*n + (m, m)

    @classmethod
    def build(cls, F: MatPoly, grid_size: int) -> "GridContext":
        N = grid_size
        circ = np.exp(2j * np.pi * np.arange(N) / N)
        grids = np.meshgrid(*([circ] * F.nvars), indexing="ij")
        Z = np.stack([g.ravel() for g in grids], axis=-1)
        Pi = pi_grid(F, Z).reshape((N,) * F.nvars + (F.cols, F.cols))
        return cls(F=F, grid_size=N, pi_values=Pi)

    def apply_pi(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.pi_values, values)


def default_grid_size(band: int, nvars: int) -> int:
    return 256 if nvars <= 2 else 64


def apply_pi(F: MatPoly, x: FourierTensor, grid_size: int | None = None,
             context: GridContext | None = None) -> FourierTensor:
    """Multiply by the bundle projection pointwise; truncates at the grid band."""
    N = grid_size or default_grid_size(x.band, x.nvars)
    ctx = context or GridContext.build(F, N)
    vals = ctx.apply_pi(x.values_on_grid(ctx.grid_size))
    return FourierTensor.from_grid(vals, ctx.grid_size // 2 - 1)


@dataclass(frozen=True)
class ProjectionResult:
    value: FourierTensor
    iterations: int
    converged: bool
    last_delta: float


def _analytic_mask_grid(values: np.ndarray, var: int, nvars: int) -> np.ndarray:
    """Grid-space projection onto functions analytic in one variable."""
    N = values.shape[0]
    axes = tuple(range(nvars))
    spec = np.fft.fftn(values, axes=axes)
    freqs = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    keep = freqs >= 0
    shape = [1] * values.ndim
    shape[var - 1] = N
    spec *= keep.reshape(shape)
    return np.fft.ifftn(spec, axes=axes)


def project_Qj(xi: FourierTensor, F: MatPoly, var: int, max_iter: int = 500,
               tol: float = 1e-6, grid_size: int | None = None,
               context: GridContext | None = None) -> ProjectionResult:
    """Orthogonal projection of ``xi`` onto ``Q_j = H^2_j  intersect  Pi L^2``.

    Alternates the coefficient mask onto H^2_j with pointwise
    multiplication by Pi until successive iterates differ by less than
    ``tol`` in L2.  Nonconvergence returns the best iterate with a flag.
    """
    N = grid_size or default_grid_size(xi.band, xi.nvars)
    ctx = context or GridContext.build(F, N)
    v = xi.values_on_grid(ctx.grid_size)
    scale = 1.0 / math.sqrt(ctx.grid_size ** xi.nvars)
    last_delta = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = _analytic_mask_grid(ctx.apply_pi(v), var, xi.nvars)
        last_delta = float(np.linalg.norm((w - v).ravel()) * scale)
        v = w
        if last_delta < tol:
            break
    out = FourierTensor.from_grid(v, ctx.grid_size // 2 - 1)
    return ProjectionResult(value=out, iterations=iterations,
                            converged=last_delta < tol, last_delta=last_delta)


@dataclass(frozen=True)
class KDecomposition:
    parts: list[FourierTensor]
    remainder: FourierTensor   # what survives all Q-projections
    converged: bool
    pi_invariance: float       # how far xi was from Pi xi on the grid

    @property
    def residual(self) -> float:
        return self.remainder.norm2()


def decompose_K(xi: FourierTensor, F: MatPoly, q: float = 2.0, max_iter: int = 500,
                tol: float = 1e-6, grid_size: int | None = None) -> KDecomposition:
    """Per-variable splitting of ``xi in K = clos(Pi (H^2)-perp)``.

    Peels off ``xi_j = (I - P_{Q_j})`` applied to the running remainder.
    Every split is orthogonal, so the parts plus the final remainder
    reconstruct xi and satisfy Pythagoras to the projection tolerance,
    and for general q each piece obeys the Riesz-norm growth bound
    C(q)^j.

    The final remainder ``P_{Q_n} ... P_{Q_1} xi`` vanishes when the
    bundle projection is constant, and stays small for mildly varying
    data; for strongly varying bundles it persists at a grid-independent
    size (a few percent of the norm in measured cases), because the
    one-variable Q-projections genuinely fail to commute there.  Callers
    must inspect ``remainder``/``residual`` rather than assume the parts
    alone reconstruct xi.
    """
    N = grid_size or default_grid_size(xi.band, xi.nvars)
    ctx = GridContext.build(F, N)
    v0 = xi.values_on_grid(N)
    inv = float(np.linalg.norm((ctx.apply_pi(v0) - v0).ravel())
                / math.sqrt(N ** xi.nvars))
    parts = []
    rest = xi
    ok = True
    for var in range(1, xi.nvars + 1):
        pr = project_Qj(rest, F, var, max_iter=max_iter, tol=tol, context=ctx)
        ok = ok and pr.converged
        big_rest = FourierTensor.from_grid(rest.values_on_grid(N), N // 2 - 1)
        parts.append(big_rest - pr.value)
        rest = pr.value
    return KDecomposition(parts=parts, remainder=rest, converged=ok,
                          pi_invariance=inv)


# ----------------------------------------------------------------------
# outer functions and the Hp multiplier trick
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class OuterFunction:
    """Outer function from prescribed boundary modulus.

    ``log_boundary`` holds the analytic completion ``u + i ũ`` of
    ``u = log(modulus)`` on the sample grid, so canonical powers
    ``power(s) = exp(s (u + i ũ))`` are single-valued and outer.
    """

    boundary_samples: np.ndarray
    analytic_coeffs: np.ndarray
    log_boundary: np.ndarray = field(repr=False)

    def power(self, s: float) -> np.ndarray:
        return np.exp(s * self.log_boundary)

    def value_at_zero(self) -> complex:
        return complex(self.analytic_coeffs[0])


def outer_function(modulus: np.ndarray) -> OuterFunction:
    """Outer function with the given positive boundary modulus samples.

    The harmonic conjugate comes from the one-sided Fourier multiplier,
    normalized so the value at the origin is real positive.
    """
    m = np.asarray(modulus, dtype=float)
    if m.ndim != 1:
        raise ValueError("modulus must be a 1-d sample vector")
    if np.min(m) < 1e-8:
        raise ValueError("modulus samples must stay >= 1e-8 for log-integrability")
    N = m.size
    u_hat = np.fft.fft(np.log(m)) / N
    a = np.zeros(N, dtype=complex)
    a[0] = u_hat[0]
    a[1:N // 2] = 2.0 * u_hat[1:N // 2]
    # analytic completion u + i(conjugate); Nyquist bin dropped for odd symmetry
    log_b = np.fft.ifft(a) * N
    boundary = np.exp(log_b)
    coeffs = np.fft.fft(boundary) / N
    return OuterFunction(boundary_samples=boundary, analytic_coeffs=coeffs,
                         log_boundary=log_b)


def _pointwise_norm(samples: np.ndarray) -> np.ndarray:
    s = np.asarray(samples)
    if s.ndim == 1:
        return np.abs(s)
    return np.sqrt(np.sum(np.abs(s) ** 2, axis=-1))


def _lp(samples: np.ndarray, p: float) -> float:
    pt = _pointwise_norm(samples)
    if p == math.inf:
        return float(np.max(pt))
    return float(np.mean(pt ** p) ** (1.0 / p))


@dataclass(frozen=True)
class MultiplierReport:
    p: float
    q: float
    identity_value: float      # the exactly-predicted transformed 2-norm
    identity_expected: float
    identity_error: float
    holder_value: float        # transformed 2-norm of the partner
    holder_bound: float
    passed: bool


def hp_multiplier_pair(g: np.ndarray, xi: np.ndarray, p: float,
                       tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray, MultiplierReport]:
    """Scalar outer multipliers that move an (g, xi) pairing into L2.

    For ``1 <= p < 2`` the outer function of ``|g|`` rebalances:
    ``g~ = g_out^{p/2-1} g`` has 2-norm ``|g|_p^{p/2}`` exactly, while
    ``xi~ = conj(g_out)^{1-p/2} xi`` obeys a Hoelder bound.  For
    ``p > 2`` the roles swap with the outer function of ``|xi|``; at the
    endpoints p = 1 and p = infinity the same recipe with exponents
    -1/2 applies.
    """
    g = np.asarray(g, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    if p == 2.0:
        raise ValueError("p = 2 needs no multiplier")
    q = math.inf if p == 1.0 else (1.0 if p == math.inf else p / (p - 1.0))

    if p == 1.0 or 1.0 < p < 2.0:
        out = outer_function(_pointwise_norm(g))
        s = p / 2.0 - 1.0
        g_t = out.power(s)[..., None] * g if g.ndim > 1 else out.power(s) * g
        x_s = np.conj(out.power(-s))
        xi_t = x_s[..., None] * xi if xi.ndim > 1 else x_s * xi
        expected = _lp(g, p) ** (p / 2.0)
        value = _lp(g_t, 2.0)
        holder_bound = _lp(xi, q) * _lp(g, p) ** (p * p / (2.0 * (2.0 - p)))
        holder_value = _lp(xi_t, 2.0)
    elif p == math.inf or p > 2.0:
        out = outer_function(_pointwise_norm(xi))
        s = -0.5 if p == math.inf else q / 2.0 - 1.0
        xi_t = out.power(s)[..., None] * xi if xi.ndim > 1 else out.power(s) * xi
        g_s = np.conj(out.power(-s))
        g_t = g_s[..., None] * g if g.ndim > 1 else g_s * g
        qq = 1.0 if p == math.inf else q
        expected = _lp(xi, qq) ** (qq / 2.0)
        value = _lp(xi_t, 2.0)
        holder_bound = _lp(g, p) * _lp(xi, qq) ** (qq / 2.0)
        holder_value = _lp(g_t, 2.0)
    else:
        raise ValueError(f"p = {p} out of range")

    err = abs(value - expected)
    rep = MultiplierReport(p=p, q=q, identity_value=value, identity_expected=expected,
                           identity_error=err, holder_value=holder_value,
                           holder_bound=holder_bound,
                           passed=err < tol and holder_value <= holder_bound + tol)
    return g_t, xi_t, rep


# ----------------------------------------------------------------------
# empirical Riesz projection norms
# ----------------------------------------------------------------------
def _riesz_ratio(coeffs: np.ndarray, band: int, p: float, grid: int) -> float:
    """||P_+ x||_p / ||x||_p for a scalar trig polynomial given by coefficients."""
    N = grid
    spec = np.zeros(N, complex)
    spec[:band + 1] = coeffs[band:]
    spec[N - band:] = coeffs[:band]
    x = np.fft.ifft(spec) * N
    spec_plus = spec.copy()
    spec_plus[N // 2:] = 0.0
    xp = np.fft.ifft(spec_plus) * N
    nx = np.mean(np.abs(x) ** p) ** (1.0 / p)
    npx = np.mean(np.abs(xp) ** p) ** (1.0 / p)
    return float(npx / nx) if nx > 0 else 0.0


def _dual_map(y: np.ndarray, p: float) -> np.ndarray:
    """Pointwise duality map |y|^{p-2} y, zero-safe for p < 2."""
    mag = np.abs(y)
    safe = np.where(mag > 1e-14, mag, 1.0)
    return np.where(mag > 1e-14, safe ** (p - 2.0) * y, 0.0)


def _ascent_step(coeffs: np.ndarray, band: int, p: float, q: float, grid: int) -> np.ndarray:
    """One nonlinear power-method step for the restricted projection norm."""
    N = grid
    spec = np.zeros(N, complex)
    spec[:band + 1] = coeffs[band:]
    spec[N - band:] = coeffs[:band]
    x = np.fft.ifft(spec) * N
    sp = np.fft.fft(x) / N
    sp[N // 2:] = 0.0
    y = np.fft.ifft(sp) * N
    sp2 = np.fft.fft(_dual_map(y, p)) / N    # duality map Lp -> Lq
    sp2[N // 2:] = 0.0                        # P_+ is self-adjoint on L2
    z = np.fft.ifft(sp2) * N
    spec3 = np.fft.fft(_dual_map(z, q)) / N
    out = np.zeros(2 * band + 1, complex)
    out[band:] = spec3[:band + 1]
    out[:band] = spec3[N - band:]
    nrm = np.linalg.norm(out)
    return out / nrm if nrm > 0 else out


def riesz_norm_empirical(p: float, band: int = 128, trials: int = 200,
                         seed: int = 0, grid: int = 4096,
                         ascent_steps: int = 40) -> float:
    """Empirical lower estimate of the Lp Riesz projection norm.

    Takes the sup of ``||P_+ x||_p / ||x||_p`` over random Gaussian trig
    polynomials of the given band, a deterministic family of truncated
    Poisson-type kernels concentrating at the boundary singularity, and
    nonlinear power-method ascents started from the best candidate.
    Never exceeds 1/sin(pi/p) beyond quadrature noise; the band caps how
    closely the sup approaches it (band 32 tops out near 1.18 at p = 4,
    band 128 near 1.23).
    """
    if not 1.0 < p < math.inf:
        raise ValueError("empirical norm defined for 1 < p < infinity")
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)
    k = np.arange(-band, band + 1)

    candidates = []
    for _ in range(trials):
        c = rng.standard_normal(2 * band + 1) + 1j * rng.standard_normal(2 * band + 1)
        candidates.append(c)
    # analytic member pins the ratio at exactly 1
    e0 = np.zeros(2 * band + 1, complex)
    e0[band] = 1.0
    candidates.append(e0)
    # Poisson-type kernels with asymmetric weights push toward the extremal
    for r in (0.5, 0.7, 0.85, 0.95, 0.99):
        for t in (-1.0, -0.5, 0.0, 0.5, 1.0):
            c = r ** np.abs(k) * np.where(k >= 0, 1.0, t).astype(complex)
            candidates.append(c)
            candidates.append(c * np.exp(1j * math.pi * k / 3.0))

    best = 0.0
    best_c = None
    for c in candidates:
        ratio = _riesz_ratio(c, band, p, grid)
        if ratio > best:
            best, best_c = ratio, c
    if best_c is not None and p != 2.0:
        c = best_c / np.linalg.norm(best_c)
        for _ in range(ascent_steps):
            c = _ascent_step(c, band, p, q, grid)
            best = max(best, _riesz_ratio(c, band, p, grid))
    return best
