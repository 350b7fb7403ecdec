"""Matrix-valued analytic polynomials in several complex variables.

A polynomial is stored sparsely as a map from multi-indices (one
non-negative integer exponent per variable) to dense complex coefficient
matrices of a fixed shape.  This is the common representation for the
corona data ``F`` (a wide matrix symbol), the right-hand side ``g`` (a
column), and derived symbols such as derivatives.

Anti-analytic objects (conjugate transposes of analytic symbols,
polynomials in ``conj(z)``) are deliberately *not* MatPoly instances:
they exist either as pointwise values (``adjoint_eval``) or as the
separate :class:`AntiPoly` wrapper, keeping the analytic/anti-analytic
distinction visible in the types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

MultiIndex = tuple[int, ...]

_ZERO_TOL = 0.0  # coefficients are dropped only when exactly zero


def _as_index(alpha, nvars: int) -> MultiIndex:
    idx = tuple(int(a) for a in alpha)
    if len(idx) != nvars:
        raise ValueError(f"multi-index {idx} has length {len(idx)}, expected {nvars}")
    if any(a < 0 for a in idx):
        raise ValueError(f"multi-index {idx} has a negative entry")
    return idx


@dataclass(frozen=True)
class MatPoly:
    """Sparse matrix-valued polynomial ``P(z) = sum_alpha C_alpha z^alpha``.

    Values are immutable after construction; every operation returns a new
    instance, so evaluation on many grid points in parallel needs no
    coordination.
    """

    rows: int
    cols: int
    nvars: int
    coeffs: dict[MultiIndex, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.nvars < 1:
            raise ValueError("rows, cols and nvars must be positive")
        clean: dict[MultiIndex, np.ndarray] = {}
        for alpha, mat in self.coeffs.items():
            idx = _as_index(alpha, self.nvars)
            arr = np.asarray(mat, dtype=complex)
            if arr.shape != (self.rows, self.cols):
                raise ValueError(
                    f"coefficient at {idx} has shape {arr.shape}, "
                    f"expected {(self.rows, self.cols)}"
                )
            if np.any(arr != 0):
                arr = arr.copy()
                arr.flags.writeable = False
                clean[idx] = arr
        object.__setattr__(self, "coeffs", clean)

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, rows: int, cols: int, nvars: int) -> "MatPoly":
        return cls(rows, cols, nvars, {})

    @classmethod
    def constant(cls, matrix, nvars: int) -> "MatPoly":
        mat = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(mat.shape[0], mat.shape[1], nvars, {(0,) * nvars: mat})

    @classmethod
    def variable(cls, j: int, nvars: int) -> "MatPoly":
        """The scalar monomial ``z_j`` (j is 1-based)."""
        if not 1 <= j <= nvars:
            raise ValueError(f"variable index {j} out of range 1..{nvars}")
        alpha = tuple(1 if k == j - 1 else 0 for k in range(nvars))
        return cls(1, 1, nvars, {alpha: np.array([[1.0 + 0j]])})

    @classmethod
    def random(cls, rows: int, cols: int, nvars: int, degree: int,
               rng: np.random.Generator, scale: float = 1.0) -> "MatPoly":
        """Dense random polynomial with standard complex Gaussian coefficients."""
        coeffs = {}
        for alpha in np.ndindex(*((degree + 1,) * nvars)):
            mat = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            coeffs[alpha] = scale * mat / np.sqrt(2.0)
        return cls(rows, cols, nvars, coeffs)

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def degrees(self) -> tuple[int, ...]:
        """Maximum exponent per variable (all zeros for the zero polynomial)."""
        if not self.coeffs:
            return (0,) * self.nvars
        return tuple(max(a[j] for a in self.coeffs) for j in range(self.nvars))

    def degree(self) -> int:
        return max(self.degrees())

    def coeff(self, alpha) -> np.ndarray:
        idx = _as_index(alpha, self.nvars)
        if idx in self.coeffs:
            return self.coeffs[idx]
        return np.zeros((self.rows, self.cols), dtype=complex)

    def l2_norm(self) -> float:
        """Boundary L2 norm over the torus; by Parseval the coefficient l2 norm."""
        if not self.coeffs:
            return 0.0
        return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c in self.coeffs.values())))

    # ------------------------------------------------------------------
    # algebra
    # ------------------------------------------------------------------
    def _check_same_space(self, other: "MatPoly"):
        if self.nvars != other.nvars:
            raise ValueError("operands live in different variable counts")

    def __add__(self, other: "MatPoly") -> "MatPoly":
        self._check_same_space(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        coeffs = {a: c.copy() for a, c in self.coeffs.items()}
        for a, c in other.coeffs.items():
            coeffs[a] = coeffs.get(a, 0) + c
        return MatPoly(self.rows, self.cols, self.nvars, coeffs)

    def __neg__(self) -> "MatPoly":
        return self.scale(-1.0)

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (-other)

    def scale(self, c: complex) -> "MatPoly":
        return MatPoly(self.rows, self.cols, self.nvars,
                       {a: c * m for a, m in self.coeffs.items()})

    def mul(self, other: "MatPoly") -> "MatPoly":
        """Matrix product by coefficient convolution: eval(P.mul(Q), z) = P(z) Q(z)."""
        self._check_same_space(other)
        if self.cols != other.rows:
            raise ValueError(
                f"inner dimensions differ: {self.shape} times {other.shape}")
        coeffs: dict[MultiIndex, np.ndarray] = {}
        for a, ca in self.coeffs.items():
            for b, cb in other.coeffs.items():
                key = tuple(x + y for x, y in zip(a, b))
                prod = ca @ cb
                if key in coeffs:
                    coeffs[key] = coeffs[key] + prod
                else:
                    coeffs[key] = prod
        return MatPoly(self.rows, other.cols, self.nvars, coeffs)

    def dz(self, j: int) -> "MatPoly":
        """Exact derivative with respect to the variable ``z_j`` (j is 1-based)."""
        if not 1 <= j <= self.nvars:
            raise ValueError(f"variable index {j} out of range 1..{self.nvars}")
        k = j - 1
        coeffs = {}
        for a, c in self.coeffs.items():
            if a[k] == 0:
                continue
            b = a[:k] + (a[k] - 1,) + a[k + 1:]
            coeffs[b] = coeffs.get(b, 0) + a[k] * c
        return MatPoly(self.rows, self.cols, self.nvars, coeffs)

    def partial_eval(self, j: int, value: complex) -> "MatPoly":
        """Freeze variable ``z_j = value``; returns a polynomial in the others."""
        if not 1 <= j <= self.nvars:
            raise ValueError(f"variable index {j} out of range 1..{self.nvars}")
        if self.nvars == 1:
            raise ValueError("cannot partially evaluate a one-variable polynomial")
        k = j - 1
        coeffs: dict[MultiIndex, np.ndarray] = {}
        for a, c in self.coeffs.items():
            key = a[:k] + a[k + 1:]
            term = (value ** a[k]) * c
            if key in coeffs:
                coeffs[key] = coeffs[key] + term
            else:
                coeffs[key] = term
        return MatPoly(self.rows, self.cols, self.nvars - 1, coeffs)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def eval(self, z) -> np.ndarray:
        """Evaluate at a single point by Horner's scheme, one variable at a time."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        if zz.size != self.nvars:
            raise ValueError(f"point has {zz.size} coordinates, expected {self.nvars}")
        return self._horner(self.coeffs, zz, 0)

    def _horner(self, coeffs: Mapping[MultiIndex, np.ndarray], z: np.ndarray,
                var: int) -> np.ndarray:
        if not coeffs:
            return np.zeros((self.rows, self.cols), dtype=complex)
        if var == self.nvars:
            # all exponents consumed; a single constant term remains
            return next(iter(coeffs.values())).astype(complex)
        groups: dict[int, dict[MultiIndex, np.ndarray]] = {}
        for a, c in coeffs.items():
            groups.setdefault(a[var], {})[a] = c
        exps = sorted(groups, reverse=True)
        acc = self._horner(groups[exps[0]], z, var + 1)
        prev = exps[0]
        for e in exps[1:]:
            acc = acc * z[var] ** (prev - e) + self._horner(groups[e], z, var + 1)
            prev = e
        if prev:
            acc = acc * z[var] ** prev
        return acc

    def eval_grid(self, Z) -> np.ndarray:
        """Vectorized evaluation on a batch of points.

        ``Z`` has shape ``(..., nvars)``; the result has shape
        ``(..., rows, cols)``.
        """
        Z = np.asarray(Z, dtype=complex)
        if Z.shape[-1] != self.nvars:
            raise ValueError(f"grid last axis is {Z.shape[-1]}, expected {self.nvars}")
        batch = Z.shape[:-1]
        out = np.zeros(batch + (self.rows, self.cols), dtype=complex)
        degs = self.degrees()
        pows = []
        for j in range(self.nvars):
            pj = np.empty((degs[j] + 1,) + batch, dtype=complex)
            pj[0] = 1.0
            for e in range(1, degs[j] + 1):
                pj[e] = pj[e - 1] * Z[..., j]
            pows.append(pj)
        for a, c in self.coeffs.items():
            mono = pows[0][a[0]]
            for j in range(1, self.nvars):
                mono = mono * pows[j][a[j]]
            out += mono[..., None, None] * c
        return out

    def adjoint_eval(self, z) -> np.ndarray:
        """Pointwise conjugate transpose P(z)*.

        The adjoint symbol is anti-analytic, so it exists only as values,
        never as a MatPoly.
        """
        return self.eval(z).conj().T

    def adjoint_eval_grid(self, Z) -> np.ndarray:
        return np.conj(np.swapaxes(self.eval_grid(Z), -1, -2))

    def __call__(self, z) -> np.ndarray:
        return self.eval(z)


def hstack(blocks: Iterable[MatPoly]) -> MatPoly:
    """Concatenate polynomials side by side (same rows, same nvars)."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("nothing to stack")
    rows, nvars = blocks[0].rows, blocks[0].nvars
    if any(b.rows != rows or b.nvars != nvars for b in blocks):
        raise ValueError("row counts or variable counts differ")
    cols = sum(b.cols for b in blocks)
    coeffs: dict[MultiIndex, np.ndarray] = {}
    offset = 0
    for b in blocks:
        for a, c in b.coeffs.items():
            tgt = coeffs.setdefault(a, np.zeros((rows, cols), dtype=complex))
            tgt[:, offset:offset + b.cols] += c
        offset += b.cols
    return MatPoly(rows, cols, nvars, coeffs)


@dataclass(frozen=True)
class AntiPoly:
    """Polynomial in the conjugate variables, ``h(z) = sum_alpha C_alpha conj(z)^alpha``.

    Used for the anti-analytic test functions ``h`` that drive the dual
    functional; the wrapped MatPoly holds the coefficients ``C_alpha``
    verbatim.
    """

    poly: MatPoly

    @classmethod
    def from_coeffs(cls, rows: int, cols: int, nvars: int, coeffs) -> "AntiPoly":
        return cls(MatPoly(rows, cols, nvars, dict(coeffs)))

    @property
    def rows(self) -> int:
        return self.poly.rows

    @property
    def cols(self) -> int:
        return self.poly.cols

    @property
    def nvars(self) -> int:
        return self.poly.nvars

    def eval(self, z) -> np.ndarray:
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.poly.eval(np.conj(zz))

    def eval_grid(self, Z) -> np.ndarray:
        return self.poly.eval_grid(np.conj(np.asarray(Z, dtype=complex)))

    def dzbar(self, j: int) -> "AntiPoly":
        """Derivative with respect to conj(z_j)."""
        return AntiPoly(self.poly.dz(j))

    def value_at_zero(self) -> np.ndarray:
        return self.poly.coeff((0,) * self.nvars)

    def l2_norm(self) -> float:
        return self.poly.l2_norm()
