"""Laurent-polynomial matrices.

A :class:`PolyMatrix` stores ``A(z) = sum_tau A[tau] z^{-tau}`` as a dense
coefficient tensor of shape ``(n_lags, rows, cols)`` together with the lag of
its first slice. All operations return new objects in canonical form, i.e.
with all-zero leading/trailing lag slices removed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# relative magnitude below which a boundary lag slice counts as zero
ZERO_TOL = 1e-14


def _canonical(coeffs: np.ndarray, lag_min: int) -> tuple[np.ndarray, int]:
    if coeffs.size == 0:
        return coeffs[:0], 0
    mags = np.abs(coeffs).reshape(coeffs.shape[0], -1).max(axis=1)
    if not np.all(np.isfinite(mags)):
        # leave as is; consumers validate finiteness
        return coeffs, lag_min
    peak = mags.max()
    if peak == 0.0:
        return coeffs[:0], 0
    keep = np.nonzero(mags > ZERO_TOL * peak)[0]
    lo, hi = keep[0], keep[-1] + 1
    return coeffs[lo:hi], lag_min + int(lo)


@dataclass(frozen=True, eq=False)
class PolyMatrix:
    """Matrix of Laurent polynomials with a shared lag window."""

    coeffs: np.ndarray
    lag_min: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3:
            raise ValueError(f"coeffs must be (lags, rows, cols), got shape {c.shape}")
        c, lag_min = _canonical(c, int(self.lag_min))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lag_min", lag_min)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "PolyMatrix":
        return cls(np.zeros((0, rows, cols)), 0)

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls(np.eye(n)[None], 0)

    @classmethod
    def constant(cls, mat) -> "PolyMatrix":
        return cls(np.atleast_2d(np.asarray(mat, dtype=complex))[None], 0)

    @classmethod
    def delay(cls, n: int, lag: int) -> "PolyMatrix":
        """``z^{-lag} I_n``."""
        return cls(np.eye(n)[None], lag)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def n_lags(self) -> int:
        return self.coeffs.shape[0]

    @property
    def lag_max(self) -> int:
        return self.lag_min + self.n_lags - 1

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.lag_min, self.lag_min + self.n_lags)

    @property
    def is_zero(self) -> bool:
        return self.n_lags == 0

    def slice_at(self, lag: int) -> np.ndarray:
        """Coefficient matrix at ``lag`` (zeros outside the window)."""
        i = lag - self.lag_min
        if 0 <= i < self.n_lags:
            return np.array(self.coeffs[i])
        return np.zeros(self.shape, dtype=complex)

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Dense coefficients over lags ``lo..hi`` inclusive, zero padded."""
        out = np.zeros((hi - lo + 1,) + self.shape, dtype=complex)
        if self.is_zero:
            return out
        a, b = max(lo, self.lag_min), min(hi, self.lag_max)
        if a <= b:
            out[a - lo:b - lo + 1] = self.coeffs[a - self.lag_min:b - self.lag_min + 1]
        return out

    def entry(self, r: int, c: int) -> "LaurentPoly":
        return LaurentPoly(self.coeffs[:, r, c], self.lag_min)

    def submatrix(self, rows, cols) -> "PolyMatrix":
        c = self.coeffs[:, rows, :][:, :, cols]
        return PolyMatrix(c, self.lag_min)

    def shift(self, lag: int) -> "PolyMatrix":
        """Multiply by ``z^{-lag}``."""
        return PolyMatrix(self.coeffs, self.lag_min + lag)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return pm_add(self, other)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return pm_add(self, -other)

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix(-self.coeffs, self.lag_min)

    def __mul__(self, scalar) -> "PolyMatrix":
        return PolyMatrix(self.coeffs * scalar, self.lag_min)

    __rmul__ = __mul__

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        return pm_mul(self, other)

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, lags {self.lag_min}..{self.lag_max})"


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """Scalar Laurent polynomial ``sum_tau c[tau] z^{-tau}``."""

    coeffs: np.ndarray
    lag_min: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        c3, lag_min = _canonical(c[:, None, None], int(self.lag_min))
        c = c3[:, 0, 0]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lag_min", lag_min)

    @property
    def lag_max(self) -> int:
        return self.lag_min + len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def window(self, lo: int, hi: int) -> np.ndarray:
        return as_matrix(self).window(lo, hi)[:, 0, 0]

    def __call__(self, omega: float) -> complex:
        return complex(pm_eval(as_matrix(self), omega)[0, 0])


def as_matrix(p: LaurentPoly) -> PolyMatrix:
    return PolyMatrix(np.asarray(p.coeffs)[:, None, None], p.lag_min)


def _check_same_shape(a: PolyMatrix, b: PolyMatrix):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def pm_add(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    _check_same_shape(a, b)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    lo = min(a.lag_min, b.lag_min)
    hi = max(a.lag_max, b.lag_max)
    return PolyMatrix(a.window(lo, hi) + b.window(lo, hi), lo)


def pm_mul(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    """Polynomial matrix product (lag-domain convolution)."""
    if a.cols != b.rows:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if a.is_zero or b.is_zero:
        return PolyMatrix.zeros(a.rows, b.cols)
    out = np.zeros((a.n_lags + b.n_lags - 1, a.rows, b.cols), dtype=complex)
    # loop over the shorter operand
    if a.n_lags <= b.n_lags:
        for i in range(a.n_lags):
            out[i:i + b.n_lags] += np.einsum("rj,ljc->lrc", a.coeffs[i], b.coeffs)
    else:
        for i in range(b.n_lags):
            out[i:i + a.n_lags] += np.einsum("lrj,jc->lrc", a.coeffs, b.coeffs[i])
    return PolyMatrix(out, a.lag_min + b.lag_min)


def pm_parah(a: PolyMatrix) -> PolyMatrix:
    """Para-Hermitian conjugate ``A^H(1/z)``."""
    if a.is_zero:
        return PolyMatrix.zeros(a.cols, a.rows)
    c = np.conj(a.coeffs[::-1]).transpose(0, 2, 1)
    return PolyMatrix(c, -a.lag_max)


def pm_fro_norm(a: PolyMatrix) -> float:
    # exactly rounded sum, so the result does not depend on coefficient order
    return math.sqrt(math.fsum((np.abs(a.coeffs) ** 2).ravel()))


def pm_eval(a: PolyMatrix, omega: float) -> np.ndarray:
    """Evaluate on the unit circle, ``sum_tau A[tau] exp(-j omega tau)``."""
    if a.is_zero:
        return np.zeros(a.shape, dtype=complex)
    w = np.exp(-1j * omega * a.lags)
    return np.einsum("l,lrc->rc", w, a.coeffs)


def pm_eval_grid(a: PolyMatrix, n_points: int) -> np.ndarray:
    """Evaluate on ``n_points`` equispaced frequencies in [0, 2pi)."""
    omegas = 2 * np.pi * np.arange(n_points) / n_points
    return np.stack([pm_eval(a, w) for w in omegas])


def pm_off_diag_energy(r: PolyMatrix) -> float:
    if r.rows != r.cols:
        raise ValueError(f"square matrix required, got {r.shape}")
    e = np.abs(r.coeffs) ** 2
    mask = ~np.eye(r.rows, dtype=bool)
    return float(e[:, mask].sum())


def pm_trim(a: PolyMatrix, threshold: float) -> PolyMatrix:
    """Drop outer lag slices whose relative Frobenius norm is below ``threshold``.

    Slices are removed from each end inwards; the scan stops at the first
    slice at or above the threshold and never removes the largest slice.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if a.is_zero or threshold == 0:
        return a
    norms = np.sqrt(np.sum(np.abs(a.coeffs) ** 2, axis=(1, 2)))
    rel = norms / np.sqrt(np.sum(norms ** 2))
    peak = int(np.argmax(norms))
    lo = 0
    while lo < peak and rel[lo] < threshold:
        lo += 1
    hi = a.n_lags - 1
    while hi > peak and rel[hi] < threshold:
        hi -= 1
    return PolyMatrix(a.coeffs[lo:hi + 1], a.lag_min + lo)


def is_diagonal(a: PolyMatrix, tol: float = 0.0) -> bool:
    if a.rows != a.cols:
        return False
    return pm_off_diag_energy(a) <= (tol * pm_fro_norm(a)) ** 2


def diagonal_of(a: PolyMatrix) -> PolyMatrix:
    """Keep only the main diagonal."""
    n = min(a.shape)
    c = np.zeros_like(a.coeffs)
    idx = np.arange(n)
    c[:, idx, idx] = a.coeffs[:, idx, idx]
    return PolyMatrix(c, a.lag_min)


def diag_from_polys(polys: list[LaurentPoly]) -> PolyMatrix:
    n = len(polys)
    live = [p for p in polys if not p.is_zero]
    if not live:
        return PolyMatrix.zeros(n, n)
    lo = min(p.lag_min for p in live)
    hi = max(p.lag_max for p in live)
    c = np.zeros((hi - lo + 1, n, n), dtype=complex)
    for i, p in enumerate(polys):
        c[:, i, i] = p.window(lo, hi)
    return PolyMatrix(c, lo)


def block(blocks: list[list[PolyMatrix]]) -> PolyMatrix:
    """Assemble a block polynomial matrix from a nested list of blocks."""
    heights = [row[0].rows for row in blocks]
    widths = [b.cols for b in blocks[0]]
    live = [b for row in blocks for b in row if not b.is_zero]
    if not live:
        return PolyMatrix.zeros(sum(heights), sum(widths))
    lo = min(b.lag_min for b in live)
    hi = max(b.lag_max for b in live)
    c = np.zeros((hi - lo + 1, sum(heights), sum(widths)), dtype=complex)
    r0 = 0
    for row, h in zip(blocks, heights):
        c0 = 0
        for b, w in zip(row, widths):
            if b.shape != (h, w):
                raise ValueError(f"block shape {b.shape} does not fit ({h}, {w})")
            c[:, r0:r0 + h, c0:c0 + w] = b.window(lo, hi)
            c0 += w
        r0 += h
    return PolyMatrix(c, lo)


def to_text(a: PolyMatrix) -> str:
    """Debug serialization: dimensions, lag_min and row-major coefficients per lag."""
    payload = {
        "rows": a.rows,
        "cols": a.cols,
        "lag_min": a.lag_min,
        "lags": [
            [[float(v.real), float(v.imag)] for v in a.coeffs[i].reshape(-1)]
            for i in range(a.n_lags)
        ],
    }
    return json.dumps(payload, indent=1)


def from_text(text: str) -> PolyMatrix:
    d = json.loads(text)
    rows, cols = d["rows"], d["cols"]
    c = np.array([[re + 1j * im for re, im in lag] for lag in d["lags"]], dtype=complex)
    c = c.reshape(len(d["lags"]), rows, cols)
    return PolyMatrix(c, d["lag_min"])
