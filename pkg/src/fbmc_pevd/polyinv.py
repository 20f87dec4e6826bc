"""Time-domain inversion of polynomial eigenvalues.

Each eigenvalue ``a(z)`` is inverted by a two-sided FIR ``b(z)`` on lags
``[-d, d]`` that least-squares fits ``a * b`` to a unit impulse at lag 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polymat import LaurentPoly, PolyMatrix, diag_from_polys, is_diagonal


class SingularInversionError(ValueError):
    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"diagonal {index}: {msg}")
        self.index = index


@dataclass(frozen=True)
class InversionParams:
    delay: int = 11
    # relative to the leading diagonal of the normal equations
    regularization: float = 1e-10

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.regularization < 0:
            raise ValueError("regularization must be >= 0")


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive definite matrix."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    L = np.zeros_like(a)
    scale = np.max(np.abs(np.diag(a))) if n else 0.0
    for j in range(n):
        piv = a[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if not piv > n * np.finfo(float).eps * scale:
            raise SingularInversionError(f"normal equations are singular (pivot {piv:.3e} at {j})")
        L[j, j] = np.sqrt(piv)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def cholesky_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    L = cholesky(a)
    n = L.shape[0]
    y = np.zeros(n, dtype=complex)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.zeros(n, dtype=complex)
    Lh = L.conj().T
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - Lh[i, i + 1:] @ x[i + 1:]) / Lh[i, i]
    return x


def convolution_matrix(a: LaurentPoly, delay: int) -> tuple[np.ndarray, int]:
    """Toeplitz matrix of ``a`` acting on lags ``[-delay, delay]``.

    Returns the matrix and the lag of its first output row.
    """
    c = np.asarray(a.coeffs)
    n_b = 2 * delay + 1
    C = np.zeros((len(c) + n_b - 1, n_b), dtype=complex)
    for j in range(n_b):
        C[j:j + len(c), j] = c
    return C, a.lag_min - delay


def _check_symmetric(a: LaurentPoly, tol=1e-6):
    m = max(abs(a.lag_min), abs(a.lag_max))
    w = a.window(-m, m)
    if np.max(np.abs(w - np.conj(w[::-1]))) > tol * np.max(np.abs(w)):
        raise ValueError("eigenvalue is not para-Hermitian symmetric")


def invert_scalar_poly(a: LaurentPoly, params: InversionParams = InversionParams()) -> LaurentPoly:
    if a.is_zero:
        raise SingularInversionError("cannot invert the zero polynomial")
    _check_symmetric(a)
    d = params.delay
    C, out_lo = convolution_matrix(a, d)
    target = np.zeros(C.shape[0], dtype=complex)
    if out_lo <= 0 < out_lo + C.shape[0]:
        target[-out_lo] = 1.0
    N = C.conj().T @ C
    N += params.regularization * N[0, 0].real * np.eye(N.shape[0])
    b = cholesky_solve(N, C.conj().T @ target)
    return LaurentPoly(b, -d)


def invert_diag(A: PolyMatrix, params: InversionParams = InversionParams()) -> PolyMatrix:
    if not is_diagonal(A):
        raise ValueError("diagonal matrix required")
    inv = []
    for i in range(A.rows):
        try:
            inv.append(invert_scalar_poly(A.entry(i, i), params))
        except ValueError as exc:
            raise SingularInversionError(str(exc), index=i) from exc
    return diag_from_polys(inv)


def inversion_residual(a: LaurentPoly, b: LaurentPoly) -> float:
    """``max |(a * b)[tau] - delta[tau]|``."""
    prod = np.convolve(a.coeffs, b.coeffs)
    lo = a.lag_min + b.lag_min
    if lo <= 0 < lo + len(prod):
        prod[-lo] -= 1.0
    else:
        prod = np.append(prod, -1.0)
    return float(np.max(np.abs(prod)))
