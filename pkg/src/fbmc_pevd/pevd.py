"""Polynomial eigenvalue decomposition of para-Hermitian matrices.

Two iterative schemes are provided, second-order sequential best rotation
(SBR2) and sequential matrix diagonalisation (SMD). Both accumulate a
para-unitary "analysis" matrix ``H(z)`` such that ``H R H~`` becomes
diagonal; the eigenvector matrix returned to callers is ``Q = H~`` so that
``R = Q A Q~``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .polymat import (
    PolyMatrix,
    is_diagonal,
    pm_eval,
    pm_fro_norm,
    pm_off_diag_energy,
    pm_parah,
    pm_trim,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("sbr2", "smd")


@dataclass(frozen=True)
class PEVDParams:
    algorithm: str = "sbr2"
    max_iterations: int = 30
    trim_threshold: float = 0.0
    stop_threshold: float = 0.0

    def __post_init__(self):
        algo = self.algorithm.lower()
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown PEVD algorithm {self.algorithm!r}")
        object.__setattr__(self, "algorithm", algo)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.trim_threshold < 0 or self.stop_threshold < 0:
            raise ValueError("thresholds must be nonnegative")


@dataclass(frozen=True)
class PEVDResult:
    Q: PolyMatrix
    A: PolyMatrix
    trace: np.ndarray
    iterations_run: int
    q_orders: list = field(default_factory=list)
    a_orders: list = field(default_factory=list)

    def write_trace_csv(self, path):
        """Dump ``iteration, off_diag_energy, Q_order, A_order`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "off_diag_energy", "Q_order", "A_order"])
            for i, e in enumerate(self.trace):
                w.writerow([i, repr(float(e)), self.q_orders[i], self.a_orders[i]])


def jacobi_rotation(a: float, d: float, b: complex) -> np.ndarray:
    """Unitary ``G`` with ``G [[a, b], [b*, d]] G^H`` diagonal, larger value first."""
    mag = abs(b)
    if mag == 0.0:
        return np.eye(2, dtype=complex)
    phase = b / mag
    theta = 0.5 * np.arctan2(2.0 * mag, a - d)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s * phase], [-s, c * phase]], dtype=complex)


def hermitian_eig(s: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Returns ``(w, V)`` with ``s = V diag(w) V^H`` and ``w`` in descending order.
    """
    s = np.array(s, dtype=complex)
    n = s.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(s)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.linalg.norm(s - np.diag(np.diag(s)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(s[p, q]) <= 1e-300:
                    continue
                g = jacobi_rotation(s[p, p].real, s[q, q].real, s[p, q])
                idx = [p, q]
                s[idx, :] = g @ s[idx, :]
                s[:, idx] = s[:, idx] @ g.conj().T
                v[:, idx] = v[:, idx] @ g.conj().T
    w = np.diag(s).real
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _pad(c: np.ndarray, lag_min: int, p: int) -> tuple[np.ndarray, int]:
    out = np.zeros((c.shape[0] + 2 * p,) + c.shape[1:], dtype=complex)
    out[p:p + c.shape[0]] = c
    return out, lag_min - p


def _delay_parahermitian(r: PolyMatrix, k: int, t: int) -> PolyMatrix:
    """``B R B~`` with ``B = diag(.., z^{-t} at k, ..)``."""
    if t == 0:
        return r
    c, lo = _pad(r.coeffs, r.lag_min, abs(t))
    c[:, k, :] = np.roll(c[:, k, :], t, axis=0)
    c[:, :, k] = np.roll(c[:, :, k], -t, axis=0)
    return PolyMatrix(c, lo)


def _delay_rows(h: PolyMatrix, k: int, t: int) -> PolyMatrix:
    if t == 0:
        return h
    c, lo = _pad(h.coeffs, h.lag_min, abs(t))
    c[:, k, :] = np.roll(c[:, k, :], t, axis=0)
    return PolyMatrix(c, lo)


def _rotate(r: PolyMatrix, h: PolyMatrix, g: np.ndarray, idx) -> tuple[PolyMatrix, PolyMatrix]:
    rc = np.array(r.coeffs)
    hc = np.array(h.coeffs)
    gh = g.conj().T
    rc[:, idx, :] = np.einsum("ij,ljc->lic", g, rc[:, idx, :])
    rc[:, :, idx] = np.einsum("lrj,ji->lri", rc[:, :, idx], gh)
    hc[:, idx, :] = np.einsum("ij,ljc->lic", g, hc[:, idx, :])
    return PolyMatrix(rc, r.lag_min), PolyMatrix(hc, h.lag_min)


def _sbr2_step(r: PolyMatrix, h: PolyMatrix, stop: float):
    mags = np.abs(r.coeffs)
    n = r.rows
    mags[:, np.arange(n), np.arange(n)] = -1.0
    flat = int(np.argmax(mags))  # C order -> smallest lag, row, col on ties
    li, j, k = np.unravel_index(flat, mags.shape)
    if mags[li, j, k] <= stop:
        return None
    tau = r.lag_min + int(li)
    r = _delay_parahermitian(r, int(k), tau)
    h = _delay_rows(h, int(k), tau)
    s0 = r.slice_at(0)
    g = jacobi_rotation(s0[j, j].real, s0[k, k].real, s0[j, k])
    return _rotate(r, h, g, [int(j), int(k)])


def _smd_step(r: PolyMatrix, h: PolyMatrix, stop: float):
    e = np.abs(r.coeffs) ** 2
    n = r.rows
    e[:, np.arange(n), np.arange(n)] = 0.0
    col = e.sum(axis=1)  # (lags, cols)
    flat = int(np.argmax(col))
    li, k = np.unravel_index(flat, col.shape)
    if np.sqrt(col[li, k]) <= stop:
        return None
    tau = r.lag_min + int(li)
    r = _delay_parahermitian(r, int(k), tau)
    h = _delay_rows(h, int(k), tau)
    _, v = hermitian_eig(r.slice_at(0))
    u = v.conj().T
    rc = np.einsum("ij,ljk,kc->lic", u, r.coeffs, v)
    hc = np.einsum("ij,ljc->lic", u, h.coeffs)
    return PolyMatrix(rc, r.lag_min), PolyMatrix(hc, h.lag_min)


def _check_input(r: PolyMatrix):
    if r.rows != r.cols:
        raise ValueError(f"PEVD needs a square matrix, got {r.shape}")
    if not np.all(np.isfinite(r.coeffs)):
        raise ValueError("non-finite coefficients")
    norm = pm_fro_norm(r)
    if pm_fro_norm(r - pm_parah(r)) > 1e-8 * max(norm, 1e-300):
        raise ValueError("matrix is not para-Hermitian")


def _order(p: PolyMatrix) -> int:
    return max(p.n_lags - 1, 0)


def pevd_decompose(r: PolyMatrix, params: PEVDParams = PEVDParams()) -> PEVDResult:
    """Iteratively diagonalise a para-Hermitian matrix, ``R ~= Q A Q~``."""
    _check_input(r)
    n = r.rows
    stop = params.stop_threshold * pm_fro_norm(r)
    step = _sbr2_step if params.algorithm == "sbr2" else _smd_step
    h = PolyMatrix.identity(n)
    trace = [pm_off_diag_energy(r)]
    q_orders, a_orders = [0], [_order(r)]
    it = 0
    for it in range(1, params.max_iterations + 1):
        out = step(r, h, stop)
        if out is None:
            it -= 1
            break
        r, h = out
        if params.trim_threshold > 0:
            r = pm_trim(r, params.trim_threshold)
            h = pm_trim(h, params.trim_threshold)
        trace.append(pm_off_diag_energy(r))
        q_orders.append(_order(h))
        a_orders.append(_order(r))
    log.debug("%s finished after %d iterations, off-diagonal energy %.3e",
              params.algorithm, it, trace[-1])

    # descending zero-lag diagonal
    perm = np.argsort(-np.diag(r.slice_at(0)).real, kind="stable")
    if np.any(perm != np.arange(n)):
        r = PolyMatrix(r.coeffs[:, perm][:, :, perm], r.lag_min)
        h = PolyMatrix(h.coeffs[:, perm, :], h.lag_min)
    return PEVDResult(pm_parah(h), r, np.array(trace), it, q_orders, a_orders)


def spectral_majorization_defect(a: PolyMatrix, grid_size: int = 64) -> float:
    """Total amount by which diagonal PSDs violate descending order on a grid."""
    if not is_diagonal(a):
        raise ValueError("diagonal matrix required")
    total = 0.0
    for g in range(grid_size):
        d = np.diag(pm_eval(a, 2 * np.pi * g / grid_size)).real
        total += np.clip(d[1:] - d[:-1], 0.0, None).sum()
    return float(total)
