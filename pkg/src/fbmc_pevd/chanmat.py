"""Composite polyphase channel responses and banded channel matrices.

``composite_block(cfg, h, i, k)`` is the 2x4 polynomial matrix mapping the
polyphase inputs ``[s0R, s1R, s0I, s1I]`` of source position ``i`` to the
received pair ``[rR, rI]`` of destination position ``k``. Positions wrap
modulo M.
"""

from __future__ import annotations

import json

import numpy as np

from .polymat import PolyMatrix, block, pm_fro_norm
from .tmux import OqamFrame, TmuxConfig, branch_filters

# boundary lags with |g| below this fraction of the peak are dropped
SUPPORT_TOL = 1e-12


def _conv(a, b):
    """Convolve two LaurentPoly-like (coeffs, start) pairs."""
    return np.convolve(a[0], b[0]), a[1] + b[1]


def _sample(f, start, M, offset):
    """``f[lM - offset]`` for every l that hits the support; returns (values, l_min)."""
    n_lo, n_hi = start, start + len(f) - 1
    l_lo = -((-(n_lo + offset)) // M)
    l_hi = (n_hi + offset) // M
    ls = np.arange(l_lo, l_hi + 1)
    return f[ls * M - offset - start], l_lo


def composite_block(cfg: TmuxConfig, h, i: int, k: int) -> PolyMatrix:
    """2x4 composite response from source position ``i`` to destination ``k``."""
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    hh = (h, -(len(h) // 2))
    src = branch_filters(cfg, cfg.index(i))
    dst = branch_filters(cfg, cfg.index(k))
    M, half = cfg.M, cfg.half
    entries = {}
    for sname, p in (("R", src.pR), ("I", src.pI)):
        ph = _conv((np.asarray(p.coeffs), p.lag_min), hh)
        for dname, q in (("R", dst.qR), ("I", dst.qI)):
            f, start = _conv(ph, (np.asarray(q.coeffs), q.lag_min))
            part = np.real if dname == "R" else np.imag
            for phase, off in ((0, 0), (1, half)):
                entries[dname, sname, phase] = _sample(part(f), start, M, off)
    lo = min(v[1] for v in entries.values())
    hi = max(v[1] + len(v[0]) - 1 for v in entries.values())
    c = np.zeros((hi - lo + 1, 2, 4))
    for (dname, sname, phase), (vals, l0) in entries.items():
        row = 0 if dname == "R" else 1
        col = (0 if sname == "R" else 2) + phase
        c[l0 - lo:l0 - lo + len(vals), row, col] = vals
    mags = np.abs(c).reshape(len(c), -1).max(axis=1)
    keep = np.nonzero(mags > SUPPORT_TOL * mags.max())[0]
    return PolyMatrix(c[keep[0]:keep[-1] + 1], lo + int(keep[0]))


def _banded(cfg, h, k, half_width, band):
    positions = [k + d for d in range(-half_width, half_width + 1)]
    cache = {}
    rows = []
    for dst in positions:
        row = []
        for src in positions:
            if abs(dst - src) <= band:
                key = (src % cfg.M, dst % cfg.M)
                if key not in cache:
                    cache[key] = composite_block(cfg, h, src, dst)
                row.append(cache[key])
            else:
                row.append(PolyMatrix.zeros(2, 4))
        rows.append(row)
    return block(rows)


def build_banded(cfg: TmuxConfig, h, k: int) -> PolyMatrix:
    """6x12 channel matrix over positions k-1, k, k+1 with zero corner blocks."""
    return _banded(cfg, h, k, 1, 1)


def build_conventional(cfg: TmuxConfig, h, k: int) -> PolyMatrix:
    """10x20 channel matrix over positions k-2..k+2, zero outside the +-1 band."""
    return _banded(cfg, h, k, 2, 1)


def all_blocks(cfg: TmuxConfig, h, reach: int | None = None) -> dict:
    """``{(i, k): G_ik}`` for every source/destination pair within ``reach``."""
    M = cfg.M
    reach = M if reach is None else reach
    out = {}
    for k in range(M):
        for i in range(M):
            d = min((i - k) % M, (k - i) % M)
            if d <= reach:
                out[i, k] = composite_block(cfg, h, i, k)
    return out


def polyphase_inputs(frame: OqamFrame) -> np.ndarray:
    """``(M, 4, L)`` array of ``[s0R, s1R, s0I, s1I]`` streams."""
    xr = np.atleast_2d(frame.real_branch)
    xi = np.atleast_2d(frame.imag_branch)
    if xr.shape[1] % 2:
        xr = np.pad(xr, ((0, 0), (0, 1)))
        xi = np.pad(xi, ((0, 0), (0, 1)))
    return np.stack([xr[:, 0::2], xr[:, 1::2], xi[:, 0::2], xi[:, 1::2]], axis=1)


def frame_from_polyphase(s: np.ndarray) -> OqamFrame:
    """Inverse of :func:`polyphase_inputs`."""
    M, _, L = s.shape
    xr = np.zeros((M, 2 * L))
    xi = np.zeros((M, 2 * L))
    xr[:, 0::2], xr[:, 1::2] = s[:, 0], s[:, 1]
    xi[:, 0::2], xi[:, 1::2] = s[:, 2], s[:, 3]
    return OqamFrame(xr, xi)


def filter_streams(g: PolyMatrix, x: np.ndarray, n_out: int | None = None) -> np.ndarray:
    """``y[l] = sum_tau G[tau] x[l - tau]`` for ``l = 0..n_out-1`` (x zero outside)."""
    x = np.asarray(x)
    L = x.shape[-1]
    n_out = L if n_out is None else n_out
    y = np.zeros((g.rows, n_out), dtype=complex)
    for idx, tau in enumerate(g.lags):
        a, b = max(0, tau), min(n_out, L + tau)
        if a < b:
            y[:, a:b] += g.coeffs[idx] @ x[:, a - tau:b - tau]
    return y


def simulate_unified(cfg: TmuxConfig, h, frame: OqamFrame, blocks: dict | None = None,
                     n_symbols: int | None = None):
    """Matrix-model prediction of the AFB outputs ``(rR, rI)``, each ``(M, L)``."""
    s = polyphase_inputs(frame)
    M, _, L = s.shape
    n_symbols = L if n_symbols is None else n_symbols
    if blocks is None:
        blocks = all_blocks(cfg, h)
    r = np.zeros((M, 2, n_symbols))
    for (i, k), g in blocks.items():
        if not np.any(s[i]):
            continue
        r[k] += filter_streams(g, s[i], n_symbols).real
    return r[:, 0], r[:, 1]


def band_energy_ratio(cfg: TmuxConfig, h) -> float:
    """Energy in blocks with |i-k| >= 2 over energy in blocks with |i-k| <= 1."""
    near = far = 0.0
    for (i, k), g in all_blocks(cfg, h).items():
        d = min((i - k) % cfg.M, (k - i) % cfg.M)
        e = pm_fro_norm(g) ** 2
        if d <= 1:
            near += e
        else:
            far += e
    return far / near


def dump_block(g: PolyMatrix) -> str:
    """Golden-file table of a composite block (lag, then the 2x4 real coefficients)."""
    return json.dumps({
        "lag_min": g.lag_min,
        "table": [[int(l)] + [float(v) for v in g.coeffs[j].real.reshape(-1)]
                  for j, l in enumerate(g.lags)],
    }, indent=1)
