"""FBMC/OQAM transmultiplexer with the PHYDYAS prototype filter.

Subcarrier rows of every frame array are ordered by position
``p = 0..M-1``; the modulation index used in the branch filters is
``i = p - M/2``. Sample index 0 of a synthesised signal is the start of the
pulse carrying half-symbol 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polymat import LaurentPoly

# K = 4 frequency-domain samples; H1 and H3 solve H1 + H3 = (1 + sqrt2)/2,
# H1^2 + H3^2 = 1, which makes the first tap vanish exactly.
_S = (1 + np.sqrt(2)) / 2
_R = np.sqrt(2 - _S ** 2)
PHYDYAS_K4 = (1.0, (_S + _R) / 2, 1 / np.sqrt(2), (_S - _R) / 2)


def phydyas_prototype(M: int, K: int = 4) -> np.ndarray:
    """Frequency-sampling PHYDYAS prototype of length ``K*M``, unit energy.

    Tap 0 is exactly zero and taps ``1..KM-1`` are symmetric about ``KM/2``,
    so the filter is linear phase with an integer group delay.
    """
    if K != 4:
        raise ValueError(f"only K = 4 is supported, got K = {K}")
    if M < 2 or M & (M - 1):
        raise ValueError(f"M must be a power of two >= 2, got {M}")
    n = np.arange(K * M)
    u = np.full(K * M, PHYDYAS_K4[0])
    for k in range(1, K):
        u += 2 * (-1) ** k * PHYDYAS_K4[k] * np.cos(2 * np.pi * k * n / (K * M))
    u[0] = 0.0
    return u / np.linalg.norm(u)


@dataclass(frozen=True)
class TmuxConfig:
    M: int = 16
    K: int = 4
    u: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.M < 4 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two >= 4, got {self.M}")
        if self.u is None:
            object.__setattr__(self, "u", phydyas_prototype(self.M, self.K))
        elif len(self.u) != self.K * self.M:
            raise ValueError("prototype length must be K*M")

    @property
    def half(self) -> int:
        return self.M // 2

    def index(self, position: int) -> int:
        """Modulation index of subcarrier position ``position`` (wraps mod M)."""
        return (position % self.M) - self.half


@dataclass(frozen=True)
class BranchFilters:
    pR: LaurentPoly
    pI: LaurentPoly
    qR: LaurentPoly
    qI: LaurentPoly


def branch_filters(cfg: TmuxConfig, i: int) -> BranchFilters:
    """Synthesis (p) and analysis (q) filters of modulation index ``i``.

    The imaginary branches satisfy ``pI(z) = j z^{-M/2} pR(z)`` and
    ``qI(z) = z^{+M/2} qR(z)``; the receiver advance undoes the transmitter's
    half-symbol delay so both branches are sampled at the same instants.
    """
    M, half = cfg.M, cfg.half
    if not -half <= i <= half - 1:
        raise ValueError(f"subcarrier index {i} outside [{-half}, {half - 1}]")
    n = np.arange(cfg.K * M)
    pR = cfg.u * 1j ** i * np.exp(2j * np.pi * i * n / M)
    # q^R[n] = u(-n) j^-i exp(j 2 pi i n / M) on n = -(KM-1)..0
    nq = -n[::-1]
    qR = cfg.u[::-1] * (1j) ** (-i) * np.exp(2j * np.pi * i * nq / M)
    return BranchFilters(
        pR=LaurentPoly(pR, 0),
        pI=LaurentPoly(1j * pR, half),
        qR=LaurentPoly(qR, -(cfg.K * M - 1)),
        qI=LaurentPoly(qR, -(cfg.K * M - 1) - half),
    )


def synthesis_matrix(cfg: TmuxConfig) -> np.ndarray:
    """Rows ``p_i^R[n]``, ``n = 0..KM-1``, ordered by subcarrier position."""
    M = cfg.M
    n = np.arange(cfg.K * M)
    i = np.arange(M)[:, None] - cfg.half
    return cfg.u[None, :] * (1j ** i) * np.exp(2j * np.pi * i * n[None, :] / M)


@dataclass
class OqamFrame:
    """Real/imaginary branch sequences at twice the QAM symbol rate.

    Arrays are ``(M, 2L)`` for a multi-carrier frame or ``(2L,)`` for one
    subcarrier.
    """

    real_branch: np.ndarray
    imag_branch: np.ndarray


def oqam_stagger(symbols) -> OqamFrame:
    s = np.asarray(symbols, dtype=complex)
    shape = s.shape[:-1] + (2 * s.shape[-1],)
    re = np.zeros(shape)
    im = np.zeros(shape)
    re[..., ::2] = s.real
    im[..., ::2] = s.imag
    return OqamFrame(re, im)


def oqam_destagger(frame: OqamFrame) -> np.ndarray:
    return frame.real_branch[..., ::2] + 1j * frame.imag_branch[..., ::2]


def sfb_modulate(cfg: TmuxConfig, frame: OqamFrame, pad: int = 0) -> np.ndarray:
    """Synthesis filter bank.

    Half-symbol ``m`` of subcarrier position ``p`` launches ``p_p^R`` at
    sample ``m M/2``; the imaginary branch rides one half-symbol later,
    multiplied by ``j``. ``pad`` zero samples are appended.
    """
    xr = np.atleast_2d(np.asarray(frame.real_branch, dtype=float))
    xi = np.atleast_2d(np.asarray(frame.imag_branch, dtype=float))
    if xr.shape != xi.shape or xr.shape[0] != cfg.M:
        raise ValueError(f"frames must both be ({cfg.M}, n), got {xr.shape} and {xi.shape}")
    half, K = cfg.half, cfg.K
    n_m = xr.shape[1]
    c = np.zeros((cfg.M, n_m + 1), dtype=complex)
    c[:, :n_m] += xr
    c[:, 1:] += 1j * xi
    w = (c.T @ synthesis_matrix(cfg)).reshape(n_m + 1, 2 * K, half)
    out = np.zeros((n_m + 2 * K, half), dtype=complex)
    for r in range(2 * K):
        out[r:r + n_m + 1] += w[:, r]
    y = out.reshape(-1)
    if pad:
        y = np.concatenate([y, np.zeros(pad, dtype=complex)])
    return y


def afb_demodulate(cfg: TmuxConfig, signal, n_symbols: int | None = None):
    """Analysis filter bank.

    Returns ``(rR, rI)``, each ``(M, n_symbols)``: the real part of the
    matched-filter output at samples ``lM`` and the imaginary part at
    ``lM + M/2`` (i.e. ``q^I`` sampled at ``lM``).
    """
    z = np.asarray(signal, dtype=complex)
    M, half, KM = cfg.M, cfg.half, cfg.K * cfg.M
    if n_symbols is None:
        n_symbols = len(z) // M
    need = (2 * n_symbols - 1) * half + KM
    if len(z) < need:
        z = np.concatenate([z, np.zeros(need - len(z), dtype=complex)])
    win = np.lib.stride_tricks.sliding_window_view(z, KM)[::half][:2 * n_symbols]
    v = win @ synthesis_matrix(cfg).conj().T  # (2L, M)
    return v[0::2].real.T.copy(), v[1::2].imag.T.copy()


def tmux_delay(cfg: TmuxConfig) -> int:
    """End-to-end delay of the TMUX in symbols (zero with this alignment)."""
    return 0
