"""EVM, BER and Gray-mapped square QAM."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

QAM_ORDERS = (4, 16)


@dataclass
class MetricsReport:
    evm_percent: float
    ber: float
    bit_count: int
    symbol_count: int
    per_subcarrier_evm: list = field(default_factory=list)


def evm(rx, ref) -> float:
    """RMS error vector magnitude in percent of the reference RMS."""
    rx = np.asarray(rx)
    ref = np.asarray(ref)
    if rx.shape != ref.shape:
        raise ValueError(f"length mismatch: {rx.shape} vs {ref.shape}")
    p_ref = np.mean(np.abs(ref) ** 2)
    if p_ref == 0:
        raise ValueError("reference has zero power")
    return float(100 * np.sqrt(np.mean(np.abs(rx - ref) ** 2) / p_ref))


def scalar_equalize(rx, ref) -> np.ndarray:
    """Scale ``rx`` by the least-squares complex gain that best matches ``ref``."""
    rx = np.asarray(rx)
    den = np.vdot(rx, rx)
    if den == 0:
        return rx.copy()
    return rx * (np.vdot(rx, ref) / den)


def _gray_levels(m: int):
    """PAM levels indexed by Gray code value, for ``m`` levels per axis."""
    nb = int(np.log2(m))
    levels = np.arange(-(m - 1), m, 2, dtype=float)
    gray = np.arange(m) ^ (np.arange(m) >> 1)
    by_code = np.empty(m)
    by_code[gray] = levels
    return nb, by_code


def _check_order(order):
    if order not in QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; choose from {QAM_ORDERS}")


def _scale(order):
    return np.sqrt(2 * (order - 1) / 3)


def constellation(order: int = 4) -> np.ndarray:
    """All points, indexed by the integer value of their bit label."""
    _check_order(order)
    labels = np.arange(order)
    nb = int(np.log2(order))
    bits = (labels[:, None] >> np.arange(nb - 1, -1, -1)) & 1
    return qam_map(bits.reshape(-1), order)


def qam_map(bits, order: int = 4) -> np.ndarray:
    """Gray-mapped square QAM with unit average power.

    The first half of each label selects the in-phase level, the second
    half the quadrature level.
    """
    _check_order(order)
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    k = int(np.log2(order))
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} not divisible by {k}")
    m = int(np.sqrt(order))
    nb, by_code = _gray_levels(m)
    b = bits.reshape(-1, k)
    w = 1 << np.arange(nb - 1, -1, -1)
    i_code = b[:, :nb] @ w
    q_code = b[:, nb:] @ w
    return (by_code[i_code] + 1j * by_code[q_code]) / _scale(order)


def qam_demap(symbols, order: int = 4) -> np.ndarray:
    """Minimum-distance hard decisions back to bits."""
    _check_order(order)
    s = np.asarray(symbols).reshape(-1) * _scale(order)
    m = int(np.sqrt(order))
    nb, _ = _gray_levels(m)

    def axis_bits(x):
        idx = np.clip(np.round((x + (m - 1)) / 2), 0, m - 1).astype(np.int64)
        code = idx ^ (idx >> 1)
        return (code[:, None] >> np.arange(nb - 1, -1, -1)) & 1

    return np.hstack([axis_bits(s.real), axis_bits(s.imag)]).reshape(-1)


def ber(rx_bits, tx_bits) -> float:
    rx_bits = np.asarray(rx_bits)
    tx_bits = np.asarray(tx_bits)
    if rx_bits.shape != tx_bits.shape:
        raise ValueError(f"length mismatch: {rx_bits.shape} vs {tx_bits.shape}")
    return float(np.count_nonzero(rx_bits != tx_bits) / rx_bits.size)


def qfunc(x):
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2))


def ber_awgn(snr_db: float, order: int = 4) -> float:
    """Gray-coded square QAM BER in AWGN (nearest-neighbour approximation).

    ``snr_db`` is the symbol energy over the complex noise variance; for
    4-QAM the expression is exact.
    """
    _check_order(order)
    snr = 10 ** (snr_db / 10)
    m = np.sqrt(order)
    k = np.log2(order)
    return float(4 / k * (1 - 1 / m) * qfunc(np.sqrt(3 * snr / (order - 1))))
