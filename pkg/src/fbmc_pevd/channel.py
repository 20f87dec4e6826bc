"""Chromatic-dispersion FIR channel and AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT


@dataclass(frozen=True)
class FiberConfig:
    """Fiber parameters in SI units (see :meth:`from_engineering`)."""

    D: float  # s/m^2
    wavelength: float  # m
    length: float  # m
    T: float  # s
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("fiber length must be >= 0")
        if self.T <= 0:
            raise ValueError("sample period must be > 0")

    @classmethod
    def from_engineering(cls, D_ps_nm_km=17.0, wavelength_nm=1550.0, length_km=80.0,
                         baud_g=30.0, T=None) -> "FiberConfig":
        """Build from ps/nm/km, nm, km and Gbaud; ``T`` defaults to 1/baud."""
        return cls(
            D=D_ps_nm_km * 1e-6,
            wavelength=wavelength_nm * 1e-9,
            length=length_km * 1e3,
            T=T if T is not None else 1.0 / (baud_g * 1e9),
        )

    @property
    def n_taps(self) -> int:
        x = abs(self.D) * self.wavelength ** 2 * self.length / (2 * self.c * self.T ** 2)
        return 2 * int(np.floor(x)) + 1


def cd_impulse_response(cfg: FiberConfig) -> np.ndarray:
    """Truncated CD response, taps for ``n = -N//2 .. N//2``."""
    if cfg.length <= 0:
        raise ValueError("zero-length fiber: use the identity channel")
    a = cfg.c * cfg.T ** 2 / (cfg.D * cfg.wavelength ** 2 * cfg.length)
    half = cfg.n_taps // 2
    n = np.arange(-half, half + 1)
    return np.sqrt(1j * a) * np.exp(-1j * np.pi * a * n ** 2)


def channel_taps(cfg: FiberConfig) -> np.ndarray:
    """Like :func:`cd_impulse_response` but returns ``[1]`` for a zero-length fiber."""
    if cfg.length == 0:
        return np.ones(1, dtype=complex)
    return cd_impulse_response(cfg)


def apply_channel(signal, h) -> np.ndarray:
    """Zero-centred linear convolution (output aligned with the input)."""
    h = np.asarray(h, dtype=complex)
    if len(h) % 2 != 1:
        raise ValueError("channel must have an odd number of taps")
    x = np.asarray(signal, dtype=complex)
    full = np.convolve(x, h)
    half = len(h) // 2
    return full[half:half + len(x)]


def make_rng(seed, cell: int | None = None) -> np.random.Generator:
    """PCG64 generator; sweep cell ``i`` uses the substream ``spawn_key=(i,)``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if cell is None:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(cell,))))


def add_awgn(signal, snr_db: float, rng_seed=0) -> np.ndarray:
    """Add circular complex Gaussian noise at ``snr_db`` relative to the mean signal power.

    ``snr_db = inf`` returns the signal unchanged.
    """
    x = np.asarray(signal, dtype=complex)
    if np.isinf(snr_db) and snr_db > 0:
        return x.copy()
    power = np.mean(np.abs(x) ** 2)
    if power == 0:
        raise ValueError("cannot set SNR of a zero-power signal")
    var = power / 10 ** (snr_db / 10)
    rng = make_rng(rng_seed)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + np.sqrt(var / 2) * noise
