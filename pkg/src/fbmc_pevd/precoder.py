"""PEVD-based precoder design, truncation and application.

A precoder for position ``k`` is the pair of central columns of the
polynomial pseudo-inverse ``G~ (G G~)^{-1}`` of a banded channel matrix,
where ``(G G~)^{-1} = Q A^{-1} Q~`` comes from a PEVD followed by
time-domain inversion of the eigenvalues. Its row blocks of four address
the source positions ``k - w//2 .. k + w//2`` (``w = 3`` for the proposed
6x12 matrix, ``w = 5`` for the conventional 10x20 one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .chanmat import filter_streams, frame_from_polyphase
from .pevd import PEVDParams, PEVDResult, pevd_decompose
from .polyinv import InversionParams, invert_diag
from .polymat import PolyMatrix, diagonal_of, pm_fro_norm, pm_parah


@dataclass(frozen=True)
class TruncationParams:
    alpha: float = 0.9
    beta: float = 0.9

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class Precoder:
    P: PolyMatrix
    k: int
    provenance: dict = field(default_factory=dict)
    truncated: bool = False
    # full pseudo-inverse (P is its central two columns); None when loaded from file
    G_inv: PolyMatrix | None = None

    @property
    def width(self) -> int:
        """Number of subcarriers the precoder spreads each symbol stream over."""
        return self.P.rows // 4

    @property
    def length(self) -> int:
        return self.P.n_lags

    @property
    def taps(self) -> int:
        return retained_taps(self.P)


def theta(n: int) -> np.ndarray:
    """The two central columns of ``I_n``."""
    return np.eye(n)[:, n // 2 - 1:n // 2 + 1]


def pseudo_inverse(G: PolyMatrix, pevd: PEVDParams, inv: InversionParams):
    """``G~ Q A^{-1} Q~`` with ``Q, A`` from the PEVD of ``G G~``."""
    Gt = pm_parah(G)
    res = pevd_decompose(G @ Gt, pevd)
    A_inv = invert_diag(diagonal_of(res.A), inv)
    R_inv = res.Q @ A_inv @ pm_parah(res.Q)
    return Gt @ R_inv, res


def _design(G, k, pevd, inv, kind) -> tuple[Precoder, PEVDResult]:
    G_inv, res = pseudo_inverse(G, pevd, inv)
    if np.max(np.abs(G.coeffs.imag), initial=0.0) == 0.0:
        # real channel matrix: drop round-off imaginary parts
        G_inv = PolyMatrix(G_inv.coeffs.real, G_inv.lag_min)
    P = G_inv @ PolyMatrix.constant(theta(G.rows))
    prov = {
        "kind": kind,
        "algorithm": pevd.algorithm,
        "N": pevd.max_iterations,
        "mu": pevd.trim_threshold,
        "d": inv.delay,
    }
    return Precoder(P, k, prov, False, G_inv), res


def design_precoder(G: PolyMatrix, pevd: PEVDParams = PEVDParams(),
                    inv: InversionParams = InversionParams(), k: int = 0) -> Precoder:
    """Proposed precoder from the 6x12 banded matrix of position ``k``."""
    if G.shape != (6, 12):
        raise ValueError(f"expected a 6x12 channel matrix, got {G.shape}")
    return _design(G, k, pevd, inv, "proposed")[0]


def design_conventional(G: PolyMatrix, pevd: PEVDParams = PEVDParams(),
                        inv: InversionParams = InversionParams(), k: int = 0) -> Precoder:
    """Baseline precoder from the 10x20 matrix; same pipeline, larger system."""
    if G.shape != (10, 20):
        raise ValueError(f"expected a 10x20 channel matrix, got {G.shape}")
    return _design(G, k, pevd, inv, "conventional")[0]


def frobenius_error(G: PolyMatrix, G_inv: PolyMatrix) -> float:
    """Squared Frobenius distance of ``G G_inv`` from the identity.

    For a wide ``G`` the right-inverse product ``G G_inv`` is used (the
    left product of a wide matrix is rank deficient and can never approach
    the identity). The product is shifted so its largest lag slice sits at
    lag 0 before comparing.
    """
    if G.rows <= G.cols:
        if G.cols != G_inv.rows or G_inv.cols != G.rows:
            raise ValueError(f"incompatible shapes {G.shape} and {G_inv.shape}")
        prod = G @ G_inv
    else:
        if G_inv.cols != G.rows or G_inv.rows != G.cols:
            raise ValueError(f"incompatible shapes {G.shape} and {G_inv.shape}")
        prod = G_inv @ G
    n = prod.rows
    if not prod.is_zero:
        norms = np.sum(np.abs(prod.coeffs) ** 2, axis=(1, 2))
        prod = prod.shift(-int(prod.lags[np.argmax(norms)]))
    return pm_fro_norm(PolyMatrix.identity(n) - prod) ** 2


def to_db(x: float) -> float:
    return 10 * np.log10(x) if x > 0 else -np.inf


def truncation_window(p, alpha: float, beta: float) -> tuple[int, int]:
    """Adaptive optimum-energy window ``[lo, hi]`` (inclusive) of one filter.

    The window grows forwards from the peak while the energy ratio of ``L``
    to ``L + 1`` taps stays at or below ``alpha``, and backwards likewise
    with ``beta``.
    """
    e = np.abs(np.asarray(p)) ** 2
    if e.size == 0 or not np.any(e):
        raise ValueError("empty filter")
    n = int(np.argmax(e))
    la = 1
    while n + la < len(e) and e[n:n + la].sum() / e[n:n + la + 1].sum() <= alpha:
        la += 1
    lb = 1
    while n - lb >= 0 and e[n - lb + 1:n + 1].sum() / e[n - lb:n + 1].sum() <= beta:
        lb += 1
    return n - lb + 1, n + la - 1


def truncate_matrix(P: PolyMatrix, params: TruncationParams) -> PolyMatrix:
    c = np.array(P.coeffs)
    out = np.zeros_like(c)
    for r in range(P.rows):
        for col in range(P.cols):
            p = c[:, r, col]
            if not np.any(p):
                continue
            lo, hi = truncation_window(p, params.alpha, params.beta)
            out[lo:hi + 1, r, col] = p[lo:hi + 1]
    return PolyMatrix(out, P.lag_min)


def truncate_precoder(pc: Precoder, params: TruncationParams = TruncationParams()) -> Precoder:
    """Apply the adaptive optimum-energy rule to every filter of the precoder."""
    G_inv = truncate_matrix(pc.G_inv, params) if pc.G_inv is not None else None
    P = truncate_matrix(pc.P, params)
    prov = dict(pc.provenance, alpha=params.alpha, beta=params.beta)
    return replace(pc, P=P, G_inv=G_inv, truncated=True, provenance=prov)


def retained_taps(P: PolyMatrix) -> int:
    """Total nonzero taps over all filters."""
    return int(np.count_nonzero(np.abs(P.coeffs) > 0))


def precode_stream(precoders: list[Precoder], symbols: np.ndarray):
    """Precode QAM symbols ``(M, L)`` into OQAM polyphase frames.

    Returns ``(frame, start)`` where ``frame`` covers symbol lags
    ``start .. start + n - 1`` so that no precoder tail is cut off.
    """
    symbols = np.atleast_2d(symbols)
    M, L = symbols.shape
    if len(precoders) != M or any(p is None for p in precoders):
        raise ValueError(f"need one precoder per subcarrier ({M})")
    lo = min(0, min(p.P.lag_min for p in precoders))
    hi = max(0, max(p.P.lag_max for p in precoders))
    n = L + hi - lo
    s = np.zeros((M, 4, n))
    for i, pc in enumerate(precoders):
        sbar = np.vstack([symbols[i].real, symbols[i].imag])
        y = filter_streams(pc.P.shift(-lo), sbar, n).real
        w = pc.width
        for b in range(w):
            s[(i + b - w // 2) % M] += y[4 * b:4 * b + 4]
    return frame_from_polyphase(s), lo


def export_precoders(precoders: list[Precoder], path) -> None:
    """Write precoders as JSON (k, dims, lag_min, coefficient table, provenance)."""
    items = []
    for pc in precoders:
        items.append({
            "k": pc.k,
            "rows": pc.P.rows,
            "cols": pc.P.cols,
            "lag_min": pc.P.lag_min,
            "truncated": pc.truncated,
            "provenance": pc.provenance,
            "coeffs": [[[float(v.real), float(v.imag)] for v in sl.reshape(-1)]
                       for sl in pc.P.coeffs],
        })
    with open(path, "w") as fh:
        json.dump({"precoders": items}, fh, indent=1)


def load_precoders(path) -> list[Precoder]:
    with open(path) as fh:
        data = json.load(fh)
    out = []
    for it in data["precoders"]:
        c = np.array([[re + 1j * im for re, im in sl] for sl in it["coeffs"]])
        c = c.reshape(len(it["coeffs"]), it["rows"], it["cols"])
        out.append(Precoder(PolyMatrix(c, it["lag_min"]), it["k"], it["provenance"],
                            it["truncated"]))
    return out
