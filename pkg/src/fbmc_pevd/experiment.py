"""Config-driven link experiments: single runs, sweeps and design timing.

A run maps random bits to QAM, staggers them into OQAM, optionally
precodes, passes the waveform through SFB, fiber and AWGN, demodulates
with the AFB and scores the recovered symbols.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import yaml

from .channel import FiberConfig, add_awgn, apply_channel, channel_taps, make_rng
from .chanmat import build_banded, build_conventional
from .metrics import MetricsReport, ber, evm, qam_demap, qam_map, scalar_equalize
from .pevd import ALGORITHMS, PEVDParams
from .polyinv import InversionParams
from .precoder import (Precoder, TruncationParams, design_conventional, design_precoder,
                       frobenius_error, precode_stream, to_db, truncate_precoder)
from .tmux import TmuxConfig, afb_demodulate, oqam_stagger, sfb_modulate

PRECODERS = ("proposed", "conventional", "none")
TRUNCATION_MODES = ("none", "mu", "adaptive")
SWEEP_AXES = ("snr", "fiber_length", "iterations", "delay", "subcarriers")
BENCH_AXES = ("subcarriers", "iterations")

# config field each sweep axis overrides
_AXIS_FIELD = {
    "snr": "snr_db",
    "fiber_length": "L",
    "iterations": "N",
    "delay": "d",
    "subcarriers": "M",
}

# nested config sections and the flat fields they hold
_SECTIONS = {
    "pevd": {"algorithm": "algorithm", "N": "N", "mu": "mu"},
    "inversion": {"d": "d"},
    "truncation": {"mode": "truncation", "alpha": "alpha", "beta": "beta"},
}


class ConfigError(ValueError):
    """Validation failure; ``errors`` lists one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class LinkConfig:
    """Full parameterization of one experiment cell.

    Physical quantities use engineering units: ``baud`` in Gbaud,
    ``wavelength`` in nm, ``D`` in ps/nm/km and ``L`` in km. ``L = 0``
    selects the ideal (flat) channel. ``sample_period`` (seconds) defaults
    to ``1 / baud``.
    """

    M: int = 16
    K: int = 4
    qam_order: int = 4
    baud: float = 30.0
    wavelength: float = 1550.0
    D: float = 17.0
    L: float = 80.0
    sample_period: float | None = None
    snr_db: float = math.inf
    algorithm: str = "sbr2"
    N: int = 30
    mu: float = 0.0
    d: int = 11
    truncation: str = "none"
    alpha: float = 0.9
    beta: float = 0.9
    precoder: str = "proposed"
    symbols_per_run: int = 20000
    seed: int = 0

    def __post_init__(self):
        errs = validate(self)
        if errs:
            raise ConfigError(errs)

    @property
    def fiber(self) -> FiberConfig:
        return FiberConfig.from_engineering(self.D, self.wavelength, self.L, self.baud,
                                            self.sample_period)

    @property
    def tmux(self) -> TmuxConfig:
        return TmuxConfig(self.M, self.K)

    @property
    def pevd_params(self) -> PEVDParams:
        mu = self.mu if self.truncation == "mu" else 0.0
        return PEVDParams(self.algorithm, self.N, mu)

    @property
    def inversion_params(self) -> InversionParams:
        return InversionParams(self.d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "LinkConfig":
        return cls(**_flatten(data or {}))

    @classmethod
    def from_yaml(cls, text: str) -> "LinkConfig":
        data = yaml.safe_load(text)
        if data is not None and not isinstance(data, dict):
            raise ConfigError(["config: top level must be a mapping"])
        return cls.from_dict(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(_nest(self.to_dict()), sort_keys=False)


def _flatten(data: dict) -> dict:
    names = {f.name for f in fields(LinkConfig)}
    flat, errs = {}, []
    for key, val in data.items():
        if key in _SECTIONS and isinstance(val, dict):
            for sub, sval in val.items():
                if sub not in _SECTIONS[key]:
                    errs.append(f"{key}.{sub}: unknown field")
                else:
                    flat[_SECTIONS[key][sub]] = sval
        elif key in names:
            flat[key] = val
        else:
            errs.append(f"{key}: unknown field")
    if errs:
        raise ConfigError(errs)
    return {k: _coerce(k, v) for k, v in flat.items()}


def _nest(flat: dict) -> dict:
    out = dict(flat)
    for sec, mapping in _SECTIONS.items():
        out[sec] = {sub: out.pop(name) for sub, name in mapping.items()}
    return out


_INT_FIELDS = ("M", "K", "qam_order", "N", "d", "symbols_per_run", "seed")
_FLOAT_FIELDS = ("baud", "wavelength", "D", "L", "snr_db", "mu", "alpha", "beta")


def _coerce(name, val):
    """Best-effort conversion of text values; validation reports what fails."""
    try:
        if name in _INT_FIELDS and isinstance(val, (str, float)):
            f = float(val)
            return int(f) if f.is_integer() else val
        if name in _FLOAT_FIELDS and isinstance(val, (str, int)) and not isinstance(val, bool):
            return float(val)
        if name == "sample_period" and isinstance(val, str):
            return None if val.lower() in ("", "none", "null") else float(val)
    except ValueError:
        pass
    return val


def validate(cfg: LinkConfig) -> list[str]:
    """Field-level messages for every invalid entry (empty when valid)."""
    errs = []

    def is_int(v):
        return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

    def is_num(v):
        return isinstance(v, (int, float, np.number)) and not isinstance(v, bool)

    for name in _INT_FIELDS:
        if not is_int(getattr(cfg, name)):
            errs.append(f"{name}: expected an integer, got {getattr(cfg, name)!r}")
    for name in _FLOAT_FIELDS:
        if not is_num(getattr(cfg, name)):
            errs.append(f"{name}: expected a number, got {getattr(cfg, name)!r}")
    if errs:
        return errs
    if cfg.M < 4 or cfg.M & (cfg.M - 1):
        errs.append(f"M: must be a power of two >= 4, got {cfg.M}")
    if cfg.K != 4:
        errs.append(f"K: only the K = 4 prototype is available, got {cfg.K}")
    if cfg.qam_order not in (4, 16):
        errs.append(f"qam_order: must be 4 or 16, got {cfg.qam_order}")
    for name in ("baud", "wavelength", "D"):
        v = getattr(cfg, name)
        if not (v > 0 and math.isfinite(v)):
            errs.append(f"{name}: must be positive and finite, got {v}")
    if not (cfg.L >= 0 and math.isfinite(cfg.L)):
        errs.append(f"L: must be >= 0 and finite, got {cfg.L}")
    if cfg.sample_period is not None and not (is_num(cfg.sample_period) and cfg.sample_period > 0):
        errs.append(f"sample_period: must be positive, got {cfg.sample_period!r}")
    if math.isnan(cfg.snr_db) or cfg.snr_db == -math.inf:
        errs.append(f"snr_db: must be a number or inf, got {cfg.snr_db}")
    if cfg.algorithm not in ALGORITHMS:
        errs.append(f"pevd.algorithm: must be one of {ALGORITHMS}, got {cfg.algorithm!r}")
    if cfg.N < 1:
        errs.append(f"pevd.N: must be >= 1, got {cfg.N}")
    if not cfg.mu >= 0:
        errs.append(f"pevd.mu: must be >= 0, got {cfg.mu}")
    if cfg.d < 0:
        errs.append(f"inversion.d: must be >= 0, got {cfg.d}")
    if cfg.truncation not in TRUNCATION_MODES:
        errs.append(f"truncation.mode: must be one of {TRUNCATION_MODES}, got {cfg.truncation!r}")
    elif cfg.truncation == "mu" and not cfg.mu > 0:
        errs.append("pevd.mu: truncation mode 'mu' needs mu > 0")
    for name in ("alpha", "beta"):
        v = getattr(cfg, name)
        if not 0 < v <= 1:
            errs.append(f"truncation.{name}: must lie in (0, 1], got {v}")
    if cfg.precoder not in PRECODERS:
        errs.append(f"precoder: must be one of {PRECODERS}, got {cfg.precoder!r}")
    if cfg.symbols_per_run < cfg.M:
        errs.append(f"symbols_per_run: need at least M = {cfg.M}, got {cfg.symbols_per_run}")
    if cfg.seed < 0:
        errs.append(f"seed: must be >= 0, got {cfg.seed}")
    return errs


# ---------------------------------------------------------------- design

_DESIGN_CACHE: dict = {}


def _design_key(cfg: LinkConfig):
    return (cfg.M, cfg.K, cfg.baud, cfg.wavelength, cfg.D, cfg.L, cfg.sample_period,
            cfg.algorithm, cfg.N, cfg.pevd_params.trim_threshold, cfg.d, cfg.truncation,
            cfg.alpha, cfg.beta, cfg.precoder)


def design_all(cfg: LinkConfig, h=None, use_cache: bool = True):
    """Per-subcarrier precoders and their Frobenius errors.

    Returns ``(precoders, chi)``; both are empty for ``precoder = none``.
    """
    if cfg.precoder == "none":
        return [], np.zeros(0)
    key = _design_key(cfg)
    if use_cache and key in _DESIGN_CACHE:
        return _DESIGN_CACHE[key]
    h = channel_taps(cfg.fiber) if h is None else h
    tm = cfg.tmux
    build, design = ((build_banded, design_precoder) if cfg.precoder == "proposed"
                     else (build_conventional, design_conventional))
    pcs, chi = [], []
    for k in range(cfg.M):
        G = build(tm, h, k)
        pc = design(G, cfg.pevd_params, cfg.inversion_params, k)
        if cfg.truncation == "adaptive":
            pc = truncate_precoder(pc, TruncationParams(cfg.alpha, cfg.beta))
        pcs.append(pc)
        chi.append(frobenius_error(G, pc.G_inv))
    out = (pcs, np.array(chi))
    if use_cache:
        _DESIGN_CACHE[key] = out
    return out


# ---------------------------------------------------------------- runs

@dataclass
class RunResult:
    config: LinkConfig
    report: MetricsReport
    chi: np.ndarray
    precoder_length: int
    retained_taps: int

    def row(self) -> dict:
        r = self.config.to_dict()
        r.update(
            evm_percent=self.report.evm_percent,
            evm_worst=max(self.report.per_subcarrier_evm),
            ber=self.report.ber,
            bit_count=self.report.bit_count,
            symbol_count=self.report.symbol_count,
            chi_median_db=to_db(float(np.median(self.chi))) if self.chi.size else math.nan,
            chi_max_db=to_db(float(np.max(self.chi))) if self.chi.size else math.nan,
            precoder_length=self.precoder_length,
            retained_taps=self.retained_taps,
        )
        return r


def run_experiment(cfg: LinkConfig, cell: int | None = None,
                   precoders: list[Precoder] | None = None) -> RunResult:
    """One full link simulation.

    ``cell`` selects the RNG substream (sweeps pass the cell index).
    ``precoders`` overrides the design step (e.g. loaded from a file).
    """
    rng = make_rng(cfg.seed, cell)
    M, K = cfg.M, cfg.K
    bps = int(np.log2(cfg.qam_order))
    L = cfg.symbols_per_run // M
    # K guard symbols each side are transmitted but not scored
    n_sym = L + 2 * K
    bits = rng.integers(0, 2, size=M * n_sym * bps)
    sym = qam_map(bits, cfg.qam_order).reshape(M, n_sym)

    h = channel_taps(cfg.fiber)
    chi = np.zeros(0)
    if precoders is None:
        precoders, chi = design_all(cfg, h)
    if precoders:
        frame, start = precode_stream(precoders, sym)
    else:
        frame, start = oqam_stagger(sym), 0
    n_frame = frame.real_branch.shape[1] // 2

    tm = cfg.tmux
    y = sfb_modulate(tm, frame, pad=K * M + len(h))
    y = add_awgn(apply_channel(y, h), cfg.snr_db, rng)
    rR, rI = afb_demodulate(tm, y, n_frame)
    r = (rR + 1j * rI)[:, -start:-start + n_sym]

    ref = sym[:, K:K + L]
    rx = scalar_equalize(r[:, K:K + L], ref)
    rx_bits = qam_demap(rx.reshape(-1), cfg.qam_order)
    tx_bits = bits.reshape(M, n_sym, bps)[:, K:K + L].reshape(-1)
    report = MetricsReport(
        evm_percent=evm(rx, ref),
        ber=ber(rx_bits, tx_bits),
        bit_count=int(tx_bits.size),
        symbol_count=int(ref.size),
        per_subcarrier_evm=[evm(rx[p], ref[p]) for p in range(M)],
    )
    length = max((p.length for p in precoders), default=0)
    taps = sum(p.taps for p in precoders)
    return RunResult(cfg, report, chi, length, taps)


def _run_cell(args):
    cfg, cell = args
    return run_experiment(cfg, cell).row()


def sweep(cfg: LinkConfig, axis: str, values, jobs: int = 1) -> list[dict]:
    """One run per value of ``axis``; cell ``i`` uses RNG substream ``i``.

    Rows come back in the order of ``values`` whatever ``jobs`` is.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError([f"axis: must be one of {SWEEP_AXES}, got {axis!r}"])
    values = list(values)
    if not values:
        raise ConfigError([f"{axis}: sweep list must be non-empty"])
    name = _AXIS_FIELD[axis]
    cells = [(replace(cfg, **{name: _coerce(name, v)}), i) for i, v in enumerate(values)]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def bench_design(cfg: LinkConfig, axis: str, values, repeats: int = 3) -> list[dict]:
    """Median wall-clock of designing all M precoders, proposed vs conventional."""
    if axis not in BENCH_AXES:
        raise ConfigError([f"axis: must be one of {BENCH_AXES}, got {axis!r}"])
    values = list(values)
    if not values:
        raise ConfigError([f"{axis}: bench list must be non-empty"])
    name = _AXIS_FIELD[axis]
    rows = []
    for v in values:
        base = replace(cfg, **{name: _coerce(name, v)})
        t = {}
        for kind in ("proposed", "conventional"):
            c = replace(base, precoder=kind)
            h = channel_taps(c.fiber)
            runs = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                design_all(c, h, use_cache=False)
                runs.append(time.perf_counter() - t0)
            t[kind] = float(np.median(runs))
        row = base.to_dict()
        row.pop("precoder")
        row.update(axis=axis, value=v, repeats=repeats,
                   proposed_s=t["proposed"], conventional_s=t["conventional"],
                   ratio=t["proposed"] / t["conventional"])
        rows.append(row)
    return rows


# ---------------------------------------------------------------- CSV

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def to_csv(rows: list[dict], cfg: LinkConfig | None = None) -> str:
    """CSV text; the effective config is echoed first as ``#`` comment lines."""
    buf = io.StringIO()
    if cfg is not None:
        for line in cfg.to_yaml().splitlines():
            buf.write(f"# {line}\n")
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()
