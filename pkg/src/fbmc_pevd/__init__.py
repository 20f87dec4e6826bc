"""PEVD-based precoding for coherent optical FBMC/OQAM links."""

from .channel import FiberConfig, add_awgn, apply_channel, cd_impulse_response, channel_taps
from .chanmat import build_banded, build_conventional, composite_block, simulate_unified
from .experiment import LinkConfig, bench_design, run_experiment, sweep
from .metrics import MetricsReport, ber, evm, qam_demap, qam_map
from .pevd import PEVDParams, PEVDResult, pevd_decompose
from .polyinv import InversionParams, SingularInversionError, invert_diag, invert_scalar_poly
from .polymat import LaurentPoly, PolyMatrix, pm_fro_norm, pm_mul, pm_parah
from .precoder import (Precoder, TruncationParams, design_conventional, design_precoder,
                       frobenius_error, precode_stream, truncate_precoder)
from .tmux import TmuxConfig, afb_demodulate, branch_filters, phydyas_prototype, sfb_modulate

__version__ = "0.1.0"
