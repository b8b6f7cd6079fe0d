"""Boundary-effect-free time-frequency analysis by forward signal extension."""
from .extend import (
    Dmd,
    ForecastDivergenceWarning,
    ForecastModel,
    LagMatrices,
    SigExt,
    Symmetric,
    build_lag_matrices,
    dmd_ext,
    fit_sigext,
    forecast,
    make_extender,
    sig_ext,
    symmetric_ext,
)
from .metrics import SpectralPdf, column_pdf, mse_xp, ot_distance, perf_index_D
from .numerics import NumericalError, derive_seed, dft, gaussian_noise, pinv_apply, solve_spd
from .pipeline import (
    PipelineConfig,
    StreamState,
    TimingReport,
    bound_eff_red,
    restrict,
    stream_init,
    stream_push,
    timing_budget,
)
from .signals import HarmonicComponent, Signal, add_noise, ahm_signal, sum_of_sines
from .tfr import Conceft, Rs, Sst, Stft, TfrMatrix, WindowSpec, conceft, reassignment, sst, stft

__version__ = "0.1.0"
