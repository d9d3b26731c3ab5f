"""Cycle-slip aware feed-forward symbol timing recovery."""

from .cycleslip import (
    CorrectedRate,
    SlipReport,
    detect,
    detect_burst,
    pair_averaged_errors,
    rate_hypotheses,
    resolve_rate,
    spectrum,
)
from .estimator import SlipTimingRecovery
from .exceptions import ConfigError, OutOfSupportError
from .farrow import FARROW_COEFFS, fractional_delay, interpolate, interpolate_at
from .harness import (
    BerRecord,
    Pipeline,
    SweepSpec,
    TrialConfig,
    ber_sweep,
    burst_by_burst,
    count_ber,
    run_trial,
    write_csv,
)
from .recovery import RecoveryConfig, SyncResult, decide, estimate_mu, recover
from .ted import DetectorGain, TimingErrorSequence, calibrate_gain, gardner_errors, s_curve
from .waveform import (
    ChannelSpec,
    Modulation,
    PulseShape,
    ReceiverSamples,
    SampleStream,
    SymbolSequence,
    apply_impairments,
    generate_symbols,
    matched_filter,
    read_iq,
    resample_two_sps,
    srrc_pulse,
    synthesize_burst,
    write_iq,
)

__version__ = "0.1.0"

__all__ = [
    "CorrectedRate",
    "SlipReport",
    "detect",
    "detect_burst",
    "pair_averaged_errors",
    "rate_hypotheses",
    "resolve_rate",
    "spectrum",
    "SlipTimingRecovery",
    "ConfigError",
    "OutOfSupportError",
    "FARROW_COEFFS",
    "fractional_delay",
    "interpolate",
    "interpolate_at",
    "BerRecord",
    "Pipeline",
    "SweepSpec",
    "TrialConfig",
    "ber_sweep",
    "burst_by_burst",
    "count_ber",
    "run_trial",
    "write_csv",
    "RecoveryConfig",
    "SyncResult",
    "decide",
    "estimate_mu",
    "recover",
    "DetectorGain",
    "TimingErrorSequence",
    "calibrate_gain",
    "gardner_errors",
    "s_curve",
    "ChannelSpec",
    "Modulation",
    "PulseShape",
    "ReceiverSamples",
    "SampleStream",
    "SymbolSequence",
    "apply_impairments",
    "generate_symbols",
    "matched_filter",
    "read_iq",
    "resample_two_sps",
    "srrc_pulse",
    "synthesize_burst",
    "write_iq",
    "__version__",
]
