"""Scikit-learn style wrapper around the receive chain.

``fit`` learns the burst's symbol rate and delay from an oversampled sample
stream; ``transform`` returns one soft sample per symbol and ``predict`` the
decided symbols.  Parameters follow the sklearn conventions, so
``get_params`` / ``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cycleslip import detect_burst, pair_averaged_errors, resolve_rate
from .farrow import fractional_delay
from .recovery import RecoveryConfig, decide, recover
from .ted import cached_gain
from .validation import check_positive, check_stream
from .waveform import Modulation, matched_filter, resample_two_sps, srrc_pulse


class SlipTimingRecovery(BaseEstimator, TransformerMixin):
    """Cycle-slip corrected feed-forward timing recovery for one burst.

    Parameters
    ----------
    n_symbols : int
        Symbols to recover from the burst.
    assumed_rate : float
        Receiver's symbol-rate estimate relative to the nominal rate.
    start : float
        Time of the first symbol sample, in nominal symbol periods.
    origin : float
        Time of ``X[0]`` when ``X`` is a bare array.
    apply_matched_filter : bool
        Filter ``X`` with the SRRC pulse first; set False if ``X`` is already
        matched-filtered.
    correct_slips : bool
        Run the spectral rate correction before timing recovery.
    """

    def __init__(self, n_symbols=300, assumed_rate=1.0, start=0.0, origin=0.0,
                 modulation="bpsk", rolloff=0.5, span=24, oversampling=16,
                 apply_matched_filter=True, correct_slips=True, dft_len=5000,
                 threshold=0.5, max_rounds=5, dc_probe_shifts=(0.25, 0.5), tolerance=0.01,
                 max_iters=20, damping=1.0):
        self.n_symbols = n_symbols
        self.assumed_rate = assumed_rate
        self.start = start
        self.origin = origin
        self.modulation = modulation
        self.rolloff = rolloff
        self.span = span
        self.oversampling = oversampling
        self.apply_matched_filter = apply_matched_filter
        self.correct_slips = correct_slips
        self.dft_len = dft_len
        self.threshold = threshold
        self.max_rounds = max_rounds
        self.dc_probe_shifts = dc_probe_shifts
        self.tolerance = tolerance
        self.max_iters = max_iters
        self.damping = damping

    def _front_end(self, X):
        stream = check_stream(X, 1.0 / self.oversampling, self.origin)
        if self.apply_matched_filter:
            stream = matched_filter(stream, srrc_pulse(self.rolloff, self.span, self.oversampling))
        return stream

    def _resample(self, stream, rate):
        return resample_two_sps(stream, 1.0 / rate, self.start, self.n_symbols_)

    def fit(self, X, y=None):
        self.n_symbols_ = check_positive("n_symbols", self.n_symbols, integer=True)
        check_positive("assumed_rate", self.assumed_rate)
        modulation = Modulation.parse(self.modulation)
        config = RecoveryConfig(self.tolerance, self.max_iters, self.damping)
        stream = self._front_end(X)
        self.gain_ = cached_gain(self.rolloff, self.span, self.oversampling, modulation.value)

        def resample(rate):
            return self._resample(stream, rate)

        rate = float(self.assumed_rate)
        if self.correct_slips:
            self.corrected_rate_ = resolve_rate(resample, pair_averaged_errors, rate,
                                                self.dft_len, self.threshold, self.max_rounds,
                                                self.dc_probe_shifts)
            rate = self.corrected_rate_.rate
        else:
            self.corrected_rate_ = None
        self.slip_report_ = detect_burst(resample(float(self.assumed_rate)), self.dft_len,
                                         self.threshold, dc_probe_shifts=self.dc_probe_shifts)
        result = recover(resample(rate), self.gain_, config, modulation)
        result.corrected_rate = self.corrected_rate_
        self.rate_ = rate
        self.shift_ = result.total_shift
        self.phase_ = result.phase
        self.mu_history_ = list(result.mu_history)
        self.n_iter_ = result.iterations
        self.converged_ = bool(result.converged and (
            self.corrected_rate_ is None or self.corrected_rate_.converged))
        self.result_ = result
        return self

    def transform(self, X):
        """Soft symbol-rate samples at the fitted rate, delay and phase."""
        check_is_fitted(self, "rate_")
        rx = self._resample(self._front_end(X), self.rate_)
        if self.shift_ != 0.0:
            rx = fractional_delay(rx, self.shift_)
        return np.asarray(rx.samples)[self.phase_::2]

    def predict(self, X):
        """Nearest-neighbour symbol decisions."""
        return decide(self.transform(X), self.modulation).symbols

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)
