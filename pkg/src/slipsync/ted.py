"""Gardner timing-error detector and its gain calibration."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .waveform import (
    Modulation,
    PulseShape,
    ReceiverSamples,
    generate_symbols,
    matched_filter,
    resample_two_sps,
    srrc_pulse,
    synthesize_burst,
)


@dataclass(frozen=True, eq=False)
class TimingErrorSequence:
    u: np.ndarray
    symbol_period_assumed: float

    def __len__(self):
        return len(self.u)


@dataclass(frozen=True)
class DetectorGain:
    gain: float
    pulse_id: str


def gardner_errors(rx: ReceiverSamples) -> TimingErrorSequence:
    """``u[k] = Re(conj(x[2k+1]) * (x[2k+2] - x[2k]))`` for ``k < count - 2``.

    Positive values mean the receiver samples late.
    """
    if rx.count_symbols < 3:
        raise ConfigError("Gardner detector needs at least 3 symbols")
    x = np.asarray(rx.samples)
    n = rx.count_symbols - 2
    on = x[0 : 2 * n + 1 : 2]
    mid = x[1 : 2 * n : 2]
    u = np.real(np.conj(mid) * (on[1:] - on[:-1]))
    return TimingErrorSequence(u, rx.assumed_symbol_period)


def _offset_bursts(pulse, modulation, offsets, n_symbols, seed, amplitude=1.0):
    """Yield ``(offset, u)`` for a noiseless burst sampled with constant offsets.

    ``margin`` symbols are skipped at each end so every TED window sees a full
    pulse neighbourhood.
    """
    margin = pulse.span
    symbols = generate_symbols(modulation, n_symbols + 2 * margin, seed)
    mf = matched_filter(synthesize_burst(symbols, pulse), pulse)
    for d in offsets:
        rx = resample_two_sps(mf, 1.0, margin + d, n_symbols)
        if amplitude != 1.0:
            rx = ReceiverSamples(amplitude * rx.samples, 1.0, n_symbols)
        yield d, gardner_errors(rx).u


def default_offsets(points=25):
    """Evenly spaced offsets over ``[-0.45, 0.45]``, rounded so the centre is exactly 0."""
    return np.round(np.linspace(-0.45, 0.45, points), 12) + 0.0


def s_curve(pulse: PulseShape, modulation="bpsk", offsets=None, symbols_per_point=5000,
            seed=0, amplitude=1.0, return_stderr=False):
    """Mean detector output versus constant timing offset.

    Every offset reuses the same random burst, which keeps the curve smooth
    and its symmetry checks tight.

    Returns
    -------
    ndarray, shape (n, 2) or (n, 3)
        Columns ``offset, mean_u`` and, with ``return_stderr``, the standard
        error of the mean.
    """
    modulation = Modulation.parse(modulation)
    if offsets is None:
        offsets = default_offsets(25)
    offsets = np.asarray(offsets, dtype=float)
    if np.any(np.abs(offsets) >= 0.5):
        raise ConfigError("offsets must lie strictly inside (-T/2, T/2)")
    rows = []
    for d, u in _offset_bursts(pulse, modulation, offsets, symbols_per_point, seed, amplitude):
        row = [d, u.mean()]
        if return_stderr:
            row.append(u.std(ddof=1) / np.sqrt(len(u)))
        rows.append(row)
    return np.array(rows)


def calibrate_gain(pulse: PulseShape, modulation="bpsk", seed=0, n_symbols=20000,
                   amplitude=1.0) -> DetectorGain:
    """Slope of the S-curve at the origin by central difference over ``+-T/64``."""
    if n_symbols < 20000:
        raise ConfigError("gain calibration needs at least 2e4 symbols")
    step = 1.0 / 64.0
    means = {d: u.mean() for d, u in
             _offset_bursts(pulse, Modulation.parse(modulation), (-step, step),
                            n_symbols, seed, amplitude)}
    slope = (means[step] - means[-step]) / (2.0 * step)
    if not slope > 0:
        raise ConfigError(f"non-positive detector slope {slope:.3g} for {pulse.descriptor}")
    return DetectorGain(float(slope), pulse.descriptor)


@functools.lru_cache(maxsize=32)
def cached_gain(rolloff=0.5, span=24, oversampling=16, modulation="bpsk", seed=0) -> DetectorGain:
    """Memoised :func:`calibrate_gain` for the SRRC pulse with these parameters."""
    pulse = srrc_pulse(rolloff, span, oversampling)
    return calibrate_gain(pulse, Modulation.parse(modulation).value, seed)
