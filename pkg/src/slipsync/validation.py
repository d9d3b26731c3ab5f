"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigError
from .waveform import ReceiverSamples, SampleStream


def check_stream(X, sample_period=None, origin=0.0) -> SampleStream:
    """Coerce ``X`` to a :class:`SampleStream` of finite complex samples.

    A bare array needs ``sample_period``; a stream keeps its own timing and
    must agree with ``sample_period`` when both are given.
    """
    if isinstance(X, SampleStream):
        if sample_period is not None and not math.isclose(
            X.sample_period, sample_period, rel_tol=1e-12
        ):
            raise ConfigError(
                f"stream sample period {X.sample_period!r} != expected {sample_period!r}"
            )
        samples, period, origin = X.samples, X.sample_period, X.origin
    else:
        if sample_period is None:
            raise ConfigError("sample_period is required for a bare sample array")
        samples, period = X, sample_period
    samples = np.asarray(samples)
    if samples.ndim == 2 and samples.shape[1] == 2 and not np.iscomplexobj(samples):
        samples = samples[:, 0] + 1j * samples[:, 1]
    if samples.ndim != 1:
        raise ConfigError(f"expected a 1-D complex sample array, got shape {samples.shape}")
    if samples.size == 0:
        raise ConfigError("empty sample stream")
    samples = samples.astype(complex, copy=False)
    if not np.all(np.isfinite(samples)):
        raise ConfigError("sample stream contains NaN or inf")
    return SampleStream(samples, float(period), float(origin))


def check_receiver_samples(rx) -> ReceiverSamples:
    if not isinstance(rx, ReceiverSamples):
        raise ConfigError(f"expected ReceiverSamples, got {type(rx).__name__}")
    if not np.all(np.isfinite(rx.samples)):
        raise ConfigError("receiver samples contain NaN or inf")
    return rx


def check_positive(name, value, integer=False):
    if integer and (isinstance(value, bool) or int(value) != value):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return int(value) if integer else float(value)


def check_seed(seed) -> int:
    """Accept any integer in ``[0, 2**64)``."""
    try:
        value = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= value < 2**64:
        raise ConfigError(f"seed must lie in [0, 2**64), got {seed!r}")
    return value


def parse_grid(text, kind=float):
    """Parse ``start:step:stop`` (inclusive), a comma list or a single value."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step == 0 or (stop - start) / step < 0:
                raise ConfigError(f"empty or unbounded range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
            # tidy float drift so the CSV shows 2.0 rather than 1.9999999999
            values = [round(v, 12) for v in values]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as a value, list or start:step:stop") from None
    if not values:
        raise ConfigError(f"no values in {text!r}")
    if kind is int:
        if any(v != int(v) for v in values):
            raise ConfigError(f"expected integers in {text!r}")
        return [int(v) for v in values]
    return values
