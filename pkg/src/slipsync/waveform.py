"""Transmit burst synthesis, channel impairments and receiver-clock sampling.

Time is measured in units of the transmitter's symbol period ``T = 1``; a
receiver whose symbol-rate estimate is ``1 + eps`` therefore assumes a symbol
period ``T' = 1 / (1 + eps)``.  Pulses are generated on an oversampled grid of
``Q`` samples per symbol with unit discrete energy, so the matched-filter
output at a symbol instant equals the transmitted symbol.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, OutOfSupportError
from .farrow import interpolate_at


class Modulation(str, enum.Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self is Modulation.BPSK else 2

    @property
    def alphabet(self) -> np.ndarray:
        if self is Modulation.BPSK:
            return np.array([1.0 + 0j, -1.0 + 0j])
        s = 1.0 / math.sqrt(2.0)
        # Gray labelled: index = 2*b_I + b_Q with bit 1 -> negative rail
        return np.array([s + 1j * s, s - 1j * s, -s + 1j * s, -s - 1j * s])

    @classmethod
    def parse(cls, value) -> "Modulation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown modulation {value!r}") from None


@dataclass(frozen=True, eq=False)
class SymbolSequence:
    symbols: np.ndarray
    modulation: Modulation

    @property
    def count(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)


@dataclass(frozen=True, eq=False)
class PulseShape:
    rolloff: float
    span: int
    oversampling: int
    taps: np.ndarray

    @property
    def descriptor(self) -> str:
        return f"srrc(rolloff={self.rolloff:g}, span={self.span}, Q={self.oversampling})"


@dataclass(frozen=True, eq=False)
class SampleStream:
    samples: np.ndarray
    sample_period: float
    origin: float = 0.0

    def __post_init__(self):
        if not self.sample_period > 0:
            raise ConfigError("sample_period must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.origin + np.arange(len(self.samples)) * self.sample_period

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class ChannelSpec:
    ebn0_db: float = math.inf
    carrier_offset: float = 0.0
    phase: float = 0.0
    delay: float = 0.0
    rate_offset: float = 0.0

    def __post_init__(self):
        if not -0.5 < self.rate_offset < 0.5:
            raise ConfigError(
                f"normalized rate offset must lie in (-0.5, 0.5), got {self.rate_offset!r}"
            )
        if abs(self.carrier_offset) > 0.01:
            warnings.warn(
                f"carrier offset {self.carrier_offset:g}/T is not small against the "
                "symbol rate; timing estimates may be biased",
                RuntimeWarning,
                stacklevel=3,
            )


@dataclass(frozen=True, eq=False)
class ReceiverSamples:
    """Two samples per assumed symbol period, even indices on symbol instants."""

    samples: np.ndarray
    assumed_symbol_period: float
    count_symbols: int
    edge_mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.samples) != 2 * self.count_symbols:
            raise ConfigError(
                f"expected {2 * self.count_symbols} samples for "
                f"{self.count_symbols} symbols, got {len(self.samples)}"
            )


def generate_symbols(modulation, count, seed=None) -> SymbolSequence:
    """Draw ``count`` i.i.d. unit-energy symbols uniformly from the alphabet."""
    modulation = Modulation.parse(modulation)
    if count < 1:
        raise ConfigError("count must be >= 1")
    rng = np.random.default_rng(seed)
    alphabet = modulation.alphabet
    idx = rng.integers(0, len(alphabet), size=count)
    return SymbolSequence(alphabet[idx], modulation)


def srrc_pulse(rolloff=0.5, span=24, oversampling=16) -> PulseShape:
    """Square-root raised-cosine taps, ``span * oversampling + 1`` long.

    The points ``t = 0`` and ``t = +-T/(4 * rolloff)`` use the analytic limits.
    Taps are scaled to unit energy so the discrete self-convolution peaks at 1.
    """
    beta = float(rolloff)
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"rolloff must lie in [0, 1], got {rolloff!r}")
    if span < 4 or oversampling < 4:
        raise ConfigError("span and oversampling must both be >= 4")
    if (span * oversampling) % 2:
        raise ConfigError("span * oversampling must be even for a centred pulse")
    n = span * oversampling
    t = (np.arange(n + 1) - n // 2) / oversampling
    taps = np.empty(n + 1)
    zero = np.isclose(t, 0.0, atol=1e-12)
    if beta > 0:
        sing = np.isclose(np.abs(t), 1.0 / (4.0 * beta), atol=1e-12)
    else:
        sing = np.zeros_like(zero)
    regular = ~(zero | sing)
    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    den = np.pi * tr * (1 - (4 * beta * tr) ** 2)
    taps[regular] = num / den
    taps[zero] = 1 - beta + 4 * beta / np.pi
    if np.any(sing):
        a = np.pi / (4 * beta)
        taps[sing] = beta / np.sqrt(2) * (
            (1 + 2 / np.pi) * np.sin(a) + (1 - 2 / np.pi) * np.cos(a)
        )
    taps /= np.sqrt(np.sum(taps**2))
    # enforce exact even symmetry against rounding in the two halves
    taps = 0.5 * (taps + taps[::-1])
    return PulseShape(beta, int(span), int(oversampling), taps)


def synthesize_burst(symbols, pulse: PulseShape, oversampling=None) -> SampleStream:
    """Superpose pulse copies spaced ``Q`` samples apart.

    The pulse for symbol ``n`` is centred at ``t = n``; the stream carries
    ``span * Q / 2`` samples of transient before the first and after the last
    symbol.
    """
    q = pulse.oversampling if oversampling is None else int(oversampling)
    if q != pulse.oversampling:
        raise ConfigError("oversampling must match the pulse's oversampling")
    values = symbols.symbols if isinstance(symbols, SymbolSequence) else np.asarray(symbols)
    if len(values) == 0:
        raise ConfigError("cannot synthesize an empty burst")
    train = np.zeros((len(values) - 1) * q + 1, dtype=complex)
    train[::q] = values
    out = np.convolve(train, pulse.taps)
    return SampleStream(out, 1.0 / q, origin=-pulse.span / 2.0)


def apply_impairments(stream: SampleStream, channel: ChannelSpec, seed=None,
                      bits_per_symbol=1) -> SampleStream:
    """Rotate by carrier phase/frequency and add complex white Gaussian noise.

    Noise has total variance ``N0 = Es / (bits_per_symbol * Eb/N0)`` per
    sample with ``Es = 1``.  With unit-energy discrete taps the matched filter
    has unit noise gain, so the decision variables see exactly ``N0``; the
    oversampling factor is absorbed into the tap normalisation.  The channel
    delay is not applied here (see :func:`resample_two_sps`).
    """
    out = np.asarray(stream.samples, dtype=complex)
    if channel.carrier_offset != 0.0 or channel.phase != 0.0:
        phase = 2 * np.pi * channel.carrier_offset * stream.times + channel.phase
        out = out * np.exp(1j * phase)
    else:
        out = out.copy()
    if math.isfinite(channel.ebn0_db):
        rng = np.random.default_rng(seed)
        n0 = 1.0 / (bits_per_symbol * 10.0 ** (channel.ebn0_db / 10.0))
        noise = rng.standard_normal((2, len(out))) * math.sqrt(n0 / 2.0)
        out = out + (noise[0] + 1j * noise[1])
    return SampleStream(out, stream.sample_period, stream.origin)


def matched_filter(stream: SampleStream, pulse: PulseShape) -> SampleStream:
    """Convolve with the time-reversed conjugate pulse.

    The origin shifts back by half the pulse length so that the composite
    pulse of a symbol sent at ``t = n`` peaks at ``t = n``.
    """
    if not math.isclose(stream.sample_period, 1.0 / pulse.oversampling, rel_tol=1e-12):
        raise ConfigError("stream sample period does not match the pulse oversampling")
    out = np.convolve(stream.samples, np.conj(pulse.taps[::-1]))
    return SampleStream(out, stream.sample_period, stream.origin - pulse.span / 2.0)


def sampling_instants(assumed_symbol_period, tau, count_symbols) -> np.ndarray:
    """Instants ``k * T'/2 + tau`` for ``k = 0 .. 2*count_symbols - 1``."""
    return np.arange(2 * count_symbols) * (assumed_symbol_period / 2.0) + tau


def resample_two_sps(stream: SampleStream, assumed_symbol_period, tau,
                     count_symbols) -> ReceiverSamples:
    """Sample the oversampled stream on the receiver's clock at 2 samples/symbol.

    This realises both the receiver's symbol-period error and the channel
    delay ``tau``.  Each output is a cubic Farrow interpolation of the stream.
    """
    if assumed_symbol_period <= 0:
        raise ConfigError("assumed_symbol_period must be positive")
    if count_symbols < 1:
        raise ConfigError("count_symbols must be >= 1")
    t = sampling_instants(assumed_symbol_period, tau, count_symbols)
    pos = (t - stream.origin) / stream.sample_period
    lo, hi = 1.0, len(stream.samples) - 2.0
    bad = np.flatnonzero((pos < lo) | (pos >= hi))
    if bad.size:
        k = int(bad[0])
        support = (stream.origin + lo * stream.sample_period,
                   stream.origin + hi * stream.sample_period)
        raise OutOfSupportError(k, float(t[k]), support)
    values, _ = interpolate_at(stream.samples, pos)
    return ReceiverSamples(values, float(assumed_symbol_period), int(count_symbols))


def write_iq(path, samples) -> None:
    """Write complex samples as little-endian float64 ``[re, im]`` pairs."""
    samples = np.asarray(getattr(samples, "samples", samples), dtype=complex)
    pairs = np.column_stack([samples.real, samples.imag]).astype("<f8")
    pairs.tofile(path)


def read_iq(path, sample_period=None, origin=0.0):
    """Read a raw interleaved I/Q file written by :func:`write_iq`.

    Returns a :class:`SampleStream` when ``sample_period`` is given, otherwise
    the bare complex array.
    """
    raw = np.fromfile(path, dtype="<f8")
    if raw.size % 2:
        raise ConfigError(f"{path}: odd number of float64 values in I/Q file")
    samples = raw[0::2] + 1j * raw[1::2]
    if sample_period is None:
        return samples
    return SampleStream(samples, float(sample_period), float(origin))
