"""Monte-Carlo BER experiments over the complete receive chain.

A trial draws a burst, passes it through the channel, samples it on a
receiver clock running at ``1 + eps`` times the true symbol rate and hands
the samples to one of four receivers:

``corrected``
    slip correction of the rate estimate, then iterative timing recovery;
``uncorrected``
    timing recovery at the wrong rate;
``burst_by_burst``
    independent timing recovery on short segments at the wrong rate;
``genie``
    sampling at the true instants, decisions only.

Bit errors are counted positionally against the transmitted payload, so a
slipped symbol corrupts everything after it.
"""

from __future__ import annotations

import csv
import enum
import functools
import io
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .cycleslip import DC_PROBE_SHIFTS, detect_burst, pair_averaged_errors, resolve_rate
from .exceptions import ConfigError
from .recovery import RecoveryConfig, SyncResult, decide, recover
from .ted import cached_gain
from .waveform import (
    ChannelSpec,
    Modulation,
    ReceiverSamples,
    SymbolSequence,
    apply_impairments,
    generate_symbols,
    matched_filter,
    resample_two_sps,
    srrc_pulse,
    synthesize_burst,
)

CSV_HEADER = [
    "ebn0_db", "eps", "burst_len", "pipeline", "trials", "bits", "errors",
    "ber", "slip_rate", "k_hat_mean", "iter_mean",
]


class Pipeline(str, enum.Enum):
    CORRECTED = "corrected"
    UNCORRECTED = "uncorrected"
    BURST_BY_BURST = "burst_by_burst"
    GENIE = "genie"

    @classmethod
    def parse(cls, value) -> "Pipeline":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("-", "_"))
        except ValueError:
            raise ConfigError(f"unknown pipeline {value!r}") from None


@dataclass(frozen=True)
class TrialConfig:
    modulation: str = "bpsk"
    N: int = 300
    ebn0_db: float = 10.0
    eps: float = 0.1
    tau_over_T: float = 0.2
    L: int = 5000
    pipeline: str = "corrected"
    segment_len: int | None = None
    seed: int = 0
    rolloff: float = 0.5
    span: int = 24
    oversampling: int = 16
    threshold: float = 0.5
    max_rounds: int = 5
    dc_probe_shifts: tuple = DC_PROBE_SHIFTS
    tolerance: float = 0.01
    max_iters: int = 20
    damping: float = 1.0

    def validate(self) -> "TrialConfig":
        Modulation.parse(self.modulation)
        Pipeline.parse(self.pipeline)
        if self.N < 16:
            raise ConfigError("burst length N must be >= 16")
        if self.L < self.N:
            raise ConfigError("DFT length L must be >= N")
        if not -0.4 <= self.tau_over_T <= 0.4:
            raise ConfigError("tau_over_T must lie in [-0.4, 0.4]")
        if not -0.5 < self.eps < 0.5:
            raise ConfigError("eps must lie in (-0.5, 0.5)")
        if self.segment_len is not None and self.segment_len < 16:
            raise ConfigError("segment_len must be >= 16")
        RecoveryConfig(self.tolerance, self.max_iters, self.damping)
        return self

    @property
    def recovery(self) -> RecoveryConfig:
        return RecoveryConfig(self.tolerance, self.max_iters, self.damping)


@dataclass
class BerRecord:
    config: TrialConfig
    bit_errors: int
    bits_total: int
    ber: float
    slip_detected: bool
    K_hat: float
    rate_error_final: float
    iterations: int
    converged: bool = True

    def to_dict(self):
        d = asdict(self)
        d["K_hat"] = None if not math.isfinite(self.K_hat) else self.K_hat
        return d


def default_segment_len(eps, n_symbols) -> int:
    """Longest segment whose accumulated drift stays within a quarter symbol."""
    if eps == 0:
        return int(n_symbols)
    drift = abs(eps) / (1.0 + eps)
    return int(min(max(16, math.floor(0.25 / drift)), n_symbols))


@functools.lru_cache(maxsize=8)
def _pulse(rolloff, span, oversampling):
    return srrc_pulse(rolloff, span, oversampling)


def _bits(values, modulation):
    z = np.asarray(values, dtype=complex)
    if modulation is Modulation.BPSK:
        return (z.real < 0)[:, None]
    return np.column_stack([z.real < 0, z.imag < 0])


def count_ber(decided, truth, modulation=None):
    """Positional bit-error count ``(bit_errors, bits_total)``.

    BPSK carries one bit per symbol; QPSK two, Gray mapped onto the signs of
    the I and Q rails.  No realignment is attempted.
    """
    if modulation is None:
        modulation = getattr(decided, "modulation", None) or getattr(truth, "modulation", None)
    if modulation is None:
        raise ConfigError("modulation is required when passing bare arrays")
    modulation = Modulation.parse(modulation)
    d = getattr(decided, "symbols", decided)
    t = getattr(truth, "symbols", truth)
    if len(d) != len(t):
        raise ConfigError(f"length mismatch: {len(d)} decisions vs {len(t)} symbols")
    errors = int(np.count_nonzero(_bits(d, modulation) != _bits(t, modulation)))
    return errors, len(t) * modulation.bits_per_symbol


def best_shift(decided, truth, start=0, max_shift=2) -> int:
    """Whole-symbol shift of ``decided`` against ``truth[start:]`` maximising correlation."""
    d = np.asarray(getattr(decided, "symbols", decided), dtype=complex)
    t = np.asarray(getattr(truth, "symbols", truth), dtype=complex)
    best, best_score = 0, -np.inf
    for s in range(-max_shift, max_shift + 1):
        idx = np.clip(start + np.arange(len(d)) + s, 0, len(t) - 1)
        score = np.real(np.vdot(t[idx], d))
        if score > best_score:
            best, best_score = s, score
    return best


def align_segments(decided, truth, segment_len, max_shift=2) -> np.ndarray:
    """Reference symbols re-indexed so each segment sits at its best shift.

    Segments of a burst-by-burst receiver carry no frame position of their
    own; this gives each the benefit of a known-preamble alignment within
    ``max_shift`` symbols before positional counting.
    """
    d = np.asarray(getattr(decided, "symbols", decided), dtype=complex)
    t = np.asarray(getattr(truth, "symbols", truth), dtype=complex)
    out = np.empty_like(t)
    for start, stop in _segment_bounds(len(t), segment_len):
        s = best_shift(d[start:stop], t, start, max_shift)
        idx = np.clip(np.arange(start, stop) + s, 0, len(t) - 1)
        out[start:stop] = t[idx]
    return out


def _segment_bounds(n, segment_len):
    bounds = [(a, min(a + segment_len, n)) for a in range(0, n, segment_len)]
    # a short tail cannot drive the detector on its own
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] < 16:
        tail = bounds.pop()
        bounds[-1] = (bounds[-1][0], tail[1])
    return bounds


def burst_by_burst(rx: ReceiverSamples, gain, segment_len, config: RecoveryConfig = None,
                   modulation="bpsk") -> SyncResult:
    """Recover each ``segment_len``-symbol segment independently and concatenate."""
    if segment_len < 16:
        raise ConfigError("segment_len must be >= 16")
    config = config or RecoveryConfig()
    modulation = Modulation.parse(modulation)
    parts = []
    for start, stop in _segment_bounds(rx.count_symbols, segment_len):
        seg = ReceiverSamples(rx.samples[2 * start : 2 * stop], rx.assumed_symbol_period,
                              stop - start)
        parts.append(recover(seg, gain, config, modulation))
    soft = np.concatenate([p.soft for p in parts])
    return SyncResult(
        decided=SymbolSequence(np.concatenate([p.decided.symbols for p in parts]), modulation),
        mu_history=[p.mu_history[-1] for p in parts],
        iterations=max(p.iterations for p in parts),
        converged=all(p.converged for p in parts),
        soft=soft,
        extras={"segments": parts},
    )


def receiver_front_end(config: TrialConfig):
    """Transmitted symbols and the matched-filter output for one trial.

    Symbols and noise draw from independent children of ``config.seed``.
    """
    cfg = config.validate()
    modulation = Modulation.parse(cfg.modulation)
    sym_seed, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    truth = generate_symbols(modulation, cfg.N, sym_seed)
    pulse = _pulse(cfg.rolloff, cfg.span, cfg.oversampling)
    # zero tail covers receiver clocks down to half the true rate
    payload = np.concatenate([truth.symbols, np.zeros(cfg.N + 2)])
    tx = synthesize_burst(payload, pulse)
    channel = ChannelSpec(cfg.ebn0_db, rate_offset=cfg.eps, delay=cfg.tau_over_T)
    impaired = apply_impairments(tx, channel, noise_seed, modulation.bits_per_symbol)
    return truth, matched_filter(impaired, pulse)


def run_trial(config: TrialConfig) -> BerRecord:
    """Run one burst through the configured receiver and count bit errors."""
    cfg = config.validate()
    modulation = Modulation.parse(cfg.modulation)
    pipeline = Pipeline.parse(cfg.pipeline)
    truth, stream = receiver_front_end(cfg)

    if pipeline is Pipeline.GENIE:
        rx = resample_two_sps(stream, 1.0, 0.0, cfg.N)
        decided = decide(rx.samples[0::2], modulation)
        errors, bits = count_ber(decided, truth)
        return BerRecord(cfg, errors, bits, errors / bits, False, math.inf, 0.0, 0)

    gain = cached_gain(cfg.rolloff, cfg.span, cfg.oversampling, modulation.value)

    def resample(rate):
        return resample_two_sps(stream, 1.0 / rate, cfg.tau_over_T, cfg.N)

    rate0 = 1.0 + cfg.eps
    first = detect_burst(resample(rate0), cfg.L, cfg.threshold,
                         dc_probe_shifts=cfg.dc_probe_shifts)
    rate, rate_ok = rate0, True
    reference = truth.symbols
    if pipeline is Pipeline.CORRECTED:
        corrected = resolve_rate(resample, pair_averaged_errors, rate0, cfg.L,
                                 cfg.threshold, cfg.max_rounds, cfg.dc_probe_shifts)
        rate, rate_ok = corrected.rate, corrected.converged
        result = recover(resample(rate), gain, cfg.recovery, modulation)
        result.corrected_rate = corrected
    elif pipeline is Pipeline.UNCORRECTED:
        result = recover(resample(rate0), gain, cfg.recovery, modulation)
    else:
        seg = cfg.segment_len or default_segment_len(cfg.eps, cfg.N)
        result = burst_by_burst(resample(rate0), gain, seg, cfg.recovery, modulation)
        reference = align_segments(result.decided, truth, seg)

    errors, bits = count_ber(result.decided, reference, modulation)
    return BerRecord(
        config=cfg,
        bit_errors=errors,
        bits_total=bits,
        ber=errors / bits,
        slip_detected=first.is_slip,
        K_hat=first.K_hat if first.is_slip else math.inf,
        rate_error_final=rate - 1.0,
        iterations=result.iterations,
        converged=bool(result.converged and rate_ok),
    )


def trial_seed(base_seed, coords, trial) -> int:
    """Stable 64-bit seed derived from the base seed, grid indices and trial index."""
    entropy = [int(base_seed) & 0xFFFFFFFFFFFFFFFF, *map(int, coords), int(trial)]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass
class SweepSpec:
    base: TrialConfig = field(default_factory=TrialConfig)
    ebn0_db: list = None
    eps: list = None
    N: list = None
    trials: int = 100
    base_seed: int = 0
    n_jobs: int = 1

    def grid(self):
        """Grid points in output order: Eb/N0 outermost, then eps, then N."""
        axes = [
            self.ebn0_db if self.ebn0_db is not None else [self.base.ebn0_db],
            self.eps if self.eps is not None else [self.base.eps],
            self.N if self.N is not None else [self.base.N],
        ]
        for idx in itertools.product(*(range(len(a)) for a in axes)):
            values = [axes[i][j] for i, j in enumerate(idx)]
            yield idx, replace(self.base, ebn0_db=float(values[0]), eps=float(values[1]),
                               N=int(values[2]))


@dataclass
class SweepRow:
    ebn0_db: float
    eps: float
    burst_len: int
    pipeline: str
    trials: int
    bits: int
    errors: int
    ber: float
    slip_rate: float
    k_hat_mean: float
    iter_mean: float
    nonconverged: int = 0

    def csv_fields(self):
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def aggregate(point: TrialConfig, records) -> SweepRow:
    """Reduce one grid point's trial records into a table row."""
    bits = sum(r.bit_errors for r in records), sum(r.bits_total for r in records)
    slips = [r for r in records if r.slip_detected]
    k_hats = [r.K_hat for r in slips if math.isfinite(r.K_hat)]
    return SweepRow(
        ebn0_db=float(point.ebn0_db),
        eps=float(point.eps),
        burst_len=int(point.N),
        pipeline=Pipeline.parse(point.pipeline).value,
        trials=len(records),
        bits=bits[1],
        errors=bits[0],
        ber=bits[0] / bits[1] if bits[1] else float("nan"),
        slip_rate=len(slips) / len(records) if records else float("nan"),
        k_hat_mean=float(np.mean(k_hats)) if k_hats else float("nan"),
        iter_mean=float(np.mean([r.iterations for r in records])) if records else float("nan"),
        nonconverged=sum(not r.converged for r in records),
    )


def ber_sweep(spec: SweepSpec):
    """Run ``spec.trials`` trials per grid point and aggregate bit errors.

    Trial seeds depend only on the base seed and grid coordinates, so the
    table is identical whatever ``n_jobs`` is.
    """
    if spec.trials < 1:
        raise ConfigError("trials must be >= 1")
    points = list(spec.grid())
    for _, point in points:
        point.validate()
    configs = [
        replace(point, seed=trial_seed(spec.base_seed, idx, t))
        for idx, point in points
        for t in range(spec.trials)
    ]
    if spec.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.n_jobs) as pool:
            records = list(pool.map(run_trial, configs, chunksize=8))
    else:
        records = [run_trial(c) for c in configs]
    rows = []
    for i, (_, point) in enumerate(points):
        rows.append(aggregate(point, records[i * spec.trials : (i + 1) * spec.trials]))
    return rows


def write_csv(rows, out=None) -> str:
    """Write sweep rows with the fixed header; returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text
