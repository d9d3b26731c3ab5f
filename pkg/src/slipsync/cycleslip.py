"""Cycle-slip detection from the spectrum of the timing-error sequence.

A symbol-rate mismatch makes the timing offset grow linearly, so the detector
output wraps with period ``K = (1 + eps) / eps`` symbols.  That shows up as a
spectral line at ``L / K`` in the zero-padded DFT of ``u``; a slip-free burst
leaves only the DC term from the constant offset.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import median_filter

from .exceptions import ConfigError, OutOfSupportError
from .farrow import fractional_delay

SCHEMA_VERSION = 1

# a correction must cut the dominance at least this much to be applied
MIN_IMPROVEMENT = 2.0
# after the first correction a further round needs this multiple of the threshold
CONFIRM_FACTOR = 2.0
# delays, in assumed symbol periods, of the copies that must confirm a slip
DC_PROBE_SHIFTS = (0.25, 0.5)
# dominance a delayed copy must keep, as a multiple of the threshold
PROBE_CONFIRM = 1.5


@dataclass(frozen=True)
class SlipReport:
    q: int
    K_hat: float
    is_slip: bool
    dominance: float
    L: int

    def to_dict(self):
        d = asdict(self)
        d["K_hat"] = None if math.isinf(self.K_hat) else self.K_hat
        d["dominance"] = None if math.isinf(self.dominance) else self.dominance
        d["schema_version"] = SCHEMA_VERSION
        return d


@dataclass
class CorrectedRate:
    rate: float
    rounds: int = 0
    history: list = field(default_factory=list)
    converged: bool = True
    report: SlipReport | None = None

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "rate": self.rate,
            "rounds": self.rounds,
            "history": [list(h) for h in self.history],
            "converged": self.converged,
            "report": None if self.report is None else self.report.to_dict(),
        }


def _values(u):
    return np.asarray(getattr(u, "u", u), dtype=float)


def pair_averaged_errors(rx):
    """Gardner output averaged over adjacent symbol pairs.

    Neighbouring detector outputs share a data product, which pushes the
    self-noise towards half the symbol rate.  Averaging pairs nulls that
    region and keeps the mean, while a slip line below about a third of the
    symbol rate loses at most half its amplitude.  This is the sequence the
    receiver pipelines feed to :func:`detect`.
    """
    from .ted import gardner_errors

    u = gardner_errors(rx).u
    return 0.5 * (u[1:] + u[:-1])


def spectrum(u, L=5000) -> np.ndarray:
    """Zero-padded ``L``-point transform ``U(l) = sum_k u(k) exp(+j 2 pi k l / L)``."""
    u = _values(u)
    if L < len(u):
        raise ConfigError(f"DFT length {L} is shorter than the sequence ({len(u)})")
    return np.fft.ifft(u, L) * L


def dc_guard(n, L) -> int:
    """Highest bin treated as DC leakage for a length-``n`` sequence.

    This is the first null of the DC main lobe.  Going out to the second null
    would hide the line of a burst holding fewer than two slips.
    """
    return math.ceil(L / n)


def noise_floor(mag, n, L):
    """Running median of ``|U|`` over +-10 resolution cells (``L / n`` bins each)."""
    width = 2 * math.ceil(10 * L / n) + 1
    width = min(width, 2 * (len(mag) // 2) - 1)
    return median_filter(mag, size=max(width, 1), mode="reflect")


def detect(u, L=5000, threshold=0.5) -> SlipReport:
    """Locate the strongest non-DC line and compare it against the DC bin.

    The search covers bins ``dc_guard(N, L) + 1`` through ``floor(0.45 L)``
    and ranks bins by ``|U(l)|`` over the local noise floor, since detector
    self-noise rises steeply towards half the symbol rate.  A slip is declared
    when ``|U(q)| / |U(0)|`` exceeds ``threshold``.
    """
    if not threshold > 0:
        raise ConfigError("threshold must be positive")
    u = _values(u)
    n = len(u)
    if n == 0:
        raise ConfigError("empty timing-error sequence")
    mag = np.abs(spectrum(u, L))
    lo, hi = dc_guard(n, L) + 1, int(math.floor(0.45 * L))
    if lo > hi:
        return SlipReport(0, math.inf, False, 0.0, int(L))
    half = mag[: L // 2 + 1]
    floor = noise_floor(half, n, L)[lo : hi + 1]
    band = half[lo : hi + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(floor > 0, band / floor, band)
    q = lo + int(np.argmax(score))
    dc = mag[0]
    if dc > 0:
        dominance = float(mag[q] / dc)
    else:
        dominance = math.inf if mag[q] > 0 else 0.0
    return SlipReport(q, L / q, bool(dominance > threshold), dominance, int(L))


def detect_burst(rx, L=5000, threshold=0.5, u_fn=pair_averaged_errors,
                 dc_probe_shifts=DC_PROBE_SHIFTS) -> SlipReport:
    """:func:`detect` on a burst, with a slip confirmed on delayed copies.

    A slip-free burst sampled right on the symbol instants has a near-zero
    mean detector output, so ``U(0)`` vanishes and the dominance ratio
    explodes; noise peaks can also clear the threshold by a small margin.
    When a slip is declared, the burst is re-detected on copies delayed by
    each of ``dc_probe_shifts`` assumed symbol periods.  A constant offset
    moves off the S-curve null on at least one of them, while a real slip
    line survives any delay.  Unless every copy keeps the dominance at or
    above ``PROBE_CONFIRM * threshold``, the first copy that does not is
    returned as a no-slip report.  An empty or ``None`` ``dc_probe_shifts``
    disables the check; a single float is accepted.
    """
    report = detect(u_fn(rx), L, threshold)
    if not dc_probe_shifts or not report.is_slip:
        return report
    if np.isscalar(dc_probe_shifts):
        dc_probe_shifts = (dc_probe_shifts,)
    for shift in dc_probe_shifts:
        delayed = fractional_delay(rx, float(shift) * rx.assumed_symbol_period)
        other = detect(u_fn(delayed), L, threshold)
        if other.dominance < PROBE_CONFIRM * threshold:
            return SlipReport(other.q, other.K_hat, False, other.dominance, other.L)
    return report


def rate_hypotheses(rate_assumed, K_hat):
    """Candidate corrected rates ``(1 -+ 1/K) * rate_assumed``.

    The spectrum fixes ``|K|`` only, so both signs of the rate error remain
    possible.
    """
    if not K_hat > 1:
        raise ConfigError(f"slip period must exceed 1 symbol, got {K_hat!r}")
    inv = 1.0 / K_hat
    return (1.0 - inv) * rate_assumed, (1.0 + inv) * rate_assumed


def resolve_rate(resample_fn, u_fn, rate_initial, L=5000, threshold=0.5,
                 max_rounds=5, dc_probe_shifts=None) -> CorrectedRate:
    """Correct the symbol-rate estimate until the detector spectrum is DC-dominant.

    ``resample_fn(rate)`` must return receiver samples taken at that rate and
    ``u_fn(rx)`` the timing-error sequence of those samples.  Each round tries
    both sign hypotheses and keeps the one whose re-detected dominance is
    lower.  A candidate is applied only if it cuts the dominance at least
    ``MIN_IMPROVEMENT``-fold; otherwise the loop stops at the current rate
    and the result is flagged unconverged.  Once a correction has been
    applied, further rounds run only while the dominance stays above
    ``CONFIRM_FACTOR * threshold``: a corrected burst sits just over the
    threshold on noise alone, and chasing that tends toward the weakly
    detected slow-clock side.  With ``dc_probe_shifts`` set, every detection
    goes through :func:`detect_burst`.
    """
    if max_rounds < 1:
        raise ConfigError("max_rounds must be >= 1")

    def probe(rate):
        try:
            return detect_burst(resample_fn(rate), L, threshold, u_fn, dc_probe_shifts)
        except OutOfSupportError:
            return None

    rate = float(rate_initial)
    report = probe(rate)
    if report is None:
        raise ConfigError(f"initial rate {rate!r} samples outside the stream")
    result = CorrectedRate(rate, report=report)
    while report.is_slip and (result.rounds == 0
                              or report.dominance >= CONFIRM_FACTOR * threshold):
        if result.rounds >= max_rounds:
            result.converged = False
            result.history.append((report.K_hat, 0))
            break
        minus, plus = rate_hypotheses(rate, report.K_hat)
        candidates = [(r, s, probe(r)) for r, s in ((minus, -1), (plus, +1))]
        candidates = [c for c in candidates if c[2] is not None]
        if not candidates:
            result.converged = False
            result.history.append((report.K_hat, 0))
            break
        best_rate, sign, best = min(candidates, key=lambda c: c[2].dominance)
        if best.dominance * MIN_IMPROVEMENT > report.dominance:
            result.converged = False
            result.history.append((report.K_hat, 0))
            break
        result.history.append((report.K_hat, sign))
        result.rounds += 1
        rate, report = best_rate, best
    result.rate = rate
    result.report = report
    return result
