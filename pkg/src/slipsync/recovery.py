"""Feed-forward iterative timing recovery on a slip-free burst.

Each pass averages the Gardner output over the whole burst to estimate the
residual constant delay, converts it to time with the calibrated detector
gain, and re-interpolates the burst.  The loop stops once the estimate falls
under the tolerance; the burst is then decimated to one sample per symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .farrow import fractional_delay
from .ted import DetectorGain, TimingErrorSequence, gardner_errors
from .waveform import Modulation, ReceiverSamples, SymbolSequence


@dataclass(frozen=True)
class RecoveryConfig:
    tolerance: float = 0.01
    max_iters: int = 20
    damping: float = 1.0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]")


@dataclass(eq=False)
class SyncResult:
    decided: SymbolSequence
    mu_history: list
    iterations: int
    converged: bool
    corrected_rate: object = None
    # working state kept for diagnostics and re-checks
    samples: ReceiverSamples | None = None
    soft: np.ndarray | None = None
    total_shift: float = 0.0
    phase: int = 0
    extras: dict = field(default_factory=dict)

    def to_dict(self, include_symbols=False):
        """JSON-ready summary; decided symbols are optional since they can be long."""
        from .cycleslip import SCHEMA_VERSION

        d = {
            "schema_version": SCHEMA_VERSION,
            "mu_history": [float(m) for m in self.mu_history],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "corrected_rate": None if self.corrected_rate is None else self.corrected_rate.to_dict(),
        }
        if include_symbols:
            z = np.asarray(self.decided.symbols)
            d["decided"] = {
                "modulation": self.decided.modulation.value,
                "symbols": [[float(v.real), float(v.imag)] for v in z],
            }
        return d


def _gain_value(gain):
    return float(getattr(gain, "gain", gain))


def estimate_mu(u, gain) -> float:
    """Residual constant delay: the burst mean of ``u`` divided by the gain."""
    values = np.asarray(u.u if isinstance(u, TimingErrorSequence) else u, dtype=float)
    if values.size == 0:
        raise ConfigError("cannot estimate delay from an empty sequence")
    g = _gain_value(gain)
    if not g > 0:
        raise ConfigError("detector gain must be positive")
    return float(values.mean() / g)


def decide(samples, modulation="bpsk") -> SymbolSequence:
    """Nearest-neighbour decisions in the unit-energy alphabet."""
    modulation = Modulation.parse(modulation)
    z = np.asarray(samples, dtype=complex)
    if modulation is Modulation.BPSK:
        out = np.where(z.real >= 0, 1.0, -1.0).astype(complex)
    else:
        s = 1.0 / np.sqrt(2.0)
        out = (np.where(z.real >= 0, s, -s) + 1j * np.where(z.imag >= 0, s, -s))
    return SymbolSequence(out, modulation)


def symbol_phase(samples) -> int:
    """Polyphase (0 or 1) with the larger mean power, i.e. the on-symbol phase."""
    x = np.asarray(samples)
    p0 = np.mean(np.abs(x[0::2]) ** 2)
    p1 = np.mean(np.abs(x[1::2]) ** 2)
    return 0 if p0 >= p1 else 1


def recover(rx: ReceiverSamples, gain: DetectorGain | float, config: RecoveryConfig = None,
            modulation="bpsk") -> SyncResult:
    """Iterate delay estimation and interpolation, then decimate and decide.

    Every pass re-interpolates the original samples by the accumulated shift,
    so interpolation error does not compound across iterations.  On short
    bursts the local detector slope can be well above the calibrated gain and
    a full step overshoots; when an estimate flips sign without at least
    halving, the step size is halved.
    """
    config = config or RecoveryConfig()
    work = rx
    total = 0.0
    step = config.damping
    history = []
    converged = False
    for _ in range(config.max_iters):
        mu = estimate_mu(gardner_errors(work), gain)
        if history and mu * history[-1] < 0 and abs(mu) > 0.5 * abs(history[-1]):
            step *= 0.5
        history.append(mu)
        if abs(mu) < config.tolerance:
            converged = True
            break
        total += step * mu
        work = fractional_delay(rx, total)
    phase = symbol_phase(work.samples)
    soft = np.asarray(work.samples)[phase::2]
    return SyncResult(
        decided=decide(soft, modulation),
        mu_history=history,
        iterations=len(history),
        converged=converged,
        samples=work,
        soft=soft,
        total_shift=total,
        phase=phase,
    )
