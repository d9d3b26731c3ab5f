"""Cubic Lagrange fractional-delay interpolation in Farrow form.

The interpolator sees four consecutive samples at abscissae -1, 0, 1, 2 and
evaluates the cubic through them at ``mu`` in [0, 1), i.e. inside the
central interval where cubic interpolation is most accurate.  The
fixed coefficient rows below combine the samples; ``mu`` enters only through
the Horner recursion over those rows.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError

# Rows: coefficients of mu**3, mu**2, mu**1, mu**0 applied to (r_-1, r_0, r_1, r_2).
FARROW_COEFFS = np.array(
    [
        [-1.0 / 6.0, 0.5, -0.5, 1.0 / 6.0],
        [0.5, -1.0, 0.5, 0.0],
        [-1.0 / 3.0, -0.5, 1.0, -1.0 / 6.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)


def interpolate(window, mu):
    """Interpolate one output from a 4-sample window.

    Parameters
    ----------
    window : array_like, shape (4,)
        Samples ``(r_-1, r_0, r_1, r_2)``; real or complex.
    mu : float
        Fractional offset measured forward from ``r_0``, in [0, 1).

    Returns
    -------
    complex or float
        Value of the interpolating cubic at abscissa ``mu``.
    """
    mu = float(mu)
    if not 0.0 <= mu < 1.0:
        raise ConfigError(f"mu must lie in [0, 1), got {mu!r}")
    window = np.asarray(window)
    if window.shape != (4,):
        raise ConfigError(f"window must hold exactly 4 samples, got shape {window.shape}")
    c3, c2, c1, c0 = FARROW_COEFFS @ window
    return ((c3 * mu + c2) * mu + c1) * mu + c0


def interpolate_many(windows, mu):
    """Vectorised :func:`interpolate` over rows of ``windows`` (shape ``(n, 4)``)."""
    windows = np.asarray(windows)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0.0) or np.any(mu >= 1.0):
        raise ConfigError("all mu values must lie in [0, 1)")
    c = windows @ FARROW_COEFFS.T
    return ((c[:, 0] * mu + c[:, 1]) * mu + c[:, 2]) * mu + c[:, 3]


def interpolate_at(x, positions):
    """Evaluate the sequence ``x`` at fractional sample ``positions``.

    Position ``p = n + f`` uses the window ``x[n-1 .. n+2]`` so that it falls
    at abscissa ``f``.  Windows reaching past either end of ``x`` are
    filled by edge replication.

    Returns
    -------
    values : ndarray
    edge : ndarray of bool
        True where the window needed edge replication.
    """
    x = np.asarray(x)
    positions = np.asarray(positions, dtype=float)
    n = np.floor(positions).astype(np.int64)
    frac = positions - n
    # floor() of values a hair under an integer can yield frac == 1.0
    wrap = frac >= 1.0
    n[wrap] += 1
    frac[wrap] = 0.0
    idx = n[:, None] + np.arange(-1, 3)[None, :]
    edge = np.any((idx < 0) | (idx > len(x) - 1), axis=1)
    idx = np.clip(idx, 0, len(x) - 1)
    return interpolate_many(x[idx], frac), edge


def fractional_delay(rx, shift_seconds):
    """Delay a 2-samples-per-symbol stream by ``shift_seconds``.

    Output sample ``m`` is the input evaluated at sample position
    ``m - shift_seconds / (T/2)``, so a positive shift moves every sampling
    instant earlier by ``shift_seconds``.  Length is preserved; samples whose
    window runs off either end are filled by edge replication and reported in
    ``edge_mask``.  Shifts of a whole sample or more reduce to an integer
    index move plus the fractional residue, which the window lookup handles.
    """
    from .waveform import ReceiverSamples

    spacing = rx.assumed_symbol_period / 2.0
    if shift_seconds == 0.0:
        return ReceiverSamples(
            samples=rx.samples.copy(),
            assumed_symbol_period=rx.assumed_symbol_period,
            count_symbols=rx.count_symbols,
            edge_mask=np.zeros(len(rx.samples), dtype=bool),
        )
    positions = np.arange(len(rx.samples)) - shift_seconds / spacing
    values, edge = interpolate_at(rx.samples, positions)
    return ReceiverSamples(
        samples=values,
        assumed_symbol_period=rx.assumed_symbol_period,
        count_symbols=rx.count_symbols,
        edge_mask=edge,
    )
