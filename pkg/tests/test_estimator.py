import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from slipsync.estimator import SlipTimingRecovery
from slipsync.exceptions import ConfigError
from slipsync.waveform import (
    ChannelSpec,
    apply_impairments,
    generate_symbols,
    matched_filter,
    srrc_pulse,
    synthesize_burst,
)

N = 300


def _burst(seed=0, ebn0_db=np.inf, modulation="bpsk"):
    truth = generate_symbols(modulation, N, seed=seed)
    tx = synthesize_burst(np.concatenate([truth.symbols, np.zeros(N + 2)]), srrc_pulse())
    bps = 2 if modulation == "qpsk" else 1
    return truth.symbols, apply_impairments(tx, ChannelSpec(ebn0_db), seed + 100, bps)


def test_params_round_trip_and_clone():
    # [TRIVIAL]
    est = SlipTimingRecovery(assumed_rate=1.1, dc_probe_shifts=(0.25,))
    params = est.get_params()
    assert params["assumed_rate"] == 1.1 and params["dc_probe_shifts"] == (0.25,)
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(threshold=0.7)
    assert est.threshold == 0.7


def test_not_fitted():
    # [TRIVIAL]
    _, stream = _burst()
    with pytest.raises(NotFittedError):
        SlipTimingRecovery().predict(stream)


@pytest.mark.parametrize("rate", [1.1, 0.95, 1.0])
def test_noiseless_fit_predict_recovers_symbols(rate):
    # [DERIVED]
    truth, stream = _burst()
    est = SlipTimingRecovery(n_symbols=N, assumed_rate=rate, start=0.2).fit(stream)
    assert est.converged_
    assert abs(est.rate_ - 1.0) < 0.005
    np.testing.assert_array_equal(est.predict(stream), truth)
    assert est.slip_report_.is_slip == (rate != 1.0)


def test_fit_predict_matches_fit_then_predict():
    # [TRIVIAL]
    truth, stream = _burst(seed=3, ebn0_db=10.0)
    a = SlipTimingRecovery(assumed_rate=1.1).fit_predict(stream)
    b = SlipTimingRecovery(assumed_rate=1.1).fit(stream).predict(stream)
    np.testing.assert_array_equal(a, b)
    assert np.mean(a != truth) < 0.02


def test_without_correction_rate_is_kept():
    # [TRIVIAL]
    _, stream = _burst()
    est = SlipTimingRecovery(assumed_rate=1.1, correct_slips=False).fit(stream)
    assert est.rate_ == 1.1 and est.corrected_rate_ is None


def test_transform_shape_and_bare_array_input():
    # [TRIVIAL]
    truth, stream = _burst(modulation="qpsk")
    est = SlipTimingRecovery(modulation="qpsk", start=0.1, origin=stream.origin)
    soft = est.fit(stream.samples).transform(stream.samples)
    assert soft.shape == (N,)
    np.testing.assert_allclose(est.predict(stream.samples), truth)


@pytest.mark.parametrize("kwargs", [{"n_symbols": 0}, {"assumed_rate": -1.0},
                                    {"modulation": "8psk"}])
def test_bad_parameters(kwargs):
    # [TRIVIAL]
    _, stream = _burst()
    with pytest.raises(ConfigError):
        SlipTimingRecovery(**kwargs).fit(stream)


def test_rejects_non_finite_input():
    # [TRIVIAL]
    _, stream = _burst()
    x = stream.samples.copy()
    x[5] = np.nan
    with pytest.raises(ConfigError):
        SlipTimingRecovery().fit(x)
