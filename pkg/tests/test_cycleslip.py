import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slipsync.cycleslip import (
    SlipReport,
    dc_guard,
    detect,
    detect_burst,
    pair_averaged_errors,
    rate_hypotheses,
    resolve_rate,
    spectrum,
)
from slipsync.exceptions import ConfigError, OutOfSupportError
from slipsync.harness import TrialConfig, receiver_front_end
from slipsync.ted import gardner_errors
from slipsync.waveform import resample_two_sps


def _noiseless(eps, n=500, tau=0.2, seed=0):
    cfg = TrialConfig(N=n, eps=eps, ebn0_db=math.inf, tau_over_T=tau, seed=seed)
    _, stream = receiver_front_end(cfg)
    return lambda rate: resample_two_sps(stream, 1.0 / rate, tau, n)


# spectrum -------------------------------------------------------------------

def test_spectrum_constant():
    # [DERIVED]
    u = np.full(500, 0.3)
    U = spectrum(u, 5000)
    assert len(U) == 5000
    assert abs(U[0]) == pytest.approx(150.0)
    assert np.all(np.abs(U[1:2501]) < abs(U[0]))


def test_spectrum_convention_positive_exponent():
    # [DERIVED] direct sum with exp(+j 2 pi k l / L)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(40)
    L = 64
    k = np.arange(40)
    direct = np.array([np.sum(u * np.exp(2j * np.pi * k * l / L)) for l in range(L)])
    np.testing.assert_allclose(spectrum(u, L), direct, atol=1e-10)


def test_spectrum_zeros_and_length_check():
    # [DERIVED]
    assert not np.any(spectrum(np.zeros(10), 16))
    with pytest.raises(ConfigError):
        spectrum(np.zeros(10), 8)


def test_sinusoid_peak_bin():
    # [DERIVED] 5000 / 11 = 454.5
    k = np.arange(500)
    rep = detect(np.cos(2 * np.pi * k / 11), 5000)
    assert abs(rep.q - 455) <= 1
    assert rep.is_slip


def test_offset_sinusoid_peak_bin():
    # [DERIVED] 5000 / 21 = 238.1
    k = np.arange(500)
    rep = detect(0.2 + np.cos(2 * np.pi * k / 21), 5000)
    assert abs(rep.q - 238) <= 1
    assert rep.K_hat == pytest.approx(21, abs=0.2)
    assert rep.is_slip


def test_dc_only_is_not_a_slip():
    rep = detect(np.full(300, -0.4), 5000)
    assert not rep.is_slip
    # [DERIVED] the search starts at the first null of the DC main lobe, so
    # the largest remaining bin is the first rectangular-window sidelobe, -13.26 dB
    assert rep.dominance == pytest.approx(10 ** (-13.26 / 20), abs=2e-3)
    assert rep.q > dc_guard(300, 5000)


def test_zero_sequence():
    # [DERIVED]
    rep = detect(np.zeros(100), 1000)
    assert not rep.is_slip and rep.dominance == 0.0


def test_detect_argument_checks():
    # [TRIVIAL]
    with pytest.raises(ConfigError):
        detect(np.ones(10), 100, threshold=0.0)
    with pytest.raises(ConfigError):
        detect(np.array([]), 100)


@pytest.mark.parametrize("tau", [0.1, 0.2, 0.3])
def test_constant_offset_burst_no_slip(tau):
    # [PAPER]
    rep = detect(pair_averaged_errors(_noiseless(0.0, tau=tau)(1.0)))
    assert not rep.is_slip


def test_slip_and_no_slip_separate_tenfold():
    # [PAPER]
    slip = detect(pair_averaged_errors(_noiseless(0.1)(1.1)))
    clean = detect(pair_averaged_errors(_noiseless(0.0)(1.0)))
    assert slip.is_slip and 10 <= slip.K_hat <= 12
    assert slip.dominance > 10 * clean.dominance
    assert slip.dominance > 10 * 0.5


def _period_ok(eps, seed=0):
    rep = detect(pair_averaged_errors(_noiseless(eps, seed=seed)(1 + eps)))
    K = abs((1 + eps) / eps)
    return rep.is_slip and abs(rep.K_hat - K) <= max(1.0, 5000 / (rep.q * (rep.q - 1)))


@pytest.mark.parametrize("eps", [0.02, -0.02, 0.05, -0.05, 0.1, -0.1, 0.2, 0.25, 0.3])
def test_period_identity(eps):
    # [PAPER]
    assert _period_ok(eps)


@pytest.mark.parametrize("eps", [-0.2, -0.3])
def test_period_identity_large_negative_eps_is_unreliable(eps):
    # [PAPER]
    # with T' > T the mid sample drifts off the half-symbol point and detector
    # self-noise rivals the slip line; record the hit rate instead of gating
    hits = sum(_period_ok(eps, seed) for seed in range(20))
    assert 0 < hits < 20


def test_zero_offset_dc_null_inflates_plain_dominance():
    # [DERIVED]
    # with no constant offset U(0) vanishes, so the bare ratio calls a slip
    rep = detect(pair_averaged_errors(_noiseless(0.0, tau=0.0)(1.0)))
    assert rep.is_slip


def test_dc_probe_vetoes_zero_offset_false_alarm():
    # [DERIVED]
    rx = _noiseless(0.0, tau=0.0)(1.0)
    rep = detect_burst(rx)
    assert not rep.is_slip and rep.dominance < 0.5
    assert detect_burst(rx, dc_probe_shifts=None).is_slip
    res = resolve_rate(_noiseless(0.0, tau=0.0), pair_averaged_errors, 1.0, dc_probe_shifts=(0.25, 0.5))
    assert res.rate == 1.0 and res.rounds == 0 and res.converged


@pytest.mark.parametrize("eps", [0.1, -0.1, 0.2])
def test_dc_probe_keeps_real_slip_report(eps):
    # [DERIVED]
    rx = _noiseless(eps)(1 + eps)
    plain = detect(pair_averaged_errors(rx))
    assert detect_burst(rx) == plain


def test_dc_probe_skipped_without_slip():
    # [DERIVED]
    rx = _noiseless(0.0, tau=0.2)(1.0)
    assert detect_burst(rx) == detect(pair_averaged_errors(rx))


def test_dc_probe_false_alarm_rate_at_zero_offset():
    # [DERIVED]
    # 8 dB, tau = 0: the plain ratio moves the rate often, the probe rarely
    from slipsync.harness import trial_seed

    wrong = 0
    for i in range(20):
        cfg = TrialConfig(N=300, eps=0.0, ebn0_db=8.0, tau_over_T=0.0, seed=trial_seed(5, (), i))
        _, stream = receiver_front_end(cfg)
        res = resolve_rate(lambda r: resample_two_sps(stream, 1.0 / r, 0.0, 300),
                           pair_averaged_errors, 1.0, dc_probe_shifts=(0.25, 0.5))
        wrong += abs(res.rate - 1.0) > 0.005
    assert wrong <= 2


def test_resolve_with_probe_positive_and_negative_eps():
    # [DERIVED]
    for eps in (0.1, -0.1):
        res = resolve_rate(_noiseless(eps), pair_averaged_errors, 1 + eps, dc_probe_shifts=(0.25, 0.5))
        assert res.converged and abs(res.rate - 1.0) < 0.005


def test_slow_drift_under_two_slips_is_resolved():
    # [DERIVED]
    # eps = 0.005 over 300 symbols: K = 201, so the burst holds 1.5 wraps
    res = resolve_rate(_noiseless(0.005, n=300), pair_averaged_errors, 1.005,
                       dc_probe_shifts=(0.25, 0.5))
    assert res.converged and abs(res.rate - 1.0) < 1e-3


def test_raw_gardner_sequence_also_detects():
    # [PAPER]
    rep = detect(gardner_errors(_noiseless(0.1)(1.1)))
    assert rep.is_slip and 10 <= rep.K_hat <= 12


@settings(max_examples=25)
@given(st.floats(1e-3, 1e3))
def test_scale_invariance(c):
    # [DERIVED]
    k = np.arange(300)
    u = 0.1 + np.cos(2 * np.pi * k / 13) + 0.3 * np.random.default_rng(1).standard_normal(300)
    a, b = detect(u), detect(c * u)
    assert (a.q, a.is_slip) == (b.q, b.is_slip)
    assert a.dominance == pytest.approx(b.dominance, rel=1e-9)


def test_report_json():
    # [TRIVIAL]
    rep = SlipReport(0, math.inf, False, 0.0, 5000)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d == {"q": 0, "K_hat": None, "is_slip": False, "dominance": 0.0, "L": 5000,
                 "schema_version": 1}


# rate hypotheses --------------------------------------------------------------

def test_hypotheses_examples():
    # [DERIVED]
    assert rate_hypotheses(1.1, 11)[0] == pytest.approx(1.0, abs=1e-15)
    assert rate_hypotheses(0.9, 9)[1] == pytest.approx(1.0, abs=1e-15)
    lo, hi = rate_hypotheses(1.3, 1e12)
    assert lo == pytest.approx(1.3) and hi == pytest.approx(1.3)


@given(st.floats(0.5, 2.0), st.floats(0.01, 0.45))
def test_round_trip_identity(rate, eps):
    # [DERIVED]
    assert rate_hypotheses(rate * (1 + eps), (1 + eps) / eps)[0] == pytest.approx(rate, rel=1e-12)


@pytest.mark.parametrize("K", [1.0, 0.5, -3.0])
def test_hypotheses_reject_small_k(K):
    # [TRIVIAL]
    with pytest.raises(ConfigError):
        rate_hypotheses(1.0, K)


# resolve_rate -----------------------------------------------------------------

def test_resolve_positive_eps():
    # [PAPER]
    res = resolve_rate(_noiseless(0.1), pair_averaged_errors, 1.1)
    assert res.converged and res.rounds <= 3
    assert abs(res.rate - 1.0) < 0.005
    assert res.history[0][1] == -1
    assert res.report.dominance < 0.5


def test_resolve_negative_eps_takes_plus_branch():
    # [PAPER]
    res = resolve_rate(_noiseless(-0.1), pair_averaged_errors, 0.9)
    assert res.history[0][1] == +1
    assert abs(res.rate - 1.0) < 0.005


def test_resolve_no_slip_short_circuit():
    # [DERIVED]
    res = resolve_rate(_noiseless(0.0), pair_averaged_errors, 1.0)
    assert res.rounds == 0 and res.history == [] and res.rate == 1.0 and res.converged


def test_resolve_flags_round_budget():
    # [TRIVIAL]
    # a detector that always reports a slip never converges
    def u_fn(rx):
        k = np.arange(rx.count_symbols)
        return np.cos(2 * np.pi * k / 7)

    calls = []

    def resample(rate):
        calls.append(rate)
        return _noiseless(0.0, n=100)(1.0)

    res = resolve_rate(resample, u_fn, 1.0, L=1000, max_rounds=2)
    assert not res.converged
    assert res.rounds <= 2
    assert res.history[-1][1] == 0


def test_resolve_stops_on_marginal_residual_after_first_round():
    # [DERIVED]
    # after one correction a line just over threshold is treated as noise
    def u_fn(rx):
        k = np.arange(rx.count_symbols)
        if abs(rx.assumed_symbol_period - 1 / 1.1) < 1e-9:
            return 0.2 + np.cos(2 * np.pi * k / 11)
        return 0.2 + 0.28 * np.cos(2 * np.pi * k / 7)

    res = resolve_rate(_noiseless(0.0, n=300), u_fn, 1.1, L=5000)
    assert res.rounds == 1 and res.converged
    assert 0.5 < res.report.dominance < 2 * 0.5
    assert res.rate == pytest.approx(1.0, abs=1e-3)


def test_resolve_initial_out_of_support():
    # [TRIVIAL]
    def resample(rate):
        raise OutOfSupportError(0, -1.0, (0.0, 1.0))

    with pytest.raises(ConfigError):
        resolve_rate(resample, pair_averaged_errors, 1.0)
    with pytest.raises(ConfigError):
        resolve_rate(resample, pair_averaged_errors, 1.0, max_rounds=0)


def test_corrected_rate_json():
    # [TRIVIAL]
    res = resolve_rate(_noiseless(0.1), pair_averaged_errors, 1.1)
    d = json.loads(json.dumps(res.to_dict()))
    assert set(d) == {"schema_version", "rate", "rounds", "history", "converged", "report"}
    assert d["report"]["schema_version"] == 1


def test_pair_average_keeps_mean():
    # [DERIVED]
    rx = _noiseless(0.0, tau=0.1)(1.0)
    raw = gardner_errors(rx).u
    avg = pair_averaged_errors(rx)
    assert len(avg) == len(raw) - 1
    assert avg.mean() == pytest.approx(0.5 * (raw[:-1].mean() + raw[1:].mean()), rel=1e-12)
