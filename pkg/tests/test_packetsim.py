"""Packet-level simulator: scoring, threshold translation, scenario runs."""

import numpy as np
import pytest

from malfilter import (
    FilterState,
    Packet,
    ScoreModel,
    calibrated_score_model,
    cost_ratio,
    run_packet_scenario,
    score_packet,
    translate_rate_to_threshold,
)
from malfilter.model import ValidationError


def test_calibrated_detection_rates_exact():
    for target in (0.5, 0.25):
        model = calibrated_score_model(target)
        assert abs(model.detection_rate - target) < 1e-9
        assert 0.0 < model.false_positive_rate < target


def test_calibrated_empirical_rate():
    model = calibrated_score_model(0.5)
    rng = np.random.default_rng(42)
    draws = rng.choice(100, size=100_000, p=model.malware_pmf)
    frac = np.mean(draws >= model.monitor_threshold)
    assert abs(frac - 0.5) < 0.01


def test_score_packet_point_mass():
    pmf_hi = np.zeros(100)
    pmf_hi[99] = 1.0
    pmf_lo = np.zeros(100)
    pmf_lo[0] = 1.0
    model = ScoreModel(legit_pmf=pmf_lo, malware_pmf=pmf_hi, monitor_threshold=50)
    rng = np.random.default_rng(0)
    mal = score_packet(Packet(src=0, dst=1, is_malware=True), model, rng)
    leg = score_packet(Packet(src=0, dst=1, is_malware=False), model, rng)
    assert mal.score == 99 and mal.labeled_malware
    assert leg.score == 0 and not leg.labeled_malware


def test_score_model_validation():
    bad = np.zeros(100)
    bad[0] = 0.5  # does not sum to 1
    with pytest.raises(ValidationError):
        ScoreModel(legit_pmf=bad, malware_pmf=bad, monitor_threshold=50)


def hist_from(counts: dict[int, int]) -> np.ndarray:
    h = np.zeros(100)
    for score, cnt in counts.items():
        h[score] = cnt
    return h


def test_translate_hand_example():
    filt = FilterState()
    filt.observe(hist_from({90: 5, 80: 5, 70: 5}))
    # budget 7 cannot cover the 10 packets scoring >= 80, so only the top
    # bin is filtered; ties resolve to the higher (less aggressive) threshold
    assert translate_rate_to_threshold(7.0, filt) == 90


def test_translate_trivial_cases():
    filt = FilterState()
    filt.observe(hist_from({90: 5, 80: 5, 70: 5}))
    assert translate_rate_to_threshold(0.0, filt) == 100
    assert translate_rate_to_threshold(15.0, filt) == 0
    assert translate_rate_to_threshold(1e9, filt) == 0
    empty = FilterState()
    assert translate_rate_to_threshold(10.0, empty) == 100


def test_translate_uses_window_mean():
    filt = FilterState(window_len=2)
    filt.observe(hist_from({90: 10}))
    filt.observe(hist_from({90: 0}))
    assert np.allclose(filt.combined(), hist_from({90: 5}))
    filt.observe(hist_from({90: 2}))  # rolls the first histogram out
    assert np.allclose(filt.combined(), hist_from({90: 1}))


def test_filter_removes_exactly_the_tail():
    filt = FilterState()
    filt.observe(hist_from({60: 4, 61: 3, 62: 2}))
    T = translate_rate_to_threshold(5.0, filt)
    assert T == 61
    assert filt.combined()[T:].sum() == 5.0


def test_unknown_scenario_and_mode_rejected():
    with pytest.raises(ValidationError):
        run_packet_scenario("S9", "hinf", seed=1)
    with pytest.raises(ValidationError):
        run_packet_scenario("S1", "fancy", seed=1)


def test_packet_run_deterministic():
    a = run_packet_scenario("S5", "heuristic", seed=9, horizon=10.0)
    b = run_packet_scenario("S5", "heuristic", seed=9, horizon=10.0)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.u, b.u)
    assert a.z_sq_integral == b.z_sq_integral
    assert a.w_sq_integral == b.w_sq_integral


def test_no_malware_emission_keeps_state_zero():
    trace = run_packet_scenario("S1", "heuristic", seed=2, horizon=10.0,
                                malware_kb_per_pair=0.0)
    assert np.array_equal(trace.x, np.zeros_like(trace.x))
    assert np.all(trace.infected.sum(axis=1) == 1)  # only the seed node


def test_heuristic_filters_at_least_labeled_budget():
    """The detection heuristic's threshold never exceeds a level that would
    leave more labeled packets in flight than its budget allows."""
    trace = run_packet_scenario("S1", "heuristic", seed=3, horizon=10.0)
    # after every interval the filter removed some packets whenever the
    # monitor labeled any
    labeled = trace.y.sum(axis=1)
    filtered = trace.u.sum(axis=1)
    assert np.all(filtered[labeled > 0] > 0)


def test_hinf_run_reports_levels():
    trace = run_packet_scenario("S1", "hinf", seed=1, horizon=10.0)
    assert trace.gamma_star is not None and trace.gamma_star > 0
    assert trace.gamma > trace.gamma_star
    assert cost_ratio(trace) > 0
