import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_pathset, small_scenarios
from lumisec.channel import PathSet, scenario_paths
from lumisec.errors import EmptyEveSet, IntegrationNotConverged
from lumisec.scene import OpticalParams, SystemParams, preset
from lumisec.secrecy import (Quadrature, SnrPrefix, colluding_integral, rate_approx, rate_exact,
                             secrecy_colluding, secrecy_non_colluding, simpson_weights, snr_at, snr_prefix)


def trapezoid_oracle(paths_list, actives, lam, f_max, colluding=False, panels=65536):
    """Brute-force trapezoid rule on a fine grid with the CFR summed path by path."""
    f = np.linspace(0.0, f_max, panels + 1)

    def power(ps, act):
        q = ps.los_gain * np.exp(-2j * np.pi * f * ps.los_delay)
        for n in act:
            q = q + ps.gains[n] * np.exp(-2j * np.pi * f * ps.delays[n])
        return np.abs(q) ** 2

    if colluding:
        eve = sum(power(p, a) for p, a in zip(paths_list[1:], actives[1:]))
        y = np.log2((1 + lam * power(paths_list[0], actives[0])) / (1 + lam * eve))
    else:
        y = np.log2(1 + lam * power(paths_list[0], actives[0]))
    h = f_max / panels
    return h * (y.sum() - 0.5 * (y[0] + y[-1]))


def test_snr_scaling():
    pre = SnrPrefix(2.0, 1.0)
    assert snr_at(0.0, 0.0, pre) == 0.0
    assert snr_at(0.0, 3.0, pre) == 6.0


def test_snr_prefix_table_values():
    pre = snr_prefix(SystemParams(optical_power=6.0), OpticalParams())
    # 2 * 1e-9 * 36 * 0.36 / (10**0.2 * 3.2**2 * 1e-21), mpmath: 1597110778215.489
    assert pre.scale == pytest.approx(1597110778215.489, rel=1e-12)
    assert pre.scale == pytest.approx(1.597e12, rel=1e-3)
    assert pre.f_max == pytest.approx(5e8)
    double = snr_prefix(SystemParams(optical_power=12.0), OpticalParams())
    assert double.scale == pytest.approx(4 * pre.scale, rel=1e-14)


def test_simpson_weights_sum_to_interval():
    assert simpson_weights(3.0, 8).sum() == pytest.approx(3.0, rel=1e-15)
    with pytest.raises(ValueError):
        Quadrature(panels=7)


def test_flat_channel_rate_closed_form():
    ps = PathSet(1.4e-5, 7e-9, np.array([1e-6, 2e-6]), np.array([9e-9, 10e-9]))
    pre = SnrPrefix(1.6e12, 5e8)
    expected = pre.f_max * math.log2(1 + pre.scale * ps.los_gain ** 2)
    assert rate_exact(ps, [], pre).rate == pytest.approx(expected, rel=1e-9)
    assert rate_approx(ps, [], pre).rate == expected


def test_zero_los_rate_is_zero():
    ps = PathSet(0.0, 7e-9, np.array([1e-6]), np.array([9e-9]))
    assert rate_exact(ps, [], SnrPrefix(1e12, 5e8)).rate == 0.0


def test_rate_bob_best_all_active_vs_trapezoid_oracle():
    s = preset("best", power=6.0)
    ps = scenario_paths(s)
    pre = snr_prefix(s.system, s.optical, 6.0)
    allidx = np.arange(s.n_irs)
    oracle = trapezoid_oracle(ps, [allidx], pre.scale, pre.f_max)
    assert oracle == pytest.approx(4389347102.383371, rel=1e-12)  # frozen oracle run
    assert rate_exact(ps[0], allidx, pre).rate == pytest.approx(oracle, rel=1e-6)


def test_rate_approx_single_element_zero_delay_difference():
    pre = SnrPrefix(1e10, 5e8)
    ps = PathSet(1e-5, 8e-9, np.array([2e-5]), np.array([8e-9]))
    expected = pre.f_max * math.log2(1 + pre.scale * (1e-10 + 4e-10))
    assert rate_approx(ps, [0], pre).rate == pytest.approx(expected, rel=1e-14)


def test_rate_approx_single_element_one_symbol_delay():
    # sinc(pi) = 0 so the bracket is 1; mpmath: 1273379597.3235658932
    pre = SnrPrefix(1e10, 5e8)
    ps = PathSet(1e-5, 8e-9, np.array([1e-5]), np.array([9e-9]))
    assert rate_approx(ps, [0], pre).rate == pytest.approx(1273379597.3235659, rel=1e-12)


def test_non_colluding_examples():
    assert secrecy_non_colluding(5, [3, 4]) == 1
    assert secrecy_non_colluding(2, [3, 1]) == 0
    with pytest.raises(EmptyEveSet):
        secrecy_non_colluding(1.0, [])


def test_non_colluding_best_case_los_only():
    s = preset("best", power=6.0)
    ps = scenario_paths(s)
    pre = snr_prefix(s.system, s.optical, 6.0)
    r = [trapezoid_oracle([p], [[]], pre.scale, pre.f_max) for p in ps]
    assert r[0] == pytest.approx(4.1626e9, rel=1e-4)
    assert r[1:] == pytest.approx([1518822282.5679946, 2353261919.404957], rel=1e-9)
    rates = [rate_exact(p, [], pre).rate for p in ps]
    assert secrecy_non_colluding(rates[0], rates[1:]) == pytest.approx(r[0] - r[2], rel=1e-8)


def test_colluding_single_eve_matches_non_colluding():
    s = preset("worst", 2, 2, 3.0)
    ps = scenario_paths(s)
    pre = snr_prefix(s.system, s.optical, 3.0)
    acts = [np.array([0, 3]), np.array([1, 2])]
    rb, re = (rate_exact(p, a, pre).rate for p, a in zip(ps[:2], acts))
    signed = colluding_integral(ps[0], [ps[1]], acts, pre)
    assert signed == pytest.approx(rb - re, abs=2e-6 * max(rb, re))


def test_colluding_identical_channels_is_zero():
    ps = random_pathset(np.random.default_rng(3), 3)
    zero = PathSet(0.0, 1e-9, np.zeros(3), np.full(3, 2e-9))
    pre = SnrPrefix(1e12, 5e8)
    assert colluding_integral(ps, [ps, zero], [[0, 1], [0, 1], []], pre) == pytest.approx(0.0, abs=1e-6)
    assert secrecy_colluding(ps, [ps], [[2], [2]], pre) == 0.0


def test_colluding_worst_case_all_bob_is_negative():
    s = preset("worst", power=3.0)
    ps = scenario_paths(s)
    pre = snr_prefix(s.system, s.optical, 3.0)
    acts = [np.arange(s.n_irs), [], []]
    signed = colluding_integral(ps[0], ps[1:], acts, pre)
    oracle = trapezoid_oracle(ps, acts, pre.scale, pre.f_max, colluding=True)
    assert oracle == pytest.approx(-1908497711.3005903, rel=1e-12)
    assert signed == pytest.approx(oracle, rel=1e-6)
    assert signed < 0
    assert secrecy_colluding(ps[0], ps[1:], acts, pre) == 0.0


def test_integration_not_converged_with_too_few_panels():
    ps = PathSet(1e-5, 5e-9, np.array([1e-5]), np.array([60e-9]))
    with pytest.raises(IntegrationNotConverged):
        rate_exact(ps, [0], SnrPrefix(1e12, 5e8), Quadrature(panels=8))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e10, 1e13), st.floats(1.01, 10.0))
def test_rate_monotone_in_snr_prefix(seed, lam, factor):
    rng = np.random.default_rng(seed)
    ps = random_pathset(rng, 4)
    q = Quadrature(panels=1024, check=False)
    low = rate_exact(ps, [0, 1, 2, 3], SnrPrefix(lam, 5e8), q).rate
    high = rate_exact(ps, [0, 1, 2, 3], SnrPrefix(lam * factor, 5e8), q).rate
    assert high >= low >= 0


@settings(max_examples=40, deadline=None)
@given(small_scenarios(max_eves=3), st.integers(0, 2 ** 32 - 1))
def test_mrc_dominance_and_clamps(scenario, seed):
    ps = scenario_paths(scenario)
    pre = snr_prefix(scenario.system, scenario.optical)
    q = Quadrature(panels=1024, check=False)
    rng = np.random.default_rng(seed)
    tags = rng.integers(0, len(ps), size=scenario.n_irs)
    acts = [np.flatnonzero(tags == k) for k in range(len(ps))]
    rates = [rate_exact(p, a, pre, q).rate for p, a in zip(ps, acts)]
    nc = secrecy_non_colluding(rates[0], rates[1:])
    col = secrecy_colluding(ps[0], ps[1:], acts, pre, q)
    assert nc >= 0 and col >= 0
    assert col <= nc + 2e-6 * rates[0]
    # adding an eavesdropper never helps Bob
    if len(ps) > 2:
        col_fewer = secrecy_colluding(ps[0], ps[1:-1], acts[:-1], pre, q)
        assert col <= col_fewer + 2e-6 * rates[0]
        assert nc <= secrecy_non_colluding(rates[0], rates[1:-1])
