# test_analytic.py - closed-form DTF, case probabilities and effective deadtimes

import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from muxdt import analytic
from muxdt.errors import InvalidArgumentError

T_D = 50e-9


def erlang_loss(n, load):
    """Blocking probability of n servers at offered load lambda*T_d (exact for the CW pool)."""
    b = 1.0
    for i in range(1, n + 1):
        b = load * b / (i + load * b)
    return b


def pulsed_chain_dtf(p, n_d, n):
    """
    Exact pulsed DTF from the stationary law of the residual-dead-pulse
    vector. A detector firing at pulse i is dead for pulses i+1..i+N_d.
    """
    base = n_d + 1
    states = list(itertools.product(range(base), repeat=n))
    index = {s: k for k, s in enumerate(states)}
    T = np.zeros((len(states), len(states)))
    for s in states:
        decayed = tuple(max(r - 1, 0) for r in s)
        T[index[s], index[decayed]] += 1.0 - p
        live = [i for i, r in enumerate(s) if r == 0]
        if live:
            fired = list(decayed)
            fired[live[0]] = n_d
            T[index[s], index[tuple(fired)]] += p
        else:
            T[index[s], index[decayed]] += p
    A = T.T - np.eye(len(states))
    A[-1, :] = 1.0
    rhs = np.zeros(len(states))
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    return float(sum(pi[index[s]] for s in states if all(r > 0 for r in s)))


# ============================================
# CW single / tree / reduced
# ============================================

def test_cw_single_dtf():
    assert analytic.cw_single_dtf(0.0, T_D) == 0.0
    assert analytic.cw_single_dtf(2e6, T_D) == pytest.approx(1.0 - 1.0 / 1.1, rel=1e-12)
    assert analytic.cw_single_dtf(1e4 / T_D, T_D) > 0.999
    with pytest.raises(InvalidArgumentError):
        analytic.cw_single_dtf(-1.0, T_D)
    with pytest.raises(InvalidArgumentError):
        analytic.cw_single_dtf(1.0, 0.0)


def test_cw_tree_and_reduced():
    assert analytic.cw_tree_dtf(2e7, T_D, 10) == pytest.approx(1.0 - 1.0 / 1.1, rel=1e-12)
    assert analytic.cw_tree_dtf(0.0, T_D, 4) == 0.0
    assert analytic.cw_tree_dtf(3e6, T_D, 1) == analytic.cw_single_dtf(3e6, T_D)
    assert analytic.cw_reduced_dtf(0.0, T_D, 3) == 0.0
    assert analytic.cw_reduced_dtf(7e7, T_D, 10) == pytest.approx(analytic.cw_single_dtf(7e7, 5e-9), rel=1e-12)

    for lam in np.logspace(3, 11, 40):
        for n in range(1, 13):
            assert analytic.cw_reduced_dtf(lam, T_D, n) == analytic.cw_tree_dtf(lam, T_D, n)


# ============================================
# CW case probabilities and effective deadtimes
# ============================================

def test_cw_case_probabilities_closed_form():
    cases = analytic.cw_case_probabilities(2e6, T_D)
    assert cases.p_a == pytest.approx((1.0 + math.exp(-0.1)) / 2.0, abs=1e-12)
    assert cases.p_a == pytest.approx(0.952419, abs=1e-6)
    assert cases.p_a + cases.p_b == pytest.approx(1.0, abs=1e-12)


def test_cw_case_probability_matches_double_integral():
    # dimensionless units: T_d = 1, lambda*T_d = 0.1
    lam, t_d = 0.1, 1.0
    norm = -math.expm1(-lam * t_d)

    def integrand(big, small):
        return (lam * math.exp(-lam * small) / norm) * lam * math.exp(-lam * (big - t_d))

    p_a, _ = integrate.dblquad(integrand, 0.0, t_d, lambda small: small + t_d, lambda small: np.inf,
                               epsabs=1e-12)
    assert analytic.cw_case_probabilities(lam, t_d).p_a == pytest.approx(p_a, abs=1e-9)


@pytest.mark.parametrize("lam", [0.1, 1.0, 5.0])
def test_cw_case_means_match_double_integrals(lam):
    # dimensionless units: T_d = 1
    t_d = 1.0
    norm = -math.expm1(-lam * t_d)

    def density(big, small):
        return (lam * math.exp(-lam * small) / norm) * lam * math.exp(-lam * (big - t_d))

    cases = analytic.cw_case_probabilities(lam, t_d)
    first_a, _ = integrate.dblquad(lambda big, small: small * density(big, small), 0.0, t_d,
                                   lambda small: small + t_d, lambda small: np.inf, epsabs=1e-13, epsrel=1e-10)
    first_b, _ = integrate.dblquad(lambda big, small: big * density(big, small), 0.0, t_d,
                                   lambda small: t_d, lambda small: small + t_d, epsabs=1e-13, epsrel=1e-10)
    assert cases.mean_a == pytest.approx(first_a / cases.p_a, rel=1e-7)
    assert cases.mean_b == pytest.approx(first_b / cases.p_b, rel=1e-7)


@pytest.mark.parametrize("load", [1e-4, 0.1, 1.0, 5.0, 30.0])
def test_cw_case_probabilities_give_effective_deadtime(load):
    lam = load / T_D
    cases = analytic.cw_case_probabilities(lam, T_D)
    table = analytic.cw_effective_deadtimes(lam, T_D, 2)
    assert cases.effective_deadtime == pytest.approx(table.for_detector(2), rel=1e-9)
    assert 0.0 < cases.mean_a < T_D
    assert T_D < cases.mean_b < 2.0 * T_D
    assert cases.p_a + cases.p_b == pytest.approx(1.0, abs=1e-12)


def test_cw_case_probabilities_small_load():
    assert analytic.cw_case_probabilities(1e-6 / T_D, T_D).p_a == pytest.approx(1.0, abs=1e-6)


def test_cw_effective_deadtimes():
    table = analytic.cw_effective_deadtimes(2e6, T_D, 4)
    assert len(table) == 4
    assert table.values[0] == T_D
    assert table.for_detector(2) == pytest.approx(26.209e-9, abs=1e-12)
    assert all(b < a for a, b in zip(table.values, table.values[1:]))
    assert all(v > 0 for v in table.values)
    with pytest.raises(InvalidArgumentError):
        table.for_detector(5)


def test_cw_effective_deadtime_limits():
    low = analytic.cw_effective_deadtimes(1e-8 / T_D, T_D, 2).for_detector(2)
    assert low == pytest.approx(T_D / 2.0, rel=1e-6)
    high = analytic.cw_effective_deadtimes(1e4 / T_D, T_D, 2).for_detector(2)
    assert high == pytest.approx(T_D, rel=1e-3)
    with pytest.raises(InvalidArgumentError):
        analytic.cw_effective_deadtimes(0.0, T_D, 2)


# ============================================
# CW multiplexed
# ============================================

def test_cw_multiplexed_known_values():
    dtf, counts = analytic.cw_multiplexed_dtf(2e6, T_D, 2)
    assert dtf == pytest.approx(4.528e-3, abs=1e-6)
    assert counts.total == pytest.approx(2e6 * (1.0 - dtf), rel=1e-12)
    assert counts.mean_counts[0] == pytest.approx(2e6 / 1.1, rel=1e-12)

    for lam in (0.0, 1e3, 2e6, 1e9):
        assert analytic.cw_multiplexed_dtf(lam, T_D, 1)[0] == analytic.cw_single_dtf(lam, T_D)

    dtf0, counts0 = analytic.cw_multiplexed_dtf(0.0, T_D, 5)
    assert dtf0 == 0.0
    assert counts0.mean_counts == (0.0,) * 5


def test_cw_multiplexed_counts_follow_the_cascade():
    lam = 3e7
    dtf, counts = analytic.cw_multiplexed_dtf(lam, T_D, 6)
    table = analytic.cw_effective_deadtimes(lam, T_D, 6)
    assert counts.mean_counts[0] == pytest.approx(lam / (1.0 + lam * T_D), rel=1e-12)
    # light left over after detector i-1 feeds detector i
    for i in range(2, 7):
        offered = counts.mean_counts[i - 2] * lam * table.for_detector(i - 1)
        assert counts.mean_counts[i - 1] == pytest.approx(offered / (1.0 + lam * table.for_detector(i)), rel=1e-9)
    assert all(b <= a for a, b in zip(counts.mean_counts, counts.mean_counts[1:]))
    assert counts.total == pytest.approx(lam * (1.0 - dtf), rel=1e-12)


def test_cw_multiplexed_monotone():
    rates = np.logspace(4, 11, 60)
    for n in (1, 2, 6, 12):
        curve = [analytic.cw_multiplexed_dtf(lam, T_D, n)[0] for lam in rates]
        assert all(b > a for a, b in zip(curve, curve[1:]))

    for lam in (1e6, 3e7, 2e8):
        by_n = [analytic.cw_multiplexed_dtf(lam, T_D, n)[0] for n in range(1, 13)]
        assert all(b < a for a, b in zip(by_n, by_n[1:]))


@pytest.mark.parametrize("n", range(1, 7))
def test_cw_multiplexed_tracks_exact_loss(n):
    # the recursion is exact for N=1, close for N=2 and wherever losses are small
    for load in np.logspace(-3, 1, 20):
        approx = analytic.cw_multiplexed_dtf(load / T_D, T_D, n)[0]
        exact = erlang_loss(n, load)
        if n <= 2 or approx <= 0.05:
            assert approx == pytest.approx(exact, abs=0.01)
        else:
            assert approx == pytest.approx(exact, abs=0.05)


# ============================================
# pulsed
# ============================================

def test_pulsed_single_dtf():
    assert analytic.pulsed_single_dtf(1.0, 4) == 0.8
    assert analytic.pulsed_single_dtf(0.0, 4) == 0.0
    for p in (0.1, 0.5, 1.0):
        assert analytic.pulsed_single_dtf(p, 0) == 0.0


def _pulsed_p_a_by_summation(p, n_d, horizon=4000):
    q = 1.0 - p
    handoff = [p * q ** (m - 1) / (1.0 - q**n_d) for m in range(1, n_d + 1)]
    total = 0.0
    for m, weight in zip(range(1, n_d + 1), handoff):
        refire = math.fsum(p * q ** (n - n_d - 1) for n in range(m + n_d, n_d + horizon))
        total += weight * refire
    return total


@pytest.mark.parametrize("p, n_d", [(0.5, 4), (0.1, 4), (0.9, 20), (0.3, 1), (0.2, 20)])
def test_pulsed_case_probabilities(p, n_d):
    cases = analytic.pulsed_case_probabilities(p, n_d)
    assert cases.p_a == pytest.approx((1.0 + q_pow(p, n_d)) / (2.0 - p), abs=1e-12)
    assert cases.p_a == pytest.approx(_pulsed_p_a_by_summation(p, n_d), abs=1e-12)
    assert cases.p_a + cases.p_b == pytest.approx(1.0, abs=1e-12)
    second = analytic.pulsed_effective_deadtimes(p, n_d, 2, floor_at_zero=False)[1]
    assert cases.effective_deadtime == pytest.approx(second, rel=1e-9)


def q_pow(p, n):
    return (1.0 - p) ** n


@pytest.mark.parametrize("p, n_d", [(0.5, 4), (0.1, 4), (0.9, 20), (0.2, 20), (0.05, 2)])
def test_pulsed_case_means_match_double_sums(p, n_d):
    q, horizon = 1.0 - p, 4000
    first_a, first_b = [], []
    for m in range(1, n_d + 1):
        handoff = p * q ** (m - 1) / (1.0 - q**n_d)
        for n in range(n_d + 1, n_d + horizon):
            weight = handoff * p * q ** (n - n_d - 1)
            if n >= m + n_d:
                first_a.append(m * weight)
            else:
                first_b.append(n * weight)
    cases = analytic.pulsed_case_probabilities(p, n_d)
    assert cases.mean_a == pytest.approx(math.fsum(first_a) / cases.p_a, rel=1e-10)
    assert cases.mean_b == pytest.approx(math.fsum(first_b) / cases.p_b, rel=1e-10)
    assert 1.0 <= cases.mean_a <= n_d
    assert n_d + 1 <= cases.mean_b <= 2 * n_d - 1


def test_pulsed_case_probabilities_known_values():
    assert analytic.pulsed_case_probabilities(0.5, 4).p_a == pytest.approx(0.708333, abs=1e-6)
    certain = analytic.pulsed_case_probabilities(1.0, 4)
    assert certain.p_a == 1.0
    assert certain.p_b == 0.0
    assert math.isnan(certain.mean_b)
    with pytest.raises(InvalidArgumentError):
        analytic.pulsed_case_probabilities(0.5, 0)


def test_pulsed_effective_deadtimes():
    assert analytic.pulsed_effective_deadtimes(1.0, 4, 2).for_detector(2) == 3.0
    assert analytic.pulsed_effective_deadtimes(0.5, 4, 2).for_detector(2) == pytest.approx(2.708333, abs=1e-6)
    low = analytic.pulsed_effective_deadtimes(1e-8, 4, 2).for_detector(2)
    assert low == pytest.approx(4 - 5 / 2, rel=1e-6)
    with pytest.raises(InvalidArgumentError):
        analytic.pulsed_effective_deadtimes(0.0, 4, 2)


def test_pulsed_effective_deadtimes_floor():
    table = analytic.pulsed_effective_deadtimes(1.0, 4, 7)
    assert table.values == (4.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0)
    raw = analytic.pulsed_effective_deadtimes(0.01, 4, 6, floor_at_zero=False)
    assert min(raw) < 0.0
    floored = analytic.pulsed_effective_deadtimes(0.01, 4, 6)
    assert all(v >= 0.0 for v in floored.values)
    positive = [v for v in floored.values if v > 0]
    assert all(b < a for a, b in zip(positive, positive[1:]))


def test_pulsed_multiplexed_periodic_orbits():
    assert analytic.pulsed_multiplexed_dtf(1.0, 4, 1)[0] == 0.8
    assert analytic.pulsed_multiplexed_dtf(1.0, 4, 2)[0] == 0.6
    for n in range(5, 9):
        assert analytic.pulsed_multiplexed_dtf(1.0, 4, n)[0] == 0.0


@pytest.mark.parametrize("p", [0.05, 0.3, 0.7, 1.0])
def test_pulsed_multiplexed_zero_with_enough_detectors(p):
    for n_d in (1, 4, 20):
        dtf, counts = analytic.pulsed_multiplexed_dtf(p, n_d, n_d + 1, nu=82e6)
        assert dtf == 0.0
        assert counts.total == pytest.approx(p * 82e6, rel=1e-12)


def test_pulsed_multiplexed_edges():
    for n in (1, 3):
        assert analytic.pulsed_multiplexed_dtf(0.0, 4, n)[0] == 0.0
        assert analytic.pulsed_multiplexed_dtf(0.6, 0, n)[0] == 0.0
    for p in (0.1, 0.5, 0.9):
        assert analytic.pulsed_multiplexed_dtf(p, 4, 1)[0] == pytest.approx(analytic.pulsed_single_dtf(p, 4), rel=1e-12)


def test_pulsed_tree_and_reduced():
    assert analytic.pulsed_tree_dtf(1.0, 4, 4) == 0.5
    assert analytic.pulsed_tree_dtf(0.0, 4, 4) == 0.0
    assert analytic.pulsed_tree_dtf(0.3, 4, 1) == analytic.pulsed_single_dtf(0.3, 4)
    assert analytic.pulsed_tree_dtf(1.0, 4, 50) > 0.0

    assert analytic.pulsed_reduced_dtf(0.5, 82e6, T_D, 4) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert analytic.pulsed_reduced_dtf(0.9, 82e6, T_D, 5) == 0.0
    assert analytic.pulsed_reduced_dtf(0.0, 82e6, T_D, 2) == 0.0


def test_pulsed_ordering():
    for n_d in (4, 20):
        for p in np.linspace(0.01, 1.0, 34):
            single = analytic.pulsed_single_dtf(p, n_d)
            for n in range(1, 8):
                mux = analytic.pulsed_multiplexed_dtf(p, n_d, n)[0]
                tree = analytic.pulsed_tree_dtf(p, n_d, n)
                assert mux <= tree + 1e-15
                assert tree <= single + 1e-15


def test_pulsed_monotone_in_p():
    grid = np.linspace(0.01, 1.0, 50)
    for n in (1, 2, 3):
        curve = [analytic.pulsed_multiplexed_dtf(p, 20, n)[0] for p in grid]
        assert all(b >= a for a, b in zip(curve, curve[1:]))


@pytest.mark.parametrize("n_d, n", [(4, 1), (4, 2), (4, 3), (4, 4), (20, 1), (20, 2)])
def test_pulsed_multiplexed_tracks_exact_chain(n_d, n):
    for p in (0.01, 0.05, 0.2, 0.5, 0.8, 0.95):
        approx = analytic.pulsed_multiplexed_dtf(p, n_d, n)[0]
        exact = pulsed_chain_dtf(p, n_d, n)
        if n <= 2 or approx <= 0.05:
            assert approx == pytest.approx(exact, abs=0.01)
        else:
            assert approx == pytest.approx(exact, abs=0.05)


def test_effective_deadtime_table_validates():
    with pytest.raises(InvalidArgumentError):
        analytic.EffectiveDeadtimeTable(values=())
    with pytest.raises(InvalidArgumentError):
        analytic.EffectiveDeadtimeTable(values=(1.0, 2.0))
    with pytest.raises(InvalidArgumentError):
        analytic.CountBreakdown(mean_counts=(1.0, 2.0), total=4.0)
