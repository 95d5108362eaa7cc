import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from muscma.codebook import build_factor_graph, build_lds_signatures
from muscma.linkrate import TRIVIAL_PROFILE, EigenProfile, UserLinkState
from muscma.pairing import (PAIRED, SINGLE, PairingDecision, SchedulerWeights, exhaustive_pair,
                            greedy_pair, optimal_alpha_ofdma, optimal_alpha_scma, pf_select,
                            single_user_rate, wsr_derivative_scma, wsr_point_A, wsr_point_B)

S = build_lds_signatures(build_factor_graph(4, 2), 0)
P_STRONG = EigenProfile.from_signatures(S.columns([0, 5, 1]))
P_WEAK = EigenProfile.from_signatures(S.columns([2, 3, 4]))
GRID = np.arange(1, 100_000) * 1e-5  # step 1e-5 over (0, 1)


def pool(gs, Rs):
    return [UserLinkState(i, float(g), float(r)) for i, (g, r) in enumerate(zip(gs, Rs))]


def test_weights():
    w = SchedulerWeights(2.0)
    np.testing.assert_allclose(w.of([2.0, 0.5]), [0.25, 4.0])
    np.testing.assert_allclose(SchedulerWeights(1.0).of([4.0]), [0.25])
    with pytest.raises(ValueError):
        SchedulerWeights(-1.0)


def test_decision_invariants():
    with pytest.raises(ValueError):
        PairingDecision(PAIRED, 0, 1, alpha=1.0)
    with pytest.raises(ValueError):
        PairingDecision(PAIRED, 0, 0, alpha=0.5)
    with pytest.raises(ValueError):
        PairingDecision(SINGLE, 0, alpha=0.5)
    with pytest.raises(ValueError):
        PairingDecision("triple", 0)
    assert PairingDecision(PAIRED, 2, 1, 0.5).users == (2, 1)


def test_pf_equal_rates_picks_best_channel():
    assert pf_select(pool([1.0, 5.0, 2.0], [1.0, 1.0, 1.0])) == 1


def test_pf_single_user():
    assert pf_select(pool([0.1], [3.0])) == 0


def test_pf_hand_example():
    # metrics log2(4)/4 = 0.5 and log2(2)/1 = 1.0
    assert pf_select([UserLinkState(1, 3.0, 4.0), UserLinkState(2, 1.0, 1.0)]) == 2


def test_pf_tie_goes_to_lowest_id():
    assert pf_select([UserLinkState(7, 3.0, 1.0), UserLinkState(4, 3.0, 1.0)]) == 4


def test_pf_empty_pool_rejected():
    with pytest.raises(ValueError):
        pf_select([])


# gammas too close to zero give equal rates in floating point and tie on user id
@given(st.lists(st.floats(1e-3, 100.0), min_size=1, max_size=10),
       st.lists(st.floats(0.01, 10.0), min_size=10, max_size=10))
def test_beta_zero_is_max_rate(gs, Rs):
    users = pool(gs, Rs[:len(gs)])
    best = max(users, key=lambda u: (u.gamma, -u.user_id))
    assert pf_select(users, SchedulerWeights(0.0)) == best.user_id


def test_scma_single_user_rate_is_best_profile():
    r = single_user_rate(5.0, "SCMA", (TRIVIAL_PROFILE, P_STRONG))
    assert r == pytest.approx(max(np.log2(6.0), P_STRONG.log_det(5.0 / 3).item() / 4))
    with pytest.raises(ValueError):
        single_user_rate(1.0, "CDMA")


def test_alpha_ofdma_example():
    a = optimal_alpha_ofdma(10.0, 1.0, 2.0, 1.0)
    assert a == pytest.approx(0.8, abs=1e-12)
    wsr = wsr_point_A(GRID, 10.0, 1.0, 0.5, 1.0)
    assert GRID[np.argmax(wsr)] == pytest.approx(0.8, abs=1e-5)


def test_alpha_ofdma_degenerate_cases():
    assert optimal_alpha_ofdma(4.0, 4.0, 2.0, 1.0) is None
    assert optimal_alpha_ofdma(10.0, 1.0, 10.0, 1.0) is None  # zero numerator
    assert optimal_alpha_ofdma(10.0, 1.0, 1.0, 1.0) is None
    with pytest.raises(ValueError, match="swap"):
        optimal_alpha_ofdma(1.0, 10.0, 1.0, 2.0)


def test_alpha_ofdma_clipped_to_range():
    assert optimal_alpha_ofdma(10.0, 1.0, 2.0, 1.0, (0.05, 0.7)) == 0.7


@given(st.floats(1.0, 1e3), st.floats(1e-2, 1.0), st.floats(0.01, 0.99), st.floats(0.1, 10.0))
def test_alpha_ofdma_is_stationary(g1, frac, u, R2):
    g2 = g1 * frac
    assume(g1 > g2 * (1 + 1e-6))
    R1 = R2 * (1 + u * (g1 / g2 - 1))
    a = optimal_alpha_ofdma(g1, g2, R1, R2)
    assume(a is not None and 1e-3 < a < 1 - 1e-3)
    h = 1e-7
    d = (wsr_point_A(a + h, g1, g2, 1 / R1, 1 / R2)
         - wsr_point_A(a - h, g1, g2, 1 / R1, 1 / R2)) / (2 * h)
    assert abs(d) <= 1e-6


def test_wsr_a_zero_weak_weight_prefers_strong():
    wsr = wsr_point_A(GRID, 8.0, 2.0, 1.0, 0.0)
    assert np.argmax(wsr) == GRID.size - 1


@given(st.floats(1.0, 1e3), st.floats(1e-2, 0.999), st.floats(1e-3, 0.999),
       st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_wsr_trivial_profiles_equal_single_tone(g1, frac, a, w1, w2):
    g2 = g1 * frac
    assert wsr_point_A(a, g1, g2, w1, w2, TRIVIAL_PROFILE, TRIVIAL_PROFILE) == pytest.approx(
        wsr_point_A(a, g1, g2, w1, w2), abs=1e-12)


def test_wsr_b_limits():
    assert wsr_point_B(0.0, 10.0, 3.0, 2.0, 1.0) == pytest.approx(np.log2(4.0) / 1.0)
    sweep = wsr_point_B(GRID, 10.0, 3.0, 2.0, 1.0)
    assert np.argmax(sweep) == 0
    assert np.all(np.diff(sweep) < 0)
    assert np.isfinite(wsr_point_B(0.4, 10.0, 3.0, 1.0, 1.0))


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g2 = rng.uniform(0.1, 50)
        g1 = g2 * rng.uniform(1.1, 20)
        w1, w2 = rng.uniform(0.1, 5, 2)
        a = rng.uniform(0.05, 0.95)
        h = 1e-6
        fd = (wsr_point_A(a + h, g1, g2, w1, w2, P_STRONG, P_WEAK)
              - wsr_point_A(a - h, g1, g2, w1, w2, P_STRONG, P_WEAK)) / (2 * h) * np.log(2)
        assert wsr_derivative_scma(a, g1, g2, w1, w2, P_STRONG, P_WEAK) == pytest.approx(
            fd, rel=1e-5, abs=1e-6)


def test_alpha_scma_canonical_example_grid():
    a = optimal_alpha_scma(10.0, 2.0, 0.5, 1.0, P_STRONG, P_WEAK)
    assert a is not None
    grid = wsr_point_A(GRID, 10.0, 2.0, 0.5, 1.0, P_STRONG, P_WEAK)
    assert a == pytest.approx(GRID[np.argmax(grid)], abs=1e-4)


def test_alpha_scma_trivial_matches_closed_form():
    a = optimal_alpha_scma(10.0, 1.0, 0.5, 1.0, TRIVIAL_PROFILE, TRIVIAL_PROFILE)
    assert a == pytest.approx(0.8, abs=1e-9)


def test_alpha_scma_vanishing_strong_weight():
    assert optimal_alpha_scma(10.0, 2.0, 1e-9, 1.0, P_STRONG, P_WEAK) is None


def test_alpha_scma_requires_order():
    with pytest.raises(ValueError):
        optimal_alpha_scma(1.0, 2.0, 1.0, 1.0, P_STRONG, P_WEAK)


def test_greedy_single_user_pool():
    d = greedy_pair(pool([3.0], [1.0]))
    assert d.mode == SINGLE and d.user1 == 0


def test_greedy_identical_users_stay_single():
    d = greedy_pair(pool([5.0, 5.0], [1.0, 1.0]))
    assert not d.paired
    # oracle: no split improves on the single-user metric
    assert np.max(wsr_point_A(GRID, 5.0, 5.0 * (1 - 1e-12), 1.0, 1.0)) <= np.log2(6.0) + 1e-9


def test_greedy_example_pair():
    d = greedy_pair(pool([10.0, 1.0], [2.0, 1.0]))
    assert d.paired and (d.user1, d.user2) == (0, 1)
    assert d.alpha == pytest.approx(0.8, abs=1e-12)
    assert d.wsr == pytest.approx(wsr_point_A(0.8, 10.0, 1.0, 0.5, 1.0), abs=1e-12)
    assert d.wsr == pytest.approx(1.737, abs=1e-3)
    assert d.wsr > np.log2(11) / 2
    assert np.log2(11) / 2 == pytest.approx(1.730, abs=1e-3)


def test_greedy_scma_mode_example():
    d = greedy_pair(pool([10.0, 1.0], [2.0, 1.0]), mode="SCMA")
    assert d.paired and d.alpha == pytest.approx(0.8, abs=1e-8)


def test_greedy_swaps_roles_when_partner_is_stronger():
    # the PF choice is user 1 (weak channel, low average rate); its partner is stronger
    users = pool([10.0, 1.0], [6.0, 1.0])
    assert pf_select(users) == 1
    d = greedy_pair(users)
    assert d.paired and (d.user1, d.user2) == (0, 1)
    assert d.alpha == pytest.approx(0.08, abs=1e-12)


def test_exhaustive_pool_of_two_agrees():
    users = pool([10.0, 1.0], [2.0, 1.0])
    assert exhaustive_pair(users) == greedy_pair(users)


def test_exhaustive_identical_users_single():
    assert not exhaustive_pair(pool([2.0] * 4, [1.0] * 4)).paired


def test_exhaustive_cap():
    with pytest.raises(ValueError):
        exhaustive_pair(pool([1.0] * 5, [1.0] * 5), cap=4)


def _oracle_best_pair(gs, Rs, alpha_range=(0.05, 0.95)):
    """Independent enumeration: every pair, split by dense grid search."""
    best = max(np.log2(1 + g) / r for g, r in zip(gs, Rs))
    grid = np.linspace(alpha_range[0], alpha_range[1], 90_001)
    for i in range(len(gs)):
        for j in range(len(gs)):
            if gs[i] <= gs[j]:
                continue
            w = wsr_point_A(grid, gs[i], gs[j], 1 / Rs[i], 1 / Rs[j])
            best = max(best, w.max())
    return best


@given(st.integers(0, 10_000), st.sampled_from(["OFDMA", "SCMA"]))
def test_exhaustive_dominates_greedy(seed, mode):
    rng = np.random.default_rng(seed)
    n = 5
    users = pool(rng.exponential(10.0, n), rng.uniform(0.2, 3.0, n))
    g = greedy_pair(users, mode=mode)
    e = exhaustive_pair(users, mode=mode)
    assert e.wsr >= g.wsr
    if g.paired:
        metric = max(single_user_rate(u.gamma) / u.avg_rate for u in users)
        assert g.wsr > metric


@pytest.mark.parametrize("seed", range(5))
def test_exhaustive_close_to_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    gs, Rs = rng.exponential(10.0, 4), rng.uniform(0.2, 3.0, 4)
    e = exhaustive_pair(pool(gs, Rs))
    assert e.wsr == pytest.approx(_oracle_best_pair(gs, Rs), abs=1e-6)


def test_scma_profiles_must_share_k():
    with pytest.raises(ValueError):
        greedy_pair(pool([10.0, 1.0], [2.0, 1.0]), mode="SCMA",
                    profiles=(P_STRONG, TRIVIAL_PROFILE))
