"""Tests for the symbolic layer.

The canonical-form machinery is checked against a brute-force oracle:
two stored points are the same element of the shift space iff their
symbol sequences agree on a window wide enough to cover both cores
plus a full common period of each tail.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchlab.errors import DomainError
from pinchlab.symbolic import (
    MarkovMeasure,
    Sft,
    SymbolicPoint,
    agreement_radius,
    agrees_backward,
    agrees_forward,
    anchor_projection,
    bernoulli_measure,
    cylinder_mass,
    default_anchors,
    format_point,
    homoclinic_point,
    markov_measure,
    parse_point,
    periodic_point,
    point_through_word,
    product_density,
    sample_base,
    shift_distance,
)

from math import lcm


def window_oracle_equal(x, y):
    """Sequence equality by direct symbol comparison on a safe window."""
    span = max(abs(x.core_start), abs(x.core_end), abs(y.core_start), abs(y.core_end))
    left = lcm(len(x.left_period), len(y.left_period))
    right = lcm(len(x.right_period), len(y.right_period))
    lo, hi = -(span + left + 1), span + right + 1
    return all(x.symbol_at(n) == y.symbol_at(n) for n in range(lo, hi))


@pytest.fixture
def full2():
    return Sft.full_shift(2)


@pytest.fixture
def golden():
    return Sft.golden_mean()


class TestSft:
    def test_full_shift_allows_everything(self, full2):
        assert full2.allows(0, 0) and full2.allows(0, 1)
        assert full2.allows(1, 0) and full2.allows(1, 1)

    def test_golden_mean_forbids_11(self, golden):
        assert golden.allows(0, 0) and golden.allows(0, 1) and golden.allows(1, 0)
        assert not golden.allows(1, 1)

    def test_golden_word_counts_are_fibonacci(self, golden):
        counts = [golden.count_words(n) for n in range(1, 6)]
        assert counts == [2, 3, 5, 8, 13]
        assert sum(1 for _ in golden.admissible_words(4)) == 8

    def test_admissible_words_respect_transitions(self, golden):
        for w in golden.admissible_words(5):
            assert (1, 1) not in set(zip(w, w[1:]))

    def test_rejects_dead_symbol(self):
        with pytest.raises(DomainError):
            Sft([[True, True], [False, False]])

    def test_rejects_disconnected_graph(self):
        with pytest.raises(DomainError):
            Sft([[True, False], [False, True]])

    def test_shortest_cycle(self, golden):
        assert golden.shortest_cycle_through(0) == (0,)
        assert golden.shortest_cycle_through(1) == (1, 0)


class TestCanonicalForm:
    def test_equality_matches_window_oracle_on_redundant_reps(self, golden):
        x = SymbolicPoint(golden, (0,), (1, 0, 0, 1), (0, 1), -2)
        reps = [
            SymbolicPoint(golden, (0, 0, 0), (1, 0, 0, 1), (0, 1, 0, 1), -2),
            SymbolicPoint(golden, (0,), (0, 1, 0, 0, 1, 0, 1), (0, 1), -3),
            SymbolicPoint(golden, (0,), (1, 0, 0, 1, 0, 1, 0, 1), (0, 1), -2),
        ]
        for y in reps:
            assert window_oracle_equal(x, y)
            assert x == y
            assert hash(x) == hash(y)
            assert format_point(x) == format_point(y)

    def test_distinct_points_disagree_in_oracle_and_equality(self, golden):
        x = SymbolicPoint(golden, (0,), (1, 0, 0, 1), (0, 1), -2)
        y = SymbolicPoint(golden, (0,), (1, 0, 0, 1), (0, 1), -1)
        assert not window_oracle_equal(x, y)
        assert x != y

    def test_core_padded_with_tail_symbols_collapses(self, full2):
        x = SymbolicPoint(full2, (0,), (1,), (0,), 0)
        padded = SymbolicPoint(full2, (0,), (0, 0, 1, 0, 0, 0), (0,), -2)
        assert padded == x
        assert padded.core == (1,)
        assert padded.core_start == 0

    def test_globally_periodic_input_collapses_to_periodic_form(self, full2):
        x = SymbolicPoint(full2, (0, 1), (0, 1, 0, 1), (0, 1), 4)
        assert x.is_periodic
        assert x.period == 2
        assert x == periodic_point(full2, (0, 1))

    def test_heteroclinic_junction_slides_to_a_unique_spot(self, full2):
        a = SymbolicPoint(full2, (0,), (), (1,), 0)
        b = SymbolicPoint(full2, (0, 0), (), (1, 1, 1), 0)
        assert a == b
        assert window_oracle_equal(a, b)

    def test_primitive_period_reduction(self, full2):
        assert periodic_point(full2, (0, 1, 0, 1)) == periodic_point(full2, (0, 1))
        assert periodic_point(full2, (0, 1, 0, 1)).period == 2

    def test_rejects_inadmissible_core_junction(self, golden):
        with pytest.raises(DomainError):
            SymbolicPoint(golden, (0,), (1, 1), (0,), 0)
        with pytest.raises(DomainError):
            SymbolicPoint(golden, (1, 1), (0,), (0,), 0)


class TestShiftAndReverse:
    def test_shift_moves_coordinates(self, golden):
        x = SymbolicPoint(golden, (0,), (1, 0, 1), (0,), 0)
        for k in (-3, -1, 0, 1, 2, 5):
            y = x.shift(k)
            for n in range(-6, 7):
                assert y.symbol_at(n) == x.symbol_at(n + k)

    def test_shift_round_trip(self, golden):
        x = SymbolicPoint(golden, (0, 1), (0, 0, 1), (0,), -1)
        assert x.shift(4).shift(-4) == x

    def test_shift_of_periodic_point_rotates_word(self, full2):
        assert periodic_point(full2, (0, 1)).shift(1) == periodic_point(full2, (1, 0))
        assert periodic_point(full2, (0, 1)).shift(2) == periodic_point(full2, (0, 1))

    def test_reverse_flips_coordinates(self, golden):
        x = SymbolicPoint(golden, (0,), (1, 0, 0, 1), (0, 1), -2)
        y = x.reverse()
        for n in range(-8, 9):
            assert y.symbol_at(n) == x.symbol_at(-n)

    def test_reverse_is_an_involution(self, golden):
        x = SymbolicPoint(golden, (0, 1), (0, 0, 1), (0,), 3)
        assert x.reverse().reverse() == x

    def test_reverse_lands_in_transposed_shift(self):
        sft = Sft([[False, True], [True, True]])
        x = periodic_point(sft, (0, 1))
        y = x.reverse()
        assert np.array_equal(y.sft.transitions, sft.transitions.T)


class TestMetric:
    def test_distance_of_equal_points_is_zero(self, full2):
        x = SymbolicPoint(full2, (0,), (1, 1), (0,), 0)
        assert shift_distance(x, x, 2.0) == 0.0

    def test_disagreement_at_origin_gives_one(self, full2):
        x = periodic_point(full2, (0,))
        y = periodic_point(full2, (1,))
        assert shift_distance(x, y, 2.0) == 1.0

    def test_agreement_radius_three_gives_rho_cubed(self, full2):
        # both spell ...000[0]00... vs a flip planted at coordinate 3
        x = periodic_point(full2, (0,))
        y = SymbolicPoint(full2, (0,), (1,), (0,), 3)
        assert agreement_radius(x, y) == 3
        assert shift_distance(x, y, 2.0) == pytest.approx(0.125)
        assert shift_distance(x, y, 3.0) == pytest.approx(3.0 ** -3)

    def test_metric_is_symmetric(self, full2):
        x = SymbolicPoint(full2, (0,), (1, 0, 1), (0,), -1)
        y = periodic_point(full2, (0, 1))
        assert shift_distance(x, y, 2.0) == shift_distance(y, x, 2.0)

    def test_rho_must_exceed_one(self, full2):
        x = periodic_point(full2, (0,))
        with pytest.raises(DomainError):
            shift_distance(x, x, 1.0)


def _point_from_seed(mu, seed):
    rng = np.random.default_rng(seed)
    x = sample_base(mu, int(rng.integers(1, 5)), seed)
    return x.shift(int(rng.integers(-3, 4)))


class TestMetricProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.tuples(st.integers(0, 10_000), st.integers(0, 10_000),
                     st.integers(0, 10_000)))
    def test_ultrametric_inequality(self, seeds):
        sft = Sft.golden_mean()
        mu = markov_measure(sft, [[0.5, 0.5], [1.0, 0.0]], 2.0)
        x, y, z = (_point_from_seed(mu, s) for s in seeds)
        dxz = shift_distance(x, z, 2.0)
        dxy = shift_distance(x, y, 2.0)
        dyz = shift_distance(y, z, 2.0)
        assert dxz <= max(dxy, dyz) + 1e-15

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    def test_shift_is_lipschitz_with_factor_rho(self, s1, s2):
        sft = Sft.golden_mean()
        mu = markov_measure(sft, [[0.5, 0.5], [1.0, 0.0]], 2.0)
        x, y = _point_from_seed(mu, s1), _point_from_seed(mu, s2)
        d = shift_distance(x, y, 2.0)
        assert shift_distance(x.shift(1), y.shift(1), 2.0) <= 2.0 * d + 1e-15
        assert shift_distance(x.shift(-1), y.shift(-1), 2.0) <= 2.0 * d + 1e-15


class TestHomoclinic:
    def test_golden_mean_example(self, golden):
        x0 = periodic_point(golden, (0,))
        h = homoclinic_point(x0, (1,), (0,))
        z = h.point
        assert h.k_forward == 2
        assert h.k_backward == 1
        assert z.symbols(-3, 4) == (0, 0, 0, 1, 0, 0, 0)
        assert agrees_forward(z.shift(h.k_forward), x0)
        assert agrees_backward(z.shift(-h.k_backward), x0)
        assert not agrees_backward(z, x0)

    def test_full_shift_single_flip(self, full2):
        x0 = periodic_point(full2, (0,))
        h = homoclinic_point(x0, (1,), ())
        assert h.k_forward == 1
        assert h.k_backward == 1
        assert h.point.symbols(-2, 3) == (0, 0, 1, 0, 0)

    def test_period_two_base(self, full2):
        x0 = periodic_point(full2, (0, 1))
        h = homoclinic_point(x0, (1, 1), ())
        assert h.k_backward == 2
        assert agrees_forward(h.point.shift(h.k_forward), x0)
        assert agrees_backward(h.point.shift(-h.k_backward), x0)

    def test_bridge_must_leave_base_cylinder(self, full2):
        x0 = periodic_point(full2, (0,))
        with pytest.raises(DomainError):
            homoclinic_point(x0, (0, 1), ())

    def test_base_must_be_periodic(self, full2):
        x = SymbolicPoint(full2, (0,), (1,), (0, 1), 0)
        with pytest.raises(DomainError):
            homoclinic_point(x, (1,), ())


class TestAnchors:
    def test_default_anchors_start_at_their_symbol(self, golden):
        anchors = default_anchors(golden)
        assert anchors[0] == periodic_point(golden, (0,))
        assert anchors[1] == periodic_point(golden, (1, 0))
        for s, a in anchors.items():
            assert a.symbol_at(0) == s

    def test_projection_keeps_future_and_swaps_past(self, golden):
        anchors = default_anchors(golden)
        x = SymbolicPoint(golden, (0, 1), (0, 0, 0, 1), (0,), -2)
        p = anchor_projection(x, anchors)
        a = anchors[x.symbol_at(0)]
        assert agrees_forward(p, x)
        assert agrees_backward(p, a)

    def test_projection_fixes_anchored_points(self, golden):
        anchors = default_anchors(golden)
        for a in anchors.values():
            assert anchor_projection(a, anchors) == a


class TestSerialization:
    def test_round_trip(self, golden):
        x = SymbolicPoint(golden, (0,), (1, 0, 0, 1), (0, 1), -2)
        assert parse_point(golden, format_point(x)) == x

    def test_format_is_canonical(self, golden):
        x = SymbolicPoint(golden, (0, 0), (0, 1), (0, 1, 0, 1), 1)
        y = SymbolicPoint(golden, (0,), (0, 1), (0, 1), 1)
        assert format_point(x) == format_point(y)

    def test_parse_rejects_garbage(self, golden):
        with pytest.raises(DomainError):
            parse_point(golden, "01|0")
        with pytest.raises(DomainError):
            parse_point(golden, "0|1|0@x")

    def test_point_through_word_spells_word(self, golden):
        x = point_through_word(golden, (1, 0, 0, 1), -1)
        assert x.symbols(-1, 3) == (1, 0, 0, 1)


class TestMarkov:
    def test_stationary_vector_matches_hand_solution(self, full2):
        # pi P = pi with P rows (0.9, 0.1), (0.5, 0.5) solves to (5/6, 1/6)
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        np.testing.assert_allclose(mu.stationary, [5 / 6, 1 / 6], atol=1e-12)

    def test_stationary_handles_periodic_chain(self, full2):
        mu = markov_measure(full2, [[0.0, 1.0], [1.0, 0.0]], 2.0)
        np.testing.assert_allclose(mu.stationary, [0.5, 0.5], atol=1e-12)

    def test_uniform_bernoulli(self, full2):
        mu = bernoulli_measure(full2, [0.5, 0.5], 2.0)
        np.testing.assert_allclose(mu.stationary, [0.5, 0.5], atol=1e-12)
        assert cylinder_mass(mu, (0, 1, 1)) == pytest.approx(0.125)

    def test_golden_parry_style_measure(self, golden):
        mu = markov_measure(golden, [[2 / 3, 1 / 3], [1.0, 0.0]], 2.0)
        pi = mu.stationary
        np.testing.assert_allclose(pi @ mu.stochastic, pi, atol=1e-12)
        assert cylinder_mass(mu, (1, 1)) == 0.0

    def test_cylinder_mass_is_offset_invariant(self, full2):
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        assert cylinder_mass(mu, (0, 1, 0), -2) == cylinder_mass(mu, (0, 1, 0), 7)

    def test_support_must_respect_transitions(self, golden):
        with pytest.raises(DomainError):
            markov_measure(golden, [[0.5, 0.5], [0.5, 0.5]], 2.0)

    def test_rows_must_be_stochastic(self, full2):
        with pytest.raises(DomainError):
            markov_measure(full2, [[0.9, 0.2], [0.5, 0.5]], 2.0)

    def test_reversed_chain_preserves_stationary_vector(self, full2):
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        rev = mu.reversed()
        np.testing.assert_allclose(rev.stationary, mu.stationary, atol=1e-11)

    def test_product_identity_ties_past_future_and_density(self, full2):
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        rng = np.random.default_rng(7)
        for _ in range(25):
            m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            word = tuple(int(s) for s in rng.integers(0, 2, size=m + n))
            x = point_through_word(full2, word, -m)
            full = cylinder_mass(mu, word, -m)
            past = cylinder_mass(mu, word[:m], -m)
            future = cylinder_mass(mu, word[m:], 0)
            assert full == pytest.approx(past * future * product_density(mu, x), rel=1e-12)

    def test_product_density_golden_case(self, golden):
        mu = markov_measure(golden, [[2 / 3, 1 / 3], [1.0, 0.0]], 2.0)
        x = point_through_word(golden, (1, 0), -1)
        # P[1,0] / pi[0] with pi = (3/4, 1/4)
        np.testing.assert_allclose(mu.stationary, [0.75, 0.25], atol=1e-12)
        assert product_density(mu, x) == pytest.approx((1.0) / 0.75)


class TestSampling:
    def test_same_seed_same_point(self, golden):
        mu = markov_measure(golden, [[0.5, 0.5], [1.0, 0.0]], 2.0)
        assert sample_base(mu, 6, 123) == sample_base(mu, 6, 123)
        assert sample_base(mu, 6, 123) != sample_base(mu, 6, 124)

    def test_samples_are_admissible(self, golden):
        mu = markov_measure(golden, [[0.5, 0.5], [1.0, 0.0]], 2.0)
        for seed in range(40):
            x = sample_base(mu, 5, seed)
            w = x.symbols(-12, 13)
            assert golden.is_word_admissible(w)

    def test_marginal_at_origin_tracks_stationary_vector(self, full2):
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        hits = sum(sample_base(mu, 1, seed).symbol_at(0) for seed in range(600))
        assert abs(hits / 600 - 1 / 6) < 0.05

    def test_transition_frequencies_follow_the_chain(self, full2):
        mu = markov_measure(full2, [[0.9, 0.1], [0.5, 0.5]], 2.0)
        seen = np.zeros((2, 2))
        for seed in range(400):
            x = sample_base(mu, 2, seed)
            for n in (-2, -1, 0, 1):
                seen[x.symbol_at(n), x.symbol_at(n + 1)] += 1
        cond = seen / seen.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(cond, mu.stochastic, atol=0.08)
