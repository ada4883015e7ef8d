"""Cocycle composition, domination, distance, and contraction rates.

Expected numbers come from hand computations done independently of the
implementation: rotation cocycles compose to rotations by summed angles,
domination constants of explicit PWL maps are ratios of their slopes,
and the diagonal projective map contracts at log(1/4) at its attractor.
"""

import numpy as np
import pytest

from pinchlab.circle import (
    CircleMap,
    identity_map,
    mobius_map,
    pwl_map,
    rotation,
    sup_distance,
)
from pinchlab.cocycle import (
    DEFAULT_EPS_LADDER,
    InverseCocycle,
    TableCocycle,
    base_holder_constant,
    cocycle_distance,
    constant_cocycle,
    contraction_exponent,
    domination_check,
    fiber_compose,
    inverse_cocycle,
    measure_exponent,
    symbol_cocycle,
    window_separation,
)
from pinchlab.errors import DomainError
from pinchlab.measures import FiberMeasure
from pinchlab.symbolic import (
    Sft,
    bernoulli_measure,
    periodic_point,
    sample_base,
)

LOG_QUARTER = -1.3862943611198906  # log(1/4), the diagonal map's attractor rate

GOLDEN_ANGLE = 0.3819660113

PINCHED = pwl_map([0.0, 0.25, 0.5, 0.75], [0.0, 0.22, 0.5, 0.79])


def full2():
    return Sft.full_shift(2)


def mixed_cocycle():
    return symbol_cocycle(Sft.golden_mean(), [PINCHED, rotation(GOLDEN_ANGLE)])


def random_r1_cocycle(seed: int = 5) -> TableCocycle:
    """Radius-1 cocycle on the full 2-shift with gentle random PWL maps."""
    rng = np.random.default_rng(seed)
    table = {}
    for word in full2().admissible_words(3):
        s1 = 0.85 + 0.3 * rng.random()  # second slope is 2 - s1, also in range
        v0 = rng.random()
        table[word] = CircleMap([0.0, 0.5], [v0, v0 + s1 / 2.0])
    return TableCocycle(full2(), 1, table)


class TestConstruction:
    def test_missing_window_is_rejected(self):
        table = {(0,): rotation(0.1)}
        with pytest.raises(DomainError, match="missing"):
            TableCocycle(full2(), 0, table)

    def test_inadmissible_window_is_rejected(self):
        sft = Sft.golden_mean()
        table = {w: rotation(0.1) for w in sft.admissible_words(3)}
        table[(1, 1, 0)] = rotation(0.2)
        with pytest.raises(DomainError, match="not admissible"):
            TableCocycle(sft, 1, table)

    def test_wrong_word_length_is_rejected(self):
        table = {(0, 0): rotation(0.1), (0,): rotation(0.1), (1,): rotation(0.1)}
        with pytest.raises(DomainError):
            TableCocycle(full2(), 0, table)

    def test_window_map_trims_longer_words_to_center(self):
        F = random_r1_cocycle()
        assert F.window_map((0, 1, 0, 1, 1)) is F.window_map((1, 0, 1))
        with pytest.raises(DomainError):
            F.window_map((0, 1))

    def test_fiber_map_requires_matching_base(self):
        F = mixed_cocycle()
        x = periodic_point(full2(), (0,))
        with pytest.raises(DomainError):
            F.fiber_map(x)


class TestComposition:
    def test_rotations_compose_to_summed_angle(self):
        F = constant_cocycle(full2(), rotation(0.15))
        x = periodic_point(full2(), (0, 1))
        got = fiber_compose(F, x, 5)
        assert sup_distance(got, rotation(0.75)) < 1e-12

    def test_zero_steps_is_identity(self):
        F = random_r1_cocycle()
        x = periodic_point(full2(), (0, 1))
        assert sup_distance(fiber_compose(F, x, 0), identity_map()) == 0.0

    def test_cocycle_identity(self):
        F = random_r1_cocycle()
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        for seed in range(6):
            x = sample_base(mu, 20, seed)
            m, n = 3, 4
            whole = fiber_compose(F, x, m + n)
            split = fiber_compose(F, x.shift(m), n).compose(fiber_compose(F, x, m))
            assert sup_distance(whole, split) < 1e-10

    def test_negative_steps_invert_the_backward_run(self):
        F = random_r1_cocycle()
        x = periodic_point(full2(), (0, 1, 1))
        back = fiber_compose(F, x, -4)
        fwd = fiber_compose(F, x.shift(-4), 4)
        assert sup_distance(back.compose(fwd), identity_map()) < 1e-10

    def test_orbit_maps_window_dependence(self):
        F = random_r1_cocycle()
        x = periodic_point(full2(), (0, 1, 1))
        maps = list(F.orbit_maps(x, 3))
        assert sup_distance(maps[0], F.window_map(x.window(1))) == 0.0
        assert sup_distance(maps[2], F.window_map(x.shift(2).window(1))) == 0.0


class TestDomination:
    def test_rotation_cocycle_worst_is_half_at_rho_two(self):
        F = constant_cocycle(full2(), rotation(0.3))
        report = domination_check(F, 2.0, 0.6)
        assert report.worst == 0.5
        assert report.dominated
        assert not domination_check(F, 2.0, 0.4).dominated

    def test_steep_map_inverse_drives_the_constant(self):
        # slopes 3 and 1/3; the inverse has slopes 1/3 and 3, so the
        # worst fiber constant is 3 and the product with 1/2 gives 1.5
        f = pwl_map([0.0, 0.25], [0.0, 0.75])
        F = constant_cocycle(full2(), f)
        report = domination_check(F, 2.0, 1.0)
        assert report.worst == pytest.approx(1.5, rel=1e-12)
        assert not report.dominated

    def test_diagonal_projective_map_is_not_dominated(self):
        # the repeller multiplier of diag(2, 1/2) is 4, hence worst ~ 2
        F = constant_cocycle(full2(), mobius_map(np.diag([2.0, 0.5]), grid=4096))
        report = domination_check(F, 2.0, 1.0)
        assert report.worst == pytest.approx(2.0, rel=1e-3)
        assert not report.dominated

    def test_mixed_cocycle_is_dominated(self):
        report = domination_check(mixed_cocycle(), 2.0, 0.6)
        assert report.worst == pytest.approx(0.5 / 0.84, rel=1e-12)
        assert report.dominated

    def test_rejects_bad_parameters(self):
        F = constant_cocycle(full2(), rotation(0.3))
        with pytest.raises(DomainError):
            domination_check(F, 1.0, 0.5)
        with pytest.raises(DomainError):
            domination_check(F, 2.0, 0.0)


class TestDistance:
    def test_window_separation_hand_cases(self):
        assert window_separation((0, 1, 0), (0, 1, 1)) == 1
        assert window_separation((0, 1, 0), (1, 1, 0)) == 1
        assert window_separation((0, 0, 0), (0, 1, 0)) == 0
        assert window_separation((0, 1, 0, 1, 0), (0, 0, 0, 1, 0)) == 1
        with pytest.raises(DomainError):
            window_separation((0, 1), (0, 1))

    def test_constant_rotations_differ_by_angle(self):
        F = constant_cocycle(full2(), rotation(0.2))
        G = constant_cocycle(full2(), rotation(0.25))
        assert cocycle_distance(F, G, 2.0) == pytest.approx(0.05, abs=1e-12)

    def test_base_holder_constant_of_symbol_rotations(self):
        # the only realizable separation is at position 0, map gap 0.1,
        # and padding cannot create sharper pairs for a radius-0 cocycle
        F = symbol_cocycle(full2(), [identity_map(), rotation(0.1)])
        assert base_holder_constant(F, 2.0) == pytest.approx(0.1, abs=1e-12)
        assert base_holder_constant(F, 2.0, radius=1) == pytest.approx(0.1, abs=1e-12)

    def test_base_holder_constant_scales_with_separation(self):
        # map depends on the symbol one step ahead: windows agreeing at
        # the center but splitting at |n| = 1 give ratio 0.1 / 2^-1
        table = {w: rotation(0.1 * w[2]) for w in full2().admissible_words(3)}
        F = TableCocycle(full2(), 1, table)
        assert base_holder_constant(F, 2.0) == pytest.approx(0.2, abs=1e-12)

    def test_distance_includes_base_regularity_gap(self):
        table = {w: rotation(0.1 * w[2]) for w in full2().admissible_words(3)}
        F = TableCocycle(full2(), 1, table)
        G = constant_cocycle(full2(), rotation(0.1))
        # sup term 0.1 (windows with w[2] = 0); base constants 0.2 vs 0
        assert cocycle_distance(F, G, 2.0) == pytest.approx(0.3, abs=1e-12)

    def test_distance_pads_mismatched_radii(self):
        F = random_r1_cocycle()
        G = TableCocycle(full2(), 0, {(0,): rotation(0.1), (1,): rotation(0.3)})
        d01 = cocycle_distance(F, G, 2.0)
        lifted = {w: G.window_map(w) for w in full2().admissible_words(3)}
        d11 = cocycle_distance(F, TableCocycle(full2(), 1, lifted), 2.0)
        assert d01 == pytest.approx(d11, abs=1e-12)

    def test_self_distance_is_zero(self):
        F = random_r1_cocycle()
        assert cocycle_distance(F, F, 2.0) == 0.0

    def test_mismatched_bases_are_rejected(self):
        F = constant_cocycle(full2(), rotation(0.2))
        G = constant_cocycle(Sft.golden_mean(), rotation(0.2))
        with pytest.raises(DomainError):
            cocycle_distance(F, G, 2.0)


class TestContractionExponent:
    def test_isometric_cocycle_reports_exact_zero(self):
        F = constant_cocycle(full2(), rotation(GOLDEN_ANGLE))
        x = periodic_point(full2(), (0, 1))
        est = contraction_exponent(F, x, 0.3, 80)
        assert abs(est.value) < 1e-15
        assert not est.all_saturated

    def test_window_dependent_rotations_still_exact_zero(self):
        table = {w: rotation(0.1 + 0.11 * sum(w)) for w in full2().admissible_words(3)}
        F = TableCocycle(full2(), 1, table)
        x = periodic_point(full2(), (0, 1, 1))
        assert abs(contraction_exponent(F, x, 0.71, 64).value) < 1e-15

    def test_diagonal_attractor_rate(self):
        F = constant_cocycle(full2(), mobius_map(np.diag([2.0, 0.5]), grid=1024))
        x = periodic_point(full2(), (0,))
        est = contraction_exponent(F, x, 0.0, 200)
        assert est.value == pytest.approx(LOG_QUARTER, rel=0.05)
        assert not est.all_saturated

    def test_repeller_probes_saturate(self):
        F = constant_cocycle(full2(), mobius_map(np.diag([2.0, 0.5]), grid=1024))
        x = periodic_point(full2(), (0,))
        est = contraction_exponent(F, x, 0.5, 80)
        assert est.all_saturated

    def test_invariance_along_the_orbit(self):
        F = mixed_cocycle()
        x = periodic_point(Sft.golden_mean(), (0, 0, 1))
        p = 0.31
        here = contraction_exponent(F, x, p, 120).value
        there = contraction_exponent(F, x.shift(1), float(F.fiber_map(x)(p)), 120).value
        assert here == pytest.approx(there, abs=0.08)

    def test_parameter_validation(self):
        F = constant_cocycle(full2(), rotation(0.1))
        x = periodic_point(full2(), (0,))
        with pytest.raises(DomainError):
            contraction_exponent(F, x, 0.0, 10)
        with pytest.raises(DomainError):
            contraction_exponent(F, x, 0.0, 80, eps_ladder=())
        with pytest.raises(DomainError):
            contraction_exponent(F, x, 0.0, 80, eps_ladder=(0.7,))

    def test_curves_expose_diagnostics(self):
        F = constant_cocycle(full2(), rotation(0.05))
        x = periodic_point(full2(), (1,))
        est = contraction_exponent(F, x, 0.2, 60)
        assert len(est.curves) == 2 * len(DEFAULT_EPS_LADDER)
        assert all(c.values.shape == (60,) for c in est.curves)


class _UniformAtoms:
    """Minimal disintegration stand-in: the same atom grid everywhere."""

    def __init__(self, n=32):
        self.m = FiberMeasure.uniform_atoms(n)

    def measure_at(self, x):
        return self.m


class TestMeasureExponent:
    def test_isometric_cocycle_gives_zero_mean_and_spread(self):
        F = constant_cocycle(full2(), rotation(GOLDEN_ANGLE))
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        out = measure_exponent(F, _UniformAtoms(), mu, 6, seed=3, n_max=60)
        assert abs(out.mean) < 1e-15
        assert out.stderr < 1e-15

    def test_bit_identical_reruns(self):
        F = constant_cocycle(full2(), mobius_map(np.diag([2.0, 0.5]), grid=256))
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        a = measure_exponent(F, _UniformAtoms(), mu, 4, seed=7, n_max=60)
        b = measure_exponent(F, _UniformAtoms(), mu, 4, seed=7, n_max=60)
        assert a.mean == b.mean and a.stderr == b.stderr
        assert np.array_equal(a.values, b.values)

    def test_needs_at_least_one_sample(self):
        F = constant_cocycle(full2(), rotation(0.1))
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        with pytest.raises(DomainError):
            measure_exponent(F, _UniformAtoms(), mu, 0, seed=1)


class TestInverseCocycle:
    def test_rotation_inverts_to_negative_angle(self):
        F = constant_cocycle(full2(), rotation(0.2))
        G = inverse_cocycle(F)
        y = periodic_point(full2(), (0,))
        assert sup_distance(G.fiber_map(y), rotation(-0.2)) < 1e-12

    def test_double_inversion_returns_the_original_object(self):
        F = random_r1_cocycle()
        assert inverse_cocycle(inverse_cocycle(F)) is F

    def test_window_table_is_reversed_and_inverted(self):
        F = random_r1_cocycle()
        G = inverse_cocycle(F)
        for u in G.sft.admissible_words(3):
            expect = F.window_map(u[::-1]).invert()
            assert sup_distance(G.window_map(u), expect) == 0.0

    def test_inverse_run_cancels_the_forward_run(self):
        F = random_r1_cocycle()
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        for seed in (0, 1, 2):
            x = sample_base(mu, 16, seed)
            n = 6
            fwd = fiber_compose(F, x.shift(-(n - 1)), n)
            bwd = fiber_compose(inverse_cocycle(F), x.reverse(), n)
            assert sup_distance(bwd.compose(fwd), identity_map()) < 1e-10

    def test_inverse_lives_over_the_transposed_shift(self):
        sft = Sft.golden_mean()
        F = symbol_cocycle(sft, [rotation(0.1), rotation(0.2)])
        G = inverse_cocycle(F)
        assert G.sft == sft.transposed()

    def test_domination_is_direction_symmetric(self):
        F = random_r1_cocycle()
        a = domination_check(F, 2.0, 0.6)
        b = domination_check(inverse_cocycle(F), 2.0, 0.6)
        assert a.worst == b.worst
        assert a.dominated == b.dominated

    def test_shift_and_reverse_commute_as_used_by_orbit_maps(self):
        mu = bernoulli_measure(full2(), [0.5, 0.5], 2.0)
        x = sample_base(mu, 12, 9)
        assert x.shift(3).reverse() == x.reverse().shift(-3)
        assert x.shift(-2).reverse() == x.reverse().shift(2)
