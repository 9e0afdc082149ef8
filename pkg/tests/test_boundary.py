import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelline.boundary import (
    LAMBDA,
    AdmissibilityError,
    AdmissibilityMargin,
    BoundaryError,
    DensityPiece,
    General,
    MeasurePair,
    PiecewiseConstant,
    RadonMeasure,
    approximate,
    cdf_gap,
    cdf_left,
    cdf_right,
    check_admissible,
    function_to_measure,
    measure_to_function,
    pair_from_dict,
    quantize_measure,
    quantize_pair,
    reversed_pair,
    sup_distance,
    tanh_function,
    tanh_pair,
)


def right(*atoms, pieces=()):
    return RadonMeasure("R", atoms, pieces)


def left(*atoms, pieces=()):
    return RadonMeasure("L", atoms, pieces)


def same_atoms(a, b):
    return np.shape(a) == np.shape(b) and np.allclose(np.array(a, float), np.array(b, float), rtol=0, atol=1e-12)


# distribution functions


def test_cdf_right_empty():
    assert cdf_right(right(), 5.0) == 0.0


def test_cdf_right_single_atom():
    assert cdf_right(right((1.0, 0.75)), 2.0) == 0.75


def test_cdf_right_is_right_continuous():
    m = right((1.0, 0.75))
    assert cdf_right(m, 1.0) == 0.75
    assert cdf_right(m, 1.0 - 1e-12) == 0.0


def test_cdf_right_tanh_density():
    # atom -1 at 0 plus density sech^2/2: the cdf at 1 is -1 + tanh(1)/2
    m = tanh_pair(extent=20.0, step=1.0 / 64).right
    assert cdf_right(m, 1.0) == pytest.approx(-1 + math.tanh(1.0) / 2, abs=1e-12)


def test_cdf_left_examples():
    assert cdf_left(left(), -1.0) == 0.0
    assert cdf_left(left((-0.5, 0.3)), -1.0) == 0.3
    assert cdf_left(left((-0.5, 0.3)), -0.25) == 0.0


def test_cdf_density_piece_linear_inside():
    m = right(pieces=(DensityPiece(1.0, 3.0, 0.5),))
    assert cdf_right(m, 2.0) == pytest.approx(0.5)
    assert cdf_right(m, 5.0) == pytest.approx(1.0)


def test_atoms_on_wrong_half_line_rejected():
    with pytest.raises(BoundaryError):
        right((-1.0, 1.0))
    with pytest.raises(BoundaryError):
        left((0.5, 1.0))


def test_overlapping_pieces_rejected():
    with pytest.raises(BoundaryError):
        right(pieces=(DensityPiece(0, 2, 1.0), DensityPiece(1, 3, 1.0)))


# measure <-> function


def test_chordal_function():
    F = measure_to_function(MeasurePair())
    assert isinstance(F, PiecewiseConstant)
    assert F(np.array([0.0, 3.0])) == pytest.approx([LAMBDA, LAMBDA])
    assert F(np.array([-1e-9, -3.0])) == pytest.approx([-LAMBDA, -LAMBDA])


def test_single_right_atom_function():
    F = measure_to_function(MeasurePair(right=right((1.0, 1.0))))
    assert isinstance(F, PiecewiseConstant)
    assert F(0.5) == pytest.approx(LAMBDA)
    assert F(1.0) == pytest.approx(2 * LAMBDA)
    assert F.left_limit(1.0) == pytest.approx(LAMBDA)


def test_tanh_measure_gives_tanh_function():
    F = measure_to_function(tanh_pair(extent=20.0, step=1.0 / 64))
    xs = np.arange(0, 64 * 5) / 64.0
    # exact at the pre-sampling grid, where the piece masses are exact
    assert np.max(np.abs(F(xs) - 0.5 * LAMBDA * np.tanh(xs))) < 1e-12
    assert np.max(np.abs(F(-xs[1:]) - 0.5 * LAMBDA * np.tanh(-xs[1:]))) < 1e-12


def test_function_to_measure_examples():
    chordal = PiecewiseConstant(np.array([0.0]), np.array([-LAMBDA, LAMBDA]))
    p = function_to_measure(chordal)
    assert p.left.atoms == () and p.right.atoms == ()
    step = PiecewiseConstant(np.array([0.0, 1.0]), np.array([-LAMBDA, LAMBDA, 2 * LAMBDA]))
    assert same_atoms(function_to_measure(step).right.atoms, ((1.0, 1.0),))
    zero = PiecewiseConstant(np.array([0.0]), np.array([-LAMBDA, 0.0]))
    assert same_atoms(function_to_measure(zero).right.atoms, ((0.0, -1.0),))


def test_function_to_measure_rejects_general():
    with pytest.raises(BoundaryError):
        function_to_measure(tanh_function())


atom_lists = st.lists(
    st.tuples(st.integers(0, 40).map(lambda k: k / 8), st.integers(-8, 8).map(lambda k: k / 4)),
    max_size=5,
)


@st.composite
def atomic_pairs(draw):
    r = draw(atom_lists)
    lft = [(-x, m) for x, m in draw(atom_lists)]
    return MeasurePair(RadonMeasure("L", tuple(lft)), RadonMeasure("R", tuple(r)))


@given(atomic_pairs())
@settings(max_examples=100, deadline=None)
def test_round_trip_on_atomic_pairs(p):
    q = function_to_measure(measure_to_function(p))
    for a, b in ((p.left, q.left), (p.right, q.right)):
        assert len(a.atoms) == len(b.atoms)
        for (x, m), (y, n) in zip(a.atoms, b.atoms):
            assert x == y
            assert m == pytest.approx(n, abs=1e-12)


@given(atomic_pairs(), st.floats(-6, 6))
@settings(max_examples=100, deadline=None)
def test_function_matches_cdf_formula(p, x):
    F = measure_to_function(p)
    if x >= 0:
        expect = LAMBDA * (1 + cdf_right(p.right, x))
    else:
        expect = -LAMBDA * (1 + cdf_left(p.left, x))
    assert F(x) == pytest.approx(expect, abs=1e-12)


@given(atom_lists.map(lambda a: [(x, abs(m)) for x, m in a]), st.floats(0, 5), st.floats(0, 5))
@settings(max_examples=100, deadline=None)
def test_nonnegative_measure_has_monotone_cdf(atoms, x, y):
    m = RadonMeasure("R", tuple(atoms))
    lo, hi = sorted((x, y))
    assert cdf_right(m, lo) <= cdf_right(m, hi) + 1e-15


# admissibility


def test_chordal_is_admissible():
    F = measure_to_function(MeasurePair())
    assert check_admissible(F, AdmissibilityMargin(0.1 * LAMBDA, LAMBDA)).ok


def test_violation_on_positive_side():
    F = PiecewiseConstant(np.array([0.0, 1.0]), np.array([-LAMBDA, LAMBDA, -1.5 * LAMBDA]))
    rep = check_admissible(F, AdmissibilityMargin(0.1 * LAMBDA, 2 * LAMBDA))
    assert not rep.ok
    assert rep.violations


def test_tanh_is_admissible_with_wide_margin():
    assert check_admissible(tanh_function(), AdmissibilityMargin(0.4 * LAMBDA, LAMBDA)).ok


def test_margin_invariants():
    with pytest.raises(BoundaryError):
        AdmissibilityMargin(0.0, LAMBDA)
    with pytest.raises(BoundaryError):
        AdmissibilityMargin(0.1, 0.5 * LAMBDA)


# approximation


def test_piecewise_input_unchanged():
    F = PiecewiseConstant(np.array([0.0, 1.0]), np.array([-LAMBDA, LAMBDA, 2 * LAMBDA]))
    assert approximate(F, 0.01) is F


def test_tanh_approximation_levels_and_error():
    F = tanh_function()
    eps = LAMBDA / 8
    G = approximate(F, eps)
    assert len(np.unique(G.values)) <= 8
    assert sup_distance(F, G) <= eps


def test_halving_eps_at_most_doubles_breaks():
    F = tanh_function()
    a = approximate(F, LAMBDA / 8)
    b = approximate(F, LAMBDA / 16)
    assert len(b.breaks) <= 2 * len(a.breaks) + 2


@given(st.floats(0.01, 0.5))
@settings(max_examples=20, deadline=None)
def test_approximation_contract(eps):
    F = tanh_function()
    G = approximate(F, eps)
    rng = np.random.default_rng(0)
    xs = np.concatenate([rng.uniform(-60, 60, 20000), G.breaks])
    assert sup_distance(F, G, xs) <= eps


def test_approximation_keeps_reduced_margin():
    F = tanh_function()
    margin = AdmissibilityMargin(0.4 * LAMBDA, LAMBDA)
    eps = 0.1 * LAMBDA
    G = approximate(F, eps, margin=margin)
    assert check_admissible(G, AdmissibilityMargin(margin.c - eps, margin.C)).ok


def test_approximation_refuses_to_destroy_margin():
    with pytest.raises(AdmissibilityError):
        approximate(tanh_function(), 0.5, margin=AdmissibilityMargin(0.4, LAMBDA))


# quantization


def test_quantize_atomic_unchanged():
    m = right((0.5, 1.0), (2.0, -0.5))
    assert quantize_measure(m, 3) == m


def test_quantize_half_sech_single_atom():
    m = RadonMeasure.from_cdf("R", lambda r: 0.5 * math.tanh(r), extent=20.0, step=1.0 / 64, total=0.5)
    q = quantize_measure(m, 1)
    assert len(q.atoms) == 1
    assert q.atoms[0][1] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("side", ["L", "R"])
def test_quantize_refinement_nonincreasing_gap(side):
    m = tanh_pair().right if side == "R" else tanh_pair().left
    gaps = [cdf_gap(m, quantize_measure(m, n)) for n in (1, 2, 4, 8, 16, 32)]
    assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))


@given(st.integers(1, 40))
@settings(max_examples=20, deadline=None)
def test_quantize_preserves_mass_and_bounds_function(n):
    p = tanh_pair()
    q = quantize_pair(p, n)
    for a, b in ((p.left, q.left), (p.right, q.right)):
        assert b.is_atomic
        assert len(b.atoms) <= n + len(a.atoms)
        assert b.total_mass == pytest.approx(a.total_mass, abs=1e-12)
    gap = max(cdf_gap(p.left, q.left), cdf_gap(p.right, q.right))
    d = sup_distance(measure_to_function(p), measure_to_function(q))
    assert d <= LAMBDA * gap + 1e-12


# reversal and parsing


def test_chordal_pair_is_its_own_reversal():
    r = reversed_pair(MeasurePair())
    assert r.left.atoms == () and r.right.atoms == ()


def test_reversal_is_an_involution():
    p = MeasurePair(left((-2.0, 0.5)), right((1.0, 1.0)))
    q = reversed_pair(reversed_pair(p))
    assert same_atoms(q.right.atoms, p.right.atoms)
    assert same_atoms(q.left.atoms, p.left.atoms)


def test_pair_from_dict_forms():
    p = pair_from_dict({"atomsR": [[1.0, 1.0]]})
    q = pair_from_dict({"piecewise": {"breaks": [0.0, 1.0], "values": [-LAMBDA, LAMBDA, 2 * LAMBDA]}})
    assert same_atoms(p.right.atoms, q.right.atoms)
    with pytest.raises(BoundaryError):
        pair_from_dict({"atoms": []})


def test_general_function_limits():
    F = General(lambda x: np.where(x < 1, 0.0, 1.0), -LAMBDA, LAMBDA, left=lambda x: np.where(x <= 1, 0.0, 1.0))
    assert F(1.0) == 1.0
    assert F.left_limit(1.0) == 0.0
