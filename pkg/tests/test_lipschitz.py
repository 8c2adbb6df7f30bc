"""Tests for candidate loops, stretch factors, and optimal maps."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import W, barbell_graph, nielsen_autos, petal_twist, theta_graph
from outerspace.graphs import GraphError, MarkedGraph
from outerspace.lipschitz import (
    GraphMap,
    candidate_loops,
    fm_feasible_point,
    lipschitz_distance,
    optimal_map,
    stretch_factor,
)
from outerspace.words import Word


# -- candidate loops ----------------------------------------------------------

def test_candidates_of_rose():
    g = MarkedGraph.rose(2)
    words = sorted(g.word_of_path(p).format() for p in candidate_loops(g))
    # two petals and the two figure eights
    assert words == sorted(["a", "b", "a b", "a b^-1"])


def test_candidates_of_theta():
    g = theta_graph()
    loops = candidate_loops(g)
    assert len(loops) == 3  # exactly the three embedded circles
    words = {g.word_of_path(p).cyclically_reduce()[0] for p in loops}
    assert {w.format() for w in words} <= {"a", "b", "a b", "b a"}


def test_candidates_of_barbell():
    g = barbell_graph()
    words = sorted(g.word_of_path(p).format() for p in candidate_loops(g))
    assert words == sorted(["a", "b", "a b", "a b^-1"])


def test_candidates_cross_each_edge_at_most_twice():
    for g in (MarkedGraph.rose(3), theta_graph(), barbell_graph()):
        for p in candidate_loops(g):
            for e in g.edges:
                assert sum(1 for o in p if abs(o) == e) <= 2


# -- stretch factors ---------------------------------------------------------

def test_theta_versus_rose_is_asymmetric():
    theta = theta_graph()
    rose = MarkedGraph.rose(2)
    s1, _, w1 = stretch_factor(theta, rose)
    s2, _, w2 = stretch_factor(rose, theta)
    assert s1 == Fraction(3, 2)
    assert w1.cyclically_reduce()[0] in (W("a b"), W("b a"))
    assert s2 == Fraction(4, 3)
    assert lipschitz_distance(theta, rose) == pytest.approx(math.log(1.5))
    assert lipschitz_distance(rose, theta) == pytest.approx(math.log(4 / 3))


def test_distance_vanishes_on_the_same_point():
    for g in (MarkedGraph.rose(2), theta_graph(), barbell_graph()):
        assert stretch_factor(g, g)[0] == 1
        assert lipschitz_distance(g, g) == 0.0


@pytest.mark.parametrize("k,c_text,n", [
    (2, "a", 3),
    (3, "a b", 5),
    (3, "a b a b", 2),
    (4, "a b c", 4),
])
def test_twist_distance_formula(k, c_text, n):
    # distance log(n * k * len(c) + 1) from a uniform rose to its twist
    g = MarkedGraph.rose(k)
    c = W(c_text, k)
    delta = petal_twist(k, c, k)
    h = g.apply_automorphism(delta**n)
    expected = n * k * g.loop_length(c) + 1
    assert stretch_factor(g, h)[0] == expected
    assert stretch_factor(h, g)[0] == expected
    assert lipschitz_distance(g, h) == pytest.approx(math.log(expected))


def test_twist_distance_symmetric_in_both_directions():
    g = MarkedGraph.rose(3)
    delta = petal_twist(3, W("a b", 3), 3)
    h = g.apply_automorphism(delta**5)
    assert stretch_factor(g, h)[0] == 11
    assert stretch_factor(h, g)[0] == 11


@settings(max_examples=25, deadline=None)
@given(nielsen_autos())
def test_stretch_invariant_under_simultaneous_translation(phi):
    g1, g2 = theta_graph(), MarkedGraph.rose(2)
    s = stretch_factor(g1, g2)[0]
    assert stretch_factor(g1.apply_automorphism(phi),
                          g2.apply_automorphism(phi))[0] == s


@settings(max_examples=25, deadline=None)
@given(nielsen_autos(), nielsen_autos())
def test_stretch_submultiplicative(phi, psi):
    g = MarkedGraph.rose(2)
    h = theta_graph().apply_automorphism(phi)
    k = barbell_graph().apply_automorphism(psi)
    assert stretch_factor(g, k)[0] <= stretch_factor(g, h)[0] * stretch_factor(h, k)[0]
    # round trips are never contracting
    assert stretch_factor(g, h)[0] * stretch_factor(h, g)[0] >= 1


# -- exact feasibility solver --------------------------------------------------

def test_fm_feasible_point_simple():
    rows = [
        ({0: Fraction(1)}, Fraction(1)),
        ({0: Fraction(-1)}, Fraction(0)),
        ({0: Fraction(1), 1: Fraction(-1)}, Fraction(0)),
        ({1: Fraction(1)}, Fraction(2)),
        ({1: Fraction(-1)}, Fraction(0)),
    ]
    pt = fm_feasible_point(rows, [0, 1])
    assert pt is not None
    assert 0 <= pt[0] <= 1 and 0 <= pt[1] <= 2 and pt[0] <= pt[1]


def test_fm_detects_infeasible():
    rows = [
        ({0: Fraction(1)}, Fraction(1)),
        ({0: Fraction(-1)}, Fraction(-2)),  # t >= 2 and t <= 1
    ]
    assert fm_feasible_point(rows, [0]) is None


# -- optimal maps -------------------------------------------------------------

def test_optimal_map_for_twisted_rose():
    g = MarkedGraph.rose(3)
    delta = petal_twist(3, W("a b", 3), 3)
    h = g.apply_automorphism(delta**5)
    om = optimal_map(g, h)
    assert om.sigma == 11
    assert om.map.max_slope == 11
    # the witness loop is stretched by exactly sigma
    img = om.map.image_of_path(om.witness_path)
    assert om.codomain.path_length(img) == 11 * g.path_length(om.witness_path)


def test_optimal_map_theta_to_rose():
    theta = theta_graph()
    rose = MarkedGraph.rose(2)
    om = optimal_map(theta, rose)
    assert om.sigma == Fraction(3, 2)
    assert om.map.max_slope == Fraction(3, 2)
    for e in theta.edges:
        assert om.map.slope(e) <= Fraction(3, 2)


def test_optimal_map_barbell_to_theta():
    om = optimal_map(barbell_graph(), theta_graph())
    assert om.map.max_slope == om.sigma
    om.map.check()


def test_optimal_map_identity():
    g = theta_graph()
    om = optimal_map(g, g)
    assert om.sigma == 1
    assert all(om.map.slope(e) == 1 for e in g.edges)


def test_graph_map_rejects_bad_images():
    g = MarkedGraph.rose(2)
    with pytest.raises(GraphError):
        # swapping the petals is marking-incompatible as a marked map
        GraphMap(g, g, {0: 0}, {1: (2,), 2: (1,)})
