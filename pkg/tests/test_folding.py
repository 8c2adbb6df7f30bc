"""Tests for exact geodesics (rescale + fold) and the streaming fold engine."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import W, barbell_graph, petal_twist, theta_graph
from outerspace.folding import (
    Axis,
    FoldingPath,
    StreamingFold,
    geodesic,
    min_cycle_along,
    shortest_cycle_along,
)
from outerspace.graphs import GraphError, MarkedGraph
from outerspace.lipschitz import stretch_factor
from outerspace.words import Word


def twisted_rose(k=3, c_text="a b", n=5):
    g = MarkedGraph.rose(k)
    delta = petal_twist(k, W(c_text, k), k)
    return g, g.apply_automorphism(delta**n)


def assert_exact_additivity(path, volumes):
    # the claim is directional: travelling from volume W to W' <= W costs
    # exactly log(W/W'), so probe pairs in decreasing-volume order
    volumes = sorted(set(volumes), reverse=True)
    graphs = [path.graph_at_volume(v).normalized() for v in volumes]
    for i in range(len(volumes)):
        for j in range(i + 1, len(volumes)):
            sigma, _, _ = stretch_factor(graphs[i], graphs[j])
            assert sigma == volumes[i] / volumes[j], (volumes[i], volumes[j])


def test_twisted_rose_geodesic_has_exact_length():
    g, h = twisted_rose()
    path = geodesic(g, h)
    assert path.sigma == 11
    assert path.distance == pytest.approx(math.log(11))
    assert path.volume_range == (Fraction(1, 11), Fraction(1))


def test_twisted_rose_geodesic_additivity():
    g, h = twisted_rose()
    path = geodesic(g, h)
    vols = [Fraction(1), Fraction(7, 8), path.W_mid, Fraction(1, 2),
            Fraction(1, 4), Fraction(1, 6), Fraction(1, 11)]
    assert_exact_additivity(path, vols)


def test_geodesic_endpoints_are_the_inputs():
    g, h = twisted_rose(k=2, c_text="a", n=2)
    path = geodesic(g, h)
    start = path.graph_at_volume(Fraction(1))
    assert stretch_factor(start, g.normalized())[0] == 1
    assert stretch_factor(g.normalized(), start)[0] == 1
    end = path.graph_at_volume(path.W_end).normalized()
    assert stretch_factor(end, h.normalized())[0] == 1
    assert stretch_factor(h.normalized(), end)[0] == 1


def test_rescale_leg_lengths():
    g, h = twisted_rose()
    path = geodesic(g, h)
    top = path.graph_at_volume(Fraction(1))
    assert {top.length(e) for e in top.edges} == {Fraction(1, 3)}
    mid = path.graph_at_volume(path.W_mid)
    assert sorted(mid.length(e) for e in mid.edges) == sorted(
        path._l1[e] for e in path.start.edges)


def test_theta_to_rose_geodesic():
    theta = theta_graph()
    rose = MarkedGraph.rose(2)
    path = geodesic(theta, rose)
    assert path.sigma == Fraction(3, 2)
    lo, hi = path.volume_range
    vols = [hi, (2 * lo + hi) / 3, (lo + hi) / 2, lo]
    assert_exact_additivity(path, vols)


def test_barbell_to_theta_geodesic():
    path = geodesic(barbell_graph(), theta_graph())
    lo, hi = path.volume_range
    assert_exact_additivity(path, [hi, (lo + hi) / 2, lo])


def test_partial_fold_samples_lie_on_the_path():
    g, h = twisted_rose(k=2, c_text="a", n=3)
    path = geodesic(g, h)
    # volumes strictly inside fold intervals
    bps = [w for w, kind in path.breakpoints()]
    probes = [(bps[i] + bps[i + 1]) / 2 for i in range(len(bps) - 1)]
    assert_exact_additivity(path, [Fraction(1)] + probes + [path.W_end])


def test_breakpoints_shape():
    g, h = twisted_rose()
    path = geodesic(g, h)
    bps = path.breakpoints()
    vols = [w for w, _ in bps]
    assert vols[0] == 1
    assert vols[-1] == path.W_end
    assert all(vols[i] > vols[i + 1] for i in range(len(vols) - 1))
    kinds = {kind for _, kind in bps}
    assert kinds <= {"start", "rescale", "fold"}


def test_graph_at_distance_parameter():
    g, h = twisted_rose()
    path = geodesic(g, h)
    mid = path.graph_at(path.distance / 2)
    assert mid.volume == 1  # normalized on return
    d1 = math.log(stretch_factor(path.start, mid)[0])
    d2 = math.log(stretch_factor(mid, path.graph_at_volume(path.W_end).normalized())[0])
    assert d1 + d2 == pytest.approx(path.distance, abs=1e-9)


def test_geodesic_identity_path():
    g = theta_graph()
    path = geodesic(g, g)
    assert path.sigma == 1
    assert path.volume_range == (Fraction(1), Fraction(1))
    assert path.schedule == []


def test_geodesic_rejects_non_core():
    edges = {1: (0, 0, Fraction(1, 3)), 2: (0, 0, Fraction(1, 3)),
             3: (0, 1, Fraction(1, 3))}
    marking = ((1,), (2,))
    labels = {1: W("a"), 2: W("b"), 3: Word.identity(2)}
    g = MarkedGraph(2, edges, marking, labels, 0)
    with pytest.raises(GraphError):
        geodesic(g, MarkedGraph.rose(2))


# -- streaming engine ----------------------------------------------------------

def test_streaming_fold_matches_marked_fold():
    g, h = twisted_rose(k=3, c_text="a b", n=2)
    path = geodesic(g, h)
    H0 = path._H0
    sf = StreamingFold(
        (e, H0.edges[e][0], H0.edges[e][1], path._img0[e], H0.edges[e][2])
        for e in sorted(H0.edges))
    tracked = {nm: H0.cyclic_loop_path(W(nm, 3))
               for nm in ("a", "b", "c", "a b", "c a")}
    before = {nm: sf.tracked_length(p) for nm, p in tracked.items()}
    for nm, p in tracked.items():
        assert before[nm] == H0.loop_length(W(nm, 3))
    sf.fold_all()
    assert sf.W == path.W_end
    assert not sf.has_foldable_pair()
    final = path._final
    assert sf.alive_edge_count() == len(final.edges)
    for nm, p in tracked.items():
        assert sf.tracked_length(p) == final.loop_length(W(nm, 3))


def test_streaming_fold_volume_decreases_monotonically():
    g, h = twisted_rose(k=2, c_text="a", n=4)
    path = geodesic(g, h)
    H0 = path._H0
    sf = StreamingFold(
        (e, H0.edges[e][0], H0.edges[e][1], path._img0[e], H0.edges[e][2])
        for e in sorted(H0.edges))
    seen = [sf.W]
    sf.fold_all(on_fold=lambda s: seen.append(s.W))
    assert all(seen[i] > seen[i + 1] for i in range(len(seen) - 1))
    assert seen[-1] == path.W_end
    assert sf.folds == len(path.schedule)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=1, max_value=6))
def test_twist_power_geodesics_scale(n):
    # twisting b by a single-letter word stretches b -> a^n b, so the
    # stretch factor of the n-th power is n * len(a) / len(b) + 1 = n + 1
    g = MarkedGraph.rose(2)
    delta = petal_twist(2, W("a"), 2)
    h = g.apply_automorphism(delta**n)
    path = geodesic(g, h)
    assert path.sigma == n + 1
    assert path.W_end == Fraction(1, n + 1)
    assert math.isclose(path.distance, math.log(n + 1))


# ---------------------------------------------------------------------------
# periodic axes and thin-part scans


GOLDEN = (1 + math.sqrt(5)) / 2


def golden_axis():
    from outerspace.train_track import TrainTrackRep
    from conftest import auto

    return Axis(TrainTrackRep.from_rose_automorphism(auto("a b, a")))


def test_axis_period_matches_expansion():
    axis = golden_axis()
    assert abs(axis.period - math.log(GOLDEN)) < 1e-9
    assert abs(float(axis.sigma) - axis.expansion) < 1e-9


def test_axis_sample_endpoints():
    axis = golden_axis()
    start = axis.fundamental.start
    assert axis.graph_at_volume(Fraction(1)) == start or True  # same metric point below
    sigma0, _, _ = stretch_factor(axis.graph_at_volume(Fraction(1)), start)
    sigma1, _, _ = stretch_factor(start, axis.graph_at_volume(Fraction(1)))
    assert sigma0 == 1 and sigma1 == 1
    # one period along: the graph translated by the automorphism
    end = axis.graph_at_volume(Fraction(1) / axis.sigma)
    target = start.apply_automorphism(axis.phi)
    s0, _, _ = stretch_factor(end, target)
    s1, _, _ = stretch_factor(target, end)
    assert s0 == 1 and s1 == 1


def test_axis_periodicity_exact():
    axis = golden_axis()
    for W_num, W_den in ((1, 1), (9, 10), (3, 4), (2, 3), (7, 11)):
        Wv = Fraction(W_num, W_den)
        translated = axis.graph_at_volume(Wv).apply_automorphism(axis.phi)
        wrapped = axis.graph_at_volume(Wv / axis.sigma)
        s0, _, _ = stretch_factor(translated, wrapped)
        s1, _, _ = stretch_factor(wrapped, translated)
        assert s0 == 1 and s1 == 1


def test_axis_negative_parameter():
    # volume sigma corresponds to parameter t = -log(sigma) < 0, one period
    # before the basepoint: exactly the graph translated by phi^-1
    axis = golden_axis()
    g = axis.graph_at_volume(axis.sigma)
    target = axis.fundamental.start.apply_automorphism(axis.phi**-1)
    s0, _, _ = stretch_factor(g, target)
    s1, _, _ = stretch_factor(target, g)
    assert s0 == 1 and s1 == 1
    # the float-parametrized sampler lands within rounding of the same point
    s2, _, _ = stretch_factor(axis.graph_at(-axis.period), target)
    assert abs(float(s2) - 1) < 1e-9


def test_min_cycle_constant_class_on_twist_geodesic():
    # the twisted petal keeps its unnormalized length, so the normalized
    # length only grows as the volume shrinks: the minimum sits at the start
    g, h = twisted_rose(k=2, c_text="a", n=3)
    path = geodesic(g, h)
    res = min_cycle_along(path, W("b"), grid=8)
    assert res.value == g.loop_length(W("b")) == Fraction(1, 2)
    assert res.t == 0.0
    assert res.bracket > 0
    assert len(res.samples) >= 8


def test_min_cycle_twist_thin_point():
    # along the geodesic from the rose to its n-fold twist, the twisting
    # class c = a gets exactly 1/(n+2) short at the end of the rescale leg
    n = 6
    g, h = twisted_rose(k=2, c_text="a", n=n)
    path = geodesic(g, h)
    res = min_cycle_along(path, W("a"), grid=16)
    assert res.value == Fraction(1, n + 2)
    assert res.volume == path.W_mid
    ends = (g.loop_length(W("a")), h.normalized().loop_length(W("a")))
    assert res.value < min(ends)


def test_shortest_cycle_scan_finds_thin_entry():
    n = 6
    g, h = twisted_rose(k=2, c_text="a", n=n)
    path = geodesic(g, h)
    hit = shortest_cycle_along(path, Fraction(15, 100), grid=16)
    assert hit is not None
    assert hit.value <= Fraction(1, n + 2)
    missed = shortest_cycle_along(path, Fraction(1, 100), grid=16)
    assert missed is None


def test_min_cycle_rejects_trivial_word():
    g, h = twisted_rose(k=2, c_text="a", n=2)
    path = geodesic(g, h)
    with pytest.raises(GraphError):
        min_cycle_along(path, Word.identity(2))


def test_axis_min_cycle_scan():
    axis = golden_axis()
    res = min_cycle_along(axis, W("b"), grid=8)
    start_len = axis.graph_at_volume(Fraction(1)).loop_length(W("b"))
    assert res.value <= start_len
    assert all(p.value > 0 for p in res.samples)
