"""Core complexes of tree pairs: heaviness, squares, volumes, twists."""

import math
from fractions import Fraction
from functools import lru_cache
from itertools import product

import pytest
from hypothesis import HealthCheck, assume, given, settings

from conftest import W, auto, nielsen_autos, theta_graph
from outerspace.core_complex import (
    CoreBudgetError,
    Direction,
    QuadrantSearch,
    TreeContext,
    _side_and_depth,
    axis_edges,
    classify_end,
    core,
    geometric_twist,
    intersection_number,
)
from outerspace.graphs import MarkedGraph
from outerspace.lipschitz import lipschitz_distance
from outerspace.words import Word

ROSE = MarkedGraph.rose(2)
TWIST = auto("a, a b")  # twists the second petal: b -> a b


def twisted(n: int) -> MarkedGraph:
    return ROSE.apply_automorphism(TWIST**n)


@lru_cache(maxsize=None)
def twist_core(n: int, forward: bool = True):
    if forward:
        return core(ROSE, twisted(n))
    return core(twisted(n), ROSE)


def base_directions(ctx: TreeContext) -> list[Direction]:
    out = []
    for e in sorted(ctx.g.edges):
        d = Direction(ctx.g.tree_path(ctx.g.init_of(e)), e)
        out.extend([d, d.reversed()])
    return out


# ---------------------------------------------------------------------------
# ends oracle: eventually periodic ends u v^infinity, sides judged from the
# far tail of the ray only (no reliance on the search's locking thresholds)


def reduced_tuples(rank: int, max_len: int, cyclic: bool = False):
    letters = [i for k in range(1, rank + 1) for i in (k, -k)]
    out = [()]
    frontier = [()]
    for _ in range(max_len):
        step = []
        for u in frontier:
            for a in letters:
                if u and a == -u[-1]:
                    continue
                step.append(u + (a,))
        out.extend(step)
        frontier = step
    if cyclic:
        out = [v for v in out if v and v[0] != -v[-1]]
    return out


def periodic_ends(rank: int, max_u: int, max_v: int):
    ends = []
    for u in reduced_tuples(rank, max_u):
        for v in reduced_tuples(rank, max_v, cyclic=True):
            if u and v[0] == -u[-1]:
                continue
            ends.append((u, v))
    return ends


def periodic_end_side(ctx: TreeContext, u, v, d: Direction):
    """True/False for inside/outside H(d), or None if the tail is unclear."""
    sides = []
    depths = []
    for j in range(16, 22):
        P = ctx.path_of_word(Word(ctx.g.rank, u + v * j))
        inside, depth = _side_and_depth(ctx, P, d)
        sides.append(inside)
        depths.append(depth)
    if len(set(sides)) != 1:
        return None
    if min(depths) <= 2 * ctx.ibbt or depths[-1] <= depths[0]:
        return None
    return sides[0]


def oracle_heavy(search: QuadrantSearch, d1, d2, ends) -> bool:
    for u, v in ends:
        if periodic_end_side(search.t1, u, v, d1) is not True:
            continue
        if periodic_end_side(search.t2, u, v, d2) is True:
            return True
    return False


# ---------------------------------------------------------------------------
# end classification and heaviness


def test_classify_end_rose_basics():
    ctx = TreeContext(ROSE)
    d = Direction((), 1)
    assert classify_end(ctx, W("aaaaaa"), d) == "in"
    assert classify_end(ctx, W("AAAAAA"), d) == "out"
    assert classify_end(ctx, W("a"), d) == "undecided"


def test_heavy_directions_in_one_tree():
    search = QuadrantSearch(ROSE, ROSE)
    d = Direction((), 1)
    assert search.heavy(d, d)
    assert search.heavy(d.reversed(), d.reversed())
    assert not search.heavy(d, d.reversed())
    assert not search.heavy(d.reversed(), d)


def test_heavy_matches_periodic_end_oracle():
    ends = periodic_ends(2, 2, 3)
    for g2 in (ROSE, twisted(1)):
        search = QuadrantSearch(ROSE, g2)
        for d1, d2 in product(base_directions(search.t1),
                              base_directions(search.t2)):
            assert search.heavy(d1, d2) == oracle_heavy(search, d1, d2, ends)


def test_heavy_search_budget_guard():
    search = QuadrantSearch(ROSE, twisted(2), budget=10)
    with pytest.raises(CoreBudgetError):
        search.heavy(Direction((), 1), Direction((), 1))


# ---------------------------------------------------------------------------
# cores and intersection numbers


def test_core_of_identical_pair_has_no_squares():
    cx = core(ROSE, ROSE)
    assert not cx.squares
    assert cx.volume == 0
    assert cx.is_connected()


def test_core_ignores_inner_markings():
    conjugated = ROSE.apply_automorphism(auto("a, a b a^-1"))
    assert intersection_number(ROSE, conjugated) == 0


def test_core_of_collapse_compatible_pair_is_flat():
    theta = theta_graph()
    rose = theta.collapsed(2).normalized()
    assert intersection_number(theta, rose) == 0
    assert intersection_number(rose, theta) == 0


def test_intersection_number_symmetric_and_growing_on_twists():
    # A single twist keeps the trees refinement-compatible (no squares);
    # each further power adds one band square of area (1/2) * (1/2).
    volumes = []
    for n in (1, 2, 3):
        forward = twist_core(n).volume
        backward = twist_core(n, forward=False).volume
        assert forward == backward
        volumes.append(forward)
    assert volumes == [0, Fraction(1, 4), Fraction(1, 2)]


def test_core_flood_fill_matches_direct_enumeration():
    cx = twist_core(2)
    search = cx.search
    direct = set()
    for e1, e2 in product((1, 2), (1, 2)):
        for addr2 in reduced_tuples(2, 3):
            sq = cx.square_key(((), e1), (addr2, e2))
            if sq.addr2 != addr2:
                continue  # not the canonical representative of its orbit
            if search.square_heavy(*sq.lifts(search)):
                direct.add(sq)
    found = {sq for sq in cx.squares if len(sq.addr2) <= 3}
    assert found == direct
    assert cx.is_connected()


def test_slices_are_connected_subtrees():
    cx = twist_core(3)
    assert cx.squares
    t2 = cx.search.t2
    for e1 in (1, 2):
        track = cx.slice_at(1, ((), e1))
        if not track.slice_edges:
            continue
        verts = {}

        def find(x):
            while verts.get(x, x) != x:
                x = verts[x]
            return x

        for addr, e in track.slice_edges:
            far = t2.act(addr, (e,))
            for v in (addr, far):
                verts.setdefault(v, v)
            verts[find(addr)] = find(far)
        roots = {find(v) for v in verts}
        assert len(roots) == 1


@settings(max_examples=6, deadline=None,
          suppress_health_check=[HealthCheck.too_slow])
@given(nielsen_autos(max_moves=3))
def test_intersection_number_symmetric_on_random_pairs(phi):
    assume(max(len(im) for im in phi.images) <= 2)
    g2 = ROSE.apply_automorphism(phi)
    assert intersection_number(ROSE, g2) == intersection_number(g2, ROSE)


# ---------------------------------------------------------------------------
# tracks and geometric twists


def test_geometric_twist_zero_on_identical_pair():
    assert geometric_twist(ROSE, ROSE, W("a")).value == 0


def test_geometric_twist_grows_linearly_with_stable_tracks():
    values = []
    for n in (1, 2, 3):
        report = geometric_twist(ROSE, twisted(n), W("a"), cx=twist_core(n))
        values.append(report.value)
        counts = report.counts
        rows = {i for i, _ in counts}
        cols = {j for _, j in counts}
        for i in rows:
            row = [counts[i, j] for j in cols]
            assert max(row) - min(row) <= 1
        for j in cols:
            col = [counts[i, j] for i in rows]
            assert max(col) - min(col) <= 1
        if counts:
            assert max(counts.values()) - min(counts.values()) <= 2
    # the band of squares widens by one with every extra twist
    assert values == [0, 1, 2]


def test_twist_bounds_lipschitz_distance_from_below():
    # distance >= log(shortest loop of the target times the twist)
    for n in (2, 3):
        g2 = twisted(n)
        tau = geometric_twist(ROSE, g2, W("a"), cx=twist_core(n)).value
        systole = min(g2.loop_length(w)
                      for w in (W("a"), W("b"), W("a b"), W("a b^-1")))
        if systole * tau > 1:
            assert lipschitz_distance(ROSE, g2) >= math.log(systole * tau)


def test_axis_edges_are_periodic():
    ctx = TreeContext(ROSE)
    one = axis_edges(ctx, W("a b"), range(0, 1))
    two = axis_edges(ctx, W("a b"), range(0, 2))
    assert len(two) == 2 * len(one)
    assert two[: len(one)] == one
