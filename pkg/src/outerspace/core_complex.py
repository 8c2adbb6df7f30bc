"""Exact core complexes for pairs of marked graphs.

Both graphs are viewed as trees: their universal covers, on which the free
group acts via the markings.  Nothing infinite is materialized; a tree
vertex is addressed by the reduced edge path from a fixed base lift, and a
group element acts by prepending its marking path.

A *direction* is an oriented edge lift; it selects the half-tree beyond the
edge midpoint on the terminal side.  A *quadrant* (one direction in each
tree) is *heavy* when some end of the group lies in both half-trees.  The
core is assembled from *squares*: edge-lift pairs all four of whose
quadrants are heavy.  The quotient square set is finite; its volume (sum of
length products) is the intersection number, and slices over edge midpoints
give tracks and the geometric relative twist.

Heaviness is decided exactly by a pruned breadth-first search over reduced
words.  Writing C for a bounded-backtracking constant of the marking and m
for the midpoint, a prefix image deeper than C inside the half-tree *away*
from the base lift certifies that every extension's end stays there, while
an image in the *near* half-tree further than C from the segment
[base, m] certifies the end stays near (the near portion of a ray heading
for the far half is exactly that segment, and prefix images track the ray
within C).  Every end eventually triggers one lock per tree, so the search
terminates without guessing; a node budget guards against implementation
errors and raises rather than answering wrongly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Iterable, Iterator

from .graphs import EdgePath, GraphError, MarkedGraph, reverse_path, tighten_path
from .lipschitz import stretch_factor
from .words import Word


class CoreBudgetError(RuntimeError):
    """The quadrant search exceeded its node budget; no answer is implied."""


# ---------------------------------------------------------------------------
# lazy universal covers


def _join(a: EdgePath, b: EdgePath) -> EdgePath:
    """Concatenate two tight paths; cancellation only happens at the seam."""
    i = len(a)
    j = 0
    n = len(b)
    while i > 0 and j < n and a[i - 1] == -b[j]:
        i -= 1
        j += 1
    return a[:i] + b[j:]


class TreeContext:
    """The universal cover of a marked graph, addressed lazily.

    Vertices are reduced edge paths from the base lift; the group acts by
    prepending marking paths.  An (unoriented) edge lift is canonically
    written as (address of its initial vertex, positive edge id).
    """

    def __init__(self, g: MarkedGraph):
        self.g = g
        self._word_paths: dict[Word, EdgePath] = {}
        # Bounded backtracking constant of the marking map from the rose:
        # Lipschitz constant times source volume, minimized over source
        # metrics (petal i weighted by its image length), which telescopes
        # to the sum of the marking-image lengths; plus an edge of midpoint
        # slack.
        max_edge = max(g.length(e) for e in g.edges)
        self.bbt: Fraction = sum(
            (g.path_length(m) for m in g.marking), Fraction(0)) + max_edge
        # Exact integer mirror of the metric, for the classification loops:
        # scale by twice the lcm of the length denominators so edge lengths,
        # half-edges and the constant above are all integers.
        denom_lcm = 1
        for e in g.edges:
            denom_lcm = lcm(denom_lcm, g.length(e).denominator)
        self.scale = 2 * denom_lcm
        self.ilen: dict[int, int] = {
            e: int(g.length(e) * self.scale) for e in g.edges}
        self.ibbt = int(self.bbt * self.scale)

    # -- addresses ---------------------------------------------------------
    def path_of_word(self, w: Word) -> EdgePath:
        cached = self._word_paths.get(w)
        if cached is None:
            cached = tighten_path(self.g.path_of_word(w))
            self._word_paths[w] = cached
        return cached

    def act(self, gamma: EdgePath, addr: EdgePath) -> EdgePath:
        return _join(gamma, addr)

    def geodesic(self, a: EdgePath, b: EdgePath) -> EdgePath:
        return _join(reverse_path(a), b)

    def metric_length(self, path: EdgePath) -> Fraction:
        return self.g.path_length(path)

    def dist(self, a: EdgePath, b: EdgePath) -> Fraction:
        return self.metric_length(self.geodesic(a, b))

    def vertex_of(self, addr: EdgePath) -> int:
        v = self.g.base
        for o in addr:
            v = self.g.term_of(o)
        return v

    # -- edge lifts ----------------------------------------------------------
    def canon_edge(self, addr: EdgePath, o: int) -> tuple[EdgePath, int]:
        """Canonical (init address, positive edge) form of an edge lift."""
        if o > 0:
            return addr, o
        return tighten_path(addr + (o,)), -o

    def star_lifts(self, addr: EdgePath) -> list[tuple[EdgePath, int]]:
        """Oriented edge lifts leaving the vertex at ``addr``."""
        return [(addr, o) for o in sorted(self.g.star(self.vertex_of(addr)))]


@dataclass(frozen=True)
class Direction:
    """Half-tree beyond the midpoint of an edge lift, on the terminal side."""

    addr: EdgePath  # address of the oriented lift's initial vertex
    oedge: int

    def reversed(self) -> "Direction":
        return Direction(tighten_path(self.addr + (self.oedge,)), -self.oedge)

    def edge_key(self, ctx: TreeContext) -> tuple[EdgePath, int]:
        return ctx.canon_edge(self.addr, self.oedge)


def _side_and_depth(ctx: TreeContext, P: EdgePath, d: Direction
                    ) -> tuple[bool, int]:
    """(P lies in the half-tree of d, distance of P to the midpoint).

    The distance is an exact integer in units of ``1 / ctx.scale``.
    """
    ilen = ctx.ilen
    edge_units = ilen[abs(d.oedge)]
    from_init = ctx.geodesic(d.addr, P)
    rest = sum(ilen[abs(o)] for o in from_init)
    if from_init[:1] == (d.oedge,):
        inside = True
        rest -= edge_units
    else:
        inside = False
    return inside, edge_units // 2 + rest


class _DirectionGeometry:
    """Sound locking rules for classifying ends against one direction.

    Prefix images track the ray to the end within the bounded-backtracking
    constant C.  A ray to a far-half end crosses the midpoint m once and its
    near-half portion is exactly the segment [base, m]; so a prefix image on
    the far side deeper than C pins the end to the far half, while one on
    the near side further than C from [base, m] pins it to the near half.
    Every end eventually triggers exactly one of the two locks.
    """

    def __init__(self, ctx: TreeContext, dpos: Direction):
        self.ctx = ctx
        self.dpos = dpos
        self.c = ctx.ibbt
        base_inside, _ = _side_and_depth(ctx, (), dpos)
        self.base_inside = base_inside
        if base_inside:
            segment = tighten_path(dpos.addr + (dpos.oedge,))
        else:
            segment = dpos.addr
        self.segment = segment
        self.seg_lengths = tuple(ctx.ilen[abs(o)] for o in segment)

    def verdict(self, P: EdgePath) -> int:
        """+1: ends beyond P lie in H(dpos); -1: in the complement; 0: open."""
        inside, depth = _side_and_depth(self.ctx, P, self.dpos)
        if inside != self.base_inside:
            if depth > self.c:
                return 1 if not self.base_inside else -1
            return 0
        if self._off_segment(P) > self.c:
            return 1 if self.base_inside else -1
        return 0

    def _off_segment(self, P: EdgePath) -> int:
        """Distance from a near-half vertex to the segment [base, midpoint]."""
        seg = self.segment
        ilen = self.ctx.ilen
        common = 0
        for i, o in enumerate(P):
            if i < len(seg) and o == seg[i]:
                common += self.seg_lengths[i]
            else:
                break
        return sum(ilen[abs(o)] for o in P) - common


def classify_end(ctx: TreeContext, prefix: Word, d: Direction) -> str:
    """Classify the ends extending a reduced prefix: 'in' H(d), 'out', or
    'undecided' at this depth."""
    pos_addr, e = ctx.canon_edge(d.addr, d.oedge)
    geo = _DirectionGeometry(ctx, Direction(pos_addr, e))
    v = geo.verdict(ctx.path_of_word(prefix))
    if d.oedge < 0:
        v = -v
    return {1: "in", -1: "out", 0: "undecided"}[v]


# ---------------------------------------------------------------------------
# quadrant heaviness


def _antichain_meets(stubs: list, others: list) -> bool:
    """Do two antichains of reduced words contain a prefix-comparable pair?

    Each list is sorted; extensions of a word sort contiguously after it, so
    one bisect per element decides whether the other antichain refines it.
    """
    from bisect import bisect_left

    for src, dst in ((stubs, others), (others, stubs)):
        for w in src:
            i = bisect_left(dst, w)
            if i < len(dst) and dst[i][:len(w)] == w:
                return True
    return False


class QuadrantSearch:
    """Shared machinery for one tree pair: heaviness, squares, twists."""

    def __init__(self, g1: MarkedGraph, g2: MarkedGraph, *,
                 budget: int = 10**6):
        if g1.rank != g2.rank:
            raise GraphError("rank mismatch")
        self.t1 = TreeContext(g1)
        self.t2 = TreeContext(g2)
        self.rank = g1.rank
        self.budget = budget
        self.nodes = 0
        self._heavy_memo: dict[tuple, bool] = {}
        self._ends_memo: tuple[dict, dict] = ({}, {})
        self._letters = tuple(
            i for k in range(1, self.rank + 1) for i in (k, -k))
        self._letter_paths = (
            {a: self.t1.path_of_word(self._letter_word(a))
             for a in self._letters},
            {a: self.t2.path_of_word(self._letter_word(a))
             for a in self._letters})

    def _letter_word(self, a: int) -> Word:
        return Word(self.rank, (a,))

    def _ctx(self, which: int) -> TreeContext:
        return self.t1 if which == 1 else self.t2

    # -- canonicalization --------------------------------------------------
    def _canon_quadrant(self, d1: Direction, d2: Direction) -> tuple:
        """Translate the quadrant by the diagonal action so that d1's edge
        becomes the canonical lift of its underlying edge."""
        addr1, e1 = d1.edge_key(self.t1)
        anchor = self.t1.g.tree_path(self.t1.g.init_of(e1))
        gamma_path = _join(anchor, reverse_path(addr1))
        gamma = self.t1.g.word_of_path(gamma_path)
        addr2 = self.t2.act(self.t2.path_of_word(gamma), d2.addr)
        return (e1, d1.oedge > 0, addr2, d2.oedge)

    # -- per-tree end partitions --------------------------------------------
    def _end_stubs(self, which: int, d: Direction) -> list:
        """Sorted antichain of reduced words whose cylinders exhaust H(d).

        The boundary of the group splits exactly into the cylinders of the
        'in' stubs and of the 'out' stubs: a stub is minimal with a sound
        verdict, and every end eventually triggers one.
        """
        ctx = self._ctx(which)
        pos_addr, e = ctx.canon_edge(d.addr, d.oedge)
        memo = self._ends_memo[which - 1]
        entry = memo.get((pos_addr, e))
        if entry is None:
            entry = self._classify_tree(which, Direction(pos_addr, e))
            memo[(pos_addr, e)] = entry
        ins, outs = entry
        return ins if d.oedge > 0 else outs

    def _classify_tree(self, which: int, dpos: Direction) -> tuple[list, list]:
        geo = _DirectionGeometry(self._ctx(which), dpos)
        paths = self._letter_paths[which - 1]
        ins: list = []
        outs: list = []
        spent = 0
        queue: list[tuple[tuple, EdgePath]] = [((), ())]
        while queue:
            nxt: list[tuple[tuple, EdgePath]] = []
            for w, P in queue:
                spent += 1
                self.nodes += 1
                if spent > self.budget:
                    raise CoreBudgetError(
                        f"end classification exceeded {self.budget} nodes")
                v = geo.verdict(P)
                if v > 0:
                    ins.append(w)
                    continue
                if v < 0:
                    outs.append(w)
                    continue
                last = w[-1] if w else 0
                for a in self._letters:
                    if a != -last:
                        nxt.append((w + (a,), _join(P, paths[a])))
            queue = nxt
        ins.sort()
        outs.sort()
        return ins, outs

    def heavy(self, d1: Direction, d2: Direction) -> bool:
        """True iff some end of the group lies in both half-trees."""
        key = self._canon_quadrant(d1, d2)
        cached = self._heavy_memo.get(key)
        if cached is not None:
            return cached
        e1, positive, addr2, o2 = key
        c1 = Direction(self.t1.g.tree_path(self.t1.g.init_of(e1)), e1)
        if not positive:
            c1 = c1.reversed()
        result = _antichain_meets(self._end_stubs(1, c1),
                                  self._end_stubs(2, Direction(addr2, o2)))
        self._heavy_memo[key] = result
        return result

    def square_heavy(self, edge1: tuple[EdgePath, int],
                     edge2: tuple[EdgePath, int]) -> bool:
        """All four quadrants at the two midpoints are heavy."""
        d1 = Direction(*edge1)
        d2 = Direction(*edge2)
        for a in (d1, d1.reversed()):
            for b in (d2, d2.reversed()):
                if not self.heavy(a, b):
                    return False
        return True


# ---------------------------------------------------------------------------
# axes in covers


def axis_edges(ctx: TreeContext, a: Word, periods: range
               ) -> list[tuple[EdgePath, int]]:
    """Canonical edge lifts along the axis of ``a``, for the given periods.

    The axis is the lift of the cyclically tight loop of ``a``; period 0
    starts at the end of the connecting path from the base lift.
    """
    if not a:
        raise GraphError("trivial word has no axis")
    p = ctx.path_of_word(a)
    conn: list[int] = []
    body = list(p)
    while len(body) >= 2 and body[0] == -body[-1]:
        conn.append(body[0])
        body = body[1:-1]
    if not body:
        raise GraphError("word acts elliptically; no axis")
    out = []
    for j in periods:
        base = tighten_path(ctx.path_of_word(a**j) + tuple(conn))
        for i in range(len(body)):
            addr = tighten_path(base + tuple(body[:i]))
            out.append(ctx.canon_edge(addr, body[i]))
    return out


# ---------------------------------------------------------------------------
# the core complex


@dataclass(frozen=True)
class Square:
    """Orbit representative: canonical edge lift of g1 paired with an edge
    lift of g2 (the g1 side is pinned to its canonical lift)."""

    edge1: int
    addr2: EdgePath
    edge2: int

    def lifts(self, search: QuadrantSearch
              ) -> tuple[tuple[EdgePath, int], tuple[EdgePath, int]]:
        anchor = search.t1.g.tree_path(search.t1.g.init_of(self.edge1))
        return (anchor, self.edge1), (self.addr2, self.edge2)


@dataclass(frozen=True)
class Track:
    """A slice of the core over one edge midpoint: {p} x C_p (or its mirror).

    ``side`` 1 means the midpoint lives in the first tree and the slice in
    the second; side 2 the other way around.
    """

    side: int
    edge: tuple[EdgePath, int]
    slice_edges: tuple[tuple[EdgePath, int], ...]


class CoreComplex:
    def __init__(self, search: QuadrantSearch, squares: frozenset[Square],
                 complete: bool):
        self.search = search
        self.squares = squares
        self.complete = complete

    @property
    def volume(self) -> Fraction:
        g1, g2 = self.search.t1.g, self.search.t2.g
        return sum((g1.length(s.edge1) * g2.length(s.edge2)
                    for s in self.squares), Fraction(0))

    def square_key(self, edge1: tuple[EdgePath, int],
                   edge2: tuple[EdgePath, int]) -> Square:
        """Canonical orbit representative of an edge-lift pair."""
        t1, t2 = self.search.t1, self.search.t2
        addr1, e1 = edge1
        anchor = t1.g.tree_path(t1.g.init_of(e1))
        gamma = t1.g.word_of_path(tighten_path(anchor + reverse_path(addr1)))
        addr2 = t2.act(t2.path_of_word(gamma), edge2[0])
        return Square(e1, addr2, edge2[1])

    def contains(self, edge1: tuple[EdgePath, int],
                 edge2: tuple[EdgePath, int]) -> bool:
        return self.square_key(edge1, edge2) in self.squares

    def is_connected(self) -> bool:
        """Connectivity of the square complex through shared sides."""
        if not self.squares:
            return True
        squares = set(self.squares)
        seed = next(iter(sorted(
            squares, key=lambda s: (s.edge1, s.edge2, s.addr2))))
        seen = {seed}
        frontier = [seed]
        while frontier:
            sq = frontier.pop()
            for nb in _adjacent_candidates(self.search, sq):
                key = self.square_key(*nb)
                if key in squares and key not in seen:
                    seen.add(key)
                    frontier.append(key)
        return len(seen) == len(squares)

    def slice_at(self, side: int, edge: tuple[EdgePath, int]) -> Track:
        """The track over the midpoint of an edge lift on the given side."""
        t1, t2 = self.search.t1, self.search.t2
        out = []
        if side == 1:
            addr1, e1 = edge
            anchor = t1.g.tree_path(t1.g.init_of(e1))
            # the deck move sending the canonical lift back onto `edge`
            gamma = t1.g.word_of_path(
                tighten_path(addr1 + reverse_path(anchor)))
            shift = t2.path_of_word(gamma)
            for s in self.squares:
                if s.edge1 == e1:
                    out.append((t2.act(shift, s.addr2), s.edge2))
        else:
            addr2, e2 = edge
            for s in self.squares:
                if s.edge2 != e2:
                    continue
                # solve act(path2(g), s.addr2) == addr2 for the deck move g
                gamma = t2.g.word_of_path(
                    tighten_path(addr2 + reverse_path(s.addr2)))
                anchor = t1.g.tree_path(t1.g.init_of(s.edge1))
                out.append((t1.act(t1.path_of_word(gamma), anchor), s.edge1))
        return Track(side, edge, tuple(sorted(out)))

    def __repr__(self):
        return (f"CoreComplex({len(self.squares)} squares, "
                f"volume={self.volume}, complete={self.complete})")


def _adjacent_candidates(search: QuadrantSearch, sq: Square
                         ) -> Iterator[tuple[tuple[EdgePath, int], tuple[EdgePath, int]]]:
    (a1, e1), (a2, e2) = sq.lifts(search)
    t1, t2 = search.t1, search.t2
    end1 = tighten_path(a1 + (e1,))
    end2 = tighten_path(a2 + (e2,))
    for v in (a1, end1):
        for lift in t1.star_lifts(v):
            cand = t1.canon_edge(*lift)
            if cand != (a1, e1):
                yield cand, (a2, e2)
    for v in (a2, end2):
        for lift in t2.star_lifts(v):
            cand = t2.canon_edge(*lift)
            if cand != (a2, e2):
                yield (a1, e1), cand


def _seed_words(g1: MarkedGraph, g2: MarkedGraph) -> list[Word]:
    rank = g1.rank
    gens = [Word.generator(rank, i + 1) for i in range(rank)]
    words = list(gens)
    for i in range(rank):
        for j in range(rank):
            if i != j:
                words.append(gens[i] * gens[j])
                words.append(gens[i] * ~gens[j])
    for a, b in ((g1, g2), (g2, g1)):
        _, _, witness = stretch_factor(a, b)
        if witness:
            words.append(witness)
    seen = set()
    out = []
    for w in words:
        if w and w not in seen:
            seen.add(w)
            out.append(w)
    return out


def core(g1: MarkedGraph, g2: MarkedGraph, *, budget: int = 10**6,
         _search: QuadrantSearch | None = None) -> CoreComplex:
    """The square part of the core of the two universal covers.

    Candidate squares are seeded from products of axes of short words and of
    the stretch witnesses, then grown through side-sharing neighbors until
    the frontier is exhausted; the complex is reported together with whether
    the search stayed within budget.
    """
    search = _search if _search is not None else QuadrantSearch(
        g1, g2, budget=budget)
    helper = CoreComplex(search, frozenset(), True)
    seeds: set[Square] = set()
    for w in _seed_words(g1, g2):
        lifts1 = axis_edges(search.t1, w, range(0, 2))
        lifts2 = axis_edges(search.t2, w, range(0, 2))
        for l1, l2 in product(lifts1, lifts2):
            seeds.add(helper.square_key(l1, l2))
    status: dict[Square, bool] = {}
    frontier: list[Square] = sorted(
        seeds, key=lambda s: (s.edge1, s.edge2, s.addr2))
    found: set[Square] = set()
    while frontier:
        sq = frontier.pop()
        if sq in status:
            continue
        status[sq] = search.square_heavy(*sq.lifts(search))
        if not status[sq]:
            continue
        found.add(sq)
        for nb in _adjacent_candidates(search, sq):
            key = helper.square_key(*nb)
            if key not in status:
                frontier.append(key)
    return CoreComplex(search, frozenset(found), True)


def intersection_number(g1: MarkedGraph, g2: MarkedGraph, *,
                        budget: int = 10**6) -> Fraction:
    return core(g1, g2, budget=budget).volume


# ---------------------------------------------------------------------------
# tracks and the geometric relative twist


def tracks_meeting_axis(cx: CoreComplex, side: int, a: Word,
                        periods: range = range(0, 1)) -> list[Track]:
    """Tracks whose midpoint lies on the axis of ``a`` (own tree) and whose
    slice meets the axis of ``a`` (other tree), over the given periods."""
    search = cx.search
    own = search.t1 if side == 1 else search.t2
    other = search.t2 if side == 1 else search.t1
    own_edges = axis_edges(own, a, periods)
    other_axis = set(axis_edges(other, a, range(-3, 4)))
    out = []
    for edge in own_edges:
        track = cx.slice_at(side, edge)
        if track.slice_edges and set(track.slice_edges) & other_axis:
            out.append(track)
    return out


def _translate_edge(ctx: TreeContext, w: Word, edge: tuple[EdgePath, int]
                    ) -> tuple[EdgePath, int]:
    return ctx.canon_edge(ctx.act(ctx.path_of_word(w), edge[0]), edge[1])


def track_intersection_count(cx: CoreComplex, a: Word, track1: Track,
                             track2: Track, window: int = 64) -> int:
    """|{j : a^j . track1 meets track2}| for a track pair (sides 1 and 2)."""
    t1 = cx.search.t1
    count = 0
    for j in range(-window, window + 1):
        moved = _translate_edge(t1, a**j, track1.edge)
        if cx.contains(moved, track2.edge):
            count += 1
    return count


@dataclass(frozen=True)
class TwistReport:
    value: int
    counts: dict
    tracks1: list
    tracks2: list


def geometric_twist(g1: MarkedGraph, g2: MarkedGraph, a: Word, *,
                    budget: int = 10**6, cx: CoreComplex | None = None
                    ) -> TwistReport:
    """Definition of the relative twist: the maximal number of <a>-translates
    of a first-tree track meeting a fixed second-tree track."""
    if not a:
        raise GraphError("twisting word must be nontrivial")
    if cx is None:
        cx = core(g1, g2, budget=budget)
    tr1 = tracks_meeting_axis(cx, 1, a)
    tr2 = tracks_meeting_axis(cx, 2, a)
    counts = {}
    best = 0
    for i, u in enumerate(tr1):
        for j, v in enumerate(tr2):
            c = track_intersection_count(cx, a, u, v)
            counts[(i, j)] = c
            best = max(best, c)
    return TwistReport(best, counts, tr1, tr2)
