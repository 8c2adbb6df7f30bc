"""Geodesics between marked graphs: rescaling followed by folding.

A geodesic from G to H (both normalized to volume 1) is built from an
optimal map f: G -> H' realizing the stretch factor sigma:

* a *rescale leg* shrinks each edge from its length to its pullback length
  image_length(e)/sigma, never below it;
* a *fold leg* subdivides so that f crosses one edge of H' per edge and
  then folds pairs of edges with equal images, one fold at a time.

Both legs are parametrized by the pre-normalization volume W, which
decreases from 1 to 1/sigma; the normalized graph at parameter
s = log(1/W) is the point at distance s from the start.  Along the whole
path the stretch factor between the normalized graphs at volumes W >= W'
is exactly W/W', so distances add up exactly in rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .graphs import GraphError, MarkedGraph
from .lipschitz import OptimalMap, candidate_loops, optimal_map, stretch_factor
from .words import Word


def _find_foldable(g: MarkedGraph, img: dict[int, int]) -> tuple[int, int] | None:
    """Deterministically pick two edges at a vertex with the same image."""
    for v in sorted(g.vertices):
        star = sorted(g.star(v), key=lambda o: (img[o], abs(o), -o))
        for i in range(len(star) - 1):
            if img[star[i]] == img[star[i + 1]]:
                return star[i], star[i + 1]
    return None


def _partial_fold(g: MarkedGraph, o1: int, o2: int, u: Fraction) -> MarkedGraph:
    """Fold the initial segments of length u of two edges at a shared vertex."""

    def initial_piece(gr: MarkedGraph, o: int) -> tuple[MarkedGraph, int]:
        L = gr.length(o)
        if u == L:
            return gr, o
        if o > 0:
            gr2, ps = gr.subdivided(o, [u])
            return gr2, ps[0]
        gr2, ps = gr.subdivided(-o, [L - u])
        return gr2, -ps[1]

    g, a = initial_piece(g, o1)
    g, b = initial_piece(g, o2)
    return g.fold(a, b)[0]


def _pullback_pieces(start: MarkedGraph, opt: OptimalMap
                     ) -> tuple[dict[int, Fraction], dict[int, Fraction],
                                Fraction, tuple[int, ...], MarkedGraph,
                                dict[int, int]]:
    """Pullback lengths and the edge-to-edge start of the fold leg.

    Returns ``(l0, l1, W_mid, degenerate, H, img)``: the original and
    pullback edge lengths, the fold leg's starting volume, the collapsed
    point-image edges (they always form a forest: a loop class has
    positive image length), the graph at volume ``W_mid`` subdivided so
    the map crosses one codomain edge per edge, and each piece's signed
    codomain edge.
    """
    f = opt.map
    codomain = opt.codomain
    sigma = opt.sigma
    l0 = {e: start.length(e) for e in start.edges}
    l1: dict[int, Fraction] = {}
    for e in start.edges:
        lp = f.image_length(e) / sigma
        if lp > l0[e]:
            raise AssertionError("pullback length exceeds original length")
        l1[e] = lp
    W_mid = sum(l1.values(), Fraction(0))
    degenerate = tuple(sorted(e for e in start.edges if l1[e] == 0))
    placeholder = {e: (l1[e] if l1[e] > 0 else Fraction(1))
                   for e in start.edges}
    H = start.with_lengths(placeholder)
    for e in degenerate:
        H = H.collapsed(e)
    img: dict[int, int] = {}
    for e in sorted(start.edges):
        if e in degenerate:
            continue
        path = f.edge_map[e]
        piece_lengths = [codomain.length(o) / sigma for o in path]
        cuts, run = [], Fraction(0)
        for pl in piece_lengths[:-1]:
            run += pl
            cuts.append(run)
        H, pieces = H.subdivided(e, cuts)
        for piece, o in zip(pieces, path):
            img[piece] = o
            img[-piece] = -o
    return l0, l1, W_mid, degenerate, H, img


class FoldingPath:
    """An exact geodesic between two points of the volume-1 moduli space."""

    def __init__(self, g1: MarkedGraph, g2: MarkedGraph, *, check: bool = True):
        if not (g1.is_core and g2.is_core):
            raise GraphError("geodesics require core graphs (no valence-1 vertices)")
        self.start = g1.normalized()
        self.target = g2.normalized()
        self.optimal: OptimalMap = optimal_map(self.start, self.target)
        self.sigma: Fraction = self.optimal.sigma
        codomain = self.optimal.codomain

        l0, l1, W_mid, degenerate, H, img = _pullback_pieces(
            self.start, self.optimal)
        self._l0 = l0
        self._l1 = l1
        self.W_mid: Fraction = W_mid
        self._degenerate = degenerate
        self._H0 = H
        self._img0 = dict(img)
        self.schedule: list[tuple[int, int, Fraction]] = []
        G, gimg = H, dict(img)
        while True:
            pair = _find_foldable(G, gimg)
            if pair is None:
                break
            o1, o2 = pair
            length = G.length(o1)
            G, _ = G.fold(o1, o2)
            a2 = abs(o2)
            del gimg[a2]
            del gimg[-a2]
            self.schedule.append((o1, o2, length))
        self._final = G
        self.W_end: Fraction = G.volume
        if self.W_end * self.sigma != 1:
            raise AssertionError("folding did not terminate at volume 1/sigma")
        if len(G.edges) != len(codomain.edges):
            raise AssertionError("folded graph has the wrong number of edges")
        self.distance: float = math.log(self.sigma)
        if check:
            s_fwd, _, _ = stretch_factor(G.normalized(), self.target)
            s_bwd, _, _ = stretch_factor(self.target, G.normalized())
            if s_fwd != 1 or s_bwd != 1:
                raise AssertionError("folding did not terminate at the target")

    # -- sampling ---------------------------------------------------------
    @property
    def volume_range(self) -> tuple[Fraction, Fraction]:
        return self.W_end, Fraction(1)

    def param_of_volume(self, W: Fraction) -> float:
        """Distance from the start of the normalized point at volume W."""
        return -math.log(W)

    def volume_of_param(self, s: float) -> Fraction:
        W = Fraction(math.exp(-s)).limit_denominator(10**12)
        lo, hi = self.volume_range
        return min(max(W, lo), hi)

    def graph_at_volume(self, W: Fraction) -> MarkedGraph:
        """The (unnormalized) graph at pre-normalization volume W."""
        W = Fraction(W)
        lo, hi = self.volume_range
        if not lo <= W <= hi:
            raise GraphError(f"volume {W} outside [{lo}, {hi}]")
        if W > self.W_mid or (W == self.W_mid and not self._degenerate):
            return self._rescale_graph(W)
        return self._fold_graph(W)

    def graph_at(self, s: float) -> MarkedGraph:
        """Normalized graph at distance s from the start (s in [0, log sigma])."""
        return self.graph_at_volume(self.volume_of_param(s)).normalized()

    def _rescale_graph(self, W: Fraction) -> MarkedGraph:
        edges = sorted(self.start.edges)
        # W(x) = sum(max(l0 x, l1)) is piecewise linear in x = exp(-lambda)
        xs = sorted({self._l1[e] / self._l0[e] for e in edges}, reverse=True)
        for x_low in xs + [Fraction(0)]:
            A = sum((self._l0[e] for e in edges
                     if self._l1[e] / self._l0[e] <= x_low), Fraction(0))
            B = sum((self._l1[e] for e in edges
                     if self._l1[e] / self._l0[e] > x_low), Fraction(0))
            # on [x_low, prev) the volume is A x + B with A from this level;
            # solve A x + B = W and accept x within the level's range
            if A > 0:
                x = (W - B) / A
                if x >= x_low and x <= 1:
                    lengths = {e: max(self._l0[e] * x, self._l1[e])
                               for e in edges}
                    if sum(lengths.values(), Fraction(0)) == W:
                        return self.start.with_lengths(lengths)
        raise AssertionError("volume not reachable on the rescale leg")

    def _fold_graph(self, W: Fraction) -> MarkedGraph:
        G = self._H0
        for o1, o2, length in self.schedule:
            if G.volume == W:
                return G
            if G.volume - length < W:
                return _partial_fold(G, o1, o2, G.volume - W)
            G = G.fold(o1, o2)[0]
        if G.volume == W:
            return G
        raise AssertionError("volume not reachable on the fold leg")

    def breakpoints(self) -> list[tuple[Fraction, str]]:
        """Volumes of the combinatorial events along the path, descending."""
        out: list[tuple[Fraction, str]] = [(Fraction(1), "start")]
        # rescale leg: a breakpoint each time an edge reaches its pullback length
        xs = sorted({self._l1[e] / self._l0[e] for e in self.start.edges},
                    reverse=True)
        for x in xs:
            W = sum((max(self._l0[e] * x, self._l1[e]) for e in self.start.edges),
                    Fraction(0))
            if W != 1:
                out.append((W, "rescale"))
        W = self.W_mid
        for _, _, length in self.schedule:
            W -= length
            out.append((W, "fold"))
        dedup: dict[Fraction, str] = {}
        for w, kind in out:
            dedup.setdefault(w, kind)
        return sorted(dedup.items(), reverse=True)

    def __repr__(self):
        return (f"FoldingPath(sigma={self.sigma}, folds={len(self.schedule)}, "
                f"distance={self.distance:.6f})")


def geodesic(g1: MarkedGraph, g2: MarkedGraph, *, check: bool = True) -> FoldingPath:
    return FoldingPath(g1, g2, check=check)


# ---------------------------------------------------------------------------
# periodic axes and thin-part scans


class Axis:
    """The periodic geodesic line of an expanding train-track representative.

    One fundamental domain is the folding geodesic from the representative's
    graph G (with its eigenvector metric) to G translated by the
    automorphism; later/earlier domains are translates of it.  Sampling is
    periodic *by construction*: graph_at_volume(W / sigma) equals
    graph_at_volume(W) translated by the automorphism, exactly.  The period
    log(sigma) matches log(expansion factor) up to the rational
    approximation of the eigenvector metric.
    """

    def __init__(self, rep, *, check: bool = True):
        if rep.automorphism is None:
            raise GraphError("axis needs a representative with an automorphism")
        self.phi = rep.automorphism
        self.expansion: float = rep.expansion
        g = rep.graph.normalized()
        self.fundamental = FoldingPath(
            g, g.apply_automorphism(self.phi), check=check)
        self.sigma: Fraction = self.fundamental.sigma
        self.period: float = math.log(self.sigma)

    def graph_at_volume(self, W: Fraction) -> MarkedGraph:
        """Normalized axis point with parameter t = -log W, any W > 0."""
        V = Fraction(W)
        if V <= 0:
            raise GraphError("volume must be positive")
        n = 0
        while V > 1:
            V *= self.sigma ** -1
            n -= 1
        while V * self.sigma <= 1:
            V *= self.sigma
            n += 1
        g = self.fundamental.graph_at_volume(V).normalized()
        if n:
            g = g.apply_automorphism(self.phi ** n)
        return g

    def graph_at(self, t: float) -> MarkedGraph:
        W = Fraction(math.exp(-t)).limit_denominator(10**12)
        return self.graph_at_volume(W)

    def __repr__(self):
        return f"Axis(sigma={self.sigma}, period={self.period:.6f})"


@dataclass(frozen=True)
class ScanPoint:
    t: float
    volume: Fraction
    value: Fraction


@dataclass(frozen=True)
class ScanResult:
    t: float
    volume: Fraction
    value: Fraction
    bracket: float  # largest gap between consecutive sample parameters
    samples: tuple[ScanPoint, ...]


def _sample_volumes(obj: "FoldingPath | Axis", grid: int) -> list[Fraction]:
    path = obj.fundamental if isinstance(obj, Axis) else obj
    if grid < 1:
        raise GraphError("grid must be at least 1")
    vols = {W for W, _ in path.breakpoints()}
    lo, hi = path.volume_range
    d = -math.log(lo)
    for k in range(grid + 1):
        W = Fraction(math.exp(-d * k / grid)).limit_denominator(10**9)
        vols.add(min(max(W, lo), hi))
    return sorted(vols, reverse=True)


def _graph_at_volume(obj: "FoldingPath | Axis", W: Fraction) -> MarkedGraph:
    if isinstance(obj, Axis):
        return obj.graph_at_volume(W)
    return obj.graph_at_volume(W).normalized()


def min_cycle_along(obj: "FoldingPath | Axis", a: Word, grid: int = 16
                    ) -> ScanResult:
    """Minimum of the loop length of ``a`` over breakpoints plus grid samples.

    The length is piecewise log-linear along the legs, so the sampled
    minimum brackets the true minimum within the reported parameter gap.
    """
    if not a:
        raise GraphError("trivial word has no length")
    pts = []
    for W in _sample_volumes(obj, grid):
        g = _graph_at_volume(obj, W)
        pts.append(ScanPoint(-math.log(W), W, g.loop_length(a)))
    best = min(pts, key=lambda p: (p.value, p.t))
    ts = [p.t for p in pts]
    bracket = max(b - a_ for a_, b in zip(ts, ts[1:])) if len(ts) > 1 else 0.0
    return ScanResult(best.t, best.volume, best.value, bracket, tuple(pts))


def min_cycle_streamed(g1: MarkedGraph, g2: MarkedGraph, a: Word, *,
                       grid: int = 16, opt: OptimalMap | None = None
                       ) -> ScanResult:
    """Minimum normalized length of ``a`` along a geodesic from g1 to g2.

    Equivalent in spirit to ``min_cycle_along(geodesic(g1, g2), a)`` but
    never materializes intermediate graphs: the rescale leg is evaluated
    in closed form and the fold leg streams through a union-find, so the
    scan stays affordable when the optimal map's images run to tens of
    thousands of edges.  Fold-leg samples snap to the first fold event at
    or past each grid volume; the bracket reports the largest parameter
    gap between consecutive samples.  ``opt`` may supply a precomputed
    optimal map for the normalized pair.
    """
    if not a:
        raise GraphError("trivial word has no length")
    if grid < 1:
        raise GraphError("grid must be at least 1")
    start, target = g1.normalized(), g2.normalized()
    if opt is None:
        opt = optimal_map(start, target)
    sigma = opt.sigma
    l0, l1, W_mid, _, H, img = _pullback_pieces(start, opt)
    lo = Fraction(1) / sigma
    d = math.log(sigma)
    vols = {Fraction(1), lo, W_mid}
    for k in range(1, grid):
        W = Fraction(math.exp(-d * k / grid)).limit_denominator(10**9)
        vols.add(min(max(W, lo), Fraction(1)))
    targets = sorted(vols, reverse=True)
    pts: list[ScanPoint] = []

    # rescale leg: edge lengths max(l0 x, l1); solve the piecewise-linear
    # volume for x at each sample and measure the loop directly
    ratios = sorted({l1[e] / l0[e] for e in l0}, reverse=True)
    for W in (w for w in targets if w > W_mid):
        x = None
        for x_low in ratios + [Fraction(0)]:
            A = sum((l0[e] for e in l0 if l1[e] / l0[e] <= x_low), Fraction(0))
            B = sum((l1[e] for e in l0 if l1[e] / l0[e] > x_low), Fraction(0))
            if A > 0:
                cand = (W - B) / A
                if x_low <= cand <= 1:
                    scaled = {e: max(l0[e] * cand, l1[e]) for e in l0}
                    if sum(scaled.values(), Fraction(0)) == W:
                        x = cand
                        break
        if x is None:
            raise AssertionError("volume not reachable on the rescale leg")
        g = start.with_lengths({e: max(l0[e] * x, l1[e]) for e in l0})
        pts.append(ScanPoint(-math.log(W), W, g.loop_length(a) / W))

    # fold leg: stream the folds, measuring the tracked loop as the volume
    # crosses each remaining sample
    apath = H.path_of_word(a)
    sf = StreamingFold((e, iv, tv, img[e], L)
                       for e, (iv, tv, L) in sorted(H.edges.items()))
    remaining = [w for w in targets if w <= W_mid]
    idx = [0]

    def record() -> None:
        pts.append(ScanPoint(-math.log(sf.W), sf.W,
                             sf.tracked_length(apath) / sf.W))

    def on_fold(_: StreamingFold) -> None:
        fired = False
        while idx[0] < len(remaining) and sf.W <= remaining[idx[0]]:
            idx[0] += 1
            fired = True
        if fired:
            record()

    if remaining and sf.W <= remaining[0]:
        idx[0] += 1
        record()
    sf.fold_all(on_fold)
    if sf.W * sigma != 1:
        raise AssertionError("folding did not terminate at volume 1/sigma")
    if idx[0] < len(remaining):
        record()

    pts.sort(key=lambda p: p.t)
    best = min(pts, key=lambda p: (p.value, p.t))
    ts = [p.t for p in pts]
    bracket = max(b - a_ for a_, b in zip(ts, ts[1:])) if len(ts) > 1 else 0.0
    return ScanResult(best.t, best.volume, best.value, bracket, tuple(pts))


def shortest_cycle_along(obj: "FoldingPath | Axis", eps: Fraction,
                         grid: int = 16) -> ScanResult | None:
    """First sampled point whose shortest cycle is below eps, or None.

    The shortest cycle of a metric graph is an embedded circle, hence a
    candidate loop.
    """
    eps = Fraction(eps)
    pts = []
    for W in _sample_volumes(obj, grid):
        g = _graph_at_volume(obj, W)
        val = min(g.path_length(c) for c in candidate_loops(g))
        pts.append(ScanPoint(-math.log(W), W, val))
    ts = [p.t for p in pts]
    bracket = max(b - a_ for a_, b in zip(ts, ts[1:])) if len(ts) > 1 else 0.0
    for p in pts:
        if p.value < eps:
            return ScanResult(p.t, p.volume, p.value, bracket, tuple(pts))
    return None


# ---------------------------------------------------------------------------
# streaming fold engine (no marking bookkeeping; for large inputs)


class StreamingFold:
    """Folds a large edge-to-edge map by union-find, tracking volumes only.

    Edges are signed integers; each edge has an image letter (a signed id in
    the codomain), and two edges leaving a common vertex fold when their
    image letters agree.  Tracked loops can be measured at any time; their
    edges are resolved through the union-find and tightened cyclically.
    """

    def __init__(self, edges: Iterable[tuple[int, int, int, int, Fraction]]):
        # edges: (edge_id, init_vertex, term_vertex, image_letter, length)
        self._eparent: dict[int, int] = {}  # edge -> signed parent edge
        self._vparent: dict[int, int] = {}
        self._ends: dict[int, tuple[int, int]] = {}
        self._img: dict[int, int] = {}
        self._len: dict[int, Fraction] = {}
        self.W = Fraction(0)
        self._buckets: dict[int, dict[int, set[int]]] = {}
        for e, iv, tv, img, L in edges:
            if e <= 0:
                raise ValueError("edge ids must be positive")
            self._eparent[e] = e
            self._vparent.setdefault(iv, iv)
            self._vparent.setdefault(tv, tv)
            self._ends[e] = (iv, tv)
            self._img[e] = img
            self._len[e] = Fraction(L)
            self.W += L
            self._buckets.setdefault(iv, {}).setdefault(img, set()).add(e)
            self._buckets.setdefault(tv, {}).setdefault(-img, set()).add(-e)
        self.folds = 0

    # -- union-find -------------------------------------------------------
    def vfind(self, v: int) -> int:
        root = v
        while self._vparent[root] != root:
            root = self._vparent[root]
        while self._vparent[v] != root:
            self._vparent[v], v = root, self._vparent[v]
        return root

    def efind(self, o: int) -> int:
        e = abs(o)
        chain: list[tuple[int, int]] = []  # (node, sign of node's parent link)
        while True:
            p = self._eparent[e]
            if abs(p) == e:
                break
            chain.append((e, 1 if p > 0 else -1))
            e = abs(p)
        # path compression: point every chain node at the root, with the
        # product of the link signs from that node down to the root
        suffix = 1
        for node, s in reversed(chain):
            suffix *= s
            self._eparent[node] = e * suffix
        total = suffix if chain else 1
        return e * total * (1 if o > 0 else -1)

    def _canon_bucket(self, v: int, img: int) -> list[int]:
        """Resolve a bucket's members through the union-find, pruning stale."""
        bucket = self._buckets.get(v, {}).get(img)
        if not bucket:
            return []
        fresh: set[int] = set()
        for o in bucket:
            r = self.efind(o)
            iv, tv = self._ends[abs(r)]
            anchor = self.vfind(iv if r > 0 else tv)
            if anchor == v and self._img[abs(r)] * (1 if r > 0 else -1) == img:
                fresh.add(r)
        self._buckets[v][img] = fresh
        return sorted(fresh, key=lambda o: (abs(o), -o))

    def oriented_image(self, o: int) -> int:
        r = self.efind(o)
        return self._img[abs(r)] * (1 if r > 0 else -1)

    # -- folding ----------------------------------------------------------
    def fold_all(self, on_fold: Callable[["StreamingFold"], None] | None = None
                 ) -> None:
        queue = sorted((v for v in self._vparent if self._vparent[v] == v),
                       reverse=True)
        queued = set(queue)
        while queue:
            v = queue.pop()
            queued.discard(v)
            v = self.vfind(v)
            progressed = True
            while progressed:
                progressed = False
                for img in sorted(self._buckets.get(v, {})):
                    members = self._canon_bucket(v, img)
                    if len(members) >= 2:
                        touched = self._fold_pair(v, members[0], members[1])
                        if on_fold is not None:
                            on_fold(self)
                        # the merged far endpoint may now have coincidences
                        if touched != self.vfind(v) and touched not in queued:
                            queue.append(touched)
                            queued.add(touched)
                        v = self.vfind(v)
                        progressed = True
                        break

    def _fold_pair(self, v: int, o1: int, o2: int) -> int:
        a1, a2 = abs(o1), abs(o2)
        if a1 == a2:
            raise AssertionError("cannot fold an edge with itself")
        if self._len[a1] != self._len[a2]:
            raise AssertionError("folding edges of different lengths")
        iv1, tv1 = self._ends[a1]
        t1 = self.vfind(tv1 if o1 > 0 else iv1)
        iv2, tv2 = self._ends[a2]
        t2 = self.vfind(tv2 if o2 > 0 else iv2)
        if t1 == t2:
            raise AssertionError("parallel fold would drop the rank")
        # identify a2 with a1 (same orientation as seen from v)
        rel = 1 if (o1 > 0) == (o2 > 0) else -1
        self._eparent[a2] = a1 * rel
        self.W -= self._len[a2]
        self.folds += 1
        # merge far endpoints, smaller bucket into larger
        r1, r2 = t1, t2
        if r1 != r2:
            b1 = self._buckets.get(r1, {})
            b2 = self._buckets.get(r2, {})
            if sum(len(s) for s in b2.values()) > sum(len(s) for s in b1.values()):
                r1, r2 = r2, r1
                b1, b2 = b2, b1
            self._vparent[r2] = r1
            for img, members in b2.items():
                b1.setdefault(img, set()).update(members)
            self._buckets[r1] = b1
            self._buckets.pop(r2, None)
        return r1

    def has_foldable_pair(self) -> bool:
        for v in sorted(self._buckets):
            if self.vfind(v) != v:
                continue
            for img in sorted(self._buckets[v]):
                if len(self._canon_bucket(v, img)) >= 2:
                    return True
        return False

    # -- queries ----------------------------------------------------------
    def resolve_path(self, path: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.efind(o) for o in path)

    def tracked_length(self, path: Sequence[int], *, cyclic: bool = True
                       ) -> Fraction:
        resolved = [self.efind(o) for o in path]
        stack: list[int] = []
        for o in resolved:
            if stack and stack[-1] == -o:
                stack.pop()
            else:
                stack.append(o)
        if cyclic:
            while len(stack) >= 2 and stack[0] == -stack[-1]:
                stack = stack[1:-1]
        return sum((self._len[abs(o)] for o in stack), Fraction(0))

    def alive_edge_count(self) -> int:
        return sum(1 for e, p in self._eparent.items() if abs(p) == e)
