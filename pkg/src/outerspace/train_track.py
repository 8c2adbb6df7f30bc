"""Train-track maps: transition matrices, expansion factors, legal turns.

A self-map of a graph sending edges to tight edge paths is a *train-track
map* when no iterate of an edge image backtracks.  Backtracking is governed
by turns: a turn (an unordered pair of distinct directions at a vertex) is
*illegal* when some iterate of the induced turn map degenerates it, and the
map is train track iff the edge images only cross legal turns.

The transition matrix counts how often each edge image crosses each edge;
for an irreducible matrix the Perron-Frobenius eigenvalue is the expansion
factor and its positive eigenvector prescribes the metric in which every
edge is stretched by exactly that factor.  The eigenvalue is computed by
power iteration and cross-checked against an exact characteristic-polynomial
root enclosure for small matrices.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .graphs import EdgePath, MarkedGraph, reverse_path, tighten_path
from .lipschitz import GraphMap, stretch_factor
from .words import Automorphism

Turn = tuple[int, int]  # unordered pair of oriented edges, stored sorted


class TrainTrackError(Exception):
    pass


# ---------------------------------------------------------------------------
# transition matrices and Perron-Frobenius data


def transition_matrix(graph: MarkedGraph, edge_map: dict[int, EdgePath]
                      ) -> np.ndarray:
    """a[i][j] = crossings of edge j (either orientation) by the image of i.

    Rows and columns are indexed by ``sorted(graph.edges)``.
    """
    order = sorted(graph.edges)
    A = np.zeros((len(order), len(order)), dtype=np.int64)
    for i, e in enumerate(order):
        for o in edge_map[e]:
            A[i][order.index(abs(o))] += 1
    return A


def is_irreducible(A: np.ndarray) -> bool:
    """True iff the digraph with an arc i -> j whenever A[i][j] > 0 is
    strongly connected."""
    n = len(A)
    adj = [[j for j in range(n) if A[i][j] > 0] for i in range(n)]
    radj = [[j for j in range(n) if A[j][i] > 0] for i in range(n)]
    for nbrs in (adj, radj):
        seen = {0}
        stack = [0]
        while stack:
            for j in nbrs[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != n:
            return False
    return True


def charpoly(A: np.ndarray) -> list[int]:
    """Exact characteristic polynomial coefficients, highest power first."""
    n = len(A)
    M = [[Fraction(1) if i == j else Fraction(0) for j in range(n)]
         for i in range(n)]
    a = [[Fraction(int(A[i][j])) for j in range(n)] for i in range(n)]
    coeffs = [Fraction(1)]
    for k in range(1, n + 1):
        AM = [[sum(a[i][l] * M[l][j] for l in range(n)) for j in range(n)]
              for i in range(n)]
        ck = -sum(AM[i][i] for i in range(n)) / k
        coeffs.append(ck)
        M = [[AM[i][j] + (ck if i == j else Fraction(0)) for j in range(n)]
             for i in range(n)]
    out = []
    for c in coeffs:
        if c.denominator != 1:
            raise AssertionError("characteristic polynomial not integral")
        out.append(c.numerator)
    return out


def _poly_at(coeffs: list[int], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def _refine_root(coeffs: list[int], seed: float) -> Fraction:
    """Tighten an isolated simple real root of the monic polynomial by exact
    bisection, starting from a floating-point estimate."""
    for delta in (Fraction(1, 10**6), Fraction(1, 10**3), Fraction(1)):
        lo = Fraction(seed) - delta
        hi = Fraction(seed) + delta
        if _poly_at(coeffs, lo) * _poly_at(coeffs, hi) < 0:
            break
    else:
        raise AssertionError("could not bracket the dominant eigenvalue")
    flo = _poly_at(coeffs, lo)
    while hi - lo > Fraction(1, 10**15):
        mid = (lo + hi) / 2
        fmid = _poly_at(coeffs, mid)
        if fmid == 0:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return (lo + hi) / 2


def expansion_factor(A: np.ndarray) -> tuple[float, np.ndarray]:
    """Perron-Frobenius eigenvalue and positive right eigenvector (sum 1).

    Power-iterates A + I (primitive whenever A is irreducible, so the
    iteration converges even for periodic matrices); for small matrices the
    eigenvalue is cross-checked against an exact characteristic-polynomial
    root enclosure and the two must agree to 1e-9.
    """
    A = np.asarray(A, dtype=np.int64)
    n = len(A)
    if A.shape != (n, n) or n == 0:
        raise TrainTrackError("transition matrix must be square and nonempty")
    if np.any(A < 0):
        raise TrainTrackError("transition matrix must be nonnegative")
    if not is_irreducible(A):
        raise TrainTrackError("transition matrix is reducible")
    B = A.astype(float) + np.eye(n)
    v = np.ones(n) / n
    lam_prev = float("inf")
    for _ in range(200000):
        w = B @ v
        v = w / w.sum()
        Bv = B @ v
        lam = float(v @ Bv) / float(v @ v)
        if abs(lam - lam_prev) < 1e-15 and np.max(np.abs(Bv - lam * v)) < 1e-14 * lam:
            break
        lam_prev = lam
    lam -= 1.0
    if n <= 6:
        exact = _refine_root(charpoly(A), lam)
        if abs(lam - float(exact)) > 1e-9:
            raise AssertionError(
                f"power iteration ({lam}) and exact root ({float(exact)}) disagree")
        lam = float(exact)
    return lam, v / v.sum()


# ---------------------------------------------------------------------------
# turns and legality


def _vertex_map_of(graph: MarkedGraph, edge_map: dict[int, EdgePath]
                   ) -> dict[int, int]:
    vmap: dict[int, int] = {}

    def record(v: int, image: int) -> None:
        if vmap.setdefault(v, image) != image:
            raise TrainTrackError(f"inconsistent vertex image at vertex {v}")

    for e in sorted(graph.edges):
        path = edge_map[e]
        if not path:
            raise TrainTrackError(f"edge {e} has an empty image")
        if not graph.is_path(path) or tighten_path(path) != path:
            raise TrainTrackError(f"image of edge {e} is not a tight path")
        record(graph.init_of(e), graph.init_of(path[0]))
        record(graph.term_of(e), graph.term_of(path[-1]))
    for v in graph.vertices:
        if v not in vmap:
            raise TrainTrackError(f"vertex {v} has no incident edge image")
    return vmap


def derivative(edge_map: dict[int, EdgePath]):
    """The direction map: an oriented edge to the first oriented edge of its
    image."""

    def D(o: int) -> int:
        path = edge_map[abs(o)]
        return path[0] if o > 0 else -path[-1]

    return D


def turns_of(graph: MarkedGraph) -> set[Turn]:
    out: set[Turn] = set()
    for v in graph.vertices:
        star = sorted(graph.star(v))
        for i in range(len(star)):
            for j in range(i + 1, len(star)):
                out.add((star[i], star[j]))
    return out


def turns_taken(edge_map: dict[int, EdgePath]) -> set[Turn]:
    out: set[Turn] = set()
    for e, path in edge_map.items():
        for a, b in zip(path, path[1:]):
            out.add(tuple(sorted((-a, b))))
    return out


def illegal_turns(graph: MarkedGraph, edge_map: dict[int, EdgePath]
                  ) -> set[Turn]:
    """Turns degenerated by some iterate of the induced turn map.

    The turn set is finite and the turn map is a function, so every orbit is
    eventually periodic; a turn is illegal iff its orbit reaches a degenerate
    pair (both directions equal).
    """
    D = derivative(edge_map)
    status: dict[Turn, bool] = {}  # True = illegal

    def classify(t: Turn) -> bool:
        trail: list[Turn] = []
        cur: Turn | None = t
        verdict = None
        while cur is not None:
            if cur in status:
                verdict = status[cur]
                break
            if cur[0] == cur[1]:
                verdict = True
                break
            trail.append(cur)
            nxt = tuple(sorted((D(cur[0]), D(cur[1]))))
            if nxt in trail:  # entered a cycle of nondegenerate turns
                verdict = False
                break
            cur = nxt
        for seen in trail:
            status[seen] = verdict
        return verdict

    return {t for t in turns_of(graph) if classify(t)}


def verify_train_track(graph: MarkedGraph, edge_map: dict[int, EdgePath]
                       ) -> tuple[bool, set[Turn], set[Turn]]:
    """(ok, legal turns, illegal turns) for a candidate edge-path self-map.

    ok iff the map is a genuine graph map with tight nonempty edge images
    none of which crosses an illegal turn.
    """
    _vertex_map_of(graph, edge_map)
    illegal = illegal_turns(graph, edge_map)
    legal = turns_of(graph) - illegal
    ok = not (turns_taken(edge_map) & illegal)
    return ok, legal, illegal


def map_path(edge_map: dict[int, EdgePath], path: EdgePath) -> EdgePath:
    out: list[int] = []
    for o in path:
        out.extend(edge_map[abs(o)] if o > 0 else reverse_path(edge_map[abs(o)]))
    return tighten_path(out)


# ---------------------------------------------------------------------------
# verified representatives


class TrainTrackRep:
    """A verified train-track representative with its Perron-Frobenius metric.

    The stored graph carries edge lengths proportional to the positive
    eigenvector of the transition matrix (total volume 1, rational
    approximations of the eigenvector), so every edge is stretched by the
    expansion factor up to the approximation error.
    """

    def __init__(self, graph: MarkedGraph, edge_map: dict[int, EdgePath],
                 automorphism: Automorphism | None = None, *,
                 install_metric: bool = True, precision: int = 10**13):
        edge_map = {e: tuple(p) for e, p in edge_map.items()}
        if set(edge_map) != set(graph.edges):
            raise TrainTrackError("edge map must cover every edge")
        vmap = _vertex_map_of(graph, edge_map)
        self.matrix = transition_matrix(graph, edge_map)
        ok, legal, illegal = verify_train_track(graph, edge_map)
        if not ok:
            bad = sorted(turns_taken(edge_map) & illegal)
            raise TrainTrackError(f"edge images cross illegal turns: {bad}")
        self.legal_turns = frozenset(legal)
        self.illegal_turns = frozenset(illegal)
        self.expansion, vec = expansion_factor(self.matrix)
        if install_metric:
            approx = [Fraction(x).limit_denominator(precision) for x in vec]
            total = sum(approx)
            lengths = {e: approx[i] / total
                       for i, e in enumerate(sorted(graph.edges))}
            graph = graph.with_lengths(lengths)
        self.graph = graph
        self.edge_map = edge_map
        self.vertex_map = vmap
        self.automorphism = automorphism
        if automorphism is not None:
            target = self.graph.apply_automorphism(automorphism)
            GraphMap(self.graph, target, vmap, edge_map)  # raises if wrong

    @classmethod
    def from_rose_automorphism(cls, phi: Automorphism) -> "TrainTrackRep":
        """Candidate representative on the rose: petal i maps to the edge
        path spelling the image of the i-th generator."""
        g = MarkedGraph.rose(phi.rank)
        edge_map = {i + 1: g.path_of_word(phi.images[i])
                    for i in range(phi.rank)}
        return cls(g, edge_map, phi)

    # -- metric diagnostics -------------------------------------------------
    def stretch_residual(self) -> float:
        """max over edges of |image length / length - expansion factor|."""
        return max(
            abs(float(self.graph.path_length(self.edge_map[e])
                      / self.graph.length(e)) - self.expansion)
            for e in self.graph.edges)

    def displacement_residual(self) -> float:
        """|sigma(G, G phi) - expansion factor| for the stored metric."""
        if self.automorphism is None:
            raise TrainTrackError("no automorphism stored")
        target = self.graph.apply_automorphism(self.automorphism)
        sigma, _, _ = stretch_factor(self.graph.normalized(),
                                     target.normalized())
        return abs(float(sigma) - self.expansion)

    # -- iteration ------------------------------------------------------------
    def iterate_edge(self, e: int, m: int, *, budget: int = 10**5) -> EdgePath:
        """The tight image path of edge e under m iterates of the map."""
        path: EdgePath = (e,)
        for _ in range(m):
            path = map_path(self.edge_map, path)
            if len(path) > budget:
                raise TrainTrackError(f"iterate exceeds budget {budget}")
        return path

    def is_legal_path(self, path: EdgePath) -> bool:
        return not any(
            tuple(sorted((-a, b))) in self.illegal_turns
            for a, b in zip(path, path[1:]))

    def is_legal_loop(self, path: EdgePath) -> bool:
        if not self.is_legal_path(path):
            return False
        return tuple(sorted((-path[-1], path[0]))) not in self.illegal_turns

    def __repr__(self):
        return (f"TrainTrackRep({len(self.graph.edges)} edges, "
                f"expansion={self.expansion:.10f})")
