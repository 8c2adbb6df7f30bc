"""Marked metric graphs with exact rational edge lengths.

A marked graph is a finite connected graph G together with a marking:
for each free-group generator, a loop (edge path) based at a base vertex.
An inverse marking is maintained as a *label cocycle*: each edge carries a
word so that the label-word read along the i-th marking loop is exactly
the i-th generator.  All lengths are ``fractions.Fraction``; nothing here
ever rounds.

Oriented edges are signed integers: ``+e`` traverses edge ``e`` from its
init vertex to its terminal vertex, ``-e`` the reverse.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .words import Automorphism, AutomorphismError, Word, WordError, default_names


class GraphError(ValueError):
    pass


EdgePath = tuple[int, ...]


def reverse_path(path: Iterable[int]) -> EdgePath:
    return tuple(-o for o in reversed(tuple(path)))


def tighten_path(path: Iterable[int]) -> EdgePath:
    stack: list[int] = []
    for o in path:
        if stack and stack[-1] == -o:
            stack.pop()
        else:
            stack.append(o)
    return tuple(stack)


def cyclic_tighten_path(path: Iterable[int]) -> EdgePath:
    p = list(tighten_path(path))
    while len(p) >= 2 and p[0] == -p[-1]:
        p = p[1:-1]
    return tuple(p)


class MarkedGraph:
    """Immutable-by-convention marked metric graph.

    Parameters
    ----------
    rank : rank of the free group.
    edges : dict edge_id -> (init_vertex, term_vertex, length).
    marking : one edge-path loop at ``base`` per generator.
    labels : dict edge_id -> Word, the inverse-marking cocycle.
    base : base vertex.
    """

    def __init__(self, rank: int, edges: dict[int, tuple[int, int, Fraction]],
                 marking: Sequence[EdgePath], labels: dict[int, Word],
                 base: int, *, check: bool = True):
        self.rank = rank
        self.edges = {e: (iv, tv, Fraction(L)) for e, (iv, tv, L) in edges.items()}
        self.marking = tuple(tuple(p) for p in marking)
        self.labels = dict(labels)
        self.base = base
        verts: set[int] = {base}
        for iv, tv, _ in self.edges.values():
            verts.add(iv)
            verts.add(tv)
        self.vertices = tuple(sorted(verts))
        self._star: dict[int, list[int]] = {v: [] for v in self.vertices}
        for e, (iv, tv, _) in sorted(self.edges.items()):
            self._star[iv].append(e)
            self._star[tv].append(-e)
        self._tree_paths: dict[int, EdgePath] | None = None
        self._candidates = None
        if check:
            self.check()

    # -- incidence -------------------------------------------------------
    def init_of(self, o: int) -> int:
        iv, tv, _ = self.edges[abs(o)]
        return iv if o > 0 else tv

    def term_of(self, o: int) -> int:
        return self.init_of(-o)

    def length(self, o: int) -> Fraction:
        return self.edges[abs(o)][2]

    def star(self, v: int) -> list[int]:
        """Oriented edges leaving v (a loop contributes both orientations)."""
        return list(self._star[v])

    def degree(self, v: int) -> int:
        return len(self._star[v])

    @property
    def volume(self) -> Fraction:
        return sum((L for _, _, L in self.edges.values()), Fraction(0))

    @property
    def is_core(self) -> bool:
        """True when the graph has no valence-1 vertices."""
        return all(self.degree(v) >= 2 for v in self.vertices)

    def path_length(self, path: Iterable[int]) -> Fraction:
        return sum((self.length(o) for o in path), Fraction(0))

    def is_path(self, path: Sequence[int]) -> bool:
        return all(
            self.term_of(path[i]) == self.init_of(path[i + 1])
            for i in range(len(path) - 1)
        )

    # -- validation -------------------------------------------------------
    def check(self) -> None:
        if self.rank < 1:
            raise GraphError("rank must be >= 1")
        for e, (iv, tv, L) in self.edges.items():
            if L <= 0:
                raise GraphError(f"edge {e} has nonpositive length")
        if len(self.marking) != self.rank:
            raise GraphError("marking must have one loop per generator")
        # connectivity
        seen = {self.base}
        stack = [self.base]
        while stack:
            v = stack.pop()
            for o in self._star[v]:
                u = self.term_of(o)
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(self.vertices):
            raise GraphError("graph is not connected")
        if len(self.edges) - len(self.vertices) + 1 != self.rank:
            raise GraphError("first Betti number does not match rank")
        for i, p in enumerate(self.marking):
            if not p:
                raise GraphError(f"marking loop {i + 1} is trivial")
            if not self.is_path(p):
                raise GraphError(f"marking loop {i + 1} is not an edge path")
            if self.init_of(p[0]) != self.base or self.term_of(p[-1]) != self.base:
                raise GraphError(f"marking loop {i + 1} is not based at the base vertex")
        if set(self.labels) != set(self.edges):
            raise GraphError("labels must cover exactly the edge set")
        for e, w in self.labels.items():
            if w.rank != self.rank:
                raise GraphError(f"label of edge {e} has wrong rank")
        for i in range(self.rank):
            if self.word_of_path(self.marking[i]) != Word.generator(self.rank, i + 1):
                raise GraphError(
                    f"inverse-marking labels do not invert the marking on generator {i + 1}"
                )

    # -- words <-> paths ----------------------------------------------------
    def word_of_path(self, path: Iterable[int]) -> Word:
        letters: list[int] = []
        for o in path:
            w = self.labels[abs(o)]
            letters.extend(w.letters if o > 0 else (~w).letters)
        return Word(self.rank, letters)

    def path_of_word(self, w: Word) -> EdgePath:
        if w.rank != self.rank:
            raise GraphError("rank mismatch")
        out: list[int] = []
        for a in w.letters:
            p = self.marking[abs(a) - 1]
            out.extend(p if a > 0 else reverse_path(p))
        return tighten_path(out)

    def cyclic_loop_path(self, w: Word) -> EdgePath:
        """The immersed cyclic edge path representing the conjugacy class of w."""
        return cyclic_tighten_path(self.path_of_word(w))

    def loop_length(self, w: Word) -> Fraction:
        return self.path_length(self.cyclic_loop_path(w))

    # -- scaling ------------------------------------------------------------
    def scaled(self, c: Fraction) -> "MarkedGraph":
        c = Fraction(c)
        if c <= 0:
            raise GraphError("scale factor must be positive")
        edges = {e: (iv, tv, L * c) for e, (iv, tv, L) in self.edges.items()}
        return MarkedGraph(self.rank, edges, self.marking, self.labels, self.base,
                           check=False)

    def normalized(self) -> "MarkedGraph":
        return self.scaled(Fraction(1, 1) / self.volume)

    def with_lengths(self, lengths: dict[int, Fraction]) -> "MarkedGraph":
        edges = {e: (iv, tv, Fraction(lengths[e])) for e, (iv, tv, _) in self.edges.items()}
        return MarkedGraph(self.rank, edges, self.marking, self.labels, self.base,
                           check=False)

    # -- spanning tree / anchors --------------------------------------------
    def tree_path(self, v: int) -> EdgePath:
        """BFS spanning-tree edge path from the base vertex to v (cached)."""
        if self._tree_paths is None:
            paths = {self.base: ()}
            frontier = [self.base]
            while frontier:
                nxt = []
                for u in frontier:
                    for o in self._star[u]:
                        t = self.term_of(o)
                        if t not in paths:
                            paths[t] = paths[u] + (o,)
                            nxt.append(t)
                frontier = nxt
            self._tree_paths = paths
        return self._tree_paths[v]

    def anchor_word(self, v: int) -> Word:
        return self.word_of_path(self.tree_path(v))

    # -- moves ----------------------------------------------------------------
    def _fresh_edge_ids(self, n: int) -> list[int]:
        m = max(self.edges) if self.edges else 0
        return [m + 1 + i for i in range(n)]

    def _fresh_vertex_ids(self, n: int) -> list[int]:
        m = max(self.vertices)
        return [m + 1 + i for i in range(n)]

    def subdivided(self, e: int, cuts: Sequence[Fraction]) -> tuple["MarkedGraph", list[int]]:
        """Subdivide edge e at the given distances from its init vertex.

        Returns the new graph and the list of piece edge ids in order; the
        pieces inherit orientation from e.  The first piece keeps e's label,
        the rest get the identity label.
        """
        iv, tv, L = self.edges[e]
        cuts = sorted(Fraction(c) for c in cuts)
        if any(not 0 < c < L for c in cuts) or len(set(cuts)) != len(cuts):
            raise GraphError("cut positions must be distinct and interior")
        if not cuts:
            return self, [e]
        k = len(cuts)
        pieces = self._fresh_edge_ids(k + 1)
        mids = self._fresh_vertex_ids(k)
        bounds = [Fraction(0)] + cuts + [L]
        edges = dict(self.edges)
        del edges[e]
        labels = dict(self.labels)
        lab = labels.pop(e)
        vseq = [iv] + mids + [tv]
        for j, p in enumerate(pieces):
            edges[p] = (vseq[j], vseq[j + 1], bounds[j + 1] - bounds[j])
            labels[p] = lab if j == 0 else Word.identity(self.rank)
        fwd = tuple(pieces)
        bwd = reverse_path(fwd)

        def rewrite(path: EdgePath) -> EdgePath:
            out: list[int] = []
            for o in path:
                if o == e:
                    out.extend(fwd)
                elif o == -e:
                    out.extend(bwd)
                else:
                    out.append(o)
            return tuple(out)

        marking = tuple(rewrite(p) for p in self.marking)
        g = MarkedGraph(self.rank, edges, marking, labels, self.base, check=False)
        return g, pieces

    def _slid_labels(self, v: int, h: Word) -> dict[int, Word]:
        """Gauge slide at v: crossing words into v gain h on the right."""
        labels = dict(self.labels)
        for e, (iv, tv, _) in self.edges.items():
            w = labels[e]
            if tv == v:
                w = w * h
            if iv == v:
                w = ~h * w
            labels[e] = w
        return labels

    def rebased(self, new_base: int) -> "MarkedGraph":
        """Move the base vertex along the spanning tree, keeping labels exact."""
        if new_base == self.base:
            return self
        p = self.tree_path(new_base)
        q = self.word_of_path(p)
        marking = tuple(
            tighten_path(reverse_path(p) + m + p) for m in self.marking
        )
        labels = {e: q * w * ~q for e, w in self.labels.items()}
        return MarkedGraph(self.rank, self.edges, marking, labels, new_base,
                           check=False)

    def fold(self, o1: int, o2: int) -> tuple["MarkedGraph", dict[int, int]]:
        """Fold two oriented edges leaving a common vertex into one.

        Requires equal lengths and distinct terminal vertices (a fold that
        identifies an edge with its own reverse, or two parallel edges, would
        change the homotopy type and is rejected).  Returns the folded graph
        plus the oriented-edge rewrite map.  The base vertex may move.
        """
        a1, a2 = abs(o1), abs(o2)
        if a1 == a2:
            raise GraphError("cannot fold an edge with itself or its reverse")
        v = self.init_of(o1)
        if self.init_of(o2) != v:
            raise GraphError("fold requires a common initial vertex")
        if self.length(a1) != self.length(a2):
            raise GraphError("fold requires equal lengths")
        t1, t2 = self.term_of(o1), self.term_of(o2)
        if t1 == t2:
            raise GraphError("fold would identify parallel edges (rank would drop)")

        g = self
        # choose a vertex at which a label gauge slide is legal
        if t2 not in (v, g.base):
            slide_at, keep_first = t2, True
        elif t1 not in (v, g.base):
            slide_at, keep_first = t1, False
        else:
            g = self.rebased(v)
            slide_at, keep_first = (t2, True) if t2 != v else (t1, False)

        def crossing(gr: "MarkedGraph", o: int) -> Word:
            w = gr.labels[abs(o)]
            return w if o > 0 else ~w

        w1, w2 = crossing(g, o1), crossing(g, o2)
        if keep_first:
            h = ~w2 * w1
        else:
            h = ~w1 * w2
        labels = g._slid_labels(slide_at, h) if h else dict(g.labels)
        # after the slide both crossing words agree; merge a2 into a1
        new_of_o2 = o1 if (o2 > 0) else -o1

        def map_o(o: int) -> int:
            if abs(o) != a2:
                return o
            return new_of_o2 if o == a2 else -new_of_o2

        edges = {}
        merged = {t2: t1}
        for e, (iv, tv, L) in g.edges.items():
            if e == a2:
                continue
            edges[e] = (merged.get(iv, iv), merged.get(tv, tv), L)
        labels.pop(a2)
        marking = tuple(tighten_path(tuple(map_o(o) for o in m)) for m in g.marking)
        base = merged.get(g.base, g.base)
        out = MarkedGraph(g.rank, edges, marking, labels, base, check=False)
        return out, {a2: new_of_o2, -a2: -new_of_o2}

    def collapsed(self, e: int) -> "MarkedGraph":
        """Collapse a non-loop edge to a point (used for degenerate edges)."""
        iv, tv, _ = self.edges[e]
        if iv == tv:
            raise GraphError("cannot collapse a loop edge")
        g = self
        w = g.labels[e]
        if w:
            if tv != g.base:
                labels = g._slid_labels(tv, ~w)
            elif iv != g.base:
                labels = g._slid_labels(iv, w)
            else:
                raise AssertionError("edge with two base endpoints")
            g = MarkedGraph(g.rank, g.edges, g.marking, labels, g.base, check=False)
        edges = {}
        merged = {tv: iv}
        for f, (a, b, L) in g.edges.items():
            if f == e:
                continue
            edges[f] = (merged.get(a, a), merged.get(b, b), L)
        marking = tuple(
            tighten_path(tuple(o for o in m if abs(o) != e)) for m in g.marking
        )
        labels = {f: w2 for f, w2 in g.labels.items() if f != e}
        base = merged.get(g.base, g.base)
        return MarkedGraph(g.rank, edges, marking, labels, base, check=False)

    def suppressed(self) -> "MarkedGraph":
        """Merge away valence-2 vertices (the base vertex is kept)."""
        g = self
        while True:
            target = None
            for v in g.vertices:
                if v != g.base and g.degree(v) == 2:
                    p, q = g._star[v]
                    if abs(p) != abs(q):
                        target = (v, p, q)
                        break
            if target is None:
                return g
            v, p, q = target
            # new edge runs term(p) -> v -> term(q)
            new_e = g._fresh_edge_ids(1)[0]
            iv, tv = g.term_of(p), g.term_of(q)
            L = g.length(p) + g.length(q)
            crossing_p = g.labels[abs(p)] if p > 0 else ~g.labels[abs(p)]
            crossing_q = g.labels[abs(q)] if q > 0 else ~g.labels[abs(q)]
            lab = ~crossing_p * crossing_q
            edges = {e: d for e, d in g.edges.items() if e not in (abs(p), abs(q))}
            edges[new_e] = (iv, tv, L)
            labels = {e: w for e, w in g.labels.items() if e not in (abs(p), abs(q))}
            labels[new_e] = lab

            def rewrite(path: EdgePath) -> EdgePath:
                out: list[int] = []
                i = 0
                path = list(path)
                while i < len(path):
                    o = path[i]
                    nxt = path[i + 1] if i + 1 < len(path) else None
                    if o == -p and nxt == q:
                        out.append(new_e)
                        i += 2
                    elif o == -q and nxt == p:
                        out.append(-new_e)
                        i += 2
                    else:
                        out.append(o)
                        i += 1
                return tighten_path(out)

            marking = tuple(rewrite(m) for m in g.marking)
            g = MarkedGraph(g.rank, edges, marking, labels, g.base, check=False)

    def apply_automorphism(self, phi: Automorphism) -> "MarkedGraph":
        """The right translate G*phi: marking precomposed with phi."""
        if phi.rank != self.rank:
            raise GraphError("rank mismatch")
        marking = tuple(self.path_of_word(phi.images[i]) for i in range(self.rank))
        labels = {e: phi.apply_inverse(w) for e, w in self.labels.items()}
        return MarkedGraph(self.rank, self.edges, marking, labels, self.base,
                           check=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def rose(cls, rank: int, lengths: Sequence[Fraction] | None = None) -> "MarkedGraph":
        if lengths is None:
            lengths = [Fraction(1, rank)] * rank
        if len(lengths) != rank:
            raise GraphError("need one length per petal")
        edges = {i + 1: (0, 0, Fraction(lengths[i])) for i in range(rank)}
        marking = tuple((i + 1,) for i in range(rank))
        labels = {i + 1: Word.generator(rank, i + 1) for i in range(rank)}
        return cls(rank, edges, marking, labels, 0)

    # -- text format --------------------------------------------------------
    def to_text(self, names: Sequence[str] | None = None,
                edge_names: dict[int, str] | None = None) -> str:
        names = tuple(names) if names is not None else default_names(self.rank)
        if edge_names is None:
            edge_names = {e: f"e{e}" for e in self.edges}
        lines = [f"rank {self.rank}", f"base v{self.base}"]
        for e in sorted(self.edges):
            iv, tv, L = self.edges[e]
            lines.append(f"edge {edge_names[e]} v{iv} v{tv} {L.numerator}/{L.denominator}")
        for i, m in enumerate(self.marking):
            toks = [edge_names[o] if o > 0 else "~" + edge_names[-o] for o in m]
            lines.append(f"mark {names[i]} = {' '.join(toks)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple["MarkedGraph", tuple[str, ...]]:
        """Parse the text format; labels are derived by Stallings folding.

        Returns the graph and the generator names in marking order.
        """
        rank = None
        base_name = None
        edge_ids: dict[str, int] = {}
        edges: dict[int, tuple[int, int, Fraction]] = {}
        vertex_ids: dict[str, int] = {}
        marks: list[tuple[str, list[str]]] = []
        for ln in text.strip().splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            toks = ln.split()
            if toks[0] == "rank":
                rank = int(toks[1])
            elif toks[0] == "base":
                base_name = toks[1]
            elif toks[0] == "edge":
                _, name, a, b, frac = toks
                for vn in (a, b):
                    if vn not in vertex_ids:
                        vertex_ids[vn] = len(vertex_ids)
                if name in edge_ids:
                    raise GraphError(f"duplicate edge {name}")
                eid = len(edge_ids) + 1
                edge_ids[name] = eid
                if "/" in frac:
                    num, den = frac.split("/")
                    L = Fraction(int(num), int(den))
                else:
                    L = Fraction(int(frac))
                edges[eid] = (vertex_ids[a], vertex_ids[b], L)
            elif toks[0] == "mark":
                if toks[2] != "=":
                    raise GraphError(f"bad mark line {ln!r}")
                marks.append((toks[1], toks[3:]))
            else:
                raise GraphError(f"unrecognized line {ln!r}")
        if rank is None or rank != len(marks):
            raise GraphError("rank missing or inconsistent with mark lines")
        if base_name is None:
            base = 0
        else:
            if base_name.startswith("v") and base_name[1:] in vertex_ids:
                base = vertex_ids[base_name[1:]]
            elif base_name in vertex_ids:
                base = vertex_ids[base_name]
            else:
                raise GraphError(f"unknown base vertex {base_name!r}")
        names = tuple(nm for nm, _ in marks)
        marking = []
        for _, toks in marks:
            path = []
            for t in toks:
                if t.startswith("~"):
                    path.append(-edge_ids[t[1:]])
                else:
                    path.append(edge_ids[t])
            marking.append(tuple(path))
        labels = derive_labels(rank, edges, marking, base)
        g = cls(rank, edges, marking, labels, base)
        return g, names

    def __repr__(self):
        return (f"MarkedGraph(rank={self.rank}, edges={len(self.edges)}, "
                f"vertices={len(self.vertices)}, volume={self.volume})")


# ---------------------------------------------------------------------------
# Stallings folding over a fixed target alphabet: used to derive inverse
# markings and to invert automorphisms.


class _FoldState:
    """A graph mapped edge-to-edge onto a target alphabet, with label words."""

    def __init__(self, rank: int):
        self.rank = rank
        self.edges: dict[int, list] = {}  # eid -> [init, term, image_oletter, label]
        self.next_eid = 1
        self.next_vid = 1
        self.base = 0

    def add_loop_path(self, images: Sequence[int], first_label: Word) -> None:
        """Attach a loop at the base spelling the given target letters."""
        if not images:
            raise AutomorphismError("trivial image word")
        prev = self.base
        for j, img in enumerate(images):
            term = self.base if j == len(images) - 1 else self.next_vid
            if term != self.base:
                self.next_vid += 1
            lab = first_label if j == 0 else Word.identity(self.rank)
            self.edges[self.next_eid] = [prev, term, img, lab]
            self.next_eid += 1
            prev = term

    def _crossing(self, o: int) -> Word:
        lab = self.edges[abs(o)][3]
        return lab if o > 0 else ~lab

    def _image(self, o: int) -> int:
        img = self.edges[abs(o)][2]
        return img if o > 0 else -img

    def _slide(self, v: int, h: Word) -> None:
        for rec in self.edges.values():
            iv, tv = rec[0], rec[1]
            w = rec[3]
            if tv == v:
                w = w * h
            if iv == v:
                w = ~h * w
            rec[3] = w

    def fold_all(self) -> None:
        while True:
            buckets: dict[tuple[int, int], list[int]] = {}
            pair = None
            for e, (iv, tv, img, _) in sorted(self.edges.items()):
                for o in (e, -e):
                    v = iv if o > 0 else tv
                    key = (v, self._image(o))
                    got = buckets.setdefault(key, [])
                    got.append(o)
                    if len(got) == 2:
                        pair = got
                        break
                if pair:
                    break
            if pair is None:
                return
            o1, o2 = pair
            self._fold_pair(o1, o2)

    def _fold_pair(self, o1: int, o2: int) -> None:
        a1, a2 = abs(o1), abs(o2)
        v = self.edges[a1][0] if o1 > 0 else self.edges[a1][1]
        t1 = self.edges[a1][1] if o1 > 0 else self.edges[a1][0]
        t2 = self.edges[a2][1] if o2 > 0 else self.edges[a2][0]
        if a1 == a2 or t1 == t2:
            raise AutomorphismError("folding would change the homotopy type")
        w1, w2 = self._crossing(o1), self._crossing(o2)
        if t2 != v:
            self._slide(t2, ~w2 * w1)
        else:
            self._slide(t1, ~w1 * w2)
        # merge t2 into t1 and drop a2
        del self.edges[a2]
        for rec in self.edges.values():
            if rec[0] == t2:
                rec[0] = t1
            if rec[1] == t2:
                rec[1] = t1
        if self.base == t2:
            self.base = t1

    def prune_leaves(self) -> None:
        while True:
            deg: dict[int, int] = {}
            for iv, tv, _, _ in self.edges.values():
                deg[iv] = deg.get(iv, 0) + 1
                deg[tv] = deg.get(tv, 0) + 1
            leaf_edge = None
            for e, (iv, tv, _, _) in sorted(self.edges.items()):
                if iv != tv and (deg[iv] == 1 or deg[tv] == 1):
                    leaf_edge = e
                    break
            if leaf_edge is None:
                return
            del self.edges[leaf_edge]

    def extract_labels(self, target_edges: Iterable[int]) -> dict[int, Word]:
        out: dict[int, Word] = {}
        for E in target_edges:
            hits = [(e, rec) for e, rec in self.edges.items() if abs(rec[2]) == E]
            if len(hits) != 1:
                raise GraphError(
                    "marking does not fold onto the target graph "
                    f"(edge {E} covered {len(hits)} times)"
                )
            _, rec = hits[0]
            out[E] = rec[3] if rec[2] > 0 else ~rec[3]
        return out


def _map_word(w: Word, images: Sequence[Word]) -> Word:
    letters: list[int] = []
    for a in w.letters:
        img = images[abs(a) - 1]
        letters.extend(img.letters if a > 0 else (~img).letters)
    return Word(w.rank, letters)


def _fix_conjugation(rank: int, check_words: Sequence[Word],
                     adjust: Sequence[Word]) -> list[Word] | None:
    """Find h with check_words[i] == h x_i h^-1 and conjugate `adjust` by it."""
    c1 = check_words[0]
    core, h0 = c1.cyclically_reduce()
    if core != Word.generator(rank, 1):
        return None
    bound = sum(len(w) for w in check_words) + len(h0) + 4
    x1 = Word.generator(rank, 1)
    for t in range(0, bound + 1):
        for s in (t, -t) if t else (0,):
            h = h0 * x1**s
            if all(check_words[i] == h * Word.generator(rank, i + 1) * ~h
                   for i in range(rank)):
                return [~h * w * h for w in adjust]
    return None


def derive_labels(rank: int, edges: dict[int, tuple[int, int, Fraction]],
                  marking: Sequence[EdgePath], base: int) -> dict[int, Word]:
    """Derive the inverse-marking label cocycle by folding a marked rose."""
    st = _FoldState(rank)
    for i, path in enumerate(marking):
        st.add_loop_path(list(path), Word.generator(rank, i + 1))
    try:
        st.fold_all()
    except AutomorphismError:
        raise GraphError("marking is not a homotopy equivalence")
    st.prune_leaves()
    labels = st.extract_labels(edges.keys())

    # correct for a possible basepoint conjugation introduced by pruning
    def loop_word(path: EdgePath, labs: dict[int, Word]) -> Word:
        letters: list[int] = []
        for o in path:
            w = labs[abs(o)]
            letters.extend(w.letters if o > 0 else (~w).letters)
        return Word(rank, letters)

    check = [loop_word(marking[i], labels) for i in range(rank)]
    if all(check[i] == Word.generator(rank, i + 1) for i in range(rank)):
        return labels
    items = sorted(labels)
    fixed = _fix_conjugation(rank, check, [labels[e] for e in items])
    if fixed is None:
        raise GraphError("marking is not a homotopy equivalence")
    return {e: w for e, w in zip(items, fixed)}


def invert_images(images: Sequence[Word]) -> tuple[Word, ...]:
    """Compute inverse images of an automorphism given by generator images.

    Folds the rose marked by the images down to the standard rose; raises
    AutomorphismError when the images do not define an automorphism.
    """
    images = tuple(images)
    rank = images[0].rank
    if len(images) != rank:
        raise AutomorphismError("need exactly rank images")
    if rank == 1:
        if images[0].letters not in ((1,), (-1,)):
            raise AutomorphismError("not an automorphism of Z")
        return (images[0],)
    st = _FoldState(rank)
    for i, img in enumerate(images):
        if not img:
            raise AutomorphismError("a generator image is trivial")
        st.add_loop_path(list(img.letters), Word.generator(rank, i + 1))
    try:
        st.fold_all()
    except AutomorphismError:
        raise AutomorphismError("images do not define an automorphism")
    st.prune_leaves()
    try:
        labels = st.extract_labels(range(1, rank + 1))
    except GraphError:
        raise AutomorphismError("images do not generate the free group")
    candidate = [labels[j] for j in range(1, rank + 1)]
    check = [_map_word(images[i], candidate) for i in range(rank)]
    if all(check[i] == Word.generator(rank, i + 1) for i in range(rank)):
        pass
    else:
        fixed = _fix_conjugation(rank, check, candidate)
        if fixed is None:
            raise AutomorphismError("images do not define an automorphism")
        candidate = fixed
    if any(_map_word(images[i], candidate) != Word.generator(rank, i + 1)
           for i in range(rank)):
        raise AutomorphismError("images do not define an automorphism")
    if any(_map_word(candidate[i], list(images)) != Word.generator(rank, i + 1)
           for i in range(rank)):
        raise AutomorphismError("images do not define an automorphism")
    return tuple(candidate)
