"""Free group words, automorphisms, and Whitehead graphs.

Letters of the free group F_k are nonzero integers: ``i`` is the i-th
generator (1-based), ``-i`` its inverse.  Words are stored freely reduced.
Text form uses whitespace-separated tokens ``x`` / ``x^-1``; a compact
form with single letters (``xY`` meaning x y^-1) is also accepted.
"""

from __future__ import annotations

from typing import Iterable, Sequence


class WordError(ValueError):
    pass


class AutomorphismError(ValueError):
    pass


DEFAULT_NAMES = tuple("abcdefghijklmnopqrstuvwxyz")


def default_names(rank: int) -> tuple[str, ...]:
    if rank > len(DEFAULT_NAMES):
        raise WordError(f"no default names for rank {rank}")
    return DEFAULT_NAMES[:rank]


def reduce_letters(letters: Iterable[int], rank: int) -> tuple[int, ...]:
    """Freely reduce a letter sequence, validating letters against the rank."""
    stack: list[int] = []
    for a in letters:
        if not isinstance(a, int) or a == 0 or abs(a) > rank:
            raise WordError(f"letter {a!r} invalid for rank {rank}")
        if stack and stack[-1] == -a:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


class Word:
    """A freely reduced word in F_rank."""

    __slots__ = ("rank", "letters")

    def __init__(self, rank: int, letters: Iterable[int] = (), *, _reduced: bool = False):
        if rank < 1:
            raise WordError("rank must be >= 1")
        object.__setattr__(self, "rank", rank)
        lets = tuple(letters) if _reduced else reduce_letters(letters, rank)
        object.__setattr__(self, "letters", lets)

    def __setattr__(self, *a):  # immutable
        raise AttributeError("Word is immutable")

    def __reduce__(self):  # slots + frozen setattr need explicit pickling
        return (_make_word, (self.rank, self.letters))

    # -- constructors ---------------------------------------------------
    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls(rank, (), _reduced=True)

    @classmethod
    def generator(cls, rank: int, i: int) -> "Word":
        if not 1 <= abs(i) <= rank:
            raise WordError(f"generator {i} out of range")
        return cls(rank, (i,), _reduced=True)

    # -- basics ----------------------------------------------------------
    def __len__(self) -> int:
        return len(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Word)
            and self.rank == other.rank
            and self.letters == other.letters
        )

    def __hash__(self):
        return hash((self.rank, self.letters))

    def __mul__(self, other: "Word") -> "Word":
        if self.rank != other.rank:
            raise WordError("rank mismatch")
        a, b = self.letters, other.letters
        i = 0
        m = min(len(a), len(b))
        while i < m and a[len(a) - 1 - i] == -b[i]:
            i += 1
        return Word(self.rank, a[: len(a) - i] + b[i:], _reduced=True)

    def __invert__(self) -> "Word":
        return Word(self.rank, tuple(-a for a in reversed(self.letters)), _reduced=True)

    def inverse(self) -> "Word":
        return ~self

    def __pow__(self, n: int) -> "Word":
        if n == 0:
            return Word.identity(self.rank)
        base = self if n > 0 else ~self
        out = base
        for _ in range(abs(n) - 1):
            out = out * base
        return out

    def conjugate(self, by: "Word") -> "Word":
        """Return ``by * self * by^-1``."""
        return by * self * ~by

    # -- cyclic structure -------------------------------------------------
    def cyclically_reduce(self) -> tuple["Word", "Word"]:
        """Return ``(core, conj)`` with ``self == conj * core * conj^-1``."""
        lets = list(self.letters)
        pre: list[int] = []
        while len(lets) >= 2 and lets[0] == -lets[-1]:
            pre.append(lets[0])
            lets = lets[1:-1]
        return Word(self.rank, lets, _reduced=True), Word(self.rank, pre, _reduced=True)

    def is_cyclically_reduced(self) -> bool:
        L = self.letters
        return len(L) < 2 or L[0] != -L[-1]

    def cyclic_rotations(self) -> list["Word"]:
        core, _ = self.cyclically_reduce()
        L = core.letters
        return [Word(self.rank, L[i:] + L[:i], _reduced=True) for i in range(max(1, len(L)))]

    def is_conjugate_to(self, other: "Word") -> bool:
        if self.rank != other.rank:
            raise WordError("rank mismatch")
        a, _ = self.cyclically_reduce()
        b, _ = other.cyclically_reduce()
        if len(a) != len(b):
            return False
        if not a.letters:
            return True
        return b in a.cyclic_rotations()

    def primitive_root(self) -> tuple["Word", int]:
        """For a cyclically reduced word, the shortest v and s>0 with self = v^s."""
        core, _ = self.cyclically_reduce()
        if core.letters != self.letters:
            raise WordError("primitive_root requires a cyclically reduced word")
        n = len(self.letters)
        if n == 0:
            raise WordError("primitive_root of the identity")
        for d in range(1, n + 1):
            if n % d == 0:
                v = self.letters[:d]
                if v * (n // d) == self.letters:
                    return Word(self.rank, v, _reduced=True), n // d
        raise AssertionError("unreachable")

    def is_commensurable_with(self, other: "Word") -> bool:
        """True iff nontrivial powers of self and other are conjugate."""
        if not self.letters or not other.letters:
            raise WordError("commensurability needs nontrivial words")
        a, _ = self.cyclically_reduce()
        b, _ = other.cyclically_reduce()
        ra, _ = a.primitive_root()
        rb, _ = b.primitive_root()
        return ra.is_conjugate_to(rb) or ra.is_conjugate_to(~rb)

    # -- text ---------------------------------------------------------------
    @classmethod
    def parse(cls, text: str, rank: int, names: Sequence[str] | None = None) -> "Word":
        names = tuple(names) if names is not None else default_names(rank)
        if len(names) != rank:
            raise WordError("names length must equal rank")
        index = {nm: i + 1 for i, nm in enumerate(names)}
        text = text.strip()
        if not text or text == "1":
            return cls.identity(rank)
        letters: list[int] = []
        if any(ch.isspace() for ch in text) or "^" in text or text in index:
            for tok in text.split():
                neg = False
                if tok.endswith("^-1"):
                    tok, neg = tok[:-3], True
                if tok not in index:
                    raise WordError(f"unknown generator {tok!r}")
                letters.append(-index[tok] if neg else index[tok])
        else:
            # compact single-letter form, uppercase = inverse
            for ch in text:
                lo = ch.lower()
                if lo not in index:
                    raise WordError(f"unknown generator {ch!r}")
                letters.append(-index[lo] if ch.isupper() else index[lo])
        return cls(rank, letters)

    def format(self, names: Sequence[str] | None = None) -> str:
        names = tuple(names) if names is not None else default_names(self.rank)
        if not self.letters:
            return "1"
        out = []
        for a in self.letters:
            nm = names[abs(a) - 1]
            out.append(nm if a > 0 else nm + "^-1")
        return " ".join(out)

    def __repr__(self):
        return f"Word({self.format()!r})"


def _make_word(rank: int, letters: tuple[int, ...]) -> Word:
    return Word(rank, letters, _reduced=True)


class Automorphism:
    """An automorphism of F_rank given by generator images plus an inverse witness.

    Construction (following the toolkit-wide policy) requires images of the
    inverse automorphism; both composites are verified to be the identity.
    """

    __slots__ = ("rank", "images", "inverse_images")

    def __init__(self, images: Sequence[Word], inverse_images: Sequence[Word]):
        images = tuple(images)
        inverse_images = tuple(inverse_images)
        if not images:
            raise AutomorphismError("empty image list")
        rank = images[0].rank
        if len(images) != rank or len(inverse_images) != rank:
            raise AutomorphismError("need exactly rank images in each direction")
        if any(w.rank != rank for w in images + inverse_images):
            raise AutomorphismError("rank mismatch among images")
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "inverse_images", inverse_images)
        for i in range(rank):
            gen = Word.generator(rank, i + 1)
            if self.apply(inverse_images[i]) != gen or self.apply_inverse(images[i]) != gen:
                raise AutomorphismError(
                    f"inverse witness fails on generator {i + 1}"
                )

    def __setattr__(self, *a):
        raise AttributeError("Automorphism is immutable")

    def __reduce__(self):
        return (Automorphism, (self.images, self.inverse_images))

    @classmethod
    def identity(cls, rank: int) -> "Automorphism":
        gens = tuple(Word.generator(rank, i + 1) for i in range(rank))
        return cls(gens, gens)

    def _map(self, w: Word, images: tuple[Word, ...]) -> Word:
        letters: list[int] = []
        for a in w.letters:
            img = images[abs(a) - 1]
            letters.extend(img.letters if a > 0 else (~img).letters)
        return Word(self.rank, letters)

    def apply(self, w: Word) -> Word:
        if w.rank != self.rank:
            raise AutomorphismError("rank mismatch")
        return self._map(w, self.images)

    def apply_inverse(self, w: Word) -> Word:
        if w.rank != self.rank:
            raise AutomorphismError("rank mismatch")
        return self._map(w, self.inverse_images)

    def __call__(self, w: Word) -> Word:
        return self.apply(w)

    def inverse(self) -> "Automorphism":
        return Automorphism(self.inverse_images, self.images)

    def __mul__(self, other: "Automorphism") -> "Automorphism":
        """Composition: (self * other)(w) == self(other(w))."""
        if self.rank != other.rank:
            raise AutomorphismError("rank mismatch")
        images = tuple(self.apply(w) for w in other.images)
        inv = tuple(other.apply_inverse(w) for w in self.inverse_images)
        return Automorphism(images, inv)

    def __pow__(self, n: int) -> "Automorphism":
        if n == 0:
            return Automorphism.identity(self.rank)
        base = self if n > 0 else self.inverse()
        out = base
        for _ in range(abs(n) - 1):
            out = out * base
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Automorphism)
            and self.rank == other.rank
            and self.images == other.images
        )

    def __hash__(self):
        return hash(("Automorphism", self.images))

    # -- text -----------------------------------------------------------
    @classmethod
    def parse(cls, text: str, names: Sequence[str] | None = None,
              inverse_text: str | None = None) -> "Automorphism":
        """Parse lines ``x -> x y z^-1``; generator order is the line order.

        If ``inverse_text`` is omitted the inverse witness is derived by
        Stallings folding (see :func:`outerspace.graphs.invert_automorphism`).
        """
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        lhs = []
        rhs = []
        for ln in lines:
            if "->" not in ln:
                raise AutomorphismError(f"bad line {ln!r}")
            left, right = ln.split("->", 1)
            lhs.append(left.strip())
            rhs.append(right.strip())
        rank = len(lhs)
        if names is None:
            names = tuple(lhs)
        if sorted(names) != sorted(lhs):
            raise AutomorphismError("left-hand generators do not match names")
        order = [lhs.index(nm) for nm in names]
        images = tuple(Word.parse(rhs[j], rank, names) for j in order)
        if inverse_text is not None:
            inv = cls.parse(inverse_text, names)
            return cls(images, inv.images)
        from .graphs import invert_images  # deferred: avoids import cycle

        return cls(images, invert_images(images))

    def format(self, names: Sequence[str] | None = None) -> str:
        names = tuple(names) if names is not None else default_names(self.rank)
        return "\n".join(
            f"{names[i]} -> {self.images[i].format(names)}" for i in range(self.rank)
        )

    def __repr__(self):
        return f"Automorphism({self.format()!r})"


# ---------------------------------------------------------------------------
# Whitehead graphs


class WhiteheadGraph:
    """Whitehead graph of a set of conjugacy classes w.r.t. the standard basis.

    Vertices are the 2k signed letters; every adjacent pair (a, b) in a
    cyclic word contributes an edge {a, b^-1}.
    """

    def __init__(self, words: Sequence[Word], rank: int):
        self.rank = rank
        self.vertices = tuple(range(1, rank + 1)) + tuple(range(-1, -rank - 1, -1))
        self.edges: list[tuple[int, int]] = []
        for w in words:
            if w.rank != rank:
                raise WordError("rank mismatch")
            core, _ = w.cyclically_reduce()
            L = core.letters
            n = len(L)
            for i in range(n):
                a, b = L[i], L[(i + 1) % n]
                self.edges.append((a, -b))
        self.adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in self.edges:
            self.adj[a].add(b)
            self.adj[b].add(a)

    def edge_count(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        verts = self.vertices
        if not verts:
            return True
        seen = {verts[0]}
        stack = [verts[0]]
        while stack:
            v = stack.pop()
            for u in self.adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(verts)

    def cut_vertices(self) -> list[int]:
        out = []
        for v in self.vertices:
            rest = [u for u in self.vertices if u != v]
            if not rest:
                continue
            seen = {rest[0]}
            stack = [rest[0]]
            while stack:
                x = stack.pop()
                for u in self.adj[x]:
                    if u != v and u not in seen:
                        seen.add(u)
                        stack.append(u)
            if len(seen) != len(rest):
                out.append(v)
        return out


def whitehead_graph(words: Sequence[Word], rank: int) -> WhiteheadGraph:
    return WhiteheadGraph(words, rank)


def is_non_separable_certificate(words: Sequence[Word], rank: int,
                                 search_basis: bool = False) -> bool:
    """Sufficient certificate that the conjugacy classes are not separable.

    True iff the union Whitehead graph is connected with no cut vertex.
    With ``search_basis`` a short greedy Whitehead-move minimization is run
    first (ranks <= 3) and the certificate is tested in that basis too.
    """
    wg = WhiteheadGraph(words, rank)
    if wg.is_connected() and not wg.cut_vertices():
        return True
    if search_basis and rank <= 3:
        moved = whitehead_minimize(words, rank)
        wg2 = WhiteheadGraph(moved, rank)
        return wg2.is_connected() and not wg2.cut_vertices()
    return False


def _type2_whitehead_moves(rank: int):
    """Generate Whitehead automorphisms x -> one of {x, xa, a^-1 x, a^-1 x a}."""
    for a in list(range(1, rank + 1)) + list(range(-1, -rank - 1, -1)):
        others = [i for i in range(1, rank + 1) if i != abs(a)]
        # each other generator independently gets one of 4 treatments
        choices: list[list[tuple[int, ...]]] = []
        for x in others:
            choices.append([(x,), (x, a), (-a, x), (-a, x, a)])
        idx = [0] * len(others)
        while True:
            if any(idx):
                images = []
                inverse = []
                for i in range(1, rank + 1):
                    if i == abs(a):
                        images.append(Word.generator(rank, i))
                        inverse.append(Word.generator(rank, i))
                    else:
                        j = others.index(i)
                        images.append(Word(rank, choices[j][idx[j]]))
                        mode = idx[j]
                        inv_lets = {
                            0: (i,),
                            1: (i, -a),
                            2: (a, i),
                            3: (a, i, -a),
                        }[mode]
                        inverse.append(Word(rank, inv_lets))
                yield Automorphism(images, inverse)
            k = 0
            while k < len(idx):
                idx[k] += 1
                if idx[k] < 4:
                    break
                idx[k] = 0
                k += 1
            else:
                return


def whitehead_minimize(words: Sequence[Word], rank: int) -> list[Word]:
    """Greedy total-cyclic-length minimization by type-2 Whitehead moves."""
    if rank > 3:
        raise WordError("whitehead_minimize is implemented for ranks <= 3")
    cur = [w.cyclically_reduce()[0] for w in words]
    total = sum(len(w) for w in cur)
    improved = True
    while improved:
        improved = False
        for phi in _type2_whitehead_moves(rank):
            cand = [phi(w).cyclically_reduce()[0] for w in cur]
            t = sum(len(w) for w in cand)
            if t < total:
                cur, total = cand, t
                improved = True
                break
    return cur
