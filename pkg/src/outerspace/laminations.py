"""Twisting of a marked graph around a loop, measured against laminations.

A rational lamination is the family of leaves carried by one conjugacy
class: every translate of the axis of the generating word, in both
orientations.  The twist of a graph ``G`` around a nontrivial word ``a``,
relative to a lamination, is the supremum over leaves of the length of
fellow-traveling with the axis of ``a`` in the universal cover, divided
by the loop length of ``a``.  For rational laminations the supremum is
computed exactly — it is infinite precisely when the two words share a
power up to conjugacy — while laminations arising from iterating a graph
map are sampled through finite leaf windows, which yield certified lower
bounds tagged with their provenance.

Axes and leaves are handled as label sequences: the axis of ``a`` covers
the immersed cyclic edge path of ``a``, so an overlap between two axes
(or an axis and a finite leaf segment) is a common subword, weighted by
edge lengths.  A common subword of two periodic sequences at least as
long as the two periods combined forces the periods to merge, so the
finite search below is exhaustive whenever the words are incommensurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .graphs import (
    EdgePath,
    GraphError,
    MarkedGraph,
    reverse_path,
    tighten_path,
)
from .train_track import TrainTrackRep
from .words import Word

INFINITE = math.inf


@dataclass(frozen=True)
class RationalLamination:
    """All translates, in both orientations, of the axis of one word."""

    generator: Word

    def __post_init__(self):
        if not self.generator:
            raise GraphError("trivial word generates no lamination")
        core, _ = self.generator.cyclically_reduce()
        object.__setattr__(self, "generator", core)


@dataclass(frozen=True)
class LeafWindow:
    """A finite window of a lamination leaf, with its provenance.

    ``path`` is a tight edge path in ``host``; for windows produced by a
    verified train-track map the path is an exact leaf segment of the
    stable lamination of the map.
    """

    host: MarkedGraph
    path: EdgePath
    source: str
    seed: int
    iterations: int

    def as_word(self) -> Word:
        """The group element labeling the window path."""
        return self.host.word_of_path(self.path)


# ---------------------------------------------------------------------------
# overlap of label sequences


def _axis_body(g: MarkedGraph, a: Word) -> EdgePath:
    body = g.cyclic_loop_path(a)
    if not body:
        raise GraphError("trivial word has no axis")
    return body


def _segment_overlap_letters(body: EdgePath, seg: EdgePath) -> tuple[int, int]:
    """Longest run of ``seg`` matching the periodic sequence of ``body``.

    Returns ``(start, letters)`` for the best run, scanning every phase of
    the period and both directions of travel along the axis; ``letters`` is
    a count into ``seg``, so callers weight it with ``seg``'s own lengths.
    """
    best = (0, 0)
    s = len(seg)
    for axis in (body, reverse_path(body)):
        p = len(axis)
        run_next = [0] * p
        run_cur = [0] * p
        for i in range(s - 1, -1, -1):
            letter = seg[i]
            for j in range(p):
                if letter == axis[j]:
                    run_cur[j] = 1 + run_next[(j + 1) % p]
                    if run_cur[j] > best[1]:
                        best = (i, run_cur[j])
                else:
                    run_cur[j] = 0
            run_cur, run_next = run_next, run_cur
    return best


def _metric_run(g: MarkedGraph, seg: EdgePath, start: int, letters: int
                ) -> Fraction:
    return g.path_length(seg[start:start + letters])


def axis_overlap_length(g: MarkedGraph, a: Word,
                        w: Union[Word, LeafWindow, EdgePath]
                        ) -> Union[Fraction, float]:
    """Length of the longest common segment of the axis of ``a`` and ``w``.

    ``w`` may be a word (meaning: the whole family of translates of its
    axis — the overlap is infinite exactly when ``a`` and ``w`` are
    commensurable), a leaf window, or a tight edge path of ``g``; the last
    two are finite segments.  Lengths are measured with ``g``'s edge
    lengths, maximizing over all relative positions.
    """
    body = _axis_body(g, a)
    if isinstance(w, Word):
        if not w:
            raise GraphError("trivial word has no axis")
        if a.is_commensurable_with(w):
            return INFINITE
        other = _axis_body(g, w)
        # Any common subword of the two periodic sequences shorter than
        # the combined periods lives in this many repeats of the other
        # axis; a longer one would merge the periods, which the
        # commensurability check has excluded.
        reps = (len(body) + 2) // len(other) + 3
        seg: EdgePath = other * reps
        start, letters = _segment_overlap_letters(body, seg)
        if letters >= len(body) + len(other):
            raise AssertionError(
                "periodic overlap exceeded the incommensurability bound")
        return _metric_run(g, seg, start, letters)
    if isinstance(w, LeafWindow):
        seg = w.path if w.host is g else tighten_path(
            g.path_of_word(w.as_word()))
    else:
        seg = tighten_path(tuple(w))
    start, letters = _segment_overlap_letters(body, seg)
    return _metric_run(g, seg, start, letters)


# ---------------------------------------------------------------------------
# twists


def rational_twist(g: MarkedGraph, a: Word, lam: RationalLamination
                   ) -> Union[Fraction, float]:
    """Twist of ``g`` around ``a`` relative to a rational lamination.

    The supremum over leaves of overlap length with the axis of ``a``,
    normalized by the loop length of ``a``; infinite exactly when the
    generator shares a power with ``a`` up to conjugacy.
    """
    if not a:
        raise GraphError("trivial word has no axis")
    la = g.loop_length(a)
    if la == 0:
        return Fraction(0)
    overlap = axis_overlap_length(g, a, lam.generator)
    if overlap == INFINITE:
        return INFINITE
    return overlap / la


def leaf_windows(tt: TrainTrackRep, m: int, *, budget: int = 10**5
                 ) -> list[LeafWindow]:
    """Windows of the stable lamination: iterated edge images of ``tt``.

    Edge images of a train-track map never backtrack, so each window is a
    genuine leaf segment of the attracting lamination in ``tt.graph``.
    """
    if m < 0:
        raise GraphError("iteration count must be nonnegative")
    out = []
    for e in sorted(tt.graph.edges):
        path = tt.iterate_edge(e, m, budget=budget)
        out.append(LeafWindow(tt.graph, path, "train-track", e, m))
    return out


def iterated_word_windows(g: MarkedGraph, phi, m: int, *,
                          budget: int = 10**5) -> list[LeafWindow]:
    """Leaf approximations from iterating an automorphism on the basis.

    Useful when no train-track representative is available: the window is
    the tight path of an iterated image word in ``g``.  Unlike train-track
    windows these are approximations to leaves — values derived from them
    are still genuine overlaps of the stated path, and are reported with
    this provenance.
    """
    if m < 0:
        raise GraphError("iteration count must be nonnegative")
    out = []
    for i in range(1, g.rank + 1):
        w = Word.generator(g.rank, i)
        for _ in range(m):
            w = phi(w)
            if len(w) > budget:
                raise GraphError(
                    f"iterated image exceeded {budget} letters")
        out.append(LeafWindow(g, tighten_path(g.path_of_word(w)),
                              "word-iteration", i, m))
    return out


def lamination_twist_lower_bound(g: MarkedGraph, a: Word,
                                 windows: Iterable[LeafWindow]) -> Fraction:
    """Largest normalized axis overlap over the given leaf windows.

    A certified lower bound for the twist relative to the sampled
    lamination; never claimed to attain the supremum.
    """
    if not a:
        raise GraphError("trivial word has no axis")
    la = g.loop_length(a)
    if la == 0:
        return Fraction(0)
    best = Fraction(0)
    for win in windows:
        overlap = axis_overlap_length(g, a, win)
        best = max(best, overlap / la)
    return best


def n_cover_check(g: MarkedGraph, path: Union[Word, EdgePath], a: Word,
                  n: int) -> bool:
    """Does the path overlap some axis of ``a`` for length at least
    ``n`` times the loop length of ``a``?"""
    if not a:
        raise GraphError("trivial word has no axis")
    if isinstance(path, Word):
        seg: EdgePath = tighten_path(g.path_of_word(path))
    else:
        seg = tighten_path(tuple(path))
    if not seg:
        return n <= 0
    overlap = axis_overlap_length(g, a, seg)
    return overlap >= n * g.loop_length(a)


# ---------------------------------------------------------------------------
# semicontinuity monitoring


@dataclass(frozen=True)
class SemicontinuityReport:
    """Twist values along a sequence, compared with a limiting pair.

    ``flagged`` lists tail rows whose exact value drops below the limit
    value: the twist is lower semicontinuous, so a persistent drop at the
    end of the sampled prefix is worth inspecting.  Lower-bound rows are
    never flagged (their slack is unknown by construction).
    """

    values: tuple
    limit_value: object
    exact: tuple
    flagged: tuple

    def as_table(self) -> str:
        lines = ["index,value,method,flag"]
        for i, (v, ex) in enumerate(zip(self.values, self.exact)):
            tag = "exact" if ex else "lower-bound"
            flag = "check" if i in self.flagged else ""
            lines.append(f"{i},{v},{tag},{flag}")
        lines.append(f"limit,{self.limit_value},exact,")
        return "\n".join(lines)


def semicontinuity_monitor(rows: Sequence[tuple], limit: tuple,
                           *, tail: int = 3) -> SemicontinuityReport:
    """Watch twist values along a sequence of (graph, lamination) pairs.

    Each row is ``(graph, a, lamination-or-windows)``; the limit row has
    the same shape with an exact rational lamination.  Rows in the final
    ``tail`` whose exact value is smaller than the limit value are
    flagged.
    """

    def evaluate(row) -> tuple:
        g, a, lam = row
        if isinstance(lam, RationalLamination):
            return rational_twist(g, a, lam), True
        return lamination_twist_lower_bound(g, a, lam), False

    values = []
    exact = []
    for row in rows:
        v, ex = evaluate(row)
        values.append(v)
        exact.append(ex)
    limit_value, limit_exact = evaluate(limit)
    if not limit_exact:
        raise GraphError("limit row must carry a rational lamination")
    flagged = tuple(
        i for i in range(max(0, len(values) - tail), len(values))
        if exact[i] and values[i] < limit_value)
    return SemicontinuityReport(tuple(values), limit_value, tuple(exact),
                                flagged)
