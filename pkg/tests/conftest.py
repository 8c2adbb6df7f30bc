"""Shared builders and hypothesis strategies for the test suite."""

from fractions import Fraction

from hypothesis import strategies as st

from outerspace.graphs import MarkedGraph, invert_images
from outerspace.words import Automorphism, Word


def W(text, rank=2, names=None):
    return Word.parse(text, rank, names=names)


def auto(images_text, rank=None, names=None):
    """Automorphism from comma-separated generator images, e.g. "a b, a"."""
    parts = [p.strip() for p in images_text.split(",")]
    rank = rank if rank is not None else len(parts)
    images = tuple(W(p, rank, names) for p in parts)
    return Automorphism(images, invert_images(images))


def theta_graph():
    """Rank-2 theta graph: two vertices, three edges, unit volume."""
    third = Fraction(1, 3)
    edges = {1: (0, 1, third), 2: (0, 1, third), 3: (0, 1, third)}
    marking = ((1, -2), (2, -3))
    labels = {1: W("a"), 2: Word.identity(2), 3: W("b^-1")}
    return MarkedGraph(2, edges, marking, labels, 0)


def barbell_graph():
    """Rank-2 barbell: two loops joined by a bar, unit volume."""
    third = Fraction(1, 3)
    edges = {1: (0, 0, third), 2: (1, 1, third), 3: (0, 1, third)}
    marking = ((1,), (3, 2, -3))
    labels = {1: W("a"), 2: W("b"), 3: Word.identity(2)}
    return MarkedGraph(2, edges, marking, labels, 0)


def petal_twist(rank: int, c: Word, target: int) -> Automorphism:
    """The automorphism fixing all generators except x_target -> c x_target.

    c must not involve the target generator.
    """
    if any(abs(a) == target for a in c.letters):
        raise ValueError("twisting word must avoid the twisted generator")
    images = [Word.generator(rank, i + 1) for i in range(rank)]
    inverses = [Word.generator(rank, i + 1) for i in range(rank)]
    images[target - 1] = c * images[target - 1]
    inverses[target - 1] = ~c * inverses[target - 1]
    return Automorphism(tuple(images), tuple(inverses))


@st.composite
def nielsen_autos(draw, rank=2, max_moves=5):
    """Random automorphisms built from Nielsen moves with exact inverses."""
    phi = Automorphism.identity(rank)
    gens = [Word.generator(rank, i + 1) for i in range(rank)]
    for _ in range(draw(st.integers(min_value=1, max_value=max_moves))):
        kind = draw(st.sampled_from(["swap", "invert", "left", "right"]))
        i = draw(st.integers(min_value=0, max_value=rank - 1))
        j = draw(st.integers(min_value=0, max_value=rank - 1))
        if i == j:
            j = (j + 1) % rank
        images = list(gens)
        inverse = list(gens)
        if kind == "swap":
            images[i], images[j] = images[j], images[i]
            inverse[i], inverse[j] = inverse[j], inverse[i]
        elif kind == "invert":
            images[i] = ~images[i]
            inverse[i] = ~inverse[i]
        elif kind == "left":
            images[i] = images[j] * images[i]
            inverse[i] = ~inverse[j] * inverse[i]
        else:
            images[i] = images[i] * images[j]
            inverse[i] = inverse[i] * ~inverse[j]
        phi = Automorphism(tuple(images), tuple(inverse)) * phi
    return phi
