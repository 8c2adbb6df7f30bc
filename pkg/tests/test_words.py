"""Tests for free-group words, automorphisms, and Whitehead graphs."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from outerspace.words import (
    Automorphism,
    AutomorphismError,
    Word,
    WordError,
    is_non_separable_certificate,
    whitehead_graph,
)


def W(text, rank=2, names=None):
    return Word.parse(text, rank, names)


# ---------------------------------------------------------------------------
# free reduction / multiplication


def test_reduce_basic():
    assert Word(2, (1, -1)).letters == ()
    assert Word(2, (1, 2, -2, -1, 2)).letters == (2,)
    assert (W("a b") * W("b^-1 a")).letters == (1, 1)


def test_invalid_letters():
    with pytest.raises(WordError):
        Word(2, (3,))
    with pytest.raises(WordError):
        Word(2, (0,))


def test_inverse_and_pow():
    w = W("a b a^-1")
    assert (~w).letters == (1, -2, -1)
    assert (w * ~w).letters == ()
    assert (w**3) == w * w * w
    assert (w**-2) == ~w * ~w
    assert w**0 == Word.identity(2)


def test_conjugate():
    w = W("a")
    assert w.conjugate(W("b")).letters == (2, 1, -2)


# ---------------------------------------------------------------------------
# cyclic reduction


def test_cyclic_reduce_strips_matching_ends():
    # x y x^-1 y x y^-1 x^-1 peels down to the single letter y
    w = W("x y x^-1 y x y^-1 x^-1", rank=2, names=("x", "y"))
    core, conj = w.cyclically_reduce()
    assert core == W("y", rank=2, names=("x", "y"))
    assert conj == W("x y x^-1", rank=2, names=("x", "y"))
    assert conj * core * ~conj == w


def test_cyclic_reduce_identity_on_reduced():
    w = W("a b")
    core, conj = w.cyclically_reduce()
    assert core == w and conj == Word.identity(2)


letters_st = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=24)


@given(letters_st)
def test_cyclic_reduce_roundtrip(lets):
    w = Word(3, lets)
    core, conj = w.cyclically_reduce()
    assert core.is_cyclically_reduced()
    assert conj * core * ~conj == w


@given(letters_st, letters_st)
def test_mul_reduced(a, b):
    w = Word(3, a) * Word(3, b)
    # no adjacent cancelling pair survives
    assert all(w.letters[i] != -w.letters[i + 1] for i in range(len(w) - 1))


def test_conjugacy_and_roots():
    a = W("a b a b")
    assert a.primitive_root() == (W("a b"), 2)
    assert W("a b").is_conjugate_to(W("b a"))
    assert not W("a b").is_conjugate_to(W("a b^-1"))
    assert W("a b a b").is_commensurable_with(W("b a"))
    assert not W("a").is_commensurable_with(W("b"))
    # commensurable with own inverse's powers
    assert W("a b").is_commensurable_with(W("b^-1 a^-1"))


# ---------------------------------------------------------------------------
# automorphisms


def fibonacci_auto():
    # a -> ab, b -> a ; inverse: a -> b, b -> b^-1 a
    return Automorphism(
        [W("a b"), W("a")],
        [W("b"), W("b^-1 a")],
    )


def test_automorphism_apply():
    phi = fibonacci_auto()
    assert phi(W("a")) == W("a b")
    assert phi(W("b^-1")) == W("a^-1")
    assert phi(phi(W("a"))) == W("a b a")


def test_automorphism_requires_valid_witness():
    with pytest.raises(AutomorphismError):
        Automorphism([W("a b"), W("a")], [W("a"), W("b")])


def test_automorphism_not_injective_rejected():
    # images that do not generate cannot have a witness
    with pytest.raises(AutomorphismError):
        Automorphism([W("a"), W("a")], [W("a"), W("a")])


def test_compose_and_power():
    phi = fibonacci_auto()
    ident = phi * phi.inverse()
    assert ident == Automorphism.identity(2)
    assert (phi**2)(W("b")) == phi(phi(W("b")))
    assert (phi**-1) == phi.inverse()
    psi = phi**3
    assert psi.inverse()(psi(W("a b a^-1"))) == W("a b a^-1")


def test_parse_format_roundtrip():
    text = "x -> x y\ny -> y"
    phi = Automorphism.parse(text, inverse_text="x -> x y^-1\ny -> y")
    names = ("x", "y")
    assert phi.images[0] == Word.parse("x y", 2, names)
    out = phi.format(names)
    assert "x ->" in out and "y ->" in out


def test_parse_derives_inverse_by_folding():
    phi = Automorphism.parse("a -> a b\nb -> a")
    assert phi.inverse_images == (W("b"), W("b^-1 a"))


@st.composite
def small_autos(draw):
    """Random automorphisms built from Nielsen moves with known inverses."""
    rank = 3
    phi = Automorphism.identity(rank)
    n = draw(st.integers(min_value=0, max_value=5))
    for _ in range(n):
        kind = draw(st.integers(min_value=0, max_value=2))
        i = draw(st.integers(min_value=1, max_value=rank))
        j = draw(st.integers(min_value=1, max_value=rank))
        if kind == 0 and i != j:  # x_i -> x_i x_j
            imgs = [Word.generator(rank, t + 1) for t in range(rank)]
            invs = [Word.generator(rank, t + 1) for t in range(rank)]
            imgs[i - 1] = Word(rank, (i, j))
            invs[i - 1] = Word(rank, (i, -j))
            phi = phi * Automorphism(imgs, invs)
        elif kind == 1:  # invert x_i
            imgs = [Word.generator(rank, t + 1) for t in range(rank)]
            imgs[i - 1] = Word(rank, (-i,))
            phi = phi * Automorphism(imgs, imgs)
        else:  # swap i, j
            imgs = [Word.generator(rank, t + 1) for t in range(rank)]
            imgs[i - 1], imgs[j - 1] = imgs[j - 1], imgs[i - 1]
            phi = phi * Automorphism(imgs, imgs)
    return phi


@given(small_autos(), st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=12))
@settings(max_examples=60)
def test_automorphism_is_homomorphism_with_inverse(phi, lets):
    w = Word(3, lets)
    assert phi.apply_inverse(phi(w)) == w
    u = Word(3, lets[: len(lets) // 2])
    v = Word(3, lets[len(lets) // 2 :])
    assert phi(u * v) == phi(u) * phi(v)


# ---------------------------------------------------------------------------
# Whitehead graphs


def test_whitehead_commutator_is_cycle():
    wg = whitehead_graph([W("a b a^-1 b^-1")], 2)
    assert wg.edge_count() == 4
    assert wg.is_connected()
    assert wg.cut_vertices() == []
    assert is_non_separable_certificate([W("a b a^-1 b^-1")], 2)


def test_whitehead_single_generator_disconnected():
    wg = whitehead_graph([W("a")], 2)
    assert not wg.is_connected()
    assert not is_non_separable_certificate([W("a")], 2)


def test_whitehead_edge_count_equals_cyclic_length():
    for text in ["a b a b^-1", "a a b", "a b a^-1 b^-1"]:
        w = W(text)
        wg = whitehead_graph([w], 2)
        assert wg.edge_count() == len(w.cyclically_reduce()[0])


def test_separable_pair_rejected():
    # {xy, yz} extends to the basis {xy, yz, z}: separable, certificate fails
    names = ("x", "y", "z")
    c1 = Word.parse("x y", 3, names)
    c2 = Word.parse("y z", 3, names)
    assert not is_non_separable_certificate([c1, c2], 3)


def test_filling_style_pair_certified():
    names = ("x", "y", "z")
    c1 = Word.parse("x y x y^-1", 3, names)
    c2 = Word.parse("y z y z^-1", 3, names)
    assert is_non_separable_certificate([c1, c2], 3)


def test_twisted_images_stay_certified():
    """Once certified, conjugacy classes stay certified after twisting one side."""
    names = ("x", "y", "z")
    c1 = Word.parse("x y x y^-1", 3, names)
    c2 = Word.parse("y z y z^-1", 3, names)
    # HNN-style twist fixing x, y and sending z -> c1 z
    delta = Automorphism(
        [Word.parse("x", 3, names), Word.parse("y", 3, names),
         c1 * Word.generator(3, 3)],
        [Word.parse("x", 3, names), Word.parse("y", 3, names),
         ~c1 * Word.generator(3, 3)],
    )
    first_pass = None
    w = c2
    for n in range(1, 21):
        w = delta(w)
        ok = is_non_separable_certificate([c2, w], 3)
        if first_pass is None and ok:
            first_pass = n
        if first_pass is not None:
            assert ok, f"certificate dropped out again at twist power {n}"
    assert first_pass is not None and first_pass <= 20
