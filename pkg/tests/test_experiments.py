"""Splitting twists, the exact one-twist displacement law, and the sweep."""

import math
from fractions import Fraction

import pytest

from conftest import W
from outerspace.experiments import (
    DEFAULT_FAMILY_CONFIG,
    ConfigError,
    SplittingSpec,
    dehn_twist,
    example_2_1_check,
    family_automorphism,
    family_sweep,
    linear_fit,
    parse_config,
    splitting_from_config,
)
from outerspace.words import Automorphism, Word

XYZ = ("x", "y", "z")


def w3(text):
    return W(text, 3, names=XYZ)


# ---------------------------------------------------------------------------
# twists of cyclic splittings


def test_hnn_twist_multiplies_the_stable_letter():
    spec = SplittingSpec("hnn", 3, (1, 2), w3("x y"), stable=3)
    d = dehn_twist(spec)
    assert d(w3("x")) == w3("x")
    assert d(w3("y")) == w3("y")
    assert d(w3("z")) == w3("x y z")


def test_amalgam_twist_conjugates_the_far_side():
    spec = SplittingSpec("amalgam", 3, (1,), w3("x"))
    d = dehn_twist(spec)
    assert d(w3("x")) == w3("x")
    assert d(w3("y")) == w3("x y x^-1")
    assert d(w3("z")) == w3("x z x^-1")


def test_twist_inverse_is_exact():
    for spec in (
        SplittingSpec("hnn", 3, (1, 2), w3("x y x y^-1"), stable=3),
        SplittingSpec("amalgam", 3, (2, 3), w3("y z y z^-1")),
    ):
        d = dehn_twist(spec)
        assert d * d.inverse() == Automorphism.identity(3)
        assert d.inverse() * d == Automorphism.identity(3)


def test_splitting_validation_rejects_bad_data():
    with pytest.raises(ConfigError):
        SplittingSpec("hnn", 3, (1, 2), w3("x z"), stable=3)  # word leaves part
    with pytest.raises(ConfigError):
        SplittingSpec("hnn", 3, (1, 2), w3("x"), stable=2)  # stable inside part
    with pytest.raises(ConfigError):
        SplittingSpec("amalgam", 3, (1, 2, 3), w3("x"))  # no second side
    with pytest.raises(ConfigError):
        SplittingSpec("amalgam", 3, (1,), w3("x"), stable=3)
    with pytest.raises(ConfigError):
        SplittingSpec("amalgam", 3, (1,), Word.identity(3))
    with pytest.raises(ConfigError):
        SplittingSpec("ladder", 3, (1,), w3("x"))


# ---------------------------------------------------------------------------
# configuration parsing


def test_default_config_round_trips():
    cfg = parse_config(DEFAULT_FAMILY_CONFIG)
    s1 = splitting_from_config(cfg, "spec1")
    s2 = splitting_from_config(cfg, "spec2")
    assert s1 == SplittingSpec("hnn", 3, (1, 2), w3("x y x y^-1"), stable=3)
    assert s2 == SplittingSpec("amalgam", 3, (2, 3), w3("y z y z^-1"))


def test_parse_config_reports_malformed_lines():
    assert parse_config("a = 1\n# note\n\nb = x y") == {"a": "1", "b": "x y"}
    with pytest.raises(ConfigError):
        parse_config("just words")


def test_splitting_from_config_reports_missing_and_unknown():
    cfg = parse_config(DEFAULT_FAMILY_CONFIG)
    with pytest.raises(ConfigError):
        splitting_from_config(cfg, "spec9")
    bad = dict(cfg)
    bad["spec1.vertex"] = "x q"
    with pytest.raises(ConfigError):
        splitting_from_config(bad, "spec1")
    norank = dict(cfg)
    del norank["rank"]
    with pytest.raises(ConfigError):
        splitting_from_config(norank, "spec1")


# ---------------------------------------------------------------------------
# the exact one-twist displacement law


def test_one_twist_law_is_exact_on_small_grids():
    rep = example_2_1_check(2, W("a"), range(0, 8))
    assert rep.all_ok
    by_n = {r.n: r for r in rep.rows}
    assert by_n[0].sigma_forward == 1
    assert by_n[7].sigma_forward == 8  # n * k * (1/k) + 1
    rep3 = example_2_1_check(3, W("a b", 3), [5])
    assert rep3.all_ok
    assert rep3.rows[0].sigma_forward == 11  # 5 * 3 * (2/3) + 1
    assert rep3.rows[0].sigma_backward == 11


def test_one_twist_law_rejects_unusable_words():
    with pytest.raises(ConfigError):
        example_2_1_check(2, W("b"), [1])  # touches the twisted petal
    with pytest.raises(ConfigError):
        example_2_1_check(3, W("a b a^-1", 3), [1])  # not cyclically reduced


def test_twist_law_csv_has_method_tags_and_crlf():
    rep = example_2_1_check(2, W("a"), [0, 1])
    text = rep.to_csv()
    assert "sigma_forward:exact" in text.splitlines()[0]
    assert text.endswith("\r\n")


# ---------------------------------------------------------------------------
# the two-twist family


def test_family_member_fixes_the_shared_generator():
    cfg = parse_config(DEFAULT_FAMILY_CONFIG)
    s1 = splitting_from_config(cfg, "spec1")
    s2 = splitting_from_config(cfg, "spec2")
    phi = family_automorphism(s1, s2, 3)
    # y lies in both vertex groups, so neither twist moves it
    assert phi(w3("y")) == w3("y")
    # the first twist alone moves z; after n twists it has picked up c1^n
    assert phi(w3("z")) == w3("x y x y^-1") ** 3 * w3("z")
    # x is moved to a conjugate of itself (the second twist conjugates it)
    root, _ = phi(w3("x")).cyclically_reduce()
    assert root == w3("x")


def test_family_sweep_small_grid_is_consistent():
    cfg = parse_config(DEFAULT_FAMILY_CONFIG)
    s1 = splitting_from_config(cfg, "spec1")
    s2 = splitting_from_config(cfg, "spec2")
    rep = family_sweep(s1, s2, [1, 2], scan_grid=8)
    assert rep.pair_certificate
    assert [r.n for r in rep.rows] == [1, 2]
    for r in rep.rows:
        # the loop x y realizes the stretch: its image is conjugate to
        # (d1^n c2)^-n x (d1^n c2)^n y with no cyclic cancellation, giving
        # cyclic length (16 n^2 + 8 n + 2) / 3 over the length 2/3 source
        assert r.sigma == 8 * r.n**2 + 4 * r.n + 1
        assert r.displacement == pytest.approx(math.log(r.sigma))
        assert r.displacement <= r.path_bound + 1e-12
        assert 0 < r.min_cycle < 1
        assert r.image_certificate
        assert r.cross_check_ok
        assert r.complete
        # one inverse iteration already shows c2^n inside the image of x
        assert r.tau_iterations == 1
        assert r.tau_bound >= Fraction(r.n, 2)
    assert rep.rows[1].min_cycle < rep.rows[0].min_cycle


def test_family_sweep_csv_is_deterministic_and_tagged():
    cfg = parse_config(DEFAULT_FAMILY_CONFIG)
    s1 = splitting_from_config(cfg, "spec1")
    s2 = splitting_from_config(cfg, "spec2")
    one = family_sweep(s1, s2, [1], scan_grid=4).to_csv()
    two = family_sweep(s1, s2, [1], scan_grid=4).to_csv()
    assert one == two
    header = one.splitlines()[0]
    assert "sigma:exact" in header
    assert "min_cycle:bracketed" in header
    assert "tau_lower_bound:lower-bound" in header
    assert "\r\n" in one


def test_family_sweep_rejects_mismatched_ranks():
    s1 = SplittingSpec("hnn", 3, (1, 2), w3("x y"), stable=3)
    s2 = SplittingSpec("amalgam", 2, (1,), W("a"))
    with pytest.raises(ConfigError):
        family_sweep(s1, s2, [1])


# ---------------------------------------------------------------------------
# fitting


def test_linear_fit_recovers_an_exact_line():
    fit = linear_fit([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        linear_fit([1.0], [2.0])
