"""Twist families of automorphisms and the sweep harness around them.

A cyclic splitting of the free group (an amalgam over a cyclic subgroup,
or an HNN extension with a cyclic edge group) carries a twist
automorphism; composing opposite powers of two such twists produces a
family ``phi_n`` whose displacement of a base rose grows like ``log n``
while some loop gets uniformly short along the connecting geodesics.
This module builds the twists from splitting descriptions, runs the
sweep over a grid of ``n``, and fits the observed growth shapes.  Every
reported number carries its method: exact rationals from candidate
loops, grid-bracketed minima from geodesic scans, or certified lower
bounds from leaf windows.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .folding import min_cycle_streamed
from .graphs import GraphError, MarkedGraph
from .lipschitz import optimal_map
from .laminations import (
    iterated_word_windows,
    lamination_twist_lower_bound,
)
from .lipschitz import stretch_factor
from .words import (
    Automorphism,
    Word,
    default_names,
    is_non_separable_certificate,
)


class ConfigError(ValueError):
    """A splitting or sweep description is malformed."""


# ---------------------------------------------------------------------------
# splittings and their twists


@dataclass(frozen=True)
class SplittingSpec:
    """A cyclic splitting of the free group, described over a basis.

    ``kind`` is ``"amalgam"`` (the basis splits into two vertex groups
    glued over the loop ``c``, which must use only the first part) or
    ``"hnn"`` (the vertex group is the basis minus one stable letter;
    ``c`` lives in the vertex group and ``c_prime`` optionally records
    the other edge inclusion).
    """

    kind: str
    rank: int
    vertex: tuple[int, ...]
    c: Word
    stable: int | None = None
    c_prime: Word | None = None

    def __post_init__(self):
        if self.kind not in ("amalgam", "hnn"):
            raise ConfigError(f"unknown splitting kind {self.kind!r}")
        if not self.c or self.c.rank != self.rank:
            raise ConfigError("edge word must be a nontrivial word of the "
                              "splitting's rank")
        gens = set(range(1, self.rank + 1))
        part = set(self.vertex)
        if not part or not part <= gens:
            raise ConfigError("vertex generators must be a nonempty subset "
                              "of the basis")
        if self.kind == "amalgam":
            if self.stable is not None:
                raise ConfigError("amalgams have no stable letter")
            if part == gens:
                raise ConfigError("second vertex group is empty")
        else:
            if self.stable not in gens or self.stable in part:
                raise ConfigError("the stable letter must be a basis "
                                  "generator outside the vertex group")
            if part != gens - {self.stable}:
                raise ConfigError("HNN vertex group must be the basis minus "
                                  "the stable letter")
        support = {abs(a) for a in self.c.letters}
        if not support <= part:
            raise ConfigError("edge word leaves the vertex group")
        if self.c_prime is not None:
            support = {abs(a) for a in self.c_prime.letters}
            if not support <= part:
                raise ConfigError("second edge word leaves the vertex group")


def dehn_twist(spec: SplittingSpec) -> Automorphism:
    """The twist of a cyclic splitting, with its exact inverse.

    Amalgam: generators of the far vertex group are conjugated by the
    edge word.  HNN: the stable letter picks up the edge word in front.
    """
    k = spec.rank
    images = [Word.generator(k, i) for i in range(1, k + 1)]
    inverses = list(images)
    c = spec.c
    if spec.kind == "amalgam":
        for i in sorted(set(range(1, k + 1)) - set(spec.vertex)):
            images[i - 1] = c * images[i - 1] * ~c
            inverses[i - 1] = ~c * inverses[i - 1] * c
    else:
        t = spec.stable
        images[t - 1] = c * images[t - 1]
        inverses[t - 1] = ~c * inverses[t - 1]
    return Automorphism(tuple(images), tuple(inverses))


# ---------------------------------------------------------------------------
# plain key-value configuration


DEFAULT_FAMILY_CONFIG = """\
# Twist-family sweep over a rank-3 rose.  The two splittings below carry
# the twists; the edge words form a pair whose joint Whitehead graph is
# connected without cut vertices, which the sweep verifies before running.
rank = 3
names = x y z
spec1.kind = hnn
spec1.vertex = x y
spec1.c = x y x y^-1
spec1.stable = z
spec2.kind = amalgam
spec2.vertex = y z
spec2.c = y z y z^-1
grid = 2 4 8 16 32
tau_grid = 2 4 8
tau_max_iterations = 6
"""


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _names_of(cfg: dict[str, str], rank: int) -> tuple[str, ...]:
    names = tuple(cfg.get("names", "").split()) or default_names(rank)
    if len(names) != rank:
        raise ConfigError("names do not match the rank")
    return names


def splitting_from_config(cfg: dict[str, str], prefix: str
                          ) -> SplittingSpec:
    """Build one splitting from keys ``<prefix>.kind/vertex/c/stable``."""
    try:
        rank = int(cfg["rank"])
    except (KeyError, ValueError):
        raise ConfigError("config needs an integer 'rank'")
    names = _names_of(cfg, rank)
    index = {name: i + 1 for i, name in enumerate(names)}

    def need(key: str) -> str:
        full = f"{prefix}.{key}"
        if full not in cfg:
            raise ConfigError(f"missing config key {full!r}")
        return cfg[full]

    kind = need("kind").lower()
    try:
        vertex = tuple(index[t] for t in need("vertex").split())
    except KeyError as err:
        raise ConfigError(f"unknown generator name {err.args[0]!r}")
    c = Word.parse(need("c"), rank, names=names)
    stable = None
    if kind == "hnn":
        name = need("stable")
        if name not in index:
            raise ConfigError(f"unknown generator name {name!r}")
        stable = index[name]
    c_prime = None
    if f"{prefix}.c_prime" in cfg:
        c_prime = Word.parse(cfg[f"{prefix}.c_prime"], rank, names=names)
    return SplittingSpec(kind, rank, vertex, c, stable, c_prime)


# ---------------------------------------------------------------------------
# the exact displacement law for a single twist


@dataclass(frozen=True)
class TwistLawRow:
    n: int
    sigma_forward: Fraction
    sigma_backward: Fraction
    expected: Fraction
    ok: bool


@dataclass(frozen=True)
class TwistLawReport:
    rank: int
    c: Word
    rows: tuple[TwistLawRow, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["n", "sigma_forward:exact", "sigma_backward:exact",
                    "expected:exact", "ok"])
        for r in self.rows:
            w.writerow([r.n, r.sigma_forward, r.sigma_backward, r.expected,
                        r.ok])
        return buf.getvalue()


def example_2_1_check(k: int, c: Word, n_range: Sequence[int]
                      ) -> TwistLawReport:
    """Verify the exact displacement law of a single twist on the rose.

    Twisting the last petal by a loop ``c`` in the other petals moves the
    unit rose a stretch factor of exactly ``n * k * len(c) + 1`` after
    ``n`` twists, symmetrically in both directions.
    """
    if c.rank != k:
        raise ConfigError("edge word rank must match the rose rank")
    if not c.is_cyclically_reduced() or not c:
        raise ConfigError("edge word must be nontrivial and cyclically "
                          "reduced")
    if any(abs(a) == k for a in c.letters):
        raise ConfigError("edge word must avoid the twisted petal")
    rose = MarkedGraph.rose(k)
    spec = SplittingSpec("hnn", k, tuple(range(1, k)), c, k)
    delta = dehn_twist(spec)
    ell_c = rose.loop_length(c)
    rows = []
    for n in n_range:
        moved = rose.apply_automorphism(delta ** n)
        fwd = stretch_factor(rose, moved)[0]
        back = stretch_factor(moved, rose)[0]
        expected = n * k * ell_c + 1
        rows.append(TwistLawRow(n, fwd, back, expected,
                                fwd == expected == back))
    return TwistLawReport(k, c, tuple(rows))


# ---------------------------------------------------------------------------
# the family sweep


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    if len(xs) < 2:
        raise ConfigError("need at least two points to fit")
    A = np.vstack([np.asarray(xs, dtype=float),
                   np.ones(len(xs))]).T
    y = np.asarray(ys, dtype=float)
    coeffs, *_ = np.linalg.lstsq(A, y, rcond=None)
    fitted = A @ coeffs
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(float(coeffs[0]), float(coeffs[1]), r2)


@dataclass(frozen=True)
class FamilyRow:
    n: int
    sigma: Fraction
    displacement: float
    path_bound: float
    tr_upper: float
    tr_upper_t: float
    min_cycle: Fraction | None
    min_cycle_t: float
    min_cycle_bracket: float
    tau_bound: Fraction
    tau_iterations: int
    image_certificate: bool
    cross_check_ok: bool
    complete: bool


@dataclass(frozen=True)
class FamilyReport:
    spec1: SplittingSpec
    spec2: SplittingSpec
    pair_certificate: bool
    rows: tuple[FamilyRow, ...]
    displacement_fit: FitResult | None
    min_cycle_fit: FitResult | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow([
            "n", "sigma:exact", "displacement:exact", "path_bound:exact",
            "tr_upper:upper-bound", "tr_upper_t:exact",
            "min_cycle:bracketed", "min_cycle_t:bracketed",
            "min_cycle_bracket", "tau_lower_bound:lower-bound",
            "tau_iterations", "image_certificate", "cross_check_ok",
            "complete",
        ])
        for r in self.rows:
            w.writerow([
                r.n, r.sigma, f"{r.displacement:.12g}",
                f"{r.path_bound:.12g}", f"{r.tr_upper:.12g}",
                f"{r.tr_upper_t:.12g}",
                "" if r.min_cycle is None else r.min_cycle,
                "" if r.min_cycle is None else f"{r.min_cycle_t:.12g}",
                "" if r.min_cycle is None else f"{r.min_cycle_bracket:.12g}",
                r.tau_bound, r.tau_iterations, r.image_certificate,
                r.cross_check_ok, r.complete,
            ])
        pad = [""] * 9
        if self.displacement_fit:
            f = self.displacement_fit
            w.writerow(["fit", "displacement~log n",
                        f"slope={f.slope:.12g}",
                        f"intercept={f.intercept:.12g}",
                        f"r2={f.r_squared:.12g}"] + pad)
        if self.min_cycle_fit:
            f = self.min_cycle_fit
            w.writerow(["fit", "log min_cycle~log n",
                        f"slope={f.slope:.12g}",
                        f"intercept={f.intercept:.12g}",
                        f"r2={f.r_squared:.12g}"] + pad)
        return buf.getvalue()


def family_automorphism(spec1: SplittingSpec, spec2: SplittingSpec,
                        n: int) -> Automorphism:
    """The family member: n twists of the first splitting, n opposite
    twists of the second."""
    d1 = dehn_twist(spec1)
    d2 = dehn_twist(spec2)
    return (d1 ** n) * (d2 ** -n)


def _sampled_displacement(rose: MarkedGraph, phi: Automorphism,
                          l0: dict[int, Fraction], l1: dict[int, Fraction],
                          samples: int = 8) -> tuple[float, float]:
    """Min displacement over sampled graphs on the geodesic's rescale leg.

    Each sampled graph keeps the rose's marking with edge lengths
    ``max(l0 x, l1)``, so its own displacement under ``phi`` is exact via
    candidate loops; the minimum over samples is an upper bound for the
    infimum of displacement over the whole deformation space, usually
    tighter than the endpoint value.  Returns (min log-displacement, its
    position along the path).
    """
    ratios = sorted({l1[e] / l0[e] for e in l0 if l1[e] > 0})
    xs = {Fraction(1)} | set(ratios)
    if ratios and ratios[0] < 1:
        lo = math.log(ratios[0])
        for k in range(1, samples):
            xs.add(Fraction(math.exp(lo * k / samples)
                            ).limit_denominator(10**9))
        xs = {x for x in xs if x >= ratios[0]}
    best, best_t = None, 0.0
    for x in sorted(xs, reverse=True):
        lengths = {e: max(l0[e] * x, l1[e]) for e in l0}
        gx = rose.with_lengths(lengths)
        sx = stretch_factor(gx, gx.apply_automorphism(phi))[0]
        val = math.log(sx)
        if best is None or val < best:
            best = val
            best_t = math.log(1 / sum(lengths.values(), Fraction(0)))
    return best if best is not None else 0.0, best_t


def _family_row(spec1: SplittingSpec, spec2: SplittingSpec, n: int,
                scan_grid: int, window_budget: int,
                max_window_iterations: int, threshold: Fraction) -> FamilyRow:
    """One sweep row; rows are independent over immutable inputs."""
    k = spec1.rank
    rose = MarkedGraph.rose(k)
    c2 = spec2.c
    phi = family_automorphism(spec1, spec2, n)
    moved = rose.apply_automorphism(phi)
    opt = optimal_map(rose.normalized(), moved.normalized())
    sigma = opt.sigma
    displacement = math.log(sigma)
    leg1 = stretch_factor(
        rose, rose.apply_automorphism(dehn_twist(spec2) ** -n))[0]
    leg2 = stretch_factor(
        rose, rose.apply_automorphism(dehn_twist(spec1) ** n))[0]
    path_bound = math.log(leg1) + math.log(leg2)
    l0 = {e: rose.length(e) for e in rose.edges}
    l1 = {e: opt.map.image_length(e) / sigma for e in rose.edges}
    tr_upper, tr_upper_t = _sampled_displacement(rose, phi, l0, l1)
    complete = True
    try:
        scan = min_cycle_streamed(rose, moved, c2, grid=scan_grid, opt=opt)
        eps: Fraction | None = scan.value
        scan_t, scan_bracket = scan.t, scan.bracket
    except GraphError as err:
        if "budget" not in str(err):
            raise
        complete = False
        eps, scan_t, scan_bracket = None, math.nan, math.nan
    image_cert = is_non_separable_certificate([c2, phi(c2)], k)
    if eps is not None and 0 < eps < 1:
        lower = math.log((1 - eps) / eps) - math.log(k)
        cross_ok = min(displacement, path_bound) >= lower
    else:
        cross_ok = eps is None or eps >= 1
    tau_bound = Fraction(0)
    tau_m = 0
    phi_inv = phi.inverse()
    for m in range(1, max_window_iterations + 1):
        try:
            windows = iterated_word_windows(rose, phi_inv, m,
                                            budget=window_budget)
        except GraphError:
            complete = False
            break
        bound = lamination_twist_lower_bound(rose, c2, windows)
        if bound > tau_bound:
            tau_bound = bound
        tau_m = m
        if tau_bound >= threshold:
            break
    return FamilyRow(
        n, sigma, displacement, path_bound, tr_upper, tr_upper_t,
        eps, scan_t, scan_bracket,
        tau_bound, tau_m, image_cert, cross_ok, complete)


def family_sweep(spec1: SplittingSpec, spec2: SplittingSpec,
                 grid: Sequence[int], *,
                 scan_grid: int = 16,
                 window_budget: int = 10**5,
                 max_window_iterations: int = 6,
                 tau_threshold: Callable[[int], Fraction] | None = None,
                 jobs: int = 1,
                 ) -> FamilyReport:
    """Sweep the two-twist family over a grid of powers.

    Per row: the exact displacement of the unit rose (candidate loops),
    the two-leg upper bound through the intermediate twist, the sampled
    displacement minimum along the connecting geodesic's rescale leg, the
    bracketed minimum of the second edge loop along that geodesic, and a
    leaf-window lower bound for the twist of the second edge word against
    the repelling lamination (iterating the inverse family member,
    stopping at the threshold or the budget).  Rows that exhaust a budget
    are marked incomplete and their bracketed columns left empty.  Rows
    are independent; ``jobs > 1`` computes them in worker processes, with
    the report always assembled in grid order.
    """
    if spec1.rank != spec2.rank:
        raise ConfigError("splittings have different ranks")
    k = spec1.rank
    pair_cert = is_non_separable_certificate([spec1.c, spec2.c], k)
    if tau_threshold is None:
        def tau_threshold(n: int) -> Fraction:
            return Fraction(n, 2)
    args = [(spec1, spec2, n, scan_grid, window_budget,
             max_window_iterations, tau_threshold(n)) for n in grid]
    if jobs > 1 and len(args) > 1:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=min(jobs, len(args))) as pool:
            rows = list(pool.map(_family_row_args, args))
    else:
        rows = [_family_row(*a) for a in args]
    fit_rows = [r for r in rows
                if r.n > 0 and r.complete and r.min_cycle is not None]
    displacement_fit = None
    min_cycle_fit = None
    if len(fit_rows) >= 2:
        logs = [math.log(r.n) for r in fit_rows]
        displacement_fit = linear_fit(
            logs, [min(r.displacement, r.path_bound) for r in fit_rows])
        min_cycle_fit = linear_fit(
            logs, [math.log(r.min_cycle) for r in fit_rows])
    return FamilyReport(spec1, spec2, pair_cert, tuple(rows),
                        displacement_fit, min_cycle_fit)


def _family_row_args(args) -> FamilyRow:
    return _family_row(*args)
