"""Command-line front end: distances, geodesics, train tracks, cores,
twists, and the two-splitting family sweep.

Graphs are described by plain text files in one of two forms.  The explicit
form lists edges and marking words (``rank``/``base``/``edge``/``mark``
lines, see :meth:`outerspace.graphs.MarkedGraph.from_text`); the rose form
gives an automorphism (lines like ``a -> a b``) together with optional
``names``/``rank``/``lengths`` keys and denotes the metric rose with its
marking twisted by that automorphism.

Every subcommand emits CSV (RFC-4180 line endings, exact values tagged in
the header).  With ``--out DIR`` the CSV and any SVG figures are written
into the directory and their paths printed; otherwise the CSV goes to
stdout.  Exit codes: 0 on success, 1 when a requested check fails, 2 when
the input is unusable or a search exhausts its budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .words import (Word, Automorphism, WordError, AutomorphismError,
                    default_names)
from .graphs import MarkedGraph, GraphError
from .lipschitz import stretch_factor, candidate_loops
from .folding import (geodesic, min_cycle_streamed, ScanPoint, ScanResult,
                      _sample_volumes)
from .train_track import (TrainTrackRep, TrainTrackError, verify_train_track,
                          turns_taken, charpoly)
from .core_complex import core, geometric_twist, CoreBudgetError
from .laminations import (RationalLamination, rational_twist, leaf_windows,
                          lamination_twist_lower_bound, INFINITE)
from .experiments import (ConfigError, parse_config, splitting_from_config,
                          family_sweep, example_2_1_check,
                          DEFAULT_FAMILY_CONFIG)
from . import plots


# ---------------------------------------------------------------------------
# input and output plumbing


def _csv_text(rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerows(rows)
    return buf.getvalue()


def _deliver(out: str | None, name: str, text: str) -> Path | None:
    """Write ``text`` to ``out/name`` (and say so) or dump it to stdout."""
    if out is None:
        sys.stdout.write(text)
        return None
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(text)
    sys.stdout.write(f"wrote {path}\n")
    return path


def _letter_text(o: int, names: Sequence[str]) -> str:
    nm = names[abs(o) - 1]
    return nm if o > 0 else nm + "^-1"


def _edge_text(e: int, g: MarkedGraph, names: Sequence[str]) -> str:
    if len(g.edges) == g.rank:  # rose: petals are the generators
        return _letter_text(e, names)
    return f"e{e}" if e > 0 else f"e{-e}^-1"


def load_graph_text(text: str) -> tuple[MarkedGraph, tuple[str, ...],
                                        Automorphism | None]:
    """Parse a graph description; see the module docstring for the format.

    Returns the volume-normalized graph, the generator names, and the
    automorphism when the rose form was used (None for explicit graphs).
    """
    stripped = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    if any(ln.startswith(("edge ", "mark ")) for ln in stripped):
        g, names = MarkedGraph.from_text(text)
        return g.normalized(), names, None
    map_lines = [ln for ln in stripped if "->" in ln]
    cfg = parse_config("\n".join(ln for ln in stripped
                                 if ln and "->" not in ln))
    if "names" in cfg:
        names = tuple(cfg["names"].split())
    elif map_lines:
        names = tuple(ln.split("->", 1)[0].strip() for ln in map_lines)
    elif "rank" in cfg:
        names = default_names(int(cfg["rank"]))
    else:
        raise ConfigError("graph file needs map lines, names, or a rank")
    rank = len(names)
    if "rank" in cfg and int(cfg["rank"]) != rank:
        raise ConfigError("rank key disagrees with the generator names")
    phi = None
    if map_lines:
        phi = Automorphism.parse("\n".join(map_lines), names)
        if phi.rank != rank:
            raise ConfigError("map rank disagrees with the generator names")
    lengths = None
    if "lengths" in cfg:
        lengths = [Fraction(tok) for tok in cfg["lengths"].split()]
        if len(lengths) != rank or any(L <= 0 for L in lengths):
            raise ConfigError("need one positive length per petal")
    g = MarkedGraph.rose(rank, lengths).normalized()
    if phi is not None:
        g = g.apply_automorphism(phi)
    return g, names, phi


def _load_graph(path: str) -> tuple[MarkedGraph, tuple[str, ...],
                                    Automorphism | None]:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read graph file {path}: {err}") from err
    return load_graph_text(text)


def _systole(g: MarkedGraph) -> Fraction:
    return min(g.path_length(p) for p in candidate_loops(g))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_dist(args: argparse.Namespace) -> int:
    g1, names, _ = _load_graph(args.graph1)
    g2, _, _ = _load_graph(args.graph2)
    rows: list[list[object]] = [
        ["direction", "sigma:exact", "distance", "witness"]]
    directions = [("1->2", g1, g2)]
    if args.both:
        directions.append(("2->1", g2, g1))
    for tag, a, b in directions:
        sigma, _, witness = stretch_factor(a, b)
        rows.append([tag, sigma, f"{math.log(sigma):.12g}",
                     witness.format(names)])
    _deliver(args.out, "dist.csv", _csv_text(rows))
    return 0


def _cmd_geodesic(args: argparse.Namespace) -> int:
    g1, names, _ = _load_graph(args.graph1)
    g2, _, _ = _load_graph(args.graph2)
    track = (Word.parse(args.track_word, g1.rank, names)
             if args.track_word else None)
    path = geodesic(g1, g2)
    rows: list[list[object]] = [
        ["t", "volume:exact", "systole:exact", "track_length:exact"]]
    samples = []
    for W in _sample_volumes(path, args.grid):
        g = path.graph_at_volume(W).normalized()
        t = math.log(1 / W)
        sys_len = _systole(g)
        tracked = g.loop_length(track) if track is not None else None
        rows.append([f"{t:.12g}", W, sys_len,
                     "" if tracked is None else tracked])
        samples.append(ScanPoint(t, W, tracked if track is not None
                                 else sys_len))
    rows.append(["sigma", path.sigma, "", ""])
    _deliver(args.out, "geodesic.csv", _csv_text(rows))
    if args.out is not None:
        samples = sorted(samples, key=lambda p: p.t)
        best = min(samples, key=lambda p: (p.value, p.t))
        bracket = max((b.t - a.t for a, b in zip(samples, samples[1:])),
                      default=0.0)
        scan = ScanResult(best.t, best.volume, best.value, bracket,
                          tuple(samples))
        label = (f"loop length of {track.format(names)}"
                 if track is not None else "systole")
        p = plots.scan_plot(scan, Path(args.out) / "geodesic.svg",
                            label=label)
        sys.stdout.write(f"wrote {p}\n")
    return 0


def _cmd_traintrack(args: argparse.Namespace) -> int:
    _, names, phi = _load_graph(args.graph)
    if phi is None:
        raise ConfigError("traintrack needs a rose file with map lines")
    rose = MarkedGraph.rose(phi.rank)
    edge_map = {i + 1: rose.path_of_word(phi.images[i])
                for i in range(phi.rank)}
    ok, legal, illegal = verify_train_track(rose, edge_map)
    rows: list[list[object]] = [["field", "value"],
                                ["train_track", ok]]
    code = 0 if ok else 1
    if ok:
        try:
            rep = TrainTrackRep.from_rose_automorphism(phi)
        except TrainTrackError as err:  # e.g. reducible transition matrix
            rows.append(["note", str(err)])
            code = 1
            rep = None
        if rep is not None:
            coeffs = charpoly(rep.matrix)
            rows.append(["expansion", f"{rep.expansion:.12g}"])
            rows.append(["charpoly:exact",
                         " ".join(str(c) for c in coeffs)])
            rows.append(["stretch_residual",
                         f"{rep.stretch_residual():.3g}"])
            rows.append(["displacement_residual",
                         f"{rep.displacement_residual():.3g}"])
            for e in sorted(rep.graph.edges):
                rows.append([f"length:{names[e - 1]}", rep.graph.length(e)])
    else:
        for t in sorted(turns_taken(edge_map) & illegal):
            rows.append(["crossed_illegal_turn",
                         " ".join(_letter_text(o, names) for o in t)])
    for t in sorted(legal):
        rows.append(["legal_turn",
                     " ".join(_letter_text(o, names) for o in t)])
    for t in sorted(illegal):
        rows.append(["illegal_turn",
                     " ".join(_letter_text(o, names) for o in t)])
    _deliver(args.out, "traintrack.csv", _csv_text(rows))
    return code


def _cmd_core(args: argparse.Namespace) -> int:
    g1, names, _ = _load_graph(args.graph1)
    g2, names2, _ = _load_graph(args.graph2)
    cx = core(g1, g2, budget=args.budget)
    rows: list[list[object]] = [
        ["field", "a", "b", "c"],
        ["intersection_number:exact", cx.volume, "", ""],
        ["squares", len(cx.squares), "", ""],
        ["complete", cx.complete, "", ""],
    ]
    for s in sorted(cx.squares,
                    key=lambda s: (s.edge1, s.edge2, s.addr2)):
        rows.append(["square", _edge_text(s.edge1, g1, names),
                     g2.word_of_path(s.addr2).format(names2),
                     _edge_text(s.edge2, g2, names2)])
    if args.twist:
        a = Word.parse(args.twist, g1.rank, names)
        rep = geometric_twist(g1, g2, a, budget=args.budget, cx=cx)
        rows.append(["twist", a.format(names), rep.value, ""])
        for (i, j), c in sorted(rep.counts.items()):
            rows.append(["track_pair", i, j, c])
    _deliver(args.out, "core.csv", _csv_text(rows))
    return 0 if cx.complete else 2


def _cmd_twist(args: argparse.Namespace) -> int:
    g, names, _ = _load_graph(args.graph)
    a = Word.parse(args.a, g.rank, names)
    rows: list[list[object]] = [
        ["method", "value", "lower_bound_only", "detail"]]
    if args.rational is not None:
        lam = RationalLamination(Word.parse(args.rational, g.rank, names))
        value = rational_twist(g, a, lam)
        rows.append(["rational-lamination",
                     "inf" if value == INFINITE else value, False,
                     lam.generator.format(names)])
    else:
        _, _, phi = _load_graph(args.leafwindows)
        if phi is None:
            raise ConfigError("leaf windows need a rose file with map lines")
        if phi.rank != g.rank:
            raise ConfigError("train-track rank disagrees with the graph")
        rep = TrainTrackRep.from_rose_automorphism(phi)
        windows = leaf_windows(rep, args.iterations)
        value = lamination_twist_lower_bound(g, a, windows)
        rows.append(["train-track-windows", value, True,
                     f"m={args.iterations}"])
    _deliver(args.out, "twist.csv", _csv_text(rows))
    return 0


def _cmd_family(args: argparse.Namespace) -> int:
    if args.config is None:
        text = DEFAULT_FAMILY_CONFIG
    else:
        try:
            text = Path(args.config).read_text()
        except OSError as err:
            raise ConfigError(
                f"cannot read config {args.config}: {err}") from err
    cfg = parse_config(text)
    spec1 = splitting_from_config(cfg, "spec1")
    spec2 = splitting_from_config(cfg, "spec2")
    grid = (args.grid if args.grid
            else [int(tok) for tok in cfg.get("grid", "2 4 8").split()])
    tau_grid = {int(tok) for tok in cfg.get("tau_grid", "").split()} or None
    max_iter = (args.max_iterations if args.max_iterations is not None
                else int(cfg.get("tau_max_iterations", "6")))

    def threshold(n: int) -> Fraction:
        # Outside the tau grid the first window already certifies >= 0, so
        # those rows skip the expensive iterations.
        if tau_grid is not None and n not in tau_grid:
            return Fraction(0)
        return Fraction(n, 2)

    report = family_sweep(spec1, spec2, grid, scan_grid=args.scan_grid,
                          window_budget=args.window_budget,
                          max_window_iterations=max_iter,
                          tau_threshold=threshold, jobs=args.jobs)
    _deliver(args.out, "family.csv", report.to_csv())
    if args.out is not None:
        for p in plots.family_plots(report, Path(args.out)):
            sys.stdout.write(f"wrote {p}\n")
    ok = (report.pair_certificate
          and all(r.image_certificate and r.cross_check_ok
                  for r in report.rows))
    if not ok:
        return 1
    if not all(r.complete for r in report.rows):
        return 2
    return 0


def _cmd_example21(args: argparse.Namespace) -> int:
    names = default_names(args.k)
    c = Word.parse(args.c, args.k, names)
    report = example_2_1_check(args.k, c, range(0, args.n_max + 1))
    _deliver(args.out, "example21.csv", report.to_csv())
    if args.out is not None:
        p = plots.twist_law_plot(report, Path(args.out) / "twist_law.svg")
        sys.stdout.write(f"wrote {p}\n")
    return 0 if report.all_ok else 1


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="outerspace",
        description="Distances, geodesics, and twists of marked metric "
                    "graphs; CSV out, SVG figures with --out.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", metavar="DIR", default=None,
                       help="write CSV and SVG figures into DIR")
        return p

    p = add("dist", _cmd_dist, "stretch factor and distance between graphs")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--both", action="store_true",
                   help="also report the reverse direction")

    p = add("geodesic", _cmd_geodesic,
            "sample systole and a tracked loop along the connecting path")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--grid", type=int, default=16,
                   help="number of volume samples (default 16)")
    p.add_argument("--track-word", default=None,
                   help="loop whose length is tracked along the path")

    p = add("traintrack", _cmd_traintrack,
            "verify a rose self-map and report its expansion data")
    p.add_argument("graph", help="rose file with map lines")

    p = add("core", _cmd_core,
            "intersection number and square list of two graphs")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--twist", default=None, metavar="WORD",
                   help="also report the geometric twist around WORD")
    p.add_argument("--budget", type=int, default=10**6)

    p = add("twist", _cmd_twist,
            "twist of a graph around a word relative to a lamination")
    p.add_argument("graph")
    p.add_argument("--a", required=True, metavar="WORD",
                   help="twisting word")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--rational", metavar="WORD",
                       help="rational lamination generated by WORD (exact)")
    group.add_argument("--leafwindows", metavar="FILE",
                       help="train-track rose file; leaf windows give a "
                            "lower bound")
    p.add_argument("-m", "--iterations", type=int, default=4,
                   help="window iterations for --leafwindows (default 4)")

    p = add("family", _cmd_family,
            "sweep the two-splitting twist family over a grid of powers")
    p.add_argument("--config", default=None,
                   help="key-value config file (default: built-in rank-3 "
                        "pair)")
    p.add_argument("--grid", type=int, nargs="+", default=None,
                   help="override the grid of twist powers")
    p.add_argument("--scan-grid", type=int, default=16)
    p.add_argument("--window-budget", type=int, default=10**5)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for the rows (default 1)")

    p = add("example21", _cmd_example21,
            "check the exact displacement law of a single twist")
    p.add_argument("--k", type=int, default=2, help="rose rank (default 2)")
    p.add_argument("--c", default="a",
                   help="edge word in the untwisted petals (default 'a')")
    p.add_argument("--n-max", type=int, default=10)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.func(args)
    except CoreBudgetError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ConfigError, GraphError, WordError, AutomorphismError,
            TrainTrackError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
