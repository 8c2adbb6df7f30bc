"""Static SVG figures for sweep reports and geodesic scans.

Everything renders through the Agg backend straight to files: the report
path of the command-line tool drops these next to its CSV output, and
nothing here requires a display.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .experiments import FamilyReport, TwistLawReport  # noqa: E402
from .folding import ScanResult  # noqa: E402


def _finish(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def displacement_plot(report: FamilyReport, path: Path) -> Path:
    """Displacement against log n, with the fitted line when available."""
    rows = [r for r in report.rows if r.n > 0]
    xs = [math.log(r.n) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot(xs, [r.displacement for r in rows], "o-", label="endpoint, exact")
    ax.plot(xs, [r.path_bound for r in rows], "s--",
            label="two-leg upper bound")
    ax.plot(xs, [r.tr_upper for r in rows], "^:",
            label="sampled-point minimum")
    if report.displacement_fit is not None:
        f = report.displacement_fit
        lo, hi = min(xs), max(xs)
        ax.plot([lo, hi], [f.slope * lo + f.intercept,
                           f.slope * hi + f.intercept],
                "k-", alpha=0.4,
                label=f"fit: slope {f.slope:.2f}, R² {f.r_squared:.3f}")
    ax.set_xlabel("log n")
    ax.set_ylabel("displacement of the rose")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def min_cycle_plot(report: FamilyReport, path: Path) -> Path:
    """Minimum scanned length of the second edge loop against 1/n."""
    rows = [r for r in report.rows if r.n > 0 and r.min_cycle is not None]
    xs = [1.0 / r.n for r in rows]
    ys = [float(r.min_cycle) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot(xs, ys, "o-", label="scanned minimum (bracketed)")
    if xs:
        slope = ys[-1] / xs[-1] if xs[-1] else 0.0
        ref = sorted([0.0] + xs)
        ax.plot(ref, [slope * x for x in ref], "k--", alpha=0.4,
                label="1/n reference through last point")
    ax.set_xlabel("1/n")
    ax.set_ylabel("min loop length along geodesic")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def family_plots(report: FamilyReport, directory: Path) -> list[Path]:
    """The report's standard figures, written into ``directory``."""
    directory = Path(directory)
    return [
        displacement_plot(report, directory / "displacement.svg"),
        min_cycle_plot(report, directory / "min_cycle.svg"),
    ]


def scan_plot(scan: ScanResult, path: Path, *, label: str = "loop length"
              ) -> Path:
    """Sampled loop length along a geodesic, on a log-scaled axis."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot([p.t for p in scan.samples], [float(p.value) for p in scan.samples],
            "o-", label=label)
    ax.axvline(scan.t, color="k", alpha=0.3,
               label=f"min {float(scan.value):.4g} at t={scan.t:.3f}")
    ax.set_yscale("log")
    ax.set_xlabel("position t along the geodesic")
    ax.set_ylabel("normalized loop length")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def twist_law_plot(report: TwistLawReport, path: Path) -> Path:
    """Measured one-twist displacement against the exact law."""
    ns = [r.n for r in report.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot(ns, [float(r.sigma_forward) for r in report.rows], "o",
            label="measured, forward")
    ax.plot(ns, [float(r.sigma_backward) for r in report.rows], "x",
            label="measured, backward")
    ax.plot(ns, [float(r.expected) for r in report.rows], "k--", alpha=0.5,
            label="n k l(c) + 1")
    ax.set_xlabel("twist power n")
    ax.set_ylabel("stretch factor")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_paths(paths: Sequence[Path]) -> str:
    """One line per written figure, for command-line logs."""
    return "".join(f"wrote {p}\n" for p in paths)
