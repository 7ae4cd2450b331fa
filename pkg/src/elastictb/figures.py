"""Vector-graphics rendering of bands, surfaces, histograms, and coverage.

All figures are built on explicit ``Figure`` objects (no pyplot state) and
written through :func:`render_svg`, which pins the SVG hash salt and strips
the creation date so identical inputs produce byte-identical documents.
Each plotted element carries a stable ``gid`` so the output is inspectable
with a plain XML parser.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import IO

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .band import BandCoverageReport, SurfacePlotData, ToleranceBand
from .region import FpcaCoverageReport, ScoreSummary, ToleranceFactor

__all__ = [
    "band_figure",
    "surface_figure",
    "histogram_figure",
    "coverage_figure",
    "render_svg",
    "write_svg",
]

_RC = {
    "svg.hashsalt": "elastictb",
    "svg.fonttype": "path",
    "figure.dpi": 100,
    "font.size": 9,
}

_BOUND_COLOR = "#1f77b4"
_MEDIAN_COLOR = "#222222"
_REFERENCE_COLOR = "#999999"


def _new_figure(width: float, height: float) -> Figure:
    fig = Figure(figsize=(width, height), constrained_layout=True)
    FigureCanvasSVG(fig)
    return fig


def band_figure(band: ToleranceBand) -> Figure:
    """Amplitude and phase bounds side by side, median emphasized."""
    fig = _new_figure(8.0, 3.2)
    ax_a, ax_p = fig.subplots(1, 2)

    t = band.grid
    ax_a.plot(t, band.amplitude_lower.values, color=_BOUND_COLOR,
              lw=1.0, gid="amplitude-lower")
    ax_a.plot(t, band.amplitude_upper.values, color=_BOUND_COLOR,
              lw=1.0, gid="amplitude-upper")
    ax_a.plot(t, band.amplitude_median.values, color=_MEDIAN_COLOR,
              lw=1.6, gid="amplitude-median")
    ax_a.set_title(
        f"amplitude bounds (coverage {1.0 - band.coverage_p:.0%}, "
        f"confidence {1.0 - band.confidence_alpha:.0%})"
    )
    ax_a.set_xlabel("t")
    ax_a.set_ylabel("f(t)")

    ax_p.plot(t, t, color=_REFERENCE_COLOR, lw=0.8, ls="--", gid="phase-identity")
    ax_p.plot(t, band.phase_lower.gamma, color=_BOUND_COLOR,
              lw=1.0, gid="phase-lower")
    ax_p.plot(t, band.phase_upper.gamma, color=_BOUND_COLOR,
              lw=1.0, gid="phase-upper")
    ax_p.plot(t, band.phase_median.gamma, color=_MEDIAN_COLOR,
              lw=1.6, gid="phase-median")
    ax_p.set_title("phase bounds")
    ax_p.set_xlabel("t")
    ax_p.set_ylabel("gamma(t)")
    return fig


def surface_figure(surface: SurfacePlotData) -> Figure:
    """Bound curves offset vertically by their distance from the median.

    Each curve is drawn in its own group whose ``gid`` records the curve
    role and its position along the distance axis, so the layout is
    machine-checkable.
    """
    fig = _new_figure(5.0, 3.4)
    ax = fig.subplots()
    names = ("lower", "median", "upper")
    scale = max(float(np.max(surface.positions)), 1e-12)
    for i, (name, pos) in enumerate(zip(names, surface.positions)):
        color = _MEDIAN_COLOR if name == "median" else _BOUND_COLOR
        ax.plot(
            surface.grid,
            surface.curves[i] + pos,
            color=color,
            lw=1.4 if name == "median" else 1.0,
            gid=f"surface-{name}@{pos:.6g}",
        )
        ax.axhline(pos, color=_REFERENCE_COLOR, lw=0.5, ls=":",
                   gid=f"surface-offset-{name}")
    ax.set_title(f"{surface.mode} bounds along the distance axis")
    ax.set_xlabel("t")
    ax.set_ylabel(f"distance from median (axis span {scale:.3g})")
    return fig


def histogram_figure(
    summary: ScoreSummary, factor: ToleranceFactor | None = None
) -> Figure:
    """Score histogram with an optional tolerance-factor cutoff line."""
    fig = _new_figure(5.0, 3.2)
    ax = fig.subplots()
    edges = np.asarray(summary.bin_edges, dtype=float)
    counts = np.asarray(summary.bin_counts, dtype=float)
    if counts.size:
        ax.bar(
            edges[:-1],
            counts,
            width=np.diff(edges),
            align="edge",
            color=_BOUND_COLOR,
            edgecolor="white",
            gid="score-histogram",
        )
    if factor is not None:
        ax.axvline(factor.b, color=_MEDIAN_COLOR, lw=1.4, ls="--",
                   gid=f"factor-cutoff@{factor.b:.6g}")
        ax.set_title(
            f"tolerance scores vs factor b={factor.b:.4g} "
            f"(p={factor.coverage_p:.2f}, beta={factor.confidence_beta:.2f})"
        )
    else:
        ax.set_title("tolerance scores")
    ax.set_xlabel("score")
    ax.set_ylabel("count")
    return fig


def coverage_figure(report: BandCoverageReport | FpcaCoverageReport) -> Figure:
    """Empirical content rates against the nominal coverage level."""
    fig = _new_figure(5.0, 3.2)
    ax = fig.subplots()
    confs = np.asarray(report.confidences, dtype=float)
    if isinstance(report, BandCoverageReport):
        ax.plot(confs, report.amplitude_rate, marker="o", color=_BOUND_COLOR,
                lw=1.2, gid="amplitude-rate", label="amplitude")
        ax.plot(confs, report.phase_rate, marker="s", color="#d62728",
                lw=1.2, gid="phase-rate", label="phase")
    else:
        ax.plot(confs, report.rate, marker="o", color=_BOUND_COLOR,
                lw=1.2, gid="region-rate", label="region")
    ax.axhline(report.coverage, color=_REFERENCE_COLOR, lw=0.8, ls="--",
               gid="nominal-coverage")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(
        f"coverage over {report.replicates} replicates "
        f"({report.draws_per_replicate} draws each)"
    )
    ax.set_xlabel("confidence level")
    ax.set_ylabel("success rate")
    ax.legend(loc="lower right")
    return fig


def render_svg(fig: Figure) -> bytes:
    """Render a figure to SVG bytes, deterministically."""
    buf = io.BytesIO()
    with rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def write_svg(fig: Figure, output: str | Path | IO[bytes] | IO[str]) -> None:
    """Write a figure as SVG to a path or an open stream."""
    data = render_svg(fig)
    if hasattr(output, "write"):
        try:
            output.write(data)
        except TypeError:
            output.write(data.decode("utf-8"))
        return
    Path(output).write_bytes(data)
