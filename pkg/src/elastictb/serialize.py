"""Versioned JSON documents and delimited tables for pipeline artifacts.

Every JSON document carries a ``schema`` tag of the form
``elastictb.<kind>/<version>`` so readers can reject foreign or stale
files with a clear message.  Writers are deterministic (sorted keys,
fixed layout) and atomic when given a path: content goes to a temporary
file in the same directory and is renamed into place, so a failed run
never leaves a partial artifact.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path
from typing import IO, Any

import numpy as np

from .band import BandCoverageReport, SurfacePlotData, ToleranceBand
from .datasets import DatasetTable
from .errors import ParseError
from .fpca import JointFpcaModel
from .groupwise import AlignmentResult
from .region import (
    FpcaCoverageReport,
    ScoreSummary,
    ToleranceFactor,
    ToleranceScore,
)
from .sphere import ShootingVector, SqrtDensity
from .srsf import SampledFunction, Srsf, WarpingFunction

__all__ = [
    "dumps",
    "write_json",
    "read_json",
    "write_table",
    "alignment_to_doc",
    "alignment_from_doc",
    "model_to_doc",
    "model_from_doc",
    "band_to_doc",
    "band_from_doc",
    "band_to_table",
    "factor_to_doc",
    "factor_from_doc",
    "scores_to_doc",
    "surface_to_doc",
    "surface_from_doc",
    "surface_to_table",
    "histogram_rows",
    "score_rows",
    "coverage_to_doc",
    "coverage_rows",
]

_SCHEMAS = {
    "alignment": "elastictb.alignment/1",
    "model": "elastictb.model/1",
    "band": "elastictb.band/1",
    "factor": "elastictb.factor/1",
    "scores": "elastictb.scores/1",
    "surface": "elastictb.surface/1",
    "coverage": "elastictb.coverage/1",
}


def dumps(doc: dict) -> str:
    """Deterministic JSON text for a document."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(doc: dict, output: str | Path | IO[str]) -> None:
    """Write a document as JSON, atomically when `output` is a path."""
    text = dumps(doc)
    if hasattr(output, "write"):
        output.write(text)
        return
    path = Path(output)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(source: str | Path | IO[str], kind: str) -> dict:
    """Load and schema-check one JSON document."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object at the top level")
    expected = _SCHEMAS[kind]
    found = doc.get("schema")
    if found != expected:
        raise ParseError(f"expected schema {expected!r}, found {found!r}")
    return doc


def write_table(
    header: list[str], rows: list[list[Any]], output: str | Path | IO[str]
) -> None:
    """Write a small delimited table (17-significant-digit floats), atomically."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(
            ",".join(
                f"{cell:.17g}" if isinstance(cell, float) else str(cell)
                for cell in row
            )
            + "\n"
        )
    text = buf.getvalue()
    if hasattr(output, "write"):
        output.write(text)
        return
    path = Path(output)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _vec(doc: dict, key: str, length: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"field {key!r} missing or not numeric") from exc
    if arr.ndim != 1 or (length is not None and arr.size != length):
        raise ParseError(f"field {key!r} has the wrong shape")
    return arr


def _mat(doc: dict, key: str, cols: int) -> np.ndarray:
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"field {key!r} missing or not numeric") from exc
    if arr.ndim != 2 or arr.shape[1] != cols:
        raise ParseError(f"field {key!r} has the wrong shape")
    return arr


def alignment_to_doc(alignment: AlignmentResult) -> dict:
    return {
        "schema": _SCHEMAS["alignment"],
        "grid": alignment.grid.tolist(),
        "aligned_functions": [f.values.tolist() for f in alignment.aligned_functions],
        "aligned_srsfs": [q.q.tolist() for q in alignment.aligned_srsfs],
        "warps": [w.gamma.tolist() for w in alignment.warps],
        "amplitude_mean": alignment.amplitude_mean.q.tolist(),
        "warp_mean_psi": alignment.warp_mean_psi.psi.tolist(),
        "shooting_vectors": [v.v.tolist() for v in alignment.shooting_vectors],
        "converged": alignment.converged,
    }


def alignment_from_doc(doc: dict) -> AlignmentResult:
    grid = _vec(doc, "grid")
    T = grid.size
    mean_psi = SqrtDensity(grid, _vec(doc, "warp_mean_psi", T))
    return AlignmentResult(
        grid=grid,
        aligned_functions=[
            SampledFunction(grid, row) for row in _mat(doc, "aligned_functions", T)
        ],
        aligned_srsfs=[Srsf(grid, row) for row in _mat(doc, "aligned_srsfs", T)],
        warps=[WarpingFunction(grid, row) for row in _mat(doc, "warps", T)],
        amplitude_mean=Srsf(grid, _vec(doc, "amplitude_mean", T)),
        warp_mean_psi=mean_psi,
        shooting_vectors=[
            ShootingVector(grid, row, mean_psi)
            for row in _mat(doc, "shooting_vectors", T)
        ],
        converged=bool(doc.get("converged", True)),
    )


def model_to_doc(model: JointFpcaModel) -> dict:
    return {
        "schema": _SCHEMAS["model"],
        "grid": model.grid.tolist(),
        "mean_srsf": model.mean_srsf.tolist(),
        "basis": model.basis.tolist(),
        "variances": model.variances.tolist(),
        "spectrum": model.spectrum.tolist(),
        "scale_c": model.scale_c,
        "warp_mean_psi": model.warp_mean_psi.tolist(),
        "origin_value": model.origin_value,
        "sample_size": model.sample_size,
        "degenerate": model.degenerate,
    }


def model_from_doc(doc: dict) -> JointFpcaModel:
    grid = _vec(doc, "grid")
    T = grid.size
    try:
        return JointFpcaModel(
            grid=grid,
            mean_srsf=_vec(doc, "mean_srsf", T),
            basis=_mat(doc, "basis", 2 * T),
            variances=_vec(doc, "variances"),
            spectrum=_vec(doc, "spectrum"),
            scale_c=float(doc["scale_c"]),
            warp_mean_psi=_vec(doc, "warp_mean_psi", T),
            origin_value=float(doc["origin_value"]),
            sample_size=int(doc["sample_size"]),
            degenerate=bool(doc["degenerate"]),
        )
    except KeyError as exc:
        raise ParseError(f"model document is missing field {exc.args[0]!r}") from exc


def band_to_doc(band: ToleranceBand) -> dict:
    return {
        "schema": _SCHEMAS["band"],
        "grid": band.grid.tolist(),
        "amplitude_lower": band.amplitude_lower.values.tolist(),
        "amplitude_median": band.amplitude_median.values.tolist(),
        "amplitude_upper": band.amplitude_upper.values.tolist(),
        "phase_lower": band.phase_lower.gamma.tolist(),
        "phase_median": band.phase_median.gamma.tolist(),
        "phase_upper": band.phase_upper.gamma.tolist(),
        "amplitude_lower_srsf": band.amplitude_lower_srsf.q.tolist(),
        "amplitude_median_srsf": band.amplitude_median_srsf.q.tolist(),
        "amplitude_upper_srsf": band.amplitude_upper_srsf.q.tolist(),
        "amplitude_span": list(band.amplitude_span),
        "phase_span": list(band.phase_span),
        "coverage_p": band.coverage_p,
        "confidence_alpha": band.confidence_alpha,
        "bootstrap_s": band.bootstrap_s,
        "per_replicate_n": band.per_replicate_n,
        "seed": band.seed,
        "degenerate": band.degenerate,
    }


def band_from_doc(doc: dict) -> ToleranceBand:
    grid = _vec(doc, "grid")
    T = grid.size
    try:
        return ToleranceBand(
            grid=grid,
            amplitude_lower=SampledFunction(grid, _vec(doc, "amplitude_lower", T)),
            amplitude_median=SampledFunction(grid, _vec(doc, "amplitude_median", T)),
            amplitude_upper=SampledFunction(grid, _vec(doc, "amplitude_upper", T)),
            phase_lower=WarpingFunction(grid, _vec(doc, "phase_lower", T)),
            phase_median=WarpingFunction(grid, _vec(doc, "phase_median", T)),
            phase_upper=WarpingFunction(grid, _vec(doc, "phase_upper", T)),
            amplitude_lower_srsf=Srsf(grid, _vec(doc, "amplitude_lower_srsf", T)),
            amplitude_median_srsf=Srsf(grid, _vec(doc, "amplitude_median_srsf", T)),
            amplitude_upper_srsf=Srsf(grid, _vec(doc, "amplitude_upper_srsf", T)),
            amplitude_span=tuple(_vec(doc, "amplitude_span", 2).tolist()),
            phase_span=tuple(_vec(doc, "phase_span", 2).tolist()),
            coverage_p=float(doc["coverage_p"]),
            confidence_alpha=float(doc["confidence_alpha"]),
            bootstrap_s=int(doc["bootstrap_s"]),
            per_replicate_n=int(doc["per_replicate_n"]),
            seed=int(doc["seed"]),
            degenerate=bool(doc["degenerate"]),
        )
    except KeyError as exc:
        raise ParseError(f"band document is missing field {exc.args[0]!r}") from exc


def band_to_table(band: ToleranceBand) -> DatasetTable:
    """Band curves as one delimited table (grid plus six labelled columns)."""
    return DatasetTable(
        grid=band.grid,
        functions=np.stack(
            [
                band.amplitude_lower.values,
                band.amplitude_median.values,
                band.amplitude_upper.values,
                band.phase_lower.gamma,
                band.phase_median.gamma,
                band.phase_upper.gamma,
            ]
        ),
        labels=[
            "amplitude_lower",
            "amplitude_median",
            "amplitude_upper",
            "phase_lower",
            "phase_median",
            "phase_upper",
        ],
    )


def factor_to_doc(factor: ToleranceFactor) -> dict:
    return {
        "schema": _SCHEMAS["factor"],
        "b": factor.b,
        "dim_k": factor.dim_k,
        "sample_n": factor.sample_n,
        "coverage_p": factor.coverage_p,
        "confidence_beta": factor.confidence_beta,
        "mc_iterations": factor.mc_iterations,
        "seed": factor.seed,
    }


def factor_from_doc(doc: dict) -> ToleranceFactor:
    try:
        return ToleranceFactor(
            b=float(doc["b"]),
            dim_k=int(doc["dim_k"]),
            sample_n=int(doc["sample_n"]),
            coverage_p=float(doc["coverage_p"]),
            confidence_beta=float(doc["confidence_beta"]),
            mc_iterations=int(doc["mc_iterations"]),
            seed=int(doc["seed"]),
        )
    except KeyError as exc:
        raise ParseError(f"factor document is missing field {exc.args[0]!r}") from exc


def scores_to_doc(
    scores: list[ToleranceScore],
    summary: ScoreSummary,
    factor: ToleranceFactor | None = None,
) -> dict:
    doc = {
        "schema": _SCHEMAS["scores"],
        "scores": [s.score for s in scores],
        "inside": [s.inside for s in scores],
        "mean": summary.mean,
        "sd": summary.sd,
        "bin_edges": summary.bin_edges.tolist(),
        "bin_counts": summary.bin_counts.tolist(),
    }
    if factor is not None:
        doc["factor"] = factor_to_doc(factor)
    return doc


def score_rows(scores: list[ToleranceScore]) -> tuple[list[str], list[list]]:
    header = ["index", "score", "inside"]
    rows = [[i, s.score, int(s.inside)] for i, s in enumerate(scores)]
    return header, rows


def histogram_rows(summary: ScoreSummary) -> tuple[list[str], list[list]]:
    header = ["bin_left", "bin_right", "count"]
    rows = [
        [float(summary.bin_edges[i]), float(summary.bin_edges[i + 1]), int(c)]
        for i, c in enumerate(summary.bin_counts)
    ]
    return header, rows


def surface_to_doc(surface: SurfacePlotData) -> dict:
    return {
        "schema": _SCHEMAS["surface"],
        "mode": surface.mode,
        "positions": surface.positions.tolist(),
        "grid": surface.grid.tolist(),
        "curves": surface.curves.tolist(),
    }


def surface_from_doc(doc: dict) -> SurfacePlotData:
    grid = _vec(doc, "grid")
    try:
        return SurfacePlotData(
            mode=str(doc["mode"]),
            positions=_vec(doc, "positions", 3),
            grid=grid,
            curves=_mat(doc, "curves", grid.size),
        )
    except KeyError as exc:
        raise ParseError(f"surface document is missing field {exc.args[0]!r}") from exc


def surface_to_table(surface: SurfacePlotData) -> DatasetTable:
    """Surface curves as a table; labels carry the axis positions."""
    names = ("lower", "median", "upper")
    return DatasetTable(
        grid=surface.grid,
        functions=surface.curves,
        labels=[
            f"{name}@{pos:.6g}" for name, pos in zip(names, surface.positions)
        ],
    )


def coverage_to_doc(report: BandCoverageReport | FpcaCoverageReport) -> dict:
    doc = {
        "schema": _SCHEMAS["coverage"],
        "coverage": report.coverage,
        "confidences": list(report.confidences),
        "replicates": report.replicates,
        "draws_per_replicate": report.draws_per_replicate,
    }
    if isinstance(report, BandCoverageReport):
        doc["method"] = "band"
        doc["amplitude_rate"] = list(report.amplitude_rate)
        doc["phase_rate"] = list(report.phase_rate)
    else:
        doc["method"] = "region"
        doc["rate"] = list(report.rate)
        doc["factors"] = list(report.factors)
    return doc


def coverage_rows(
    report: BandCoverageReport | FpcaCoverageReport,
) -> tuple[list[str], list[list]]:
    if isinstance(report, BandCoverageReport):
        header = ["confidence", "amplitude_rate", "phase_rate"]
        rows = [
            [float(c), float(a), float(p)]
            for c, a, p in zip(
                report.confidences, report.amplitude_rate, report.phase_rate
            )
        ]
    else:
        header = ["confidence", "rate", "factor"]
        rows = [
            [float(c), float(r), float(b)]
            for c, r, b in zip(report.confidences, report.rate, report.factors)
        ]
    return header, rows
