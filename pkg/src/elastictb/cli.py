"""Command line pipeline for tolerance bounds on elastic functional data.

Subcommands chain through files or pipes: ``simulate`` emits a function
table, ``align`` turns a table into an alignment document, ``fpca`` fits
the joint model, and ``band`` / ``factor`` / ``score`` / ``coverage`` /
``surface`` consume those documents.  Inputs default to stdin and outputs
to stdout; JSON inputs are recognized by their leading ``{``, so
``simulate | align | fpca`` works without temporary files.

Every run logs its resolved configuration to stderr so a result can be
reproduced from the log line alone.  Exit codes: 0 success, 2 invalid
input or usage, 3 numerical non-convergence.

When a delimited report is written to a named file, the matching figure
is rendered next to it as ``<name>.svg``; ``--format svg`` writes the
figure itself to the chosen output.
"""

from __future__ import annotations

import io
import logging
import sys
from pathlib import Path
from typing import Callable

import click

from .band import bootstrap_bands, coverage_experiment, surface_coords
from .config import ExperimentConfig
from .datasets import (
    DatasetTable,
    read_csv,
    simulate_two_bump,
    simulate_unimodal_toy,
    write_csv,
)
from .errors import ConvergenceError, DomainError, ParseError, SizeError
from .figures import (
    band_figure,
    coverage_figure,
    histogram_figure,
    surface_figure,
    write_svg,
)
from .fpca import JointFpcaModel, fit_joint_fpca
from .groupwise import align_sample
from .region import (
    coverage_experiment_fpca,
    embed_function,
    score_functions,
    summarize_scores,
    tolerance_factor,
)
from . import serialize

log = logging.getLogger("elastictb.cli")

_CONF_HELP = "Confidence level for the bounds, e.g. 0.95."
_COV_HELP = "Coverage level (proportion of the population to capture), e.g. 0.99."


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {source!r}: {exc.strerror}") from exc


def _load_table(source: str) -> DatasetTable:
    return read_csv(io.StringIO(_read_text(source)))


def _load_model(source: str) -> JointFpcaModel:
    text = _read_text(source)
    return serialize.model_from_doc(_loads(text, "model"))


def _loads(text: str, kind: str):
    return serialize.read_json(io.StringIO(text), kind)


def _is_json(text: str) -> bool:
    head = text.lstrip()[:1]
    return head == "{"


def _out_stream(output: str):
    return sys.stdout if output == "-" else output


def _emit(
    fmt: str,
    output: str,
    doc: dict | None = None,
    table: DatasetTable | tuple[list[str], list[list]] | None = None,
    figure: Callable | None = None,
) -> None:
    """Write one artifact in the requested format.

    ``figure`` is a zero-argument factory so figures are only built when
    needed.  CSV written to a named path gets a companion ``.svg`` when a
    figure is available.
    """
    if fmt == "json":
        if doc is None:
            raise click.UsageError("this subcommand has no JSON form")
        serialize.write_json(doc, _out_stream(output))
        return
    if fmt == "csv":
        if table is None:
            raise click.UsageError("this subcommand has no delimited form")
        if isinstance(table, DatasetTable):
            if output == "-":
                write_csv(table, sys.stdout)
            else:
                buf = io.StringIO()
                write_csv(table, buf)
                rows_text = buf.getvalue()
                Path(output).write_text(rows_text)
        else:
            header, rows = table
            serialize.write_table(header, rows, _out_stream(output))
        if output != "-" and figure is not None:
            write_svg(figure(), Path(output).with_suffix(".svg"))
        return
    if fmt == "svg":
        if figure is None:
            raise click.UsageError("this subcommand has no figure form")
        if output == "-":
            write_svg(figure(), sys.stdout)
        else:
            write_svg(figure(), output)
        return
    raise click.UsageError(f"unknown format {fmt!r}")


def _log_config(config: ExperimentConfig) -> None:
    log.info("config %s", config.to_json())


_format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv", "svg"]),
    default="json", show_default=True, help="Output format.",
)
_output_option = click.option(
    "--output", default="-", show_default=True,
    help="Output path, or - for stdout.",
)
_input_option = click.option(
    "--input", "source", default="-", show_default=True,
    help="Input path, or - for stdin.",
)
_seed_option = click.option(
    "--seed", type=int, default=0, show_default=True, help="Random seed."
)


@click.group()
def cli() -> None:
    """Tolerance bounds for elastic functional data."""


@cli.command()
@click.option("--n", type=int, default=21, show_default=True,
              help="Number of functions to generate.")
@click.option("--kind", type=click.Choice(["two-bump", "unimodal"]),
              default="two-bump", show_default=True,
              help="Generator: bimodal sample with warps, or the unimodal demo.")
@click.option("--grid-size", type=int, default=301, show_default=True,
              help="Rendering grid density.")
@_seed_option
@_output_option
def simulate(n: int, kind: str, grid_size: int, seed: int, output: str) -> None:
    """Generate a synthetic function sample as a delimited table."""
    if kind == "two-bump":
        table = simulate_two_bump(n=n, seed=seed, grid_size=grid_size)
    else:
        table = simulate_unimodal_toy(n=n, seed=seed, grid_size=grid_size)
    _log_config(ExperimentConfig(seed=seed, n_functions=n, grid_size=grid_size))
    if output == "-":
        write_csv(table, sys.stdout)
    else:
        buf = io.StringIO()
        write_csv(table, buf)
        Path(output).write_text(buf.getvalue())


@cli.command()
@_input_option
@click.option("--grid-size", type=int, default=101, show_default=True,
              help="Common grid size for the aligned sample.")
@click.option("--smooth", type=int, default=0, show_default=True,
              help="Box-smoothing passes applied before the square-root transform.")
@_format_option
@_output_option
def align(source: str, grid_size: int, smooth: int, fmt: str, output: str) -> None:
    """Align a function table; emit the alignment document or aligned table."""
    table = _load_table(source)
    result = align_sample(table.as_functions(), grid_size=grid_size, smooth=smooth)
    _log_config(ExperimentConfig(n_functions=table.sample_size, grid_size=grid_size))
    aligned = DatasetTable(
        grid=result.grid,
        functions=[f.values for f in result.aligned_functions],
        labels=table.labels,
    )
    _emit(fmt, output, doc=serialize.alignment_to_doc(result), table=aligned)


@cli.command()
@_input_option
@click.option("--grid-size", type=int, default=101, show_default=True,
              help="Grid size used when the input still needs alignment.")
@click.option("--variance-threshold", type=float, default=0.90, show_default=True,
              help="Explained-variance level that fixes the component count.")
@click.option("--components", type=int, default=None,
              help="Fix the component count instead of using the threshold.")
@click.option("--scale-c", type=float, default=None,
              help="Override the amplitude/phase block scale.")
@_output_option
def fpca(source: str, grid_size: int, variance_threshold: float,
         components: int | None, scale_c: float | None, output: str) -> None:
    """Fit the joint principal component model; emit the model document.

    Accepts either an alignment document or a raw function table, which
    is aligned first with default settings.
    """
    text = _read_text(source)
    if _is_json(text):
        alignment = serialize.alignment_from_doc(_loads(text, "alignment"))
    else:
        table = read_csv(io.StringIO(text))
        alignment = align_sample(table.as_functions(), grid_size=grid_size)
    model = fit_joint_fpca(
        alignment,
        variance_threshold=variance_threshold,
        n_components=components,
        scale_c=scale_c,
    )
    _log_config(ExperimentConfig(
        n_functions=alignment.sample_size,
        grid_size=model.grid.size,
        variance_threshold=variance_threshold,
        n_components=components,
        scale_c=scale_c,
    ))
    serialize.write_json(serialize.model_to_doc(model), _out_stream(output))


@cli.command()
@click.option("--model", "source", default="-", show_default=True,
              help="Model document path, or - for stdin.")
@click.option("--coverage", type=float, default=0.99, show_default=True,
              help=_COV_HELP)
@click.option("--confidence", type=float, default=0.95, show_default=True,
              help=_CONF_HELP)
@click.option("--replicates", type=int, default=500, show_default=True,
              help="Bootstrap replicates S.")
@click.option("--per-replicate-n", type=int, default=30, show_default=True,
              help="Sample size drawn in each replicate.")
@_seed_option
@_format_option
@_output_option
def band(source: str, coverage: float, confidence: float, replicates: int,
         per_replicate_n: int, seed: int, fmt: str, output: str) -> None:
    """Bootstrap geometric tolerance bounds for amplitude and phase."""
    model = _load_model(source)
    if not 0.0 < coverage < 1.0 or not 0.0 < confidence < 1.0:
        raise DomainError("coverage and confidence must lie strictly in (0, 1)")
    result = bootstrap_bands(
        model,
        per_replicate_n=per_replicate_n,
        bootstrap_s=replicates,
        coverage_p=1.0 - coverage,
        confidence_alpha=1.0 - confidence,
        seed=seed,
    )
    _log_config(ExperimentConfig(
        seed=seed,
        n_functions=model.sample_size,
        grid_size=model.grid.size,
        bootstrap_s=replicates,
        per_replicate_n=per_replicate_n,
        coverage_p=1.0 - coverage,
        confidence_alpha=1.0 - confidence,
    ))
    _emit(
        fmt, output,
        doc=serialize.band_to_doc(result),
        table=serialize.band_to_table(result),
        figure=lambda: band_figure(result),
    )


@cli.command()
@click.option("--model", "source", default=None,
              help="Model document; supplies the dimension and sample size.")
@click.option("--n", "sample_n", type=int, default=None,
              help="Sample size (required without --model).")
@click.option("--k", "dim_k", type=int, default=None,
              help="Dimension (required without --model).")
@click.option("--coverage", type=float, default=0.99, show_default=True,
              help=_COV_HELP)
@click.option("--confidence", type=float, default=0.95, show_default=True,
              help=_CONF_HELP)
@click.option("--replicates", type=int, default=100_000, show_default=True,
              help="Monte Carlo iterations.")
@_seed_option
@_output_option
def factor(source: str | None, sample_n: int | None, dim_k: int | None,
           coverage: float, confidence: float, replicates: int, seed: int,
           output: str) -> None:
    """Tolerance factor for the principal coefficient region."""
    if source is not None:
        model = _load_model(source)
        sample_n = model.sample_size if sample_n is None else sample_n
        dim_k = model.retained_k if dim_k is None else dim_k
    if sample_n is None or dim_k is None:
        raise click.UsageError("give --model, or both --n and --k")
    result = tolerance_factor(
        n=sample_n, k=dim_k, p=coverage, beta=confidence,
        mc_iterations=replicates, seed=seed,
    )
    _log_config(ExperimentConfig(
        seed=seed,
        n_functions=sample_n,
        bootstrap_s=replicates,
        coverage_p=coverage,
        confidence_beta=confidence,
        n_components=dim_k,
    ))
    serialize.write_json(serialize.factor_to_doc(result), _out_stream(output))


@cli.command()
@click.option("--model", "model_path", required=True,
              help="Model document path.")
@click.option("--factor", "factor_path", required=True,
              help="Factor document path.")
@_input_option
@_format_option
@_output_option
def score(model_path: str, factor_path: str, source: str, fmt: str,
          output: str) -> None:
    """Score new functions against a fitted model and tolerance factor."""
    model = _load_model(model_path)
    fac = serialize.factor_from_doc(
        _loads(_read_text(factor_path), "factor"))
    table = _load_table(source)
    scores = score_functions(model, table.as_functions(), fac)
    summary = summarize_scores(
        model, [embed_function(model, f) for f in table.as_functions()]
    )
    _log_config(ExperimentConfig(
        n_functions=table.sample_size,
        grid_size=model.grid.size,
        coverage_p=fac.coverage_p,
        confidence_beta=fac.confidence_beta,
    ))
    _emit(
        fmt, output,
        doc=serialize.scores_to_doc(scores, summary, fac),
        table=serialize.score_rows(scores),
        figure=lambda: histogram_figure(summary, fac),
    )


@cli.command()
@click.option("--model", "source", default="-", show_default=True,
              help="Model document path, or - for stdin.")
@click.option("--method", type=click.Choice(["band", "region"]),
              default="band", show_default=True,
              help="Which tolerance construction to audit.")
@click.option("--coverage", type=float, default=0.90, show_default=True,
              help=_COV_HELP)
@click.option("--confidence", "confidences", type=float, multiple=True,
              default=(0.90, 0.95, 0.99), show_default=True,
              help="Confidence level; repeat the flag for several.")
@click.option("--replicates", type=int, default=500, show_default=True,
              help="Coverage replicates.")
@click.option("--draws", type=int, default=100, show_default=True,
              help="Fresh draws per replicate.")
@click.option("--per-replicate-n", type=int, default=30, show_default=True,
              help="Bootstrap sample size (band method).")
@click.option("--bootstrap-s", type=int, default=500, show_default=True,
              help="Bootstrap replicates S (band method).")
@click.option("--mc-iterations", type=int, default=100_000, show_default=True,
              help="Monte Carlo iterations per factor (region method).")
@_seed_option
@_format_option
@_output_option
def coverage(source: str, method: str, coverage: float,
             confidences: tuple[float, ...], replicates: int, draws: int,
             per_replicate_n: int, bootstrap_s: int, mc_iterations: int,
             seed: int, fmt: str, output: str) -> None:
    """Estimate how often the bounds capture their nominal coverage."""
    model = _load_model(source)
    if method == "band":
        report = coverage_experiment(
            model,
            coverage=coverage,
            confidences=confidences,
            replicates=replicates,
            draws_per_replicate=draws,
            per_replicate_n=per_replicate_n,
            bootstrap_s=bootstrap_s,
            seed=seed,
        )
    else:
        report = coverage_experiment_fpca(
            model,
            coverage=coverage,
            confidences=confidences,
            replicates=replicates,
            draws_per_replicate=draws,
            mc_iterations=mc_iterations,
            seed=seed,
        )
    _log_config(ExperimentConfig(
        seed=seed,
        n_functions=model.sample_size,
        grid_size=model.grid.size,
        bootstrap_s=bootstrap_s if method == "band" else mc_iterations,
        per_replicate_n=per_replicate_n,
        coverage_p=1.0 - coverage,
    ))
    _emit(
        fmt, output,
        doc=serialize.coverage_to_doc(report),
        table=serialize.coverage_rows(report),
        figure=lambda: coverage_figure(report),
    )


@cli.command()
@click.option("--band", "source", default="-", show_default=True,
              help="Band document path, or - for stdin.")
@click.option("--mode", type=click.Choice(["amplitude", "phase"]),
              default="amplitude", show_default=True,
              help="Which component of the band to lay out.")
@_format_option
@_output_option
def surface(source: str, mode: str, fmt: str, output: str) -> None:
    """Lay the three bound curves out along the distance-from-median axis."""
    band_doc = serialize.band_from_doc(_loads(_read_text(source), "band"))
    data = surface_coords(band_doc, mode)
    _log_config(ExperimentConfig(
        seed=band_doc.seed,
        n_functions=band_doc.per_replicate_n,
        grid_size=band_doc.grid.size,
        bootstrap_s=band_doc.bootstrap_s,
        per_replicate_n=band_doc.per_replicate_n,
        coverage_p=band_doc.coverage_p,
        confidence_alpha=band_doc.confidence_alpha,
    ))
    _emit(
        fmt, output,
        doc=serialize.surface_to_doc(data),
        table=serialize.surface_to_table(data),
        figure=lambda: surface_figure(data),
    )


def main(argv: list[str] | None = None) -> int:
    """Entry point; maps exception classes to process exit codes."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cli.main(args=argv, prog_name="elastictb", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 2
    except click.Abort:
        return 130
    except ConvergenceError as exc:
        log.error("%s", exc)
        return 3
    except (ParseError, SizeError, DomainError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
