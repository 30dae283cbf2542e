#!/usr/bin/env python3
"""
MP-Viz CLI

    mpviz generate -> embed -> metrics -> plot -> pick

plus `validate` (candidate file checks) and `synth` (benchmark data sets).

Option values resolve as: command line, then MP_SEED for --seed, then the
`--config` file, then the built-in default. Every output file gets a `.meta`
sidecar with the resolved parameters and input digests.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from . import __version__, pipeline
from .affinity import AFFINITY_MODES, default_perplexity, save_betas
from .baselines import DEFAULT_K
from .config import (
    CONNECT_POLICIES,
    METHODS,
    SCALE_MODES,
    RunConfig,
    build_default_map,
    load_config,
)
from .dataset import load_candidates, load_embedding, save_candidates, save_embedding
from .errors import ConfigError, MpVizError, NotTwoDimensional, OutputError
from .metrics import DEFAULT_RESTARTS, labels_path, load_labels, save_comparison, save_labels, save_report
from .plot import PlotOptions, render_svg, save_svg
from .provenance import write_sidecar
from .surrogate import ConstraintThresholds, SurrogateProblem
from .synthetic import as_candidate_set, make_blobs, make_composite, make_swiss_roll
from .tsne import save_cost_trace
from .validate import CandidateValidator

DEFAULT_SEED = 42
DEFAULT_CLUSTERS = 8


class MpVizGroup(click.Group):
    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            # bad flags are bad input: exit 1, keeping 2 for numeric failures
            e.exit_code = 1
            raise


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger = logging.getLogger("mp_viz")
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level)


def guarded(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Turn toolkit errors into a one-line message and the class exit code."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except MpVizError as e:
            click.echo(f"❌ Error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            click.echo(f"❌ Error: {e}", err=True)
            sys.exit(OutputError.exit_code)

    return wrapper


def seed_option(fn: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, envvar="MP_SEED",
        show_default=True,
        help="Random seed (falls back to $MP_SEED)",
    )(fn)


def _parse_exaggeration(text: Optional[str]) -> Optional[Tuple[float, int]]:
    if not text:
        return None
    factor, sep, until = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return float(factor), int(until)
    except ValueError:
        raise ConfigError(
            f"--early-exaggeration expects FACTOR:ITERATIONS, e.g. 4:100, got '{text}'"
        ) from None


def _command_params() -> Dict[str, Tuple[str, ...]]:
    return {
        name: tuple(p.name for p in cmd.params if p.name)
        for name, cmd in cli.commands.items()
    }


@click.group(cls=MpVizGroup)
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="key = value file with option defaults")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.option("--quiet", "-q", is_flag=True, help="Warnings and errors only")
@click.version_option(__version__, prog_name="mpviz")
@click.pass_context
@guarded
def cli(ctx: click.Context, config_path: Optional[str], verbose: bool, quiet: bool) -> None:
    """MP-Viz - map multi-objective design candidates and pick representatives."""
    _configure_logging(verbose, quiet)
    if config_path:
        ctx.default_map = build_default_map(load_config(config_path), _command_params())


@cli.command()
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False),
              help="Candidate table (.csv or .parquet)")
@click.option("--pop-size", type=int, default=20, show_default=True)
@click.option("--generations", type=int, default=50, show_default=True)
@click.option("--single-op", type=click.Choice(["A", "B", "C"]), default=None,
              help="Evaluate one operating point only (5 objectives)")
@click.option("--efficiency-min", type=float, default=0.5, show_default=True)
@click.option("--ripple-max", type=float, default=0.8, show_default=True)
@click.option("--torque-margin", type=float, default=None,
              help="Also require this fraction of rated torque at every operating point")
@click.option("--feasible-only", is_flag=True, help="Write only candidates meeting the constraints")
@seed_option
@guarded
def generate(
    output: str,
    pop_size: int,
    generations: int,
    single_op: Optional[str],
    efficiency_min: float,
    ripple_max: float,
    torque_margin: Optional[float],
    feasible_only: bool,
    seed: int,
) -> None:
    """Generate design candidates with NSGA-II over the SRM surrogate."""
    run = RunConfig(
        "generate",
        output=output,
        params={
            "pop_size": pop_size,
            "generations": generations,
            "single_op": single_op,
            "efficiency_min": efficiency_min,
            "ripple_max": ripple_max,
            "torque_margin": torque_margin,
            "feasible_only": feasible_only,
            "seed": seed,
        },
    ).validate()
    thresholds = ConstraintThresholds(efficiency_min, ripple_max, torque_margin)
    if single_op:
        problem = SurrogateProblem.single_point(single_op, thresholds=thresholds)
    else:
        problem = SurrogateProblem(thresholds=thresholds)

    result = pipeline.generate(problem, pop_size, generations, seed)
    candidates = result.candidates
    if feasible_only:
        candidates = candidates.feasible_only().require_rows(2)
    save_candidates(candidates, output, run)

    click.echo(f"✅ Generated {result.candidates.n} unique candidates "
               f"({len(candidates.column_names)} objectives)")
    click.echo(f"   Preservation ratio: {result.preservation_ratio:.3f}")
    click.echo(f"   Pareto front share: {result.pareto_fraction:.3f}")
    click.echo(f"   📁 {output}")


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False),
              help="Embedding CSV (id,y1..yd)")
@click.option("--method", "-m", type=click.Choice(METHODS), default="tsne", show_default=True)
@click.option("--dims", "-d", type=int, default=2, show_default=True)
@click.option("--scale", type=click.Choice(SCALE_MODES), default="zscore", show_default=True)
@click.option("--perplexity", type=float, default=None,
              help="t-SNE perplexity [default: min(30, (N-1)/3)]")
@click.option("--iterations", type=int, default=1000, show_default=True)
@click.option("--learning-rate", type=float, default=100.0, show_default=True)
@click.option("--early-exaggeration", default=None, metavar="FACTOR:ITERATIONS",
              help="Multiply P by FACTOR for the first ITERATIONS steps")
@click.option("--affinity", type=click.Choice(AFFINITY_MODES), default="conditional",
              show_default=True, help="Per-point bandwidths or one shared bandwidth")
@click.option("--k", "k", type=int, default=DEFAULT_K, show_default=True,
              help="Isomap neighbours")
@click.option("--connect", type=click.Choice(CONNECT_POLICIES), default="largest",
              show_default=True, help="Isomap policy for a disconnected neighbour graph")
@click.option("--feasible-only", is_flag=True, help="Embed feasible candidates only")
@click.option("--cost-trace", type=click.Path(dir_okay=False), default=None,
              help="t-SNE cost trace CSV [default: <output stem>.cost.csv]")
@click.option("--betas", type=click.Path(dir_okay=False), default=None,
              help="Also write the per-point t-SNE bandwidths (id,beta,sigma)")
@seed_option
@guarded
def embed(
    input_path: str,
    output: str,
    method: str,
    dims: int,
    scale: str,
    perplexity: Optional[float],
    iterations: int,
    learning_rate: float,
    early_exaggeration: Optional[str],
    affinity: str,
    k: int,
    connect: str,
    feasible_only: bool,
    cost_trace: Optional[str],
    betas: Optional[str],
    seed: int,
) -> None:
    """Embed a candidate table with t-SNE, PCA or Isomap."""
    exaggeration = _parse_exaggeration(early_exaggeration)
    candidates = load_candidates(input_path)
    if feasible_only:
        candidates = candidates.feasible_only().require_rows(2)

    params: Dict[str, Any] = {
        "dims": dims, "scale": scale, "seed": seed, "feasible_only": feasible_only,
    }
    if method == "tsne":
        params.update(
            perplexity=perplexity,
            iterations=iterations,
            learning_rate=learning_rate,
            early_exaggeration=early_exaggeration,
            affinity=affinity,
        )
    elif method == "isomap":
        params.update(k=k, connect=connect)
    RunConfig("embed", (input_path,), output, method, params).validate()
    if method == "tsne" and perplexity is None:
        # two rows need no search, so the N-based default skips the (1, N-1] check
        params["perplexity"] = default_perplexity(candidates.n)
    run = RunConfig("embed", (input_path,), output, method, params)

    result = pipeline.embed_candidates(
        candidates,
        method=method,
        scale=scale,
        dims=dims,
        seed=seed,
        perplexity=params.get("perplexity"),
        iterations=iterations,
        learning_rate=learning_rate,
        k=k,
        connect=connect,
        affinity=affinity,
        early_exaggeration=exaggeration,
    )
    save_embedding(output, result.ids, result.coords, result.method, result.unembedded, run)
    click.echo(f"✅ {method} embedding of {len(result.ids)} candidates -> {output}")
    if result.unembedded:
        click.echo(f"   ⚠️  {len(result.unembedded)} candidates left unembedded")
    if method == "tsne":
        trace_path = cost_trace or str(Path(output).with_name(Path(output).stem + ".cost.csv"))
        save_cost_trace(trace_path, result.cost_trace)
        write_sidecar(trace_path, [("format", "mp-cost-trace-v1")], run)
        first, last = result.cost_trace[0][1], result.cost_trace[-1][1]
        click.echo(f"   KL {first:.4f} -> {last:.4f} (trace: {trace_path})")
        if betas and result.affinity is not None:
            save_betas(betas, result.affinity, result.ids)
            write_sidecar(betas, [("format", "mp-betas-v1")], run)


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--embedding", "-e", "embeddings", multiple=True, required=True,
              type=click.Path(dir_okay=False), help="Embedding CSV; repeat with --compare")
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False),
              help="Report (key = value), or comparison CSV with --compare")
@click.option("--scale", type=click.Choice(SCALE_MODES), default="zscore", show_default=True)
@click.option("--k", "k", type=int, default=None,
              help="Neighbourhood size [default: min(12, (N-1)//2)]")
@click.option("--clusters", type=int, default=DEFAULT_CLUSTERS, show_default=True)
@click.option("--compare", is_flag=True, help="Score several embeddings side by side")
@click.option("--labels", type=click.Path(dir_okay=False), default=None,
              help="id,label CSV of true classes for --compare silhouettes")
@click.option("--sweep", is_flag=True, help="Add silhouette scores for k = 2..12")
@click.option("--feasible-only", is_flag=True, help="Score against feasible candidates only")
@seed_option
@guarded
def metrics(
    input_path: str,
    embeddings: Tuple[str, ...],
    output: str,
    scale: str,
    k: Optional[int],
    clusters: int,
    compare: bool,
    labels: Optional[str],
    sweep: bool,
    feasible_only: bool,
    seed: int,
) -> None:
    """Score embeddings: trustworthiness, continuity, kNN preservation, silhouette."""
    if not compare and len(embeddings) != 1:
        raise ConfigError("pass exactly one --embedding, or several with --compare")
    inputs = (input_path, *embeddings) + ((labels,) if labels else ())
    run = RunConfig(
        "metrics", inputs, output,
        params={"scale": scale, "k": k, "clusters": clusters, "compare": compare,
                "sweep": sweep, "feasible_only": feasible_only, "seed": seed},
    ).validate()

    candidates = load_candidates(input_path)
    if feasible_only:
        candidates = candidates.feasible_only().require_rows(2)
    loaded = [(path, load_embedding(path)) for path in embeddings]

    if compare:
        named = [(emb.method or Path(path).stem, emb) for path, emb in loaded]
        truth = load_labels(labels) if labels else None
        frame = pipeline.compare(candidates, named, scale, k, truth, clusters, seed)
        save_comparison(frame, output)
        write_sidecar(output, [("format", "mp-comparison-v1")], run)
        click.echo(f"✅ Compared {len(named)} embeddings -> {output}")
        click.echo(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
        return

    report = pipeline.score_embedding(
        candidates, loaded[0][1], clusters, scale, k, seed, DEFAULT_RESTARTS, sweep
    )
    report_path, labels_file = save_report(report, output)
    write_sidecar(report_path, [("format", "mp-report-v1")], run)
    write_sidecar(labels_file, [("format", "mp-labels-v1")], run)
    click.echo(f"✅ Quality report -> {report_path}")
    click.echo(f"   trustworthiness  {report.trustworthiness:.4f} (k={report.k_used})")
    click.echo(f"   continuity       {report.continuity:.4f}")
    click.echo(f"   kNN preservation {report.knn_preservation:.4f}")
    if report.silhouette is not None:
        click.echo(f"   silhouette       {report.silhouette:.4f} ({report.clusters} clusters)")
    click.echo(f"   Representatives: {', '.join(report.representative_ids)}")


@cli.command()
@click.option("--embedding", "-e", "embedding_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="SVG file")
@click.option("--input", "-i", "input_path", type=click.Path(dir_okay=False), default=None,
              help="Candidate table, needed for --color-by")
@click.option("--color-by", default=None, help="Objective or parameter column for a colour ramp")
@click.option("--labels", type=click.Path(dir_okay=False), default=None,
              help="id,label CSV (e.g. from metrics) for cluster colours")
@click.option("--width", type=int, default=800, show_default=True)
@click.option("--height", type=int, default=600, show_default=True)
@click.option("--radius", type=float, default=3.0, show_default=True)
@click.option("--title", default=None)
@guarded
def plot(
    embedding_path: str,
    output: str,
    input_path: Optional[str],
    color_by: Optional[str],
    labels: Optional[str],
    width: int,
    height: int,
    radius: float,
    title: Optional[str],
) -> None:
    """Render a 2-D embedding as a standalone SVG scatter plot."""
    if color_by and labels:
        raise ConfigError("--color-by and --labels are mutually exclusive")
    if color_by and not input_path:
        raise ConfigError("--color-by needs the candidate table (--input)")
    inputs = tuple(p for p in (embedding_path, input_path, labels) if p)
    run = RunConfig(
        "plot", inputs, output,
        params={"width": width, "height": height, "radius": radius,
                "color_by": color_by, "title": title},
    ).validate()

    embedding = load_embedding(embedding_path)
    if embedding.dims != 2:
        raise NotTwoDimensional(embedding.dims)
    values = label_values = None
    if color_by:
        candidates = load_candidates(input_path)
        values = candidates.column(color_by)[pipeline.lookup_rows(candidates, embedding.ids)]
    elif labels:
        label_values = pipeline.labels_for(embedding.ids, load_labels(labels))

    svg = render_svg(
        embedding.coords, embedding.ids, label_values, values, color_by,
        PlotOptions(width, height, radius, title),
    )
    save_svg(output, svg)
    write_sidecar(output, [("format", "svg"), ("points", len(embedding.ids))], run)
    click.echo(f"✅ Plotted {len(embedding.ids)} points -> {output}")


@cli.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--embedding", "-e", "embedding_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False),
              help="Representatives table (full candidate rows)")
@click.option("--clusters", type=int, default=DEFAULT_CLUSTERS, show_default=True)
@click.option("--feasible-only", is_flag=True, help="Pick among feasible candidates only")
@seed_option
@guarded
def pick(
    input_path: str,
    embedding_path: str,
    output: str,
    clusters: int,
    feasible_only: bool,
    seed: int,
) -> None:
    """Cluster the map with k-means and pick the candidate nearest each centroid."""
    run = RunConfig(
        "pick", (input_path, embedding_path), output,
        params={"clusters": clusters, "feasible_only": feasible_only, "seed": seed},
    ).validate()
    candidates = load_candidates(input_path)
    if feasible_only:
        candidates = candidates.feasible_only().require_rows(2)
    representatives, _ = pipeline.pick(candidates, load_embedding(embedding_path), clusters, seed)
    save_candidates(representatives, output, run)
    click.echo(f"✅ Picked {representatives.n} representatives -> {output}")
    for cid in representatives.ids:
        click.echo(f"   - {cid}")


@cli.command("validate")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--strict", is_flag=True, help="Treat constant objective columns as errors")
@click.option("--json", "output_json", is_flag=True, help="Output results as JSON")
def validate_cmd(path: str, strict: bool, output_json: bool) -> None:
    """Validate a candidate table and its sidecar."""
    validator = CandidateValidator(path, strict)
    is_valid, report = validator.validate_all()

    if output_json:
        click.echo(json.dumps(report, indent=2))
        sys.exit(0 if is_valid else 1)

    click.echo(f"Validating candidates: {path}")
    click.echo("=" * 50)
    if is_valid:
        click.echo("✅ VALID - candidate table passes all checks")
    else:
        click.echo("❌ INVALID - candidate table has errors")

    if report["errors"]:
        click.echo(f"\n🚨 Errors ({len(report['errors'])}):")
        for error in report["errors"]:
            click.echo(f"  - {error}")
    if report["warnings"]:
        click.echo(f"\n⚠️  Warnings ({len(report['warnings'])}):")
        for warning in report["warnings"]:
            click.echo(f"  - {warning}")

    if "stats" in report:
        stats = report["stats"]
        click.echo("\n📊 Statistics:")
        click.echo(f"  - {stats['candidates']} candidates, {stats['objectives']} objectives")
        click.echo(f"  - {stats['feasible']} feasible")
        click.echo(f"  - Pareto front share: {stats['pareto_fraction']:.3f}")

    click.echo("\nChecks completed:")
    for check, passed in report["checks"].items():
        status = "✅" if passed else "❌"
        click.echo(f"  {status} {check}")
    sys.exit(0 if is_valid else 1)


@cli.command()
@click.argument("kind", type=click.Choice(["blobs", "swissroll", "composite"]))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False))
@click.option("--n", "n", type=int, default=None,
              help="Points [default: blobs 180, swissroll 300, composite 400]")
@click.option("--dim", type=int, default=13, show_default=True, help="Blob dimension")
@click.option("--centers", type=int, default=3, show_default=True, help="Number of blobs")
@click.option("--sigma", type=float, default=0.05, show_default=True, help="Blob spread")
@seed_option
@guarded
def synth(
    kind: str, output: str, n: Optional[int], dim: int, centers: int, sigma: float, seed: int
) -> None:
    """Write a benchmark data set with known structure."""
    run = RunConfig(
        "synth", output=output,
        params={"kind": kind, "n": n, "dim": dim, "centers": centers, "sigma": sigma, "seed": seed},
    )
    if kind == "blobs":
        X, truth = make_blobs(n or 180, dim, centers, sigma, seed=seed)
    elif kind == "composite":
        total = n or 400
        n_blob = total // 10
        X, truth = make_composite(total - 3 * n_blob, n_blob, seed=seed)
    else:
        X, truth = make_swiss_roll(n or 300, seed=seed)

    candidates = as_candidate_set(X)
    save_candidates(candidates, output, run)
    if kind == "swissroll":
        # the flat (arc length, height) chart doubles as a reference map
        side = Path(output).with_name(Path(output).stem + ".chart.csv")
        save_embedding(side, candidates.ids, truth, "chart", run=run)
    else:
        side = labels_path(output)
        save_labels(side, candidates.ids, truth)
        write_sidecar(side, [("format", "mp-labels-v1")], run)
    click.echo(f"✅ {kind}: {candidates.n} points × {X.shape[1]} columns -> {output}")
    click.echo(f"   Ground truth -> {side}")


if __name__ == "__main__":
    cli()
