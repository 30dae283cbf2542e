#!/usr/bin/env python3
"""
MP-Viz Case Studies

Runs both SRM case studies end to end in one process:

  single   operating point A only, 5 objectives
  multi    operating points A/B/C, 13 objectives

Each study generates candidates, keeps the feasible ones, embeds them with
PCA, Isomap and t-SNE, writes a comparison table, one SVG per method and the
representatives picked from the t-SNE map.
"""

import sys
import time
from pathlib import Path

import click

sys.path.insert(0, str(Path(__file__).parent.parent / "packages" / "mp-viz" / "src"))
from mp_viz import pipeline  # noqa: E402
from mp_viz.config import RunConfig  # noqa: E402
from mp_viz.dataset import save_candidates, save_embedding  # noqa: E402
from mp_viz.errors import MpVizError  # noqa: E402
from mp_viz.metrics import save_comparison  # noqa: E402
from mp_viz.plot import PlotOptions, render_svg, save_svg  # noqa: E402
from mp_viz.surrogate import ConstraintThresholds, SurrogateProblem  # noqa: E402

METHODS = ("pca", "isomap", "tsne")
# Efficiency and ripple alone keep every candidate of the surrogate; rated torque
# at each operating point is what separates feasible designs here.
CASE_STUDY_THRESHOLDS = ConstraintThresholds(torque_margin=1.0)


def study_problem(name: str) -> SurrogateProblem:
    if name == "single":
        return SurrogateProblem.single_point("A", thresholds=CASE_STUDY_THRESHOLDS)
    return SurrogateProblem(thresholds=CASE_STUDY_THRESHOLDS)


def run_study(
    name: str, problem: SurrogateProblem, out_dir: Path, seed: int, clusters: int, iterations: int
) -> None:
    click.echo(f"\n🔄 Case study '{name}': {len(problem.operating_points)} operating point(s)")
    generated = pipeline.generate(problem, seed=seed)
    feasible = generated.candidates.feasible_only().require_rows(2)
    table = out_dir / f"{name}.candidates.csv"
    save_candidates(
        feasible, table, RunConfig("generate", output=str(table), params={"seed": seed})
    )
    click.echo(f"   {generated.candidates.n} candidates, {feasible.n} feasible "
               f"(ratio {generated.preservation_ratio:.3f})")

    maps = []
    for method in METHODS:
        result = pipeline.embed_candidates(
            feasible, method=method, seed=seed, iterations=iterations, connect="mst"
        )
        embedding = result.as_embedding()
        maps.append((method, embedding))
        path = out_dir / f"{name}.{method}.csv"
        run = RunConfig("embed", (str(table),), str(path), method, {"seed": seed})
        save_embedding(path, embedding.ids, embedding.coords, method, embedding.unembedded, run)

        representatives, labels = pipeline.pick(feasible, embedding, clusters, seed)
        svg = render_svg(
            embedding.coords, embedding.ids, labels=labels,
            options=PlotOptions(title=f"{name}: {method}"),
        )
        save_svg(out_dir / f"{name}.{method}.svg", svg)
        if method == "tsne":
            save_candidates(representatives, out_dir / f"{name}.representatives.csv")
            click.echo(f"   Representatives: {', '.join(representatives.ids)}")

    frame = pipeline.compare(feasible, maps, clusters=clusters, seed=seed)
    save_comparison(frame, out_dir / f"{name}.comparison.csv")
    click.echo(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


@click.command()
@click.option("--output", "-o", default="./case_studies", help="Output directory")
@click.option("--seed", type=click.IntRange(min=0), default=42, envvar="MP_SEED",
              show_default=True)
@click.option("--clusters", type=int, default=8, show_default=True)
@click.option("--iterations", type=int, default=1000, show_default=True, help="t-SNE iterations")
@click.option("--study", type=click.Choice(["single", "multi", "both"]), default="both")
def main(output: str, seed: int, clusters: int, iterations: int, study: str) -> None:
    """Reproduce the single- and multi-operating-point SRM case studies."""
    out_dir = Path(output)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        if study in ("single", "both"):
            run_study("single", study_problem("single"), out_dir, seed, clusters, iterations)
        if study in ("multi", "both"):
            run_study("multi", study_problem("multi"), out_dir, seed, clusters, iterations)
    except MpVizError as e:
        click.echo(f"❌ Error: {e}", err=True)
        sys.exit(e.exit_code)
    click.echo(f"\n✅ Done in {time.perf_counter() - started:.1f}s -> {out_dir}")


if __name__ == "__main__":
    main()
