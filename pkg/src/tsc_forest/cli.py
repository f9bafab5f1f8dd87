"""Command-line interface for tsc-forest."""

import logging
import sys
from pathlib import Path
from typing import Any, NoReturn

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from tsc_forest import __version__
from tsc_forest.config import Config, ConfigError, load_config
from tsc_forest.dataio import (
    DataError,
    gen_synthetic_lines,
    load_model,
    save_batch,
    save_model,
    synthesize_corpus,
    write_metrics,
)
from tsc_forest.forest import ForestError, LeafOverflowError, materialize_leaves
from tsc_forest.liegroup import TransformOverflowError, build_generators
from tsc_forest.models import ForestLayout, TrainSummary
from tsc_forest.pipeline import (
    dof_report,
    export_features,
    export_generator_effects,
    load_patch_pool,
    parse_range_spec,
    parse_row_spec,
    published_reports,
    read_comparison_csv,
    render_comparison_text,
    run_comparison,
    sweep_surface,
    write_comparison_csv,
    write_sweep_csv,
    write_sweep_heatmap,
)
from tsc_forest.presets import GENERATOR_NAMES
from tsc_forest.training import NumericalAbortError, Trainer

console = Console()
err_console = Console(stderr=True)

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def setup_logging(verbose: bool = False, quiet: bool = False):
    """Setup logging with Rich handler."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, rich_tracebacks=True)],
        force=True,
    )


def exit_code(error: Exception) -> int:
    """Exit status for an error raised by a command."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (NumericalAbortError, TransformOverflowError, LeafOverflowError)):
        return EXIT_NUMERICAL
    if isinstance(error, DataError):
        return EXIT_DATA
    return EXIT_ERROR


def fail(ctx: click.Context, error: Exception) -> NoReturn:
    err_console.print(f"[bold red]Error:[/bold red] {error}")
    if ctx.obj.get("verbose"):
        err_console.print_exception()
    sys.exit(exit_code(error))


def parse_layout(text: str) -> ForestLayout:
    try:
        return ForestLayout.parse(text)
    except ValueError as e:
        raise ConfigError(str(e))


def build_config(ctx: click.Context, **overrides: Any) -> Config:
    """Config from the global ``--config``/``--seed`` plus command overrides."""
    return load_config(ctx.obj["config_path"], seed=ctx.obj["seed"], **overrides)


def out_dir(ctx: click.Context) -> Path:
    path = Path(ctx.obj["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def progress_bar(ctx: click.Context) -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        TimeElapsedColumn(),
        console=err_console,
        disable=ctx.obj["quiet"],
    )


@click.group()
@click.option("--config", "config_path", type=click.Path(), help="Flat key = value config file")
@click.option("--seed", type=int, help="Random seed (overrides config)")
@click.option("--out", default="output", type=click.Path(), help="Output directory")
@click.option("--quiet", is_flag=True, help="Only print warnings and results")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.version_option(__version__, prog_name="tsc-forest")
@click.pass_context
def main(ctx, config_path, seed, out, quiet, verbose):
    """tsc-forest - transformational sparse coding forests and benchmarks."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=Path(config_path) if config_path else None,
        seed=seed,
        out=out,
        quiet=quiet,
        verbose=verbose,
    )
    setup_logging(verbose, quiet)


@main.command("train")
@click.option("--data", "-d", multiple=True, type=click.Path(), help="PGM file/directory or .npz batch")
@click.option("--layout", "-l", help="Forest layout, e.g. 8x8")
@click.option("--depth", type=int, help="Tree depth")
@click.option("--side", type=int, help="Patch side length")
@click.option("--epochs", "-e", type=int, help="Number of epochs")
@click.option("--lambda-w", type=float, help="Sparsity penalty")
@click.option("--batch-size", type=int, help="Patches per epoch")
@click.option("--workers", type=int, help="Worker threads")
@click.option("--quadrature", type=click.Choice(["stochastic", "fixed_nodes"]), help="Gradient rule")
@click.pass_context
def train_cmd(ctx, data, layout, depth, side, epochs, lambda_w, batch_size, workers, quadrature):
    """Train a forest and write model.tsc, metrics.txt and summary.json."""
    try:
        overrides: dict[str, Any] = dict(
            depth=depth,
            side=side,
            epochs=epochs,
            lambda_w=lambda_w,
            batch_size=batch_size,
            workers=workers,
            quadrature=quadrature,
        )
        if layout:
            parsed = parse_layout(layout)
            overrides.update(trees=parsed.trees, branching=parsed.branching)
        config = build_config(ctx, **overrides)
        train_config = config.train

        pool = load_patch_pool(
            data, train_config.side, config.bench.patch_count, np.random.default_rng(train_config.seed)
        )
        if not ctx.obj["quiet"]:
            console.print(f"\n[bold cyan]tsc-forest[/bold cyan] v{__version__}\n")
            console.print(f"  [bold]Layout:[/bold]  {train_config.layout.label} (depth {train_config.depth})")
            console.print(f"  [bold]Patches:[/bold] {pool.size} x {pool.pixels}")
            console.print(f"  [bold]Epochs:[/bold]  {train_config.epochs}\n")

        trainer = Trainer(train_config)
        with progress_bar(ctx) as progress:
            task = progress.add_task("[cyan]Training...", total=train_config.epochs or None)

            def on_epoch(record):
                progress.update(
                    task,
                    advance=1,
                    description=f"[cyan]Epoch {record.epoch} mse={record.loss.mse:.4f}",
                )

            forest, metrics = trainer.fit(pool, on_epoch)

        directory = out_dir(ctx)
        model_path = save_model(forest, directory / "model.tsc")
        metrics_path = write_metrics(metrics, directory / "metrics.txt")
        summary = TrainSummary(
            layout=train_config.layout.label,
            side=train_config.side,
            epochs=train_config.epochs,
            seed=train_config.seed,
            final_mse=metrics.final_mse,
            final_sparsity=metrics.epochs[-1].sparsity if metrics.epochs else None,
            reinit_events=len(metrics.reinit_events),
            model_path=str(model_path),
            metrics_path=str(metrics_path),
        )
        (directory / "summary.json").write_text(summary.model_dump_json(indent=2) + "\n")

        final = "n/a" if summary.final_mse is None else f"{summary.final_mse:.5f}"
        console.print(
            f"[green]Trained {summary.layout}:[/green] final mse {final}, "
            f"{summary.reinit_events} re-inits, model {model_path}"
        )
    except Exception as e:
        fail(ctx, e)


@main.command("compare")
@click.option("--data", "-d", multiple=True, type=click.Path(), help="PGM file/directory or .npz batch")
@click.option("--row", "-r", "rows", multiple=True, help="Comparison row LAMBDA:VxB, e.g. 0.4:8x8")
@click.option("--epochs", "-e", type=int, help="Number of epochs for both models")
@click.option("--side", type=int, help="Patch side length")
@click.pass_context
def compare_cmd(ctx, data, rows, epochs, side):
    """Compare TSC with sparse coding at equal feature count."""
    try:
        config = build_config(ctx, epochs=epochs, side=side)
        try:
            specs = [parse_row_spec(r) for r in rows] or [(config.train.lambda_w, config.train.layout)]
        except ValueError as e:
            raise ConfigError(str(e))

        pool = load_patch_pool(
            data, config.train.side, config.bench.patch_count, np.random.default_rng(config.train.seed)
        )
        with progress_bar(ctx) as progress:
            task = progress.add_task("[cyan]Comparing...", total=None)
            results, failures = run_comparison(
                pool, specs, config, lambda msg: progress.update(task, description=f"[cyan]{msg}")
            )

        directory = out_dir(ctx)
        csv_path = write_comparison_csv(results, directory / "comparison.csv")
        (directory / "comparison.txt").write_text(render_comparison_text(csv_path))

        table = Table(title="TSC vs SC")
        records = read_comparison_csv(csv_path)
        columns = list(records[0]) if records else []
        for column in columns:
            table.add_column(column, justify="left" if column in ("layout", "note") else "right")
        for record in records:
            table.add_row(*(record[c] for c in columns))
        console.print(table)

        for label, message in failures:
            err_console.print(f"[bold red]Row {label} failed:[/bold red] {message}")
        if failures:
            sys.exit(EXIT_ERROR)
    except Exception as e:
        fail(ctx, e)


@main.command("export-features")
@click.argument("model_path", type=click.Path())
@click.argument("output", type=click.Path())
@click.option("--mode", type=click.Choice(["leaves", "roots"]), default="leaves", help="What to draw")
@click.pass_context
def export_cmd(ctx, model_path, output, mode):
    """Draw a model's leaves (one row per tree) or roots as a PGM grid."""
    try:
        forest = load_model(Path(model_path))
        path = export_features(forest, build_generators(forest.side), Path(output), mode)
        console.print(f"[green]Feature grid saved:[/green] {path}")
    except Exception as e:
        fail(ctx, e)


@main.command("export-generators")
@click.argument("output", type=click.Path())
@click.option("--side", default=8, help="Patch side length")
@click.option("--points", default=7, help="Magnitudes per generator")
@click.pass_context
def export_generators_cmd(ctx, output, side, points):
    """Draw each generator applied to a square over its sweep range, one row per generator."""
    try:
        path = export_generator_effects(build_generators(side), Path(output), points)
        console.print(f"[green]Generator effects saved:[/green] {path}")
    except Exception as e:
        fail(ctx, e)


@main.command("sweep")
@click.argument("model_path", type=click.Path())
@click.option("--data", "-d", multiple=True, type=click.Path(), help="PGM file/directory or .npz batch")
@click.option("--tree", default=0, help="Tree whose feature is swept")
@click.option("--leaf", type=int, help="Leaf node to sweep (default: the root)")
@click.option("--axes", default="1,2", help="Two generator indices, e.g. 1,2")
@click.option("--points", type=int, help="Grid points per axis")
@click.option(
    "--range", "ranges", multiple=True, help="Axis range AXIS:LOW:HIGH, e.g. 3:-0.5:0.5 (repeatable)"
)
@click.option("--single", is_flag=True, help="Sweep one patch instead of a batch")
@click.option("--index", default=0, help="Patch index for --single")
@click.pass_context
def sweep_cmd(ctx, model_path, data, tree, leaf, axes, points, ranges, single, index):
    """Error surface of one feature over two transformation parameters."""
    try:
        config = build_config(ctx, sweep_points=points)
        try:
            axis_pair = tuple(int(a) for a in axes.split(","))
        except ValueError:
            raise ConfigError(f"Invalid axes '{axes}', expected e.g. 1,2")
        if len(axis_pair) != 2:
            raise ConfigError(f"Invalid axes '{axes}', expected two indices")
        try:
            range_overrides = dict(parse_range_spec(r) for r in ranges)
        except ValueError as e:
            raise ConfigError(str(e))

        forest = load_model(Path(model_path))
        if not 0 <= tree < forest.num_trees:
            raise ForestError(f"Model has {forest.num_trees} trees, no tree {tree}")
        gens = build_generators(forest.side)
        feature = forest.trees[tree].root
        if leaf is not None:
            if (tree, leaf) not in forest.leaf_index:
                raise ForestError(f"Tree {tree} has no leaf {leaf}")
            column = forest.leaf_index.index((tree, leaf))
            feature = materialize_leaves(forest, gens)[:, column]

        pool = load_patch_pool(
            data, forest.side, config.bench.sweep_batch, np.random.default_rng(config.train.seed)
        )
        if single:
            if not 0 <= index < pool.size:
                raise DataError(f"Patch index {index} out of range for {pool.size} patches")
            patches = pool.patches[index : index + 1]
        else:
            patches = pool.sample(config.bench.sweep_batch, np.random.default_rng(config.train.seed)).patches

        result = sweep_surface(
            gens, feature, patches, axis_pair, config.bench.sweep_points, range_overrides
        )
        directory = out_dir(ctx)
        write_sweep_csv(result, directory / "sweep.csv")
        write_sweep_heatmap(result, directory / "sweep.pgm")

        i, j = result.argmin
        first, second = (GENERATOR_NAMES[a - 1] for a in result.axes)
        console.print(
            f"[green]Minimum[/green] at {first}={result.first[i]:.3f}, {second}={result.second[j]:.3f} "
            f"over {patches.shape[0]} patches; wrote {directory / 'sweep.csv'}"
        )
    except Exception as e:
        fail(ctx, e)


@main.command("dof")
@click.argument("layouts", nargs=-1)
@click.option("--pixels", type=int, help="Pixels per patch (default 100)")
@click.option("--group-dim", type=click.Choice(["3", "6"]), help="3 for rigid motions, 6 for affine")
@click.option("--depth", default=1, help="Tree depth")
@click.pass_context
def dof_cmd(ctx, layouts, pixels, group_dim, depth):
    """Degrees of freedom of TSC layouts vs SC; no layout lists the published ones."""
    try:
        config = build_config(
            ctx, pixels=pixels, group_dim=int(group_dim) if group_dim else None
        )
        bench = config.bench
        if layouts:
            reports = []
            for text in layouts:
                parsed = parse_layout(text)
                layout = ForestLayout(trees=parsed.trees, branching=parsed.branching, depth=depth)
                reports.append(dof_report(layout, bench.pixels, bench.group_dim))
        else:
            reports = published_reports(bench.pixels, bench.group_dim)

        table = Table(title=f"Degrees of freedom (M={bench.pixels}, group dim {bench.group_dim})")
        table.add_column("Layout", style="cyan")
        table.add_column("df TSC", justify="right")
        table.add_column("df SC", justify="right")
        table.add_column("# features", justify="right")
        table.add_column("Ratio", justify="right")
        for report in reports:
            table.add_row(
                report.layout,
                str(report.df_tsc),
                str(report.df_sc),
                str(report.num_features),
                f"{report.ratio:.2f}",
            )
        console.print(table)
        for report in reports:
            if report.note:
                console.print(f"[yellow]Note ({report.layout}):[/yellow] {report.note}")
    except Exception as e:
        fail(ctx, e)


@main.command("gen-lines")
@click.argument("count", type=int)
@click.option("--side", default=8, help="Patch side length")
@click.option("--output", "-o", type=click.Path(), help="Output .npz (default OUT/lines.npz)")
@click.pass_context
def gen_lines_cmd(ctx, count, side, output):
    """Generate mean-subtracted synthetic line patches."""
    try:
        config = build_config(ctx)
        batch = gen_synthetic_lines(count, np.random.default_rng(config.train.seed), side)
        path = save_batch(batch, Path(output) if output else out_dir(ctx) / "lines.npz")
        console.print(f"[green]Saved {batch.size} line patches:[/green] {path}")
    except Exception as e:
        fail(ctx, e)


@main.command("gen-corpus")
@click.option("--count", default=4, help="Number of images")
@click.option("--size", default=256, help="Image side length")
@click.option("--output", "-o", type=click.Path(), help="Output directory (default OUT/corpus)")
@click.pass_context
def gen_corpus_cmd(ctx, count, size, output):
    """Write 1/f-spectrum grayscale PGMs to use as a natural-image stand-in."""
    try:
        config = build_config(ctx)
        directory = Path(output) if output else out_dir(ctx) / "corpus"
        paths = synthesize_corpus(directory, np.random.default_rng(config.train.seed), count, size)
        console.print(f"[green]Wrote {len(paths)} images to[/green] {directory}")
    except Exception as e:
        fail(ctx, e)


if __name__ == "__main__":
    main()
