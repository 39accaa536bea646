"""``cgthreat`` command line: analyze, validate, export.

Exit status: 0 success without findings, 2 success with findings, 1 error.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .errors import CGThreatError
from .graph import project_undirected
from .heuristics import HeuristicConfig
from .pipeline import INPUT_FORMATS, RunConfig, analyze, cluster, load_config_file, load_graph, write_outputs
from .report import export_top_k_dot

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FINDINGS = 2


def _input_options(f):
    f = click.option("--format-in", type=click.Choice(INPUT_FORMATS), default=None,
                     help="Input format; guessed from the file when omitted.")(f)
    f = click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
                     help="Call graph file (DOT digraph or edge list).")(f)
    return f


@click.group()
@click.version_option(__version__, prog_name="cgthreat")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Cluster call graphs and flag structural security weaknesses."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@cli.command("analyze")
@_input_options
@click.option("--algorithms", default=None, help="Comma list of dbscan,hdbscan,louvain,leiden [hdbscan,leiden].")
@click.option("--eps", type=float, default=None, help="DBSCAN radius in hops [1.0].")
@click.option("--min-pts", type=int, default=None, help="DBSCAN core threshold [5].")
@click.option("--min-cluster-size", type=int, default=None, help="HDBSCAN minimum cluster size [8].")
@click.option("--resolution", type=float, default=None, help="Modularity resolution [1.0].")
@click.option("--seed", type=int, default=None, help="Seed for Louvain/Leiden [42].")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Run configuration file (key=value or JSON).")
@click.option("--heuristic-config", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Heuristic thresholds file (key=value or JSON).")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
              show_default=True, help="Directory for report files.")
@click.option("--format", "formats", default=None, help="Comma list of json,md,dot [json].")
@click.option("--top-k", type=int, default=None, help="Clusters per DOT export [10].")
@click.option("--node-cap", type=int, default=None, help="Node limit for the dense distance model [5000].")
@click.option("--no-timing", is_flag=True, help="Omit runtimes so reports are byte-reproducible.")
def analyze_cmd(input_path, format_in, algorithms, eps, min_pts, min_cluster_size, resolution, seed,
                config_path, heuristic_config, out_dir, formats, top_k, node_cap, no_timing):
    """Cluster the call graph, score it and run the threat heuristics."""
    cfg = RunConfig(input=input_path, out_dir=out_dir, timing=not no_timing)
    if config_path is not None:
        cfg = cfg.with_overrides(load_config_file(config_path))
    if heuristic_config is not None:
        heuristics = HeuristicConfig.from_mapping(load_config_file(heuristic_config), cfg.heuristics)
        cfg = replace(cfg, heuristics=heuristics)
    cfg = cfg.with_overrides({
        "format_in": format_in, "algorithms": algorithms, "eps": eps, "min_pts": min_pts,
        "min_cluster_size": min_cluster_size, "resolution": resolution, "seed": seed,
        "format": formats, "top_k": top_k, "node_cap": node_cap,
    })
    g = load_graph(input_path, cfg.format_in)
    report, clusterings = analyze(g, cfg)
    written = write_outputs(report, g, clusterings, cfg)
    for path in written:
        click.echo(f"wrote {path}")
    counts = ", ".join(f"{run.name}={sum(report.counts[run.name].values())}" for run in report.runs)
    click.echo(f"findings: {report.total_findings} ({counts})")
    return EXIT_FINDINGS if report.total_findings else EXIT_OK


@cli.command("validate")
@_input_options
def validate_cmd(input_path, format_in):
    """Parse a call graph and print its basic statistics."""
    g = load_graph(input_path, format_in)
    components = project_undirected(g).component_count()
    click.echo(f"nodes={g.node_count} edges={g.edge_count} self_loops={len(g.self_loops)} components={components}")
    return EXIT_OK


@cli.command("export")
@_input_options
@click.option("--algorithm", type=click.Choice(["dbscan", "hdbscan", "louvain", "leiden"]), default="leiden",
              show_default=True)
@click.option("--top-k", type=int, default=10, show_default=True)
@click.option("--eps", type=float, default=None)
@click.option("--min-pts", type=int, default=None)
@click.option("--min-cluster-size", type=int, default=None)
@click.option("--resolution", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--node-cap", type=int, default=None)
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the DOT document here instead of stdout.")
def export_cmd(input_path, format_in, algorithm, top_k, eps, min_pts, min_cluster_size, resolution, seed,
               node_cap, output):
    """Export the top-K clusters of one algorithm as a DOT digraph."""
    cfg = RunConfig(input=input_path, algorithms=(algorithm,)).with_overrides({
        "format_in": format_in, "eps": eps, "min_pts": min_pts, "min_cluster_size": min_cluster_size,
        "resolution": resolution, "seed": seed, "top_k": top_k, "node_cap": node_cap,
    })
    g = load_graph(input_path, cfg.format_in)
    text = export_top_k_dot(g, cluster(g, algorithm, cfg), cfg.top_k)
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        status = cli.main(args=argv, prog_name="cgthreat", standalone_mode=False)
    except click.exceptions.Exit as exc:
        status = exc.exit_code
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        status = EXIT_ERROR
    except click.Abort:
        click.echo("error: aborted", err=True)
        status = EXIT_ERROR
    except CGThreatError as exc:
        click.echo(f"error: {exc}", err=True)
        status = EXIT_ERROR
    except (OSError, UnicodeDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        status = EXIT_ERROR
    return int(status or 0)


if __name__ == "__main__":
    sys.exit(main())
