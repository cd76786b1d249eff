"""Command-line interface: build-index, extract, explain.

Exit codes are a stable contract: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import gzip
import sys
from typing import IO

import click

from .kg import (
    IngestError,
    KnowledgeGraph,
    PathmineError,
    WalkStats,
    ingest_csv,
    load_index,
    save_index,
)
from .pipeline import Config, Extractor, run_batch
from .scoring import SCORE_SENTINEL

USAGE_ERROR = 1
DATA_ERROR = 2


def _config_from_options(config_path: str | None, **overrides) -> Config:
    if config_path:
        return Config.from_file(config_path, **overrides)
    defaults = Config()
    merged = {
        name: (overrides[name] if overrides.get(name) is not None else getattr(defaults, name))
        for name in Config.__dataclass_fields__
    }
    return Config(**merged)


def _open_dump(path: str) -> IO[bytes]:
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _load_graph(path: str) -> tuple[KnowledgeGraph, WalkStats]:
    graph, stats = load_index(path)
    if stats is None:
        stats = WalkStats.from_graph(graph)
    return graph, stats


@click.group()
def cli() -> None:
    """Mine grounded multi-hop concept paths from a knowledge graph."""


@cli.command("build-index")
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False))
@click.option("--lang", default=None, help="Language tag to keep (default en).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def build_index_cmd(dump: str, output: str, lang: str | None, config_path: str | None) -> None:
    """Ingest an assertion dump and write a versioned binary index."""
    config = _config_from_options(config_path, lang=lang)
    with _open_dump(dump) as fh:
        graph, report = ingest_csv(fh, config.lang)
    stats = WalkStats.from_graph(graph)
    save_index(graph, output, stats)
    click.echo(
        f"ingested {report.summary()}; concepts={graph.node_count} "
        f"relations={len(graph.relation_names)}",
        err=True,
    )


@cli.command("extract")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_path", required=True, help="JSON-lines requests, or - for stdin.")
@click.option("--output", "output_path", required=True, help="JSON-lines results, or - for stdout.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--max-total-paths", type=int, default=None)
def extract_cmd(
    graph_path: str,
    input_path: str,
    output_path: str,
    config_path: str | None,
    seed: int | None,
    workers: int,
    max_total_paths: int | None,
) -> None:
    """Extract path token sequences for each context/query request."""
    if workers < 1:
        raise click.BadParameter("workers must be >= 1")
    config = _config_from_options(config_path, seed=seed, max_total_paths=max_total_paths)
    graph, stats = _load_graph(graph_path)
    extractor = Extractor(graph, stats, config)

    if input_path == "-":
        lines = [line.rstrip("\n") for line in sys.stdin]
    else:
        with open(input_path, encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip()]

    out = sys.stdout if output_path == "-" else open(output_path, "w", encoding="utf-8")
    try:
        for result in run_batch(extractor, lines, workers=workers):
            out.write(result.to_json())
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


@cli.command("explain")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--context", required=True)
@click.option("--query", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
def explain_cmd(
    graph_path: str, context: str, query: str, config_path: str | None, seed: int | None
) -> None:
    """Print every scored tree with per-node scores and keep/drop decisions."""
    config = _config_from_options(config_path, seed=seed)
    graph, stats = _load_graph(graph_path)
    extractor = Extractor(graph, stats, config)
    click.echo(render_explanation(extractor, context, query))


def render_explanation(extractor: Extractor, context: str, query: str) -> str:
    graph = extractor.graph
    analyses = extractor.analyze(context, query)
    if not analyses:
        return "no query concepts grounded; no paths"
    lines: list[str] = []
    for analysis in analyses:
        tree = analysis.tree
        scored = analysis.scored
        root_surface = graph.surfaces[analysis.root_concept]
        lines.append(f"tree rooted at {root_surface!r} ({tree.node_count} nodes)")

        def fmt(value: float) -> str:
            return "-inf" if value == SCORE_SENTINEL else f"{value:.6f}"

        def walk(idx: int, depth: int, kept: bool) -> None:
            node = tree.node(idx)
            indent = "  " * depth
            mark = "kept" if kept else "dropped"
            if idx == 0:
                lines.append(f"{indent}{graph.surfaces[node.concept]} (root)")
            else:
                rel = graph.relation_names[node.incoming_relation]
                lines.append(
                    f"{indent}{graph.surfaces[node.concept]} via {rel} "
                    f"raw={fmt(scored.raw_of(node))} n={fmt(scored.n_of(node))} "
                    f"c={fmt(scored.c_of(node))} [{mark}]"
                )
            children = node.children
            ranked = sorted(
                children, key=lambda ch: (-scored.c_of(ch), ch.concept)
            )
            kept_set = {ch.index for ch in ranked[:2]} if kept else set()
            for child in children:
                walk(child.index, depth + 1, child.index in kept_set)

        walk(0, 0, True)
        if analysis.selection.full_paths:
            lines.append("selected paths:")
            for tokens in analysis.selection.realized:
                lines.append("  " + " ".join(tokens))
        else:
            lines.append("no paths")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return USAGE_ERROR
    except click.Abort:
        return USAGE_ERROR
    except click.ClickException as exc:
        exc.show()
        return USAGE_ERROR
    except (IngestError, PathmineError) as exc:
        click.echo(f"error: {exc}", err=True)
        return DATA_ERROR
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return DATA_ERROR
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return DATA_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
