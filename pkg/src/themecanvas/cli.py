"""Command line entry points: serve the API, work on workspace files, run eval."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import store
from .errors import EngineError
from .evaluation import (
    bundled_fixture,
    build_fixture_workspace,
    apply_refinement,
    load_labeling,
    render_table,
    run_classification,
    run_fixture_iterations,
    score_accuracy,
    write_report_files,
)
from .graph import Workspace


@click.group()
def main() -> None:
    """Evidence-grounded thematic analysis workbench."""


@main.command()
@click.option("--host", default=None, help="Defaults to THEMECANVAS_BIND or 127.0.0.1.")
@click.option("--port", default=None, type=int, help="Defaults to THEMECANVAS_BIND or 8000.")
def serve(host: str | None, port: int | None) -> None:
    """Run the HTTP service (provider mode and data dir come from the env)."""
    import os

    import uvicorn

    from .api import create_app

    bind = os.environ.get("THEMECANVAS_BIND", "127.0.0.1:8000")
    bind_host, _, bind_port = bind.partition(":")
    uvicorn.run(
        create_app(),
        host=host or bind_host or "127.0.0.1",
        port=port if port is not None else int(bind_port or 8000),
    )


@main.command()
@click.argument("workspace_file", type=click.Path(path_type=Path))
@click.argument("corpus_file", type=click.Path(exists=True, path_type=Path))
def ingest(workspace_file: Path, corpus_file: Path) -> None:
    """Ingest a corpus/1 JSON document into a workspace file (created if absent)."""
    try:
        if workspace_file.exists():
            workspace = store.load_workspace(workspace_file)
        else:
            workspace = Workspace(workspace_file.stem or "workspace")
        payload = json.loads(corpus_file.read_text(encoding="utf-8"))
        doc_id = workspace.ingest_document(payload)
        store.save_workspace(workspace, workspace_file)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{doc_id} @ revision {workspace.revision}")


@main.command()
@click.argument("workspace_file", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["markdown", "json"]),
    default="markdown",
    show_default=True,
)
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None)
def export(workspace_file: Path, fmt: str, output: Path | None) -> None:
    """Export the codebook of a workspace file."""
    try:
        workspace = store.load_workspace(workspace_file)
        payload = store.export_codebook(workspace, fmt)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    if output is None:
        sys.stdout.write(payload.decode("utf-8"))
    else:
        output.write_bytes(payload)
        click.echo(f"wrote {output}")


@main.command(name="eval")
@click.option(
    "--fixture",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="eval/1 JSON corpus; defaults to the bundled 16-item fixture.",
)
@click.option(
    "--out-dir",
    type=click.Path(path_type=Path),
    default=Path("eval-report"),
    show_default=True,
)
def eval_command(fixture: Path | None, out_dir: Path) -> None:
    """Run the two-iteration refinement harness and write the report files.

    Produces report.json, report.csv, and an accuracy-per-iteration figure.
    """
    try:
        if fixture is None:
            reports = run_fixture_iterations()
        else:
            labeling = load_labeling(json.loads(fixture.read_text(encoding="utf-8")))
            workspace, labels = build_fixture_workspace()
            first = score_accuracy(
                run_classification(labeling.items, workspace),
                labeling,
                labels,
                iteration_tag="iteration-1",
            )
            labels = apply_refinement(workspace)
            second = score_accuracy(
                run_classification(labeling.items, workspace),
                labeling,
                labels,
                iteration_tag="iteration-2",
            )
            reports = [first, second]
    except EngineError as exc:
        raise click.ClickException(str(exc))
    for report in reports:
        click.echo(render_table(report))
        click.echo("")
    paths = write_report_files(reports, out_dir)
    for kind, path in paths.items():
        click.echo(f"{kind}: {path}")


if __name__ == "__main__":
    main()
