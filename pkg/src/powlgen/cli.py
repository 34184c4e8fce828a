"""Command line interface: one-shot generation, model export, and the studio service."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .dsl import interpret_response, render
from .llm import GenerationConfig, ProviderConfig, TransportError, generate, make_provider
from .translate import to_bpmn, to_petri_net, write_bpmn_xml, write_dot, write_pnml

log = logging.getLogger(__name__)

WRITERS = {
    "script": lambda model: render(model).source,
    "bpmn": lambda model: write_bpmn_xml(to_bpmn(model)),
    "pnml": lambda model: write_pnml(to_petri_net(model)),
    "dot": lambda model: write_dot(to_petri_net(model)),
}


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Generate sound process models from natural-language descriptions."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command("generate")
@click.option("--description", "description_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="File containing the process description.")
@click.option("--text", default=None, help="Process description given inline.")
@click.option("--provider", "vendor", default="openai", show_default=True, help="Provider vendor (openai, anthropic, google, mock).")
@click.option("--model", "model_name", default="gpt-4o", show_default=True, help="Model name.")
@click.option("--api-key-env", default=None, help="Environment variable holding the API key.")
@click.option("--mock-script", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Canned responses for the mock provider.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True, help="Directory for the generated artifacts.")
def generate_command(description_file, text, vendor, model_name, api_key_env, mock_script, out_dir) -> None:
    """Generates a model and writes script, BPMN, PNML, DOT, and session log."""
    if (description_file is None) == (text is None):
        raise click.ClickException("provide exactly one of --description or --text")
    description = text or description_file.read_text(encoding="utf-8")
    kwargs = {"vendor": vendor, "model_name": model_name}
    if api_key_env:
        kwargs["api_key_env"] = api_key_env
    if mock_script:
        kwargs["script_path"] = str(mock_script)
    try:
        provider = make_provider(ProviderConfig(**kwargs))
    except ValueError as exc:
        raise click.ClickException(str(exc))
    try:
        session = generate(description.strip(), provider, GenerationConfig())
    except TransportError as exc:
        raise click.ClickException(f"provider failure: {exc}")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "session.json").write_text(
        json.dumps(session.to_dict(), indent=2), encoding="utf-8"
    )
    if not session.succeeded:
        diagnostics = session.iterations[-1].diagnostics if session.iterations else []
        for diagnostic in diagnostics:
            click.echo(f"{diagnostic.severity.upper()} {diagnostic.code}: {diagnostic.message}", err=True)
        raise click.ClickException(
            f"generation failed after {session.iteration_count} iterations"
        )
    for name, write in WRITERS.items():
        suffix = "py" if name == "script" else name
        (out_dir / f"model.{suffix}").write_text(write(session.model), encoding="utf-8")
    click.echo(
        f"{session.status} after {session.iteration_count} iteration(s); artifacts in {out_dir}"
    )


@main.command("export")
@click.option("--script", "script_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Construction script to translate.")
@click.option("--format", "format_name", type=click.Choice(sorted(WRITERS)), required=True)
@click.option("--out", "out_file", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output file (defaults to stdout).")
def export_command(script_file, format_name, out_file) -> None:
    """Translates an existing construction script to another format."""
    model, report = interpret_response(script_file.read_text(encoding="utf-8"))
    if model is None or not report.is_valid:
        for diagnostic in report.diagnostics:
            click.echo(f"{diagnostic.severity.upper()} {diagnostic.code}: {diagnostic.message}", err=True)
        raise click.ClickException("script is not a valid model")
    document = WRITERS[format_name](model)
    if out_file is None:
        click.echo(document, nl=False)
    else:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        out_file.write_text(document, encoding="utf-8")
        click.echo(f"wrote {out_file}", err=True)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help="Port (defaults to POWLGEN_PORT or 8765).")
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path), default=None, help="Session storage directory.")
@click.option("--ui-dir", type=click.Path(file_okay=False, path_type=Path), default=None, help="Static UI assets to serve under /ui.")
def serve_command(host, port, data_dir, ui_dir) -> None:
    """Runs the studio HTTP service."""
    from .service import serve

    serve(host=host, port=port, data_dir=data_dir, ui_dir=ui_dir)


if __name__ == "__main__":
    sys.exit(main())
