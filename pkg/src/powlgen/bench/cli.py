"""Command line entry points for the benchmark harness."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from ..llm.chat import ProviderConfig
from .fixtures import builtin_fixtures_path, load_fixtures
from .reports import write_reports
from .runner import STRATEGIES, load_records, make_mock_script, run_matrix

log = logging.getLogger(__name__)


def _load_providers(path: Path) -> list[ProviderConfig]:
    entries = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(entries, list) or not entries:
        raise click.ClickException(f"{path}: expected a non-empty JSON array")
    return [ProviderConfig(**entry) for entry in entries]


def _csv_option(value: str, allowed: tuple[str, ...], name: str) -> tuple[str, ...]:
    items = tuple(item.strip() for item in value.split(",") if item.strip())
    for item in items:
        if item not in allowed:
            raise click.ClickException(
                f"unknown {name} {item!r}; choose from {', '.join(allowed)}"
            )
    return items


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Benchmark harness: run generation strategies and report metrics."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--fixtures", "fixtures_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None, help="Fixture directory (defaults to the built-in set).")
@click.option("--providers", "providers_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="JSON array of provider configurations.")
@click.option("--strategies", default=",".join(STRATEGIES), show_default=True, help="Comma separated strategies to run.")
@click.option("--bands", default="full", show_default=True, help="Comma separated description-length bands (full, medium, short).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True, help="Output directory for records.jsonl.")
@click.option("--jobs", default=1, show_default=True, help="Parallel worker count.")
@click.option("--per-provider-limit", default=2, show_default=True, help="Max in-flight runs per provider.")
def run(fixtures_dir, providers_file, strategies, bands, out_dir, jobs, per_provider_limit) -> None:
    """Runs the fixture x provider x strategy matrix, resuming where possible."""
    root = fixtures_dir or builtin_fixtures_path()
    fixtures = load_fixtures(root)
    providers = _load_providers(providers_file)
    strategy_list = _csv_option(strategies, STRATEGIES, "strategy")
    band_list = _csv_option(bands, ("full", "medium", "short"), "band")
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_matrix(
        fixtures,
        providers,
        strategies=list(strategy_list),
        out_dir=out_dir,
        bands=band_list,
        jobs=jobs,
        per_provider_limit=per_provider_limit,
    )
    failures = sum(1 for r in records if not r.succeeded)
    click.echo(f"{len(records)} records in {out_dir / 'records.jsonl'} ({failures} unsuccessful)")


@main.command()
@click.option("--in", "in_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True, help="Directory containing records.jsonl.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None, help="Report directory (defaults to the input directory).")
def report(in_dir, out_dir) -> None:
    """Aggregates records.jsonl into tables (CSV + text) and figures."""
    records = load_records(in_dir / "records.jsonl")
    if not records:
        raise click.ClickException(f"no records found in {in_dir / 'records.jsonl'}")
    target = out_dir or in_dir
    written = write_reports(records, target)
    for path in written:
        click.echo(str(path))


@main.command("mock-script")
@click.option("--fixtures", "fixtures_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None, help="Fixture directory (defaults to the built-in set).")
@click.option("--strategies", default=",".join(STRATEGIES), show_default=True, help="Comma separated strategies to cover.")
@click.option("--bands", default="full", show_default=True, help="Comma separated bands to cover.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Where to write the mock response script (JSON).")
def mock_script(fixtures_dir, strategies, bands, out_path) -> None:
    """Writes a canned-response script that drives a full offline run."""
    root = fixtures_dir or builtin_fixtures_path()
    fixtures = load_fixtures(root)
    strategy_list = _csv_option(strategies, STRATEGIES, "strategy")
    band_list = _csv_option(bands, ("full", "medium", "short"), "band")
    script = make_mock_script(fixtures, strategy_list, band_list)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(script, indent=2), encoding="utf-8")
    click.echo(f"wrote {len(script)} response sets to {out_path}")


if __name__ == "__main__":
    main()
