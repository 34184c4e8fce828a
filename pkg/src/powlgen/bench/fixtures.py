"""Benchmark fixtures: descriptions paired with ground-truth models.

A fixture directory contains ``description.txt``, ``ground_truth.powl`` (a
construction script), and optional ``description.medium.txt`` /
``description.short.txt`` length bands. Ground truths are interpreted, fully
validated, and their logs simulated once at load time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..conformance import ConformanceReport, evaluate_model
from ..dsl import interpret_response
from ..model import PowlNode, activity_labels
from ..semantics import EventLog, SimulationConfig, enumerate_variants, simulate_log

logger = logging.getLogger(__name__)

BANDS = ("full", "medium", "short")


class FixtureError(RuntimeError):
    """A fixture directory is missing files or has an invalid ground truth."""


@dataclass
class Fixture:
    """One benchmark case with its precomputed ground-truth artifacts."""

    id: str
    description: str
    medium_description: str | None
    short_description: str | None
    script: str
    model: PowlNode
    labels: list[str]
    log: EventLog = field(repr=False)

    def description_for(self, band: str) -> str | None:
        """The description text of one length band, or None if not shipped."""
        if band == "full":
            return self.description
        if band == "medium":
            return self.medium_description
        if band == "short":
            return self.short_description
        raise ValueError(f"unknown band: {band!r}")

    def score(self, model: PowlNode) -> ConformanceReport:
        """Conformance of a candidate model against the ground-truth log."""
        return evaluate_model(model, self.log)

    def self_quality(self) -> float:
        return self.score(self.model).quality


def _read_optional(path: Path) -> str | None:
    return path.read_text(encoding="utf-8").strip() if path.exists() else None


def load_fixture(directory: Path, config: SimulationConfig | None = None) -> Fixture:
    """Loads and fully validates a single fixture directory."""
    directory = Path(directory)
    fixture_id = directory.name
    description_path = directory / "description.txt"
    script_path = directory / "ground_truth.powl"
    for required in (description_path, script_path):
        if not required.exists():
            raise FixtureError(f"fixture {fixture_id}: missing {required.name}")
    script = script_path.read_text(encoding="utf-8")
    model, report = interpret_response(script)
    if model is None or not report.is_valid:
        codes = ", ".join(d.code for d in report.diagnostics) or "no model"
        raise FixtureError(f"fixture {fixture_id}: invalid ground truth ({codes})")
    if report.has_adjustable:
        codes = ", ".join(d.code for d in report.diagnostics)
        raise FixtureError(
            f"fixture {fixture_id}: ground truth needs adjustment ({codes})"
        )
    config = config or SimulationConfig()
    variants = enumerate_variants(model, config)
    log = simulate_log(model, config)
    logger.info(
        "fixture %s: %d activities, %d variants",
        fixture_id, len(activity_labels(model)), len(variants.traces),
    )
    return Fixture(
        id=fixture_id,
        description=description_path.read_text(encoding="utf-8").strip(),
        medium_description=_read_optional(directory / "description.medium.txt"),
        short_description=_read_optional(directory / "description.short.txt"),
        script=script,
        model=model,
        labels=activity_labels(model),
        log=log,
    )


def load_fixtures(root: Path, config: SimulationConfig | None = None) -> list[Fixture]:
    """Loads every fixture subdirectory of ``root``, sorted by id."""
    root = Path(root)
    if not root.is_dir():
        raise FixtureError(f"fixture directory not found: {root}")
    directories = sorted(p for p in root.iterdir() if p.is_dir())
    if not directories:
        raise FixtureError(f"no fixture subdirectories in {root}")
    return [load_fixture(d, config) for d in directories]


def builtin_fixtures_path() -> Path:
    """Location of the fixture set shipped with the package."""
    return Path(str(resources.files("powlgen.bench") / "fixtures_data"))
