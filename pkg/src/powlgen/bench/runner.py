"""Benchmark matrix execution with crash-safe, resumable record persistence.

Each (fixture, provider, strategy, band) cell produces one RunRecord appended
to ``records.jsonl``. Re-running skips cells that already have a record, so an
interrupted matrix continues where it stopped.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..dsl import render
from ..llm import (
    GenerationConfig,
    MockChatProvider,
    ProviderConfig,
    make_provider,
    generate,
    optimize_input,
    optimize_output,
    self_evaluate_select,
)
from ..llm.chat import ChatProvider, TransportError
from ..model import DiagnosticError
from .fixtures import Fixture

logger = logging.getLogger(__name__)

STRATEGIES = (
    "baseline",
    "self_eval_general",
    "self_eval_conformance",
    "input_opt",
    "output_opt",
)

SELF_EVAL_CANDIDATES = 4

RECORDS_FILENAME = "records.jsonl"


@dataclass
class RunRecord:
    """One benchmark cell: a fixture run through one strategy on one model."""

    fixture_id: str
    provider_name: str
    strategy: str
    band: str = "full"
    status: str = "failed"
    iterations: int = 0
    auto_fixed: bool = False
    total_time: float = 0.0
    iteration_times: list[float] = field(default_factory=list)
    fitness: float | None = None
    precision: float | None = None
    quality: float | None = None
    gt_quality: float | None = None
    quality_before: float | None = None
    changed: bool | None = None
    optimization_error: str | None = None
    candidate_qualities: list[float] | None = None
    llm_scores: list[float] | None = None
    selected_index: int | None = None
    error: str | None = None

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.fixture_id, self.provider_name, self.strategy, self.band)

    @property
    def succeeded(self) -> bool:
        return self.status in ("succeeded", "succeeded_with_autofix")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(**data)


def stable_seed(*parts: str) -> int:
    """Process-independent seed derived from the cell coordinates."""
    return zlib.crc32("|".join(parts).encode("utf-8")) & 0x7FFFFFFF


def provider_display_name(config: ProviderConfig) -> str:
    return config.model_name or config.vendor


def _mock_responses_for(
    script_path: str, fixture_id: str, strategy: str, band: str
) -> list[str]:
    data = json.loads(Path(script_path).read_text(encoding="utf-8"))
    if isinstance(data, list):
        return data
    if isinstance(data, dict):
        for key in (
            f"{fixture_id}:{strategy}:{band}",
            f"{fixture_id}:{strategy}",
            fixture_id,
            "default",
        ):
            if key in data:
                return data[key]
        raise ValueError(
            f"mock script has no responses for {fixture_id}:{strategy}:{band}"
        )
    raise ValueError("mock script must be a JSON array or object of arrays")


def provider_for_run(
    config: ProviderConfig, fixture_id: str, strategy: str, band: str
) -> ChatProvider:
    """A fresh provider per cell; mock scripts may be keyed per cell."""
    if config.vendor == "mock":
        if not config.script_path:
            raise ValueError("mock vendor requires script_path")
        return MockChatProvider(
            _mock_responses_for(config.script_path, fixture_id, strategy, band)
        )
    return make_provider(config)


def _fill_from_session(record: RunRecord, session, fixture: Fixture) -> None:
    record.status = session.status
    record.iterations = session.iteration_count
    record.auto_fixed = session.auto_fixed
    record.iteration_times = [r.wall_time for r in session.iterations]
    if session.succeeded and session.model is not None:
        report = fixture.score(session.model)
        record.fitness = report.fitness
        record.precision = report.precision
        record.quality = report.quality


def run_one(
    fixture: Fixture,
    provider_config: ProviderConfig,
    strategy: str,
    band: str = "full",
    provider_name: str | None = None,
    gt_quality: float | None = None,
) -> RunRecord:
    """Executes one benchmark cell and returns its record.

    Provider and modeling failures are captured in the record; only
    programming errors propagate.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy: {strategy!r}")
    description = fixture.description_for(band)
    if description is None:
        raise ValueError(f"fixture {fixture.id} has no {band!r} description")
    record = RunRecord(
        fixture_id=fixture.id,
        provider_name=provider_name or provider_display_name(provider_config),
        strategy=strategy,
        band=band,
        gt_quality=gt_quality if gt_quality is not None else fixture.self_quality(),
    )
    gen_config = GenerationConfig(
        label_constraint=fixture.labels,
        seed=stable_seed(fixture.id, strategy, band),
    )
    provider = provider_for_run(provider_config, fixture.id, strategy, band)
    start = time.perf_counter()
    try:
        if strategy == "baseline":
            session = generate(description, provider, gen_config)
            _fill_from_session(record, session, fixture)
        elif strategy in ("self_eval_general", "self_eval_conformance"):
            criteria = "general" if strategy.endswith("general") else "conformance"
            sessions = [
                generate(description, provider, gen_config)
                for _ in range(SELF_EVAL_CANDIDATES)
            ]
            record.iterations = sum(s.iteration_count for s in sessions)
            record.iteration_times = [
                r.wall_time for s in sessions for r in s.iterations
            ]
            if not all(s.succeeded for s in sessions):
                record.status = "failed"
            else:
                evaluation = self_evaluate_select(
                    description, sessions, provider, criteria=criteria
                )
                record.candidate_qualities = [
                    fixture.score(s.model).quality for s in sessions
                ]
                record.llm_scores = evaluation.scores
                record.selected_index = evaluation.selected_index
                chosen = sessions[evaluation.selected_index]
                record.status = chosen.status
                record.auto_fixed = chosen.auto_fixed
                report = fixture.score(chosen.model)
                record.fitness = report.fitness
                record.precision = report.precision
                record.quality = report.quality
        elif strategy == "input_opt":
            optimized = optimize_input(description, provider)
            session = generate(optimized, provider, gen_config)
            _fill_from_session(record, session, fixture)
        else:
            session = generate(description, provider, gen_config)
            _fill_from_session(record, session, fixture)
            if session.succeeded:
                record.quality_before = record.quality
                result = optimize_output(session, provider)
                record.changed = result.changed
                if result.error is not None:
                    record.optimization_error = result.error.code
                _fill_from_session(record, result.session, fixture)
    except (TransportError, DiagnosticError) as exc:
        record.status = "error"
        record.error = str(exc)
        record.fitness = record.precision = record.quality = None
    record.total_time = time.perf_counter() - start
    if not record.succeeded:
        record.fitness = record.precision = record.quality = None
    return record


def load_records(path: Path) -> list[RunRecord]:
    """Reads a JSON-lines record file, tolerating a trailing partial line."""
    path = Path(path)
    records = []
    if not path.exists():
        return records
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            records.append(RunRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, TypeError):
            logger.warning("skipping unreadable record line in %s", path)
    return records


def run_matrix(
    fixtures: list[Fixture],
    providers: list[ProviderConfig],
    strategies: list[str],
    out_dir: Path,
    bands: tuple[str, ...] = ("full",),
    jobs: int = 1,
    per_provider_limit: int = 2,
) -> list[RunRecord]:
    """Runs fixtures x providers x strategies x bands, resuming prior work.

    Records are appended to ``records.jsonl`` as each cell finishes; cells
    already present in the file are skipped. Per-run failures are recorded,
    never raised.
    """
    for strategy in strategies:
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {strategy!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / RECORDS_FILENAME
    existing = load_records(records_path)
    done = {r.key for r in existing}
    self_quality_cache = {f.id: f.self_quality() for f in fixtures}

    tasks = []
    for fixture in fixtures:
        for config in providers:
            name = provider_display_name(config)
            for strategy in strategies:
                for band in bands:
                    if fixture.description_for(band) is None:
                        continue
                    if (fixture.id, name, strategy, band) in done:
                        continue
                    tasks.append((fixture, config, name, strategy, band))

    sink_lock = threading.Lock()
    gates = {
        provider_display_name(c): threading.Semaphore(per_provider_limit)
        for c in providers
    }
    new_records: list[RunRecord] = []

    def execute(task) -> RunRecord:
        fixture, config, name, strategy, band = task
        with gates[name]:
            return run_one(
                fixture,
                config,
                strategy,
                band,
                provider_name=name,
                gt_quality=self_quality_cache[fixture.id],
            )

    def persist(record: RunRecord) -> None:
        with sink_lock:
            with records_path.open("a", encoding="utf-8") as sink:
                sink.write(json.dumps(record.to_dict()) + "\n")
                sink.flush()
                os.fsync(sink.fileno())
            new_records.append(record)

    if jobs <= 1:
        for task in tasks:
            persist(execute(task))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(execute, task) for task in tasks]
            for future in as_completed(futures):
                persist(future.result())
    return existing + new_records


def make_mock_script(
    fixtures: list[Fixture],
    strategies: list[str],
    bands: tuple[str, ...] = ("full",),
) -> dict[str, list[str]]:
    """Builds a keyed mock script where the provider answers perfectly.

    Every generation request is answered with the fixture's rendered ground
    truth; self-evaluation gets parseable scores and input optimization gets a
    lightly reworded description.
    """
    script: dict[str, list[str]] = {}
    for fixture in fixtures:
        rendered = render(fixture.model).source
        fenced = f"```python\n{rendered}\n```"
        for strategy in strategies:
            for band in bands:
                description = fixture.description_for(band)
                if description is None:
                    continue
                key = f"{fixture.id}:{strategy}:{band}"
                if strategy == "baseline":
                    script[key] = [fenced]
                elif strategy in ("self_eval_general", "self_eval_conformance"):
                    scores = "\n".join(
                        f"R{i}: {1.0 - 0.05 * (i - 1):.2f}"
                        for i in range(1, SELF_EVAL_CANDIDATES + 1)
                    )
                    script[key] = [fenced] * SELF_EVAL_CANDIDATES + [scores]
                elif strategy == "input_opt":
                    enriched = (
                        "The following is a detailed restatement of the process. "
                        + description
                    )
                    script[key] = [enriched, fenced]
                else:
                    script[key] = [fenced, fenced]
    return script
