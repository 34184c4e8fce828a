"""Benchmark harness: fixtures, run matrix, and metric reports."""

from .fixtures import BANDS, Fixture, FixtureError, builtin_fixtures_path, load_fixture, load_fixtures
from .reports import (
    MATCH_BUFFER,
    TABLE1_COLUMNS,
    TABLE2_COLUMNS,
    TABLE3_COLUMNS,
    TABLE4_COLUMNS,
    TABLE5_COLUMNS,
    TABLE6_COLUMNS,
    format_text_table,
    match_counts,
    table1_rows,
    table2_rows,
    table3_rows,
    table4_rows,
    table5_rows,
    table6_rows,
    write_reports,
)
from .runner import (
    SELF_EVAL_CANDIDATES,
    STRATEGIES,
    RunRecord,
    load_records,
    make_mock_script,
    run_matrix,
    run_one,
    stable_seed,
)

__all__ = [
    "BANDS",
    "Fixture",
    "FixtureError",
    "builtin_fixtures_path",
    "load_fixture",
    "load_fixtures",
    "MATCH_BUFFER",
    "TABLE1_COLUMNS",
    "TABLE2_COLUMNS",
    "TABLE3_COLUMNS",
    "TABLE4_COLUMNS",
    "TABLE5_COLUMNS",
    "TABLE6_COLUMNS",
    "format_text_table",
    "match_counts",
    "table1_rows",
    "table2_rows",
    "table3_rows",
    "table4_rows",
    "table5_rows",
    "table6_rows",
    "write_reports",
    "SELF_EVAL_CANDIDATES",
    "STRATEGIES",
    "RunRecord",
    "load_records",
    "make_mock_script",
    "run_matrix",
    "run_one",
    "stable_seed",
]
