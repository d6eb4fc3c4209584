import json
import logging
from pathlib import Path
from typing import Union

import pandas as pd

from src.helpers.Census import PencilCensus
from src.helpers.PairCensus import GlobalCensus, TauTable, divisors_in_range
from src.helpers.datadog_instrumentation import Metrics, get_statsd, trace_function

logger = logging.getLogger(__name__)
statsd = get_statsd()

PENCIL_COLUMNS = [
    "class",
    "q",
    "params",
    "n",
    "sigma",
    "psi",
    "gamma",
    "ratio",
    "roots_of_f",
    "root_pairs",
]

Report = Union[PencilCensus, list[PencilCensus], GlobalCensus, list[GlobalCensus], TauTable]


def pencil_frame(rows: list[PencilCensus]) -> pd.DataFrame:
    frame = pd.DataFrame([r.as_row() for r in rows], columns=PENCIL_COLUMNS)
    # root_pairs is only set by the characteristic 3 experiment
    return frame.astype({"root_pairs": "Int64"})


def global_frame(rows: list[GlobalCensus]) -> pd.DataFrame:
    records = []
    for census in rows:
        record = census.as_dict()
        for m, count in record.pop("overlaps").items():
            record[f"overlap{m}"] = count
        records.append(record)
    return pd.DataFrame(records)


def tau_frame(table: TauTable) -> pd.DataFrame:
    """One row per (q, stat) with a column per n; cells without a value are empty."""
    records = []
    for q in table.q_values:
        for stat in table.stats():
            record = {"q": q, "stat": stat}
            for n in table.n_values:
                value = table.q_stat(q, n, stat)
                if stat.startswith("overlap") and int(stat[len("overlap"):]) not in divisors_in_range(n):
                    value = None
                record[str(n)] = value
            records.append(record)
    return pd.DataFrame(records, columns=["q", "stat", *(str(n) for n in table.n_values)])


def report_frame(report: Report) -> pd.DataFrame:
    if isinstance(report, TauTable):
        return tau_frame(report)
    rows = report if isinstance(report, list) else [report]
    if rows and isinstance(rows[0], GlobalCensus):
        return global_frame(rows)
    return pencil_frame(rows)


def render(report: Report, fmt: str) -> str:
    """
    Serialise a report; identical reports give identical text.

    Raises:
        ValueError: unknown format.
    """
    if fmt == "csv":
        return report_frame(report).to_csv(index=False)
    if fmt == "json":
        if isinstance(report, GlobalCensus):
            return json.dumps(report.as_dict(), indent=2) + "\n"
        if isinstance(report, list) and report and isinstance(report[0], GlobalCensus):
            return json.dumps([c.as_dict() for c in report], indent=2) + "\n"
        return report_frame(report).to_json(orient="records", indent=2) + "\n"
    raise ValueError(f"Unknown report format {fmt!r}; expected csv or json")


@trace_function("report.write", resource="ReportWriter")
def report_write(report: Report, fmt: str, path: Union[str, Path]) -> bool:
    """Write a census report as CSV or JSON.

    Returns:
        True on success, False when the file could not be written.
    """
    path = Path(path)
    try:
        text = render(report, fmt)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write(text)
        logger.info(f"Report written to {path}")
        statsd.increment(Metrics.REPORT_WRITE_SUCCESS, tags=[f"format:{fmt}"])
        return True
    except (OSError, ValueError) as e:
        logger.error(f"Failed to write report to {path}: {e}")
        statsd.increment(Metrics.REPORT_WRITE_FAILURE, tags=[f"format:{fmt}"])
        return False
