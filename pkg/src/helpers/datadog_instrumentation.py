"""
Tracing and metrics for census runs.

Initialises the DogStatsD client, patches the worker pool so spans opened
inside census shards link to the parent run, and names every metric the
census, report and acceptance code emits.
"""

import os
import time
from functools import wraps
from typing import Any, Callable, Optional

from datadog import initialize, statsd
from ddtrace import patch, tracer

initialize(
    statsd_host=os.getenv("DD_AGENT_HOST", "localhost"),
    statsd_port=int(os.getenv("DD_DOGSTATSD_PORT", 8125)),
    statsd_constant_tags=[
        f"service:{os.getenv('DD_SERVICE', 'poncelet')}",
        f"env:{os.getenv('DD_ENV', 'development')}",
    ],
)

patch(futures=True, logging=True)


class Metrics:
    """Metric names, all under the `poncelet.` prefix."""

    PREFIX = "poncelet"

    CENSUS_RUN = f"{PREFIX}.census.run"
    CENSUS_FAILURE = f"{PREFIX}.census.failure"
    CENSUS_DURATION = f"{PREFIX}.census.duration"
    CENSUS_PAIRS = f"{PREFIX}.census.pairs.evaluated"
    CENSUS_PSI = f"{PREFIX}.census.psi.count"
    CENSUS_GAMMA = f"{PREFIX}.census.gamma.count"
    CENSUS_SHARDS = f"{PREFIX}.census.shards.completed"

    CHECK_PASS = f"{PREFIX}.check.pass"
    CHECK_FAIL = f"{PREFIX}.check.fail"

    REPORT_WRITE_SUCCESS = f"{PREFIX}.report.write.success"
    REPORT_WRITE_FAILURE = f"{PREFIX}.report.write.failure"

    SERVICE_STARTUP = f"{PREFIX}.service.startup"
    SERVICE_STARTUP_FAILURE = f"{PREFIX}.service.startup.failure"


def census_tags(kind: str, q: int, n: Optional[int] = None, **extra) -> list[str]:
    """["kind:<kind>", "q:<q>", "n:<n>", ...] with None values left out."""
    fields = {"kind": kind, "q": q, "n": n, **extra}
    return [f"{key}:{value}" for key, value in fields.items() if value is not None]


def record_census(
    kind: str, q: int, n: int, psi: int, gamma: int, started: float, pairs: Optional[int] = None, **extra
):
    """Emit the run counter, |Ψ| and |Γ| gauges, pair count and duration of one census."""
    tags = census_tags(kind, q, n, **extra)
    statsd.increment(Metrics.CENSUS_RUN, tags=tags)
    statsd.gauge(Metrics.CENSUS_PSI, psi, tags=tags)
    statsd.gauge(Metrics.CENSUS_GAMMA, gamma, tags=tags)
    statsd.increment(Metrics.CENSUS_PAIRS, psi if pairs is None else pairs, tags=tags)
    statsd.histogram(Metrics.CENSUS_DURATION, time.time() - started, tags=tags)


def _tag_field(span, args: tuple, kwargs: dict):
    """Tag the span with the first field context among the arguments."""
    for value in (*args, *kwargs.values()):
        if hasattr(value, "p") and hasattr(value, "r") and hasattr(value, "q"):
            span.set_tag("field.p", value.p)
            span.set_tag("field.r", value.r)
            span.set_tag("field.q", value.q)
            return


def _tag_result(span, result: Any):
    for attr in ("psi", "gamma", "psi_total", "gamma_total"):
        value = getattr(result, attr, None)
        if isinstance(value, int):
            span.set_tag(f"census.{attr}", value)


def trace_function(operation_name: Optional[str] = None, resource: Optional[str] = None):
    """
    Wrap a function in a span tagged with its field and census totals.

    Usage:
        @trace_function("census.pencil", resource="Census")
        def pencil_census(cls, ctx, n):
            ...
    """

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            with tracer.trace(operation_name or func.__name__, resource=resource or func.__name__) as span:
                span.set_tag("function.module", func.__module__)
                _tag_field(span, args, kwargs)
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    span.set_tag("result.success", False)
                    span.set_tag("error.type", type(e).__name__)
                    span.set_tag("error.message", str(e))
                    raise
                span.set_tag("result.success", True)
                _tag_result(span, result)
                return result

        return wrapper

    return decorator


def get_statsd():
    return statsd


def get_tracer():
    return tracer
