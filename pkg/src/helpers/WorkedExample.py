"""
Replay of the q = 43 triangle example on the pencil C_α = αxy + (1−α)xz − yz.

A = C_11 and B = C_36 satisfy the triangle condition; the replay checks the
polars, tangency points and the three kinds of chain that the pair produces.
"""

import logging
from dataclasses import dataclass, field

from src.helpers.CayleyCriterion import class3_reference_polys, ngon_condition
from src.helpers.FiniteField import field_new
from src.helpers.Pencil import c_alpha
from src.helpers.PonceletChain import OutcomeKind, trace_chain
from src.helpers.ProjectivePlane import PPoint, line_conic_intersect, polar_line
from src.helpers.datadog_instrumentation import Metrics, get_statsd, trace_function

logger = logging.getLogger(__name__)
statsd = get_statsd()

Q = 43
A_ALPHA = 11
B_ALPHA = 36
START = (1, 17, 34)
NO_TANGENT_START = (1, 9, 12)
BASE_POINT_START = (0, 1, 0)


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    actual: str

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass
class WorkedExampleReport:
    checks: list[Check] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, expected, actual):
        self.checks.append(Check(name, str(expected), str(actual)))

    def table(self) -> list[str]:
        return [
            f"{'PASS' if c.passed else 'FAIL'}  {c.name}: expected {c.expected}, got {c.actual}"
            for c in self.checks
        ]


def _points(points) -> str:
    return " ".join(str(P) for P in points)


@trace_function("example.verify", resource="WorkedExample")
def verify_worked_example(b_alpha: int = B_ALPHA) -> WorkedExampleReport:
    """Run every assertion of the example with B = C_{b_alpha}; failures are reported, not raised."""
    ctx = field_new(Q)
    A = c_alpha(ctx, A_ALPHA)
    B = c_alpha(ctx, b_alpha)
    report = WorkedExampleReport()

    h2 = class3_reference_polys(ctx(A_ALPHA), ctx(b_alpha))[0]
    report.add("triangle condition", True, h2 == 0 and ngon_condition(A, B, 3))

    P1 = PPoint.of(ctx, *START)
    P_none = PPoint.of(ctx, *NO_TANGENT_START)
    polar_start = polar_line(P1, B)
    polar_none = polar_line(P_none, B)
    report.add(f"polar of {P1}", "[1,18,5]", polar_start)
    report.add(f"polar of {P_none}", "[1,32,13]", polar_none)
    report.add(
        f"tangency points from {P1}",
        "[1,32,5] [1,40,2]",
        _points(line_conic_intersect(polar_start, B)),
    )
    report.add(f"tangency points from {P_none}", "", _points(line_conic_intersect(polar_none, B)))

    outcome = trace_chain(P1, 1, A, B)
    report.trace.append(f"start {P1} branch 1: {outcome}")
    report.trace.extend(outcome.trace_lines())
    report.add(
        "triangle",
        "Closed(3) [1,17,34] [1,36,3] [1,24,28]",
        f"{outcome} {_points(outcome.vertices)}",
    )

    outcome = trace_chain(P_none, 1, A, B)
    report.trace.append(f"start {P_none} branch 1: {outcome}")
    report.add(f"chain from {P_none}", OutcomeKind.NO_TANGENT, outcome)

    P_base = PPoint.of(ctx, *BASE_POINT_START)
    outcome = trace_chain(P_base, 1, A, B)
    report.trace.append(f"start {P_base} branch 1: {outcome}")
    report.trace.extend(outcome.trace_lines())
    report.add(f"chain from {P_base}", OutcomeKind.DEGENERATE, outcome)

    for check in report.checks:
        if check.passed:
            statsd.increment(Metrics.CHECK_PASS, tags=["check:worked_example"])
        else:
            statsd.increment(Metrics.CHECK_FAIL, tags=["check:worked_example"])
            logger.error(f"Worked example check failed: {check.name}")
    logger.info(
        f"Worked example with B = C_{b_alpha}: "
        f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed"
    )
    return report
