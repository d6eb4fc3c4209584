"""
The Poncelet construction over F_q.

Starting from a point P1 on A, draw a tangent to B, intersect A again, and
repeat with the other tangent. The chain either returns to its starting
state (a closed n-gon), runs out of rational tangents, degenerates at a
tangency, or stays open within the step budget.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum
from typing import Optional

from src.helpers.ProjectivePlane import (
    Conic,
    PLine,
    PPoint,
    conic_points,
    line_conic_intersect,
    line_through,
    on_conic,
    polar_line,
    second_intersection,
)

logger = logging.getLogger(__name__)

MAX_N = 9
DEFAULT_MAX_STEPS = 3 * MAX_N


class ChainError(ValueError):
    """Raised when a chain precondition fails."""


class ChainNoTangent(ChainError):
    """No rational tangent to B passes through the current vertex."""


class ChainDegenerate(ChainError):
    """The construction collapses: a vertex repeats or no new tangent exists."""


class OutcomeKind(StrEnum):
    CLOSED = "Closed"
    NO_TANGENT = "NoTangent"
    DEGENERATE = "Degenerate"
    OPEN = "Open"


@dataclass(frozen=True)
class ChainState:
    vertex: PPoint
    edge: PLine
    step_index: int = 0


@dataclass(frozen=True)
class ChainOutcome:
    kind: OutcomeKind
    vertices: tuple[PPoint, ...] = ()
    edges: tuple[PLine, ...] = ()

    @property
    def n(self) -> Optional[int]:
        return len(self.vertices) if self.kind == OutcomeKind.CLOSED else None

    def __str__(self) -> str:
        if self.kind == OutcomeKind.CLOSED:
            return f"Closed({self.n})"
        return self.kind.value

    def trace_lines(self) -> list[str]:
        """One line per recorded step: "i: [x,y,z] edge [u,v,w]"."""
        return [
            f"{i}: {vertex} edge {edge}"
            for i, (vertex, edge) in enumerate(zip(self.vertices, self.edges), start=1)
        ]


def tangents_from(P: PPoint, B: Conic) -> list[PLine]:
    """Rational tangents to B through P, in canonical line order."""
    if not B.nonsingular:
        raise ChainError(f"Tangents to singular conic {B}")
    if on_conic(P, B):
        return [polar_line(P, B)]
    contacts = line_conic_intersect(polar_line(P, B), B)
    return sorted({line_through(P, R) for R in contacts}, key=lambda L: L.key)


def chain_step(state: ChainState, A: Conic, B: Conic) -> ChainState:
    """
    Advance one vertex along A.

    Raises:
        ChainDegenerate: the edge is tangent to A at the vertex, or the only
            tangent from the next vertex is the incoming edge.
        ChainNoTangent: no rational tangent from the next vertex.
    """
    nxt = second_intersection(state.vertex, state.edge, A)
    if nxt == state.vertex:
        raise ChainDegenerate(f"Edge {state.edge} is tangent to A at {nxt}")
    tangents = tangents_from(nxt, B)
    if not tangents:
        raise ChainNoTangent(f"No tangent to B through {nxt}")
    fresh = [L for L in tangents if L != state.edge]
    if not fresh:
        raise ChainDegenerate(f"Only the incoming edge is tangent to B through {nxt}")
    return ChainState(nxt, fresh[0], state.step_index + 1)


def starting_edge(P1: PPoint, B: Conic, branch: int) -> Optional[PLine]:
    """Tangent number `branch` (1 or 2) through P1; a lone tangent serves both."""
    if branch not in (1, 2):
        raise ChainError(f"Branch must be 1 or 2, got {branch}")
    tangents = tangents_from(P1, B)
    if not tangents:
        return None
    return tangents[min(branch, len(tangents)) - 1]


def trace_chain(
    P1: PPoint,
    branch: int,
    A: Conic,
    B: Conic,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ChainOutcome:
    """
    Run the construction from P1 until it closes, fails or exhausts max_steps.

    Closed(n) is reported at the first return to the starting state; a closing
    walk that revisits a vertex on the way is reported as Degenerate.
    """
    if not on_conic(P1, A):
        raise ChainError(f"Start point {P1} is not on A")
    if not A.nonsingular or not B.nonsingular:
        raise ChainError("Chains need nonsingular conics")
    edge = starting_edge(P1, B, branch)
    if edge is None:
        return ChainOutcome(OutcomeKind.NO_TANGENT, (P1,))

    start = ChainState(P1, edge)
    state = start
    vertices, edges = [P1], [edge]
    for _ in range(max_steps):
        try:
            state = chain_step(state, A, B)
        except ChainDegenerate as e:
            logger.debug(f"Chain from {P1} degenerate: {e}")
            return ChainOutcome(OutcomeKind.DEGENERATE, tuple(vertices), tuple(edges))
        except ChainNoTangent as e:
            # A started chain always finds the incoming tangent again
            logger.warning(f"Chain from {P1} lost its tangent: {e}")
            return ChainOutcome(OutcomeKind.NO_TANGENT, tuple(vertices), tuple(edges))
        if state.vertex == start.vertex and state.edge == start.edge:
            kind = OutcomeKind.CLOSED
            if len(set(vertices)) != len(vertices):
                kind = OutcomeKind.DEGENERATE
            return ChainOutcome(kind, tuple(vertices), tuple(edges))
        vertices.append(state.vertex)
        edges.append(state.edge)
    return ChainOutcome(OutcomeKind.OPEN, tuple(vertices), tuple(edges))


def is_poncelet_polygon(vertices: tuple[PPoint, ...], A: Conic, B: Conic) -> bool:
    """Every vertex on A and every side tangent to B."""
    k = len(vertices)
    if k < 3 or len(set(vertices)) != k:
        return False
    if not all(on_conic(P, A) for P in vertices):
        return False
    for i in range(k):
        side = line_through(vertices[i], vertices[(i + 1) % k])
        if len(line_conic_intersect(side, B)) != 1:
            return False
    return True


def is_nondegenerate(outcome: ChainOutcome, A: Conic) -> bool:
    """Closed with distinct vertices and no side tangent to A."""
    if outcome.kind != OutcomeKind.CLOSED:
        return False
    if len(set(outcome.vertices)) != len(outcome.vertices):
        return False
    return all(len(line_conic_intersect(edge, A)) == 2 for edge in outcome.edges)


def start_outcomes(A: Conic, B: Conic, max_steps: int = DEFAULT_MAX_STEPS):
    """Outcome of every start point of A on both branches, in scan order."""
    for P in conic_points(A):
        for branch in (1, 2):
            yield P, branch, trace_chain(P, branch, A, B, max_steps)


def find_nondegenerate_ngon(A: Conic, B: Conic, n: int) -> Optional[tuple[PPoint, ...]]:
    """First nondegenerate closed n-gon over all starts and branches, if any."""
    for P, branch, outcome in start_outcomes(A, B, max_steps=3 * n):
        if outcome.n == n and is_nondegenerate(outcome, A):
            logger.debug(f"Nondegenerate {n}-gon from {P} on branch {branch}")
            return outcome.vertices
    return None
