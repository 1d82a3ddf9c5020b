"""Synchronous simulator for per-node message-passing programs.

Rounds are two-phase: every node reads only the messages delivered at the
end of round k-1 (a frozen snapshot) and writes its round-k messages into
an outbox; delivery happens at the barrier after all nodes have stepped.
Node transitions therefore commute and the trace is bit-identical no
matter which order nodes are evaluated in.

Locality contracts enforced or measured here:
  C1  one message per directed edge per round (outbox keys must equal the
      neighbor set exactly; total per round is then 2|E|),
  C2  per-node work O(|N_i|): measured ops_i <= OPS_BOUND_COEFF*(deg_i+1),
  C3  per-node state O(|N_i|): storage_i <= STORAGE_BOUND_COEFF*(deg_i+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import SparseSystem, induced_graph
from .errors import ProtocolViolationError, SolverError

#: documented constants for the measured locality bounds
OPS_BOUND_COEFF = 16
STORAGE_BOUND_COEFF = 12


@dataclass(frozen=True)
class DirectedEdgeMessage:
    """One directed-edge payload delivered at a round barrier.

    values[0] doubles as the positive-scalar slot: programs that declare
    check_positive_a route the quantity whose positivity the convergence
    theory guarantees through it, and the engine counts violations as a
    diagnostic rather than a fault.
    """

    src: int
    dst: int
    round: int
    values: tuple[float, ...]

    @property
    def a_val(self) -> float:
        return self.values[0]

    @property
    def b_val(self) -> float:
        return self.values[1] if len(self.values) > 1 else 0.0


@dataclass(frozen=True)
class RoundAccounting:
    """Per-round message and resource counts plus locality verdicts."""

    messages_sent: int
    per_node_ops: tuple[int, ...]
    per_node_storage: tuple[int, ...]
    ops_bound_ok: bool
    storage_bound_ok: bool
    local_complexity_declared: bool
    positivity_violations: int = 0

    @property
    def violates_local_constraints(self) -> bool:
        return (not self.local_complexity_declared or not self.ops_bound_ok
                or not self.storage_bound_ok)


@dataclass(frozen=True)
class SolverFault:
    """Where and why a run aborted; the trace keeps the completed rounds."""

    node: int
    round: int
    error: str
    cause: str


@dataclass
class TraceRound:
    k: int
    estimates: np.ndarray
    log10_mse: Optional[float]
    max_delta: Optional[float]
    accounting: RoundAccounting


@dataclass
class ConvergenceTrace:
    rounds: list[TraceRound] = field(default_factory=list)
    stop_reason: str = "max-rounds"
    fault: Optional[SolverFault] = None
    reference: Optional[np.ndarray] = None

    @property
    def final_estimates(self) -> np.ndarray:
        return self.rounds[-1].estimates

    @property
    def total_positivity_violations(self) -> int:
        return sum(r.accounting.positivity_violations for r in self.rounds)


class NodeProgram:
    """Interface a distributed program exposes to the engine.

    Subclasses override the three transition hooks; ``local_complexity``
    declares whether the program keeps per-node work and state O(|N_i|)
    by construction, and ``check_positive_a`` opts into the positive-
    message diagnostic.
    """

    name = "program"
    local_complexity = True
    check_positive_a = False

    def init_node(self, node: int):
        """Return (state, outbox, ops); outbox maps neighbor -> value tuple."""
        raise NotImplementedError

    def step(self, node: int, state, inbox: Mapping[int, DirectedEdgeMessage]):
        """Return (state, outbox, ops) from the round-(k-1) snapshot."""
        raise NotImplementedError

    def estimate(self, node: int, state) -> float:
        raise NotImplementedError

    def storage_floats(self, node: int, state) -> int:
        """Floats the node retains across rounds (messages included)."""
        raise NotImplementedError


def delta_stop(prev: np.ndarray, cur: np.ndarray, tol: float) -> bool:
    """True when max_i |cur_i - prev_i| <= tol * max(1, max_i |cur_i|)."""
    delta = float(np.max(np.abs(cur - prev)))
    return delta <= tol * max(1.0, float(np.max(np.abs(cur))))


class FixedRounds:
    name = "fixed-rounds"

    def __init__(self, rounds: int):
        if rounds < 0:
            raise ValueError("rounds must be >= 0")
        self.rounds = rounds

    def should_stop(self, k, estimates, prev_estimates, reference) -> bool:
        return k >= self.rounds


class DeltaBelow:
    name = "delta"

    def __init__(self, tol: float):
        self.tol = tol

    def should_stop(self, k, estimates, prev_estimates, reference) -> bool:
        if prev_estimates is None:
            return False
        return delta_stop(prev_estimates, estimates, self.tol)


class ErrorBelow:
    name = "error"

    def __init__(self, tol: float):
        self.tol = tol

    def should_stop(self, k, estimates, prev_estimates, reference) -> bool:
        if reference is None:
            raise ProtocolViolationError(
                "error-based stopping needs a reference solution")
        return float(np.max(np.abs(estimates - reference))) <= self.tol


def _log10_mse(estimates: np.ndarray, reference: np.ndarray) -> float:
    mse = float(np.sum((estimates - reference) ** 2)) / len(estimates)
    if mse == 0.0:
        return -math.inf
    return math.log10(mse)


def run_rounds(sys: SparseSystem, program: NodeProgram, max_rounds: int,
               stop=None, reference: Optional[np.ndarray] = None,
               node_order: Optional[Sequence[int]] = None) -> ConvergenceTrace:
    """Drive a node program for up to max_rounds synchronous rounds.

    Round 0 is initialization (it already sends one message per directed
    edge).  A SolverError raised inside a node transition aborts the run
    at that round's barrier: the trace keeps rounds 0..k-1 and carries a
    SolverFault record; stop_reason is then "fault".  node_order changes
    only the evaluation sequence, never the trace.
    """
    g = induced_graph(sys)
    n = sys.n
    order = list(range(n)) if node_order is None else list(node_order)
    if sorted(order) != list(range(n)):
        raise ProtocolViolationError("node_order must be a permutation")
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
    directed_edges = 2 * g.edge_count()
    neighbor_sets = [set(g.neighbors[u]) for u in range(n)]
    bound = [OPS_BOUND_COEFF * (g.degree(u) + 1) for u in range(n)]
    sbound = [STORAGE_BOUND_COEFF * (g.degree(u) + 1) for u in range(n)]

    trace = ConvergenceTrace(reference=reference)
    states: list = [None] * n
    inboxes: list[dict[int, DirectedEdgeMessage]] = [dict() for _ in range(n)]

    def finish_round(k: int, outboxes, ops: list[int],
                     prev_estimates) -> TraceRound:
        sent = 0
        violations = 0
        for u in order:
            out = outboxes[u]
            if set(out) != neighbor_sets[u]:
                raise ProtocolViolationError(
                    f"node {u} addressed {sorted(out)} at round {k}, "
                    f"expected exactly its neighbors {sorted(neighbor_sets[u])}")
            for v, values in out.items():
                msg = DirectedEdgeMessage(src=u, dst=v, round=k,
                                          values=tuple(values))
                if program.check_positive_a and not msg.values[0] > 0.0:
                    violations += 1
                inboxes[v][u] = msg
                sent += 1
        if sent != directed_edges:
            raise ProtocolViolationError(
                f"round {k} sent {sent} messages, expected {directed_edges}")
        storage = tuple(program.storage_floats(u, states[u]) for u in range(n))
        acct = RoundAccounting(
            messages_sent=sent,
            per_node_ops=tuple(ops),
            per_node_storage=storage,
            ops_bound_ok=all(o <= b for o, b in zip(ops, bound)),
            storage_bound_ok=all(s <= b for s, b in zip(storage, sbound)),
            local_complexity_declared=program.local_complexity,
            positivity_violations=violations,
        )
        estimates = np.array([program.estimate(u, states[u])
                              for u in range(n)])
        mse = _log10_mse(estimates, reference) if reference is not None else None
        delta = (float(np.max(np.abs(estimates - prev_estimates)))
                 if prev_estimates is not None else None)
        return TraceRound(k=k, estimates=estimates, log10_mse=mse,
                          max_delta=delta, accounting=acct)

    # round 0: initialization
    outboxes: list[dict] = [dict() for _ in range(n)]
    ops0 = [0] * n
    for u in order:
        try:
            states[u], outboxes[u], ops0[u] = program.init_node(u)
        except SolverError as exc:
            trace.stop_reason = "fault"
            trace.fault = SolverFault(node=u, round=0,
                                      error=type(exc).__name__,
                                      cause=str(exc))
            return trace
    row = finish_round(0, outboxes, ops0, None)
    trace.rounds.append(row)
    if stop is not None and stop.should_stop(0, row.estimates, None, reference):
        trace.stop_reason = stop.name
        return trace

    for k in range(1, max_rounds + 1):
        snapshot = inboxes
        inboxes = [dict() for _ in range(n)]
        outboxes = [dict() for _ in range(n)]
        ops = [0] * n
        new_states: list = [None] * n
        for u in order:
            try:
                new_states[u], outboxes[u], ops[u] = program.step(
                    u, states[u], snapshot[u])
            except SolverError as exc:
                trace.stop_reason = "fault"
                trace.fault = SolverFault(node=u, round=k,
                                          error=type(exc).__name__,
                                          cause=str(exc))
                return trace
        prev_estimates = trace.rounds[-1].estimates
        states = new_states
        row = finish_round(k, outboxes, ops, prev_estimates)
        trace.rounds.append(row)
        if stop is not None and stop.should_stop(
                k, row.estimates, prev_estimates, reference):
            trace.stop_reason = stop.name
            return trace
    trace.stop_reason = "max-rounds"
    return trace
