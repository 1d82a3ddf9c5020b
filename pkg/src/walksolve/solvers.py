"""Solver programs: message-passing solver, baselines, dense reference.

The message-passing solver keeps one pair of scalars per directed edge.
With N_i the neighbors of i and incoming pairs (a_{v->i}, b_{v->i}) from
the previous round, node i computes

    a~_i = a_ii - sum_v a_vi * a_iv / a_{v->i}
    b~_i = b_i  - sum_v a_iv * b_{v->i} / a_{v->i}
    x^_i = b~_i / a~_i

and sends to each neighbor j the pair with j's own contribution added
back in:

    a_{i->j} = a~_i + a_ji * a_ij / a_{j->i}
    b_{i->j} = b~_i + a_ij * b_{j->i} / a_{j->i}

so the work per node stays proportional to its degree.  Round 0 sends
(a_ii, b_i) on every edge and estimates x^_i = b_i / a_ii.

On walk-summable instances every a-scalar stays strictly positive; on
acyclic instances the estimates are exact after diameter-many rounds and
the messages are stationary from the round before that.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Optional

import numpy as np
import scipy.linalg

from . import analysis
from .core import SparseSystem, diameter, induced_graph, is_acyclic
from .engine import (
    ConvergenceTrace,
    DeltaBelow,
    FixedRounds,
    NodeProgram,
    run_rounds,
)
from .errors import (
    DivergedEstimateError,
    NotWalkSummableError,
    NotWalkSummableWarning,
    ProtocolViolationError,
    SingularMatrixError,
    SingularMessageError,
    ZeroRowError,
)

#: |estimate| beyond this aborts the run as diverged
ESTIMATE_LIMIT = 1e150
#: incoming scalars at or below 1e-12 * (node's own coefficient scale) fault
SING_EPS_FACTOR = 1e-12
PIVOT_EPS = 1e-14
RESIDUAL_FACTOR = 1e-10


@dataclass(frozen=True)
class NodeCoeffs:
    """The slice of the system one node owns: its row, column, and b_i."""

    node: int
    a_ii: float
    b_i: float
    neighbors: tuple[int, ...]
    a_row: dict  # v -> a_iv
    a_col: dict  # v -> a_vi
    prod: dict   # v -> a_iv * a_vi
    scale: float  # max magnitude among the node's own coefficients

    @property
    def eps_sing(self) -> float:
        return SING_EPS_FACTOR * self.scale


def node_coeffs(sys: SparseSystem) -> list[NodeCoeffs]:
    g = induced_graph(sys)
    out = []
    for i in range(sys.n):
        nbrs = g.neighbors[i]
        a_row = {v: sys.entry(i, v) for v in nbrs}
        a_col = {v: sys.entry(v, i) for v in nbrs}
        prod = {v: a_row[v] * a_col[v] for v in nbrs}
        scale = max([abs(sys.diag[i])]
                    + [abs(x) for x in a_row.values()]
                    + [abs(x) for x in a_col.values()])
        out.append(NodeCoeffs(node=i, a_ii=sys.diag[i], b_i=sys.b[i],
                              neighbors=nbrs, a_row=a_row, a_col=a_col,
                              prod=prod, scale=scale))
    return out


# ---------------------------------------------------------------------------
# message-passing solver


@dataclass(frozen=True)
class BPNodeState:
    coeffs: NodeCoeffs
    a_out: dict  # j -> a_{i->j} of the current round
    b_out: dict  # j -> b_{i->j}
    a_tilde: float
    b_tilde: float
    x_hat: float


def _bp_init_one(c: NodeCoeffs) -> BPNodeState:
    if abs(c.a_ii) <= c.eps_sing:
        raise SingularMessageError(
            f"node {c.node}: diagonal {c.a_ii!r} too small to seed messages")
    return BPNodeState(coeffs=c,
                       a_out={j: c.a_ii for j in c.neighbors},
                       b_out={j: c.b_i for j in c.neighbors},
                       a_tilde=c.a_ii, b_tilde=c.b_i,
                       x_hat=c.b_i / c.a_ii)


def bp_init(sys: SparseSystem) -> list[BPNodeState]:
    """Round-0 states: every edge carries (a_ii, b_i), estimate b_i/a_ii."""
    return [_bp_init_one(c) for c in node_coeffs(sys)]


def bp_round(state: BPNodeState, inbox: Mapping[int, tuple[float, float]]
             ) -> tuple[BPNodeState, dict]:
    """One node update from the previous round's incoming pairs.

    inbox maps every neighbor v to its pair (a_{v->i}, b_{v->i}).  Returns
    the new state and the outbox {j: (a_{i->j}, b_{i->j})}.
    """
    c = state.coeffs
    if set(inbox) != set(c.neighbors):
        raise ProtocolViolationError(
            f"node {c.node} expected pairs from {sorted(c.neighbors)}, "
            f"got {sorted(inbox)}")
    eps = c.eps_sing
    inv = {}
    s_a = 0.0
    s_b = 0.0
    for v in c.neighbors:
        a_in, b_in = inbox[v]
        if abs(a_in) <= eps:
            raise SingularMessageError(
                f"node {c.node}: incoming scalar {a_in!r} from {v} is "
                "numerically zero")
        iv = 1.0 / a_in
        inv[v] = (iv, b_in)
        s_a += c.prod[v] * iv
        s_b += c.a_row[v] * b_in * iv
    a_tilde = c.a_ii - s_a
    b_tilde = c.b_i - s_b
    if abs(a_tilde) <= eps:
        raise SingularMessageError(
            f"node {c.node}: aggregate scalar {a_tilde!r} is numerically zero")
    x_hat = b_tilde / a_tilde
    if not (abs(x_hat) <= ESTIMATE_LIMIT):
        raise DivergedEstimateError(
            f"node {c.node}: estimate {x_hat!r} out of range")
    a_out = {}
    b_out = {}
    for j in c.neighbors:
        iv, b_in = inv[j]
        a_out[j] = a_tilde + c.prod[j] * iv
        b_out[j] = b_tilde + c.a_row[j] * b_in * iv
        if not (math.isfinite(a_out[j]) and math.isfinite(b_out[j])):
            raise DivergedEstimateError(
                f"node {c.node}: outgoing pair to {j} is not finite")
    new_state = BPNodeState(coeffs=c, a_out=a_out, b_out=b_out,
                            a_tilde=a_tilde, b_tilde=b_tilde, x_hat=x_hat)
    return new_state, {j: (a_out[j], b_out[j]) for j in c.neighbors}


class BPProgram(NodeProgram):
    """Engine adapter around bp_init / bp_round."""

    name = "bp"
    local_complexity = True
    check_positive_a = True

    def __init__(self, sys: SparseSystem):
        self._coeffs = node_coeffs(sys)

    def init_node(self, node: int):
        state = _bp_init_one(self._coeffs[node])
        outbox = {j: (state.a_out[j], state.b_out[j])
                  for j in state.coeffs.neighbors}
        deg = len(state.coeffs.neighbors)
        return state, outbox, 2 * deg + 1

    def step(self, node: int, state, inbox):
        pairs = {v: (m.values[0], m.values[1]) for v, m in inbox.items()}
        new_state, outbox = bp_round(state, pairs)
        deg = len(state.coeffs.neighbors)
        return new_state, outbox, 11 * deg + 3

    def estimate(self, node: int, state) -> float:
        return state.x_hat

    def storage_floats(self, node: int, state) -> int:
        deg = len(state.coeffs.neighbors)
        return 7 * deg + 5


def bp_solve(sys: SparseSystem, max_rounds: int = 500, tol: float = 1e-10,
             force: bool = False, reference: Optional[np.ndarray] = None,
             rho_tol: float = analysis.RHO_TOL_DEFAULT
             ) -> tuple[np.ndarray, ConvergenceTrace]:
    """Solve by message passing; returns (estimates, trace).

    The instance is analyzed first: unless force=True a verdict other
    than walk-summable raises NotWalkSummableError (forcing instead emits
    NotWalkSummableWarning and runs anyway).  Acyclic instances run
    exactly diameter-many rounds, which is where the estimates become
    exact; cyclic ones run until the estimate delta drops below tol or
    max_rounds is reached.
    """
    report = analysis.analyze(sys, rho_tol=rho_tol, want_scaling=False)
    if report.walk_summable is not True:
        verdict = ("indeterminate" if report.walk_summable is None
                   else "not walk-summable")
        if not force:
            raise NotWalkSummableError(
                f"analysis verdict is {verdict} "
                f"(rho estimate {report.rho_abs:.6g}); pass force=True to "
                "run anyway")
        warnings.warn(
            f"running on an instance whose analysis verdict is {verdict}",
            NotWalkSummableWarning, stacklevel=2)
    g = induced_graph(sys)
    program = BPProgram(sys)
    if is_acyclic(g):
        d = diameter(g)
        trace = run_rounds(sys, program, max_rounds=d, stop=FixedRounds(d),
                           reference=reference)
    else:
        trace = run_rounds(sys, program, max_rounds=max_rounds,
                           stop=DeltaBelow(tol), reference=reference)
    return trace.final_estimates, trace


# ---------------------------------------------------------------------------
# baselines


@dataclass(frozen=True)
class JacobiNodeState:
    coeffs: NodeCoeffs
    x_hat: float


def jacobi_init(sys: SparseSystem) -> list[JacobiNodeState]:
    return [JacobiNodeState(coeffs=c, x_hat=c.b_i / c.a_ii)
            for c in node_coeffs(sys)]


def jacobi_round(state: JacobiNodeState, inbox: Mapping[int, float]
                 ) -> tuple[JacobiNodeState, dict]:
    """x^_i <- (b_i - sum_v a_iv * x^_v) / a_ii from neighbor estimates."""
    c = state.coeffs
    if set(inbox) != set(c.neighbors):
        raise ProtocolViolationError(
            f"node {c.node} expected estimates from {sorted(c.neighbors)}, "
            f"got {sorted(inbox)}")
    acc = c.b_i
    for v in c.neighbors:
        acc -= c.a_row[v] * inbox[v]
    x_hat = acc / c.a_ii
    if not (abs(x_hat) <= ESTIMATE_LIMIT):
        raise DivergedEstimateError(
            f"node {c.node}: estimate {x_hat!r} out of range")
    new_state = JacobiNodeState(coeffs=c, x_hat=x_hat)
    return new_state, {j: x_hat for j in c.neighbors}


class JacobiProgram(NodeProgram):
    name = "jacobi"
    local_complexity = True

    def __init__(self, sys: SparseSystem):
        self._coeffs = node_coeffs(sys)

    def init_node(self, node: int):
        c = self._coeffs[node]
        state = JacobiNodeState(coeffs=c, x_hat=c.b_i / c.a_ii)
        return state, {j: (state.x_hat,) for j in c.neighbors}, 1

    def step(self, node: int, state, inbox):
        values = {v: m.values[0] for v, m in inbox.items()}
        new_state, outbox = jacobi_round(state, values)
        deg = len(state.coeffs.neighbors)
        return (new_state, {j: (x,) for j, x in outbox.items()},
                2 * deg + 2)

    def estimate(self, node: int, state) -> float:
        return state.x_hat

    def storage_floats(self, node: int, state) -> int:
        return 2 * len(state.coeffs.neighbors) + 3


@dataclass(frozen=True)
class ConsensusNodeState:
    node: int
    neighbors: tuple[int, ...]
    row: dict  # j -> a_ij over the row's support, diagonal included
    row_norm_sq: float
    x: np.ndarray  # this node's full-length solution vector


def consensus_init(sys: SparseSystem) -> list[ConsensusNodeState]:
    """x_i(0) = (b_i / a_ii) e_i, which satisfies row i by construction."""
    g = induced_graph(sys)
    out = []
    for i in range(sys.n):
        row = {j: v for j, v in sys.by_row[i].items() if v != 0.0}
        rnsq = sum(v * v for v in row.values())
        if rnsq == 0.0:
            raise ZeroRowError(f"row {i} has zero norm")
        x = np.zeros(sys.n)
        x[i] = sys.b[i] / sys.diag[i]
        out.append(ConsensusNodeState(node=i, neighbors=g.neighbors[i],
                                      row=row, row_norm_sq=rnsq, x=x))
    return out


def consensus_round(state: ConsensusNodeState,
                    inbox: Mapping[int, np.ndarray]
                    ) -> tuple[ConsensusNodeState, dict]:
    """Project the neighborhood disagreement out of this node's vector.

    x_i <- x_i - (1/|N_i|) P_i (|N_i| x_i - sum_v x_v) with P_i the
    orthogonal projector onto the complement of row i, so a_i . x_i = b_i
    is preserved exactly.  Every node carries a full-length vector: this
    baseline deliberately trades locality for per-row consistency.
    """
    if set(inbox) != set(state.neighbors):
        raise ProtocolViolationError(
            f"node {state.node} expected vectors from "
            f"{sorted(state.neighbors)}, got {sorted(inbox)}")
    deg = len(state.neighbors)
    if deg == 0:
        return state, {}
    z = deg * state.x
    for v in state.neighbors:
        z = z - np.asarray(inbox[v], dtype=float)
    w = sum(a_ij * z[j] for j, a_ij in state.row.items())
    coef = w / state.row_norm_sq
    proj = z.copy()
    for j, a_ij in state.row.items():
        proj[j] -= coef * a_ij
    x_new = state.x - proj / deg
    if not np.all(np.isfinite(x_new)):
        raise DivergedEstimateError(
            f"node {state.node}: consensus vector is not finite")
    new_state = replace(state, x=x_new)
    return new_state, {j: x_new for j in state.neighbors}


class ConsensusProgram(NodeProgram):
    """Projection-consensus baseline; violates the locality contracts.

    Messages carry full-length vectors and per-node work grows with the
    global size n, so the engine's accounting flags C2/C3 for this
    program (local_complexity is declared False).
    """

    name = "consensus"
    local_complexity = False

    def __init__(self, sys: SparseSystem):
        self._init_states = consensus_init(sys)
        self._n = sys.n

    def init_node(self, node: int):
        state = self._init_states[node]
        outbox = {j: tuple(state.x) for j in state.neighbors}
        return state, outbox, self._n + 2

    def step(self, node: int, state, inbox):
        vectors = {v: np.array(m.values) for v, m in inbox.items()}
        new_state, outbox = consensus_round(state, vectors)
        deg = len(state.neighbors)
        ops = (deg + 3) * self._n + 4 * (deg + 1)
        return (new_state, {j: tuple(x) for j, x in outbox.items()}, ops)

    def estimate(self, node: int, state) -> float:
        return float(state.x[node])

    def storage_floats(self, node: int, state) -> int:
        deg = len(state.neighbors)
        return (deg + 1) * self._n + 2 * (deg + 1)


def gauss_seidel_sweep(sys: SparseSystem, x) -> np.ndarray:
    """One in-place sweep in index order; sequential reference only.

    Each row uses the freshest values of earlier rows, so this cannot be
    expressed as one synchronous exchange per edge per round; it exists
    to compare convergence behavior, not as an engine program.
    """
    out = np.array(x, dtype=float)
    if out.shape != (sys.n,):
        raise ProtocolViolationError(
            f"state vector has shape {out.shape}, expected ({sys.n},)")
    for i in range(sys.n):
        acc = sys.b[i]
        for j, v in sys.by_row[i].items():
            if j != i:
                acc -= v * out[j]
        out[i] = acc / sys.diag[i]
    return out


# ---------------------------------------------------------------------------
# dense reference


def dense_solve(sys: SparseSystem) -> np.ndarray:
    """Direct LU solve with partial pivoting, with pivot and residual checks.

    Raises SingularMatrixError when any pivot magnitude falls at or below
    PIVOT_EPS times the matrix scale, or when the solution's residual
    exceeds RESIDUAL_FACTOR * (||A||_inf ||x||_inf + ||b||_inf).
    """
    a = sys.as_dense()
    b = sys.b_vector()
    scale = float(np.max(np.sum(np.abs(a), axis=1)))
    with warnings.catch_warnings():
        # the pivot check below turns the degenerate case into an error
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots <= PIVOT_EPS * scale):
        k = int(np.argmin(pivots))
        raise SingularMatrixError(
            f"pivot {pivots[k]:.3e} at elimination step {k} below "
            f"{PIVOT_EPS:.0e} * scale {scale:.3e}")
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    residual = float(np.max(np.abs(a @ x - b)))
    limit = RESIDUAL_FACTOR * (scale * float(np.max(np.abs(x)))
                               + float(np.max(np.abs(b))))
    if residual > limit:
        raise SingularMatrixError(
            f"solve residual {residual:.3e} exceeds trust bound {limit:.3e}")
    return x
