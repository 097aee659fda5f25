"""Binary branch-and-bound over the revised simplex.

Node selection dives depth-first until the first incumbent exists, then
switches to best-bound order. Branching picks the most fractional binary
(lowest index on ties). Every node also runs a simple-rounding heuristic that
rounds fractional binaries only in directions that keep all their rows
satisfied at the node's continuous values.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import CompiledModel, Model, Solution, SolverOptions, SolveStatus
from .simplex import solve_lp
from .verify import verify_solution

logger = logging.getLogger(__name__)


@dataclass
class _Node:
    seq: int
    depth: int
    bound: float
    fixings: tuple[tuple[int, float], ...]
    alive: bool = field(default=True, compare=False)


@dataclass
class _Incumbent:
    values: np.ndarray
    objective: float
    seq: int


def _absolute_gap(objective: float, options: SolverOptions) -> float:
    return options.rel_gap * max(1.0, abs(objective))


def _simple_rounding(
    cm: CompiledModel,
    a_csc: sp.csc_matrix,
    values: np.ndarray,
    fractional: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    tol: float,
) -> np.ndarray | None:
    """Round every fractional binary without breaking any row, or give up."""
    x = values.copy()
    activity = cm.a @ x
    row_tol = tol * np.maximum(1.0, np.abs(cm.b))
    for j in fractional:
        start, end = a_csc.indptr[j], a_csc.indptr[j + 1]
        rows = a_csc.indices[start:end]
        coefs = a_csc.data[start:end]
        nearest = float(round(x[j]))
        placed = False
        for candidate in (nearest, 1.0 - nearest):
            if candidate < lower[j] or candidate > upper[j]:
                continue
            trial = activity[rows] + coefs * (candidate - x[j])
            sense = cm.sense[rows]
            rhs = cm.b[rows]
            slack = row_tol[rows]
            ok = np.all(
                np.where(
                    sense < 0,
                    trial <= rhs + slack,
                    np.where(sense > 0, trial >= rhs - slack, np.abs(trial - rhs) <= slack),
                )
            )
            if ok:
                activity[rows] = trial
                x[j] = candidate
                placed = True
                break
        if not placed:
            return None
    return x


def solve_milp(model: Model, options: SolverOptions | None = None) -> Solution:
    """Solve ``model`` to optimality within ``rel_gap``, or stop at the node/time caps.

    Returns:
        The best incumbent with its bound and gap; ``gap_limit`` status when a cap
        stopped the search early
    """
    opts = options or SolverOptions()
    cm = model.compile()
    if cm.binary.size == 0:
        return solve_lp(model, opts)

    started = time.monotonic()
    a_csc = cm.a.tocsc()
    binaries = cm.binary
    seq = 0
    nodes = 0
    iterations = 0
    incumbent: _Incumbent | None = None
    lost_bounds: list[float] = []

    root = _Node(seq=0, depth=0, bound=-math.inf, fixings=())
    best_heap: list[tuple[float, int, _Node]] = [(root.bound, root.seq, root)]
    dive_heap: list[tuple[int, int, _Node]] = [(-root.depth, -root.seq, root)]
    open_count = 1

    def consider(values: np.ndarray, node_seq: int) -> None:
        nonlocal incumbent
        candidate = values.copy()
        candidate[binaries] = np.round(candidate[binaries])
        if verify_solution(model, candidate, opts.feas_tol, opts.int_tol):
            return
        objective = float(cm.c @ candidate + cm.c0)
        if incumbent is not None:
            tie = abs(objective - incumbent.objective) <= 1e-12 * max(1.0, abs(objective))
            if objective > incumbent.objective and not tie:
                return
            if tie and node_seq >= incumbent.seq:
                return
        incumbent = _Incumbent(candidate, objective, node_seq)
        logger.debug("New incumbent %.6f at node %d", objective, node_seq)

    def pop() -> _Node | None:
        nonlocal open_count
        heap_is_dive = incumbent is None
        while True:
            if heap_is_dive:
                if not dive_heap:
                    return None
                node = heapq.heappop(dive_heap)[2]
            else:
                if not best_heap:
                    return None
                node = heapq.heappop(best_heap)[2]
            if node.alive:
                node.alive = False
                open_count -= 1
                return node

    def global_bound() -> float:
        candidates = [n.bound for _, _, n in best_heap if n.alive] + lost_bounds
        if incumbent is not None:
            candidates.append(incumbent.objective)
        return min(candidates) if candidates else math.inf

    status_on_exit = SolveStatus.OPTIMAL
    while True:
        if incumbent is not None and open_count > 0:
            bound = global_bound()
            if incumbent.objective - bound <= _absolute_gap(incumbent.objective, opts):
                break
        node = pop()
        if node is None:
            break
        if nodes >= opts.node_limit or time.monotonic() - started > opts.time_limit:
            node.alive = True
            open_count += 1
            heapq.heappush(best_heap, (node.bound, node.seq, node))
            status_on_exit = SolveStatus.GAP_LIMIT
            break
        if incumbent is not None and node.bound >= incumbent.objective - _absolute_gap(incumbent.objective, opts):
            continue

        nodes += 1
        lower = cm.lo.copy()
        upper = cm.hi.copy()
        for j, v in node.fixings:
            lower[j] = upper[j] = v

        relaxation = solve_lp(model, opts, lower, upper)
        iterations += relaxation.iterations

        if relaxation.status is SolveStatus.INFEASIBLE:
            continue
        if relaxation.status is SolveStatus.UNBOUNDED:
            if node.depth == 0:
                return Solution(SolveStatus.UNBOUNDED, iterations=iterations, nodes=nodes, message="LP relaxation unbounded")
            continue
        if relaxation.status is not SolveStatus.OPTIMAL or relaxation.values is None:
            logger.warning("Node %d: LP failed (%s); subtree bound kept at %.6g", node.seq, relaxation.message, node.bound)
            if node.depth == 0:
                return Solution(
                    relaxation.status,
                    iterations=iterations,
                    nodes=nodes,
                    message=f"root relaxation failed: {relaxation.message}",
                    violations=relaxation.violations,
                )
            lost_bounds.append(node.bound)
            continue

        node_bound = max(relaxation.objective, node.bound)
        if incumbent is not None and node_bound >= incumbent.objective - _absolute_gap(incumbent.objective, opts):
            continue

        x = relaxation.values
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        fractional_mask = frac > opts.int_tol
        if not fractional_mask.any():
            consider(x, node.seq)
            continue

        fractional = binaries[fractional_mask]
        rounded = _simple_rounding(cm, a_csc, x, fractional, lower, upper, opts.feas_tol)
        if rounded is not None:
            consider(rounded, node.seq)
            if incumbent is not None and node_bound >= incumbent.objective - _absolute_gap(incumbent.objective, opts):
                continue

        closeness = np.minimum(x[fractional], 1.0 - x[fractional])
        j = int(fractional[int(np.argmax(closeness))])
        up_first = x[j] >= 0.5
        order = (0.0, 1.0) if up_first else (1.0, 0.0)
        for value in order:
            seq += 1
            child = _Node(seq=seq, depth=node.depth + 1, bound=node_bound, fixings=(*node.fixings, (j, value)))
            heapq.heappush(best_heap, (child.bound, child.seq, child))
            heapq.heappush(dive_heap, (-child.depth, -child.seq, child))
            open_count += 1

        if nodes % 100 == 0:
            logger.debug(
                "B&B nodes=%d open=%d incumbent=%s bound=%.6g",
                nodes,
                open_count,
                f"{incumbent.objective:.6g}" if incumbent else "none",
                global_bound(),
            )

    if incumbent is None:
        if status_on_exit is SolveStatus.GAP_LIMIT:
            return Solution(SolveStatus.GAP_LIMIT, bound=global_bound(), iterations=iterations, nodes=nodes, message="limit reached before any incumbent")
        if lost_bounds:
            return Solution(SolveStatus.NUMERICAL, iterations=iterations, nodes=nodes, message="LP failures left the tree unexplored")
        return Solution(SolveStatus.INFEASIBLE, iterations=iterations, nodes=nodes, message="no integer-feasible point")

    bound = min(global_bound(), incumbent.objective)
    gap = (incumbent.objective - bound) / max(1.0, abs(incumbent.objective))
    if gap > opts.rel_gap:
        status_on_exit = SolveStatus.GAP_LIMIT
    return Solution(
        status_on_exit,
        incumbent.values,
        incumbent.objective,
        bound=bound,
        mip_gap=max(gap, 0.0),
        iterations=iterations,
        nodes=nodes,
    )
