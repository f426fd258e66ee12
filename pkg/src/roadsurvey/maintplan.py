"""Budgeted maintenance planning over the damage-scored road graph.

Every road edge can be traversed two ways: maintained (taking its
maintenance time, collecting its damage cost) or merely driven through on a
zero-cost duplicate (taking distance times the navigation speed constant).
A plan is a walk from the root node that maintains each edge at most once
and fits the time budget; the solvers maximize collected cost. The exact
solver is a depth-first branch and bound, feasible up to a configurable
edge count; the heuristic is greedy ratio insertion with swap improvement.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property

from .errors import ExactLimitExceeded, NodeNotFound, NonPositiveTime
from .netgraph import Edge, RoadGraph

MAINTAIN = "maintain"
TRAVERSE = "traverse"


@dataclass(frozen=True)
class AugmentedGraph:
    """Road graph with per-edge maintenance cost/time and traverse duplicates.

    The duplicate of edge e costs nothing and takes nav_speed_s_per_m times
    the edge length; it exists implicitly for every base edge.
    """

    base: RoadGraph
    cost: dict[int, float]
    maint_time_s: dict[int, float]
    nav_speed_s_per_m: float
    root: int

    def traverse_time_s(self, edge_id: int) -> float:
        return self.nav_speed_s_per_m * self.base.edge_by_id[edge_id].distance_m

    @cached_property
    def _adj(self) -> dict[int, tuple[Edge, ...]]:
        return self.base.out_edges


@dataclass(frozen=True)
class Budget:
    T: float
    return_to_root: bool = False

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"budget T must be > 0, got {self.T}")


@dataclass(frozen=True)
class PlanStep:
    edge_id: int
    action: str  # MAINTAIN or TRAVERSE


@dataclass(frozen=True)
class MaintenancePlan:
    path: tuple[PlanStep, ...]
    total_cost: float
    total_time_s: float


def augment(
    g: RoadGraph,
    costs: dict[int, float],
    maint_times: dict[int, float] | None = None,
    *,
    nav_speed_s_per_m: float,
    root: int,
    maint_s_per_m: float = 60.0,
) -> AugmentedGraph:
    """Attach costs and times to a graph and fix the deployment root.

    Edges without an explicit maintenance time get the distance-proportional
    default maint_s_per_m * distance_m. All times must come out positive.
    """
    if root not in g.node_by_id:
        raise NodeNotFound(root)
    if nav_speed_s_per_m <= 0:
        raise NonPositiveTime(f"nav_speed_s_per_m must be > 0, got {nav_speed_s_per_m}")
    if maint_s_per_m <= 0:
        raise NonPositiveTime(f"maint_s_per_m must be > 0, got {maint_s_per_m}")
    maint_times = dict(maint_times or {})
    full_costs: dict[int, float] = {}
    full_times: dict[int, float] = {}
    for e in g.edges:
        c = float(costs.get(e.id, 0.0))
        if c < 0:
            raise ValueError(f"edge {e.id}: cost must be >= 0, got {c}")
        full_costs[e.id] = c
        t = float(maint_times.get(e.id, maint_s_per_m * e.distance_m))
        if t <= 0:
            raise NonPositiveTime(f"edge {e.id}: maintenance time must be > 0, got {t}")
        full_times[e.id] = t
    return AugmentedGraph(
        base=g,
        cost=full_costs,
        maint_time_s=full_times,
        nav_speed_s_per_m=nav_speed_s_per_m,
        root=root,
    )


# ---------------------------------------------------------------------------
# shortest traverse paths (used for returns and the heuristic)


def _dijkstra_from(ag: AugmentedGraph, source: int, weight: dict[int, float], reverse: bool):
    """Shortest times from source over directed edges (reversed if asked).

    Returns (dist, parent_edge) where parent_edge[v] is the edge relaxed into
    v; ties resolve deterministically by heap order and edge iteration order.
    """
    nodes = [n.id for n in ag.base.nodes]
    dist = {nid: math.inf for nid in nodes}
    parent: dict[int, Edge] = {}
    dist[source] = 0.0
    heap = [(0.0, source)]
    if reverse:
        adj: dict[int, list[Edge]] = {nid: [] for nid in nodes}
        for e in sorted(ag.base.edges, key=lambda e: e.id):
            adj[e.dst].append(e)
    else:
        adj = {nid: list(es) for nid, es in ag._adj.items()}
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for e in adj[u]:
            v = e.src if reverse else e.dst
            nd = d + weight[e.id]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _return_paths(ag: AugmentedGraph, weight: dict[int, float]):
    """Per-node shortest path back to the root (time and step list)."""
    dist, parent = _dijkstra_from(ag, ag.root, weight, reverse=True)
    paths: dict[int, tuple[PlanStep, ...]] = {}
    for nid in dist:
        if not math.isfinite(dist[nid]):
            continue
        steps = []
        v = nid
        while v != ag.root:
            e = parent[v]
            steps.append(PlanStep(e.id, TRAVERSE))
            v = e.dst
        paths[nid] = tuple(steps)
    return dist, paths


def _step_key(step: PlanStep) -> tuple[int, int]:
    return (step.edge_id, 0 if step.action == MAINTAIN else 1)


# ---------------------------------------------------------------------------
# exact solver


def solve_exact(
    ag: AugmentedGraph,
    budget: Budget,
    *,
    exact_limit: int = 20,
    inclusive: bool = False,
) -> MaintenancePlan:
    """Globally optimal plan by depth-first branch and bound.

    States are (node, maintained set, elapsed time); subtrees are cut when a
    cheaper visit to the same state exists, when the admissible bound
    (remaining budget times the best cost-per-second still available) cannot
    beat the incumbent, or when the shortest possible return would already
    blow the budget under return_to_root. The search order is fixed, so the
    reported plan is deterministic; cost ties resolve to the lexicographically
    smaller step sequence.
    """
    edges = ag.base.edges
    if len(edges) > exact_limit:
        raise ExactLimitExceeded(len(edges), exact_limit)

    def feasible(t: float) -> bool:
        return t <= budget.T if inclusive else t < budget.T

    trav = {e.id: ag.traverse_time_s(e.id) for e in edges}
    tmaint = ag.maint_time_s
    cost = ag.cost

    if budget.return_to_root:
        ret_time, ret_path = _return_paths(ag, trav)
        # admissible lower bound on any walk's return time (maintain steps may
        # be faster than traversal when per-edge overrides say so)
        lb_weight = {e.id: min(trav[e.id], tmaint[e.id]) for e in edges}
        ret_lb, _ = _return_paths(ag, lb_weight)
    else:
        ret_time = ret_path = None
        ret_lb = None

    best = {
        "cost": 0.0,
        "time": 0.0,
        "path": (),
        "key": (),
    }

    def consider(node: int, maintained: frozenset[int], elapsed: float, path: list[PlanStep]):
        if budget.return_to_root:
            back = ret_time.get(node, math.inf)
            total = elapsed + back
            if not feasible(total):
                return
            full = tuple(path) + ret_path[node]
        else:
            total = elapsed
            full = tuple(path)
        c = sum(cost[eid] for eid in sorted(maintained))
        key = tuple(_step_key(s) for s in full)
        if c > best["cost"] or (c == best["cost"] and key < best["key"]):
            best.update(cost=c, time=total, path=full, key=key)

    seen: dict[tuple[int, frozenset[int]], float] = {}

    def dfs(node: int, maintained: frozenset[int], elapsed: float, path: list[PlanStep]):
        consider(node, maintained, elapsed, path)
        unmaint = [e for e in edges if e.id not in maintained]
        gain_cap = sum(cost[e.id] for e in unmaint)
        max_rate = max((cost[e.id] / tmaint[e.id] for e in unmaint), default=0.0)
        here = sum(cost[eid] for eid in sorted(maintained))
        potential = here + min(gain_cap, (budget.T - elapsed) * max_rate)
        if potential <= best["cost"]:
            # cannot strictly beat the incumbent; equal-cost candidates found
            # later in the fixed exploration order never win the tie-break
            return
        for e in ag._adj[node]:
            for action in (MAINTAIN, TRAVERSE):
                if action == MAINTAIN:
                    if e.id in maintained:
                        continue
                    dt = tmaint[e.id]
                    m2 = maintained | {e.id}
                else:
                    dt = trav[e.id]
                    m2 = maintained
                t2 = elapsed + dt
                floor = ret_lb.get(e.dst, math.inf) if budget.return_to_root else 0.0
                if not feasible(t2 + floor):
                    continue
                state = (e.dst, m2)
                prior = seen.get(state)
                if prior is not None and prior <= t2:
                    continue
                seen[state] = t2
                path.append(PlanStep(e.id, action))
                dfs(e.dst, m2, t2, path)
                path.pop()

    seen[(ag.root, frozenset())] = 0.0
    dfs(ag.root, frozenset(), 0.0, [])
    return MaintenancePlan(path=best["path"], total_cost=best["cost"], total_time_s=best["time"])


# ---------------------------------------------------------------------------
# heuristic solver


def solve_heuristic(
    ag: AugmentedGraph, budget: Budget, *, inclusive: bool = False
) -> MaintenancePlan:
    """Feasible plan by greedy marginal-ratio insertion plus local improvement.

    Repeatedly inserts the unmaintained edge with the best cost per added
    second at its cheapest position in the maintenance sequence (legs between
    maintained edges run over shortest traverse paths), then tries order
    swaps that shorten the walk, re-entering the insertion phase while
    anything still fits. Never raises; the empty plan is the fallback.
    """
    edges = ag.base.edges

    def feasible(t: float) -> bool:
        return t <= budget.T if inclusive else t < budget.T

    trav = {e.id: ag.traverse_time_s(e.id) for e in edges}
    tmaint = ag.maint_time_s
    cost = ag.cost
    by_id = ag.base.edge_by_id

    sp_dist: dict[int, dict[int, float]] = {}
    sp_parent: dict[int, dict[int, Edge]] = {}
    for n in ag.base.nodes:
        d, p = _dijkstra_from(ag, n.id, trav, reverse=False)
        sp_dist[n.id] = d
        sp_parent[n.id] = p
    if budget.return_to_root:
        ret_time, _ = _return_paths(ag, trav)
    else:
        ret_time = None

    def hop_steps(u: int, v: int) -> list[PlanStep] | None:
        if not math.isfinite(sp_dist[u][v]):
            return None
        steps: list[PlanStep] = []
        cur = v
        while cur != u:
            e = sp_parent[u][cur]
            steps.append(PlanStep(e.id, TRAVERSE))
            cur = e.src
        steps.reverse()
        return steps

    def seq_time(seq: list[int]) -> float:
        t, cur = 0.0, ag.root
        for eid in seq:
            e = by_id[eid]
            leg = sp_dist[cur][e.src]
            if not math.isfinite(leg):
                return math.inf
            t += leg + tmaint[eid]
            cur = e.dst
        if budget.return_to_root:
            t += ret_time.get(cur, math.inf)
        return t

    def seq_feasible(seq: list[int]) -> bool:
        return feasible(seq_time(seq))

    def insert_greedy(seq: list[int]) -> bool:
        changed = False
        while True:
            base_time = seq_time(seq)
            pick = None
            pick_rank = None
            for e in edges:
                if e.id in seq or cost[e.id] <= 0:
                    continue
                for k in range(len(seq) + 1):
                    cand = seq[:k] + [e.id] + seq[k:]
                    t = seq_time(cand)
                    if not feasible(t):
                        continue
                    added = max(t - base_time, tmaint[e.id])
                    rank = (cost[e.id] / added, -e.id, -k)
                    if pick_rank is None or rank > pick_rank:
                        pick, pick_rank = cand, rank
            if pick is None:
                return changed
            seq[:] = pick
            changed = True

    def improve_swaps(seq: list[int]) -> bool:
        changed = False
        improved = True
        while improved:
            improved = False
            base_time = seq_time(seq)
            for i in range(len(seq)):
                for j in range(i + 1, len(seq)):
                    cand = seq.copy()
                    cand[i], cand[j] = cand[j], cand[i]
                    t = seq_time(cand)
                    if t < base_time and feasible(t):
                        seq[:] = cand
                        base_time = t
                        improved = True
                        changed = True
        return changed

    seq: list[int] = []
    insert_greedy(seq)
    for _ in range(20):
        if not improve_swaps(seq):
            break
        if not insert_greedy(seq):
            break

    if not seq_feasible(seq):
        seq = []

    steps: list[PlanStep] = []
    cur = ag.root
    for eid in seq:
        e = by_id[eid]
        steps.extend(hop_steps(cur, e.src) or [])
        steps.append(PlanStep(eid, MAINTAIN))
        cur = e.dst
    if budget.return_to_root and seq:
        steps.extend(hop_steps(cur, ag.root) or [])
    total_time = seq_time(seq) if seq else 0.0
    total_cost = sum(cost[eid] for eid in sorted(seq))
    return MaintenancePlan(path=tuple(steps), total_cost=total_cost, total_time_s=total_time)


def solve(
    ag: AugmentedGraph,
    budget: Budget,
    *,
    exact_limit: int = 20,
    inclusive: bool = False,
) -> tuple[MaintenancePlan, bool]:
    """Exact plan when the instance fits the exact limit, else heuristic.

    Returns (plan, is_exact).
    """
    try:
        return solve_exact(ag, budget, exact_limit=exact_limit, inclusive=inclusive), True
    except ExactLimitExceeded:
        return solve_heuristic(ag, budget, inclusive=inclusive), False


# ---------------------------------------------------------------------------
# problem and output documents


def load_problem(path) -> tuple[AugmentedGraph, Budget, dict]:
    """Read an augmented-problem JSON file.

    Schema: {"graph": <path relative to this file>, "costs": {edge_id: c},
    "maint_times": {edge_id: s}?, "nav_speed_s_per_m": x, "maint_s_per_m": y?,
    "root": node_id, "T": seconds, "return_to_root": bool?, "inclusive": bool?,
    "exact_limit": n?}. Returns (graph, budget, solver flags).
    """
    import json
    from pathlib import Path

    from .netgraph import load_graph

    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    g = load_graph((path.parent / doc["graph"]).resolve())
    costs = {int(k): float(v) for k, v in doc.get("costs", {}).items()}
    times = {int(k): float(v) for k, v in doc.get("maint_times", {}).items()}
    ag = augment(
        g,
        costs,
        times,
        nav_speed_s_per_m=float(doc["nav_speed_s_per_m"]),
        root=int(doc["root"]),
        maint_s_per_m=float(doc.get("maint_s_per_m", 60.0)),
    )
    budget = Budget(T=float(doc["T"]), return_to_root=bool(doc.get("return_to_root", False)))
    flags = {
        "inclusive": bool(doc.get("inclusive", False)),
        "exact_limit": int(doc.get("exact_limit", 20)),
    }
    return ag, budget, flags


def plan_to_dict(plan: MaintenancePlan, exact: bool) -> dict:
    return {
        "path": [{"edge_id": s.edge_id, "action": s.action} for s in plan.path],
        "total_cost": plan.total_cost,
        "total_time_s": plan.total_time_s,
        "exact": exact,
    }


def plan_geojson(plan: MaintenancePlan, g: RoadGraph) -> dict:
    features = []
    for seq, step in enumerate(plan.path):
        e = g.edge_by_id[step.edge_id]
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[p.lon, p.lat] for p in e.geometry],
                },
                "properties": {"edge_id": e.id, "action": step.action, "seq": seq},
            }
        )
    return {"type": "FeatureCollection", "features": features}
