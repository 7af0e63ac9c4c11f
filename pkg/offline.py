"""
Offline selection: all n offered pairs are known before anything is chosen.

The barrier heuristic keeps every barrier block at no more than a handful of
accepted points. Rounds hitting two different barrier blocks become edges of
an auxiliary block graph; orienting that graph with indegree at most one and
giving each round's point to the edge head bounds their contribution to one
point per block.
"""
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from core_model import ParameterError, Point, ProcessState, add_point, sample_rounds
from barrier import barrier_crossed, build_barrier

logger = logging.getLogger(__name__)

OFFLINE_H = 100
BRUTE_FORCE_LIMIT = 22
MAX_BLOCK_LOAD = 4


@dataclass
class PairSet:
    """n offered tuples, shape (n, d, 2)"""
    points: np.ndarray

    def __len__(self):
        return int(self.points.shape[0])

    @property
    def choices(self):
        return int(self.points.shape[1])

    @property
    def pairs(self):
        return [tuple(Point(x, y) for x, y in offer) for offer in self.points.tolist()]

    def selected(self, selection):
        """Accepted points for one index per round"""
        rows = np.arange(len(self))
        return self.points[rows, np.asarray(selection, dtype=np.int64)]

    @classmethod
    def from_pairs(cls, pairs):
        return cls(np.array([[(p.x, p.y) for p in offer] for offer in pairs], dtype=float))


def sample_pair_set(n, rng, d=2):
    return PairSet(sample_rounds(rng, n, d))


@dataclass
class AuxBlockGraph:
    """Barrier blocks joined by one edge per round hitting two of them"""
    vertices: list
    edges: list = field(default_factory=list)
    edge_rounds: list = field(default_factory=list)
    doubly_hit: dict = field(default_factory=dict)


@dataclass
class Orientation:
    success: bool
    heads: dict
    violating: list


@dataclass
class OfflineReport:
    orientable: bool
    violating_components: int
    max_points_per_block: int
    max_load_ok: bool
    doubly_hit_max: int
    barrier_rounds: int
    cross_rounds: int
    largest: int
    largest_fraction: float
    barrier_crossed: bool

    def as_details(self):
        return {
            'orientable': self.orientable,
            'violating_components': self.violating_components,
            'max_points_per_block': self.max_points_per_block,
            'max_load_ok': self.max_load_ok,
            'doubly_hit_max': self.doubly_hit_max,
            'barrier_rounds': self.barrier_rounds,
            'cross_rounds': self.cross_rounds,
        }


def _cycle_vertices(members, adj):
    """Vertices left after repeatedly peeling degree-one vertices"""
    degree = {v: len(adj[v]) for v in members}
    removed = set()
    queue = deque(v for v in members if degree[v] == 1)
    while queue:
        v = queue.popleft()
        if v in removed:
            continue
        removed.add(v)
        for _, w in adj[v]:
            if w not in removed:
                degree[w] -= 1
                if degree[w] == 1:
                    queue.append(w)
    return [v for v in members if v not in removed]


def orient_indegree_one(edges, vertices=()):
    """
    Orient a multigraph so every vertex has indegree at most one.

    Succeeds iff every component has no more edges than vertices. `heads`
    maps edge index to its head; on failure it covers the components that
    could be oriented and `violating` lists the others.
    """
    adj = defaultdict(list)
    for v in vertices:
        adj.setdefault(v, [])
    for eid, (u, v) in enumerate(edges):
        # A self-loop appears twice, so it adds two to the degree.
        adj[u].append((eid, v))
        adj[v].append((eid, u))

    heads = {}
    violating = []
    seen = set()
    for start in sorted(adj):
        if start in seen:
            continue
        members = []
        component_edges = set()
        queue = deque([start])
        seen.add(start)
        while queue:
            v = queue.popleft()
            members.append(v)
            for eid, w in adj[v]:
                component_edges.add(eid)
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(component_edges) > len(members):
            violating.append(sorted(members))
            continue

        roots = [min(members)]
        used = set()
        if len(component_edges) == len(members):
            cycle = set(_cycle_vertices(members, adj))
            first = min(cycle)
            v = first
            while True:
                step = next((eid, w) for eid, w in adj[v] if w in cycle and eid not in used)
                used.add(step[0])
                heads[step[0]] = step[1]
                v = step[1]
                if v == first:
                    break
            roots = sorted(cycle)

        reached = set(roots)
        queue = deque(roots)
        while queue:
            v = queue.popleft()
            for eid, w in adj[v]:
                if eid in used or w in reached:
                    continue
                used.add(eid)
                heads[eid] = w
                reached.add(w)
                queue.append(w)

    if violating:
        logger.debug("Orientation failed on %d component(s)", len(violating))
    return Orientation(success=not violating, heads=heads, violating=violating)


def _barrier_blocks_of(points, barrier):
    """Block coordinates and barrier membership of every offered point, shape (n, d)"""
    m = barrier.box_count
    boxes = np.minimum((points / barrier.r).astype(np.int64), m - 1)
    blocks = boxes // barrier.h
    inside = barrier.mask[blocks[..., 0], blocks[..., 1]]
    return blocks, inside


def build_aux_block_graph(pairs, barrier):
    blocks, inside = _barrier_blocks_of(pairs.points, barrier)
    graph = AuxBlockGraph(vertices=sorted(barrier.blocks))
    doubly_hit = defaultdict(int)
    for k in np.nonzero(inside.all(axis=1))[0].tolist():
        a = tuple(blocks[k, 0].tolist())
        b = tuple(blocks[k, 1].tolist())
        if a == b:
            doubly_hit[a] += 1
        else:
            graph.edges.append((a, b))
            graph.edge_rounds.append(k)
    graph.doubly_hit = dict(doubly_hit)
    return graph


def _largest_of(points, r):
    state = ProcessState(r)
    for x, y in points.tolist():
        add_point(state, Point(x, y))
    return state


def solve_offline_barrier(pairs, K, r, rng, h=OFFLINE_H):
    """Select one point per pair, keeping barrier blocks sparsely occupied"""
    if pairs.choices != 2:
        raise ParameterError("the offline barrier heuristic is defined for pairs")
    n = len(pairs)
    barrier = build_barrier(K, h, r)
    blocks, inside = _barrier_blocks_of(pairs.points, barrier)

    selection = [0] * n
    outside_count = (~inside).sum(axis=1).tolist()
    inside_rows = inside.tolist()
    for k in range(n):
        if outside_count[k] == 2:
            selection[k] = rng.pick(2)
        elif outside_count[k] == 1:
            selection[k] = 0 if not inside_rows[k][0] else 1

    graph = build_aux_block_graph(pairs, barrier)
    orientation = orient_indegree_one(graph.edges, graph.vertices)
    for eid, k in enumerate(graph.edge_rounds):
        head = orientation.heads.get(eid)
        if head is None:
            selection[k] = rng.pick(2)
        else:
            selection[k] = 0 if head == graph.edges[eid][0] else 1

    chosen = pairs.selected(selection)
    state = _largest_of(chosen, r)
    chosen_blocks = blocks[np.arange(n), np.asarray(selection)]
    chosen_inside = inside[np.arange(n), np.asarray(selection)]
    loads = defaultdict(int)
    for bi, bj in chosen_blocks[chosen_inside].tolist():
        loads[(bi, bj)] += 1
    max_load = max(loads.values(), default=0)
    if max_load > MAX_BLOCK_LOAD:
        logger.info("Offline barrier block received %d points", max_load)

    report = OfflineReport(
        orientable=orientation.success,
        violating_components=len(orientation.violating),
        max_points_per_block=max_load,
        max_load_ok=max_load <= MAX_BLOCK_LOAD,
        doubly_hit_max=max(graph.doubly_hit.values(), default=0),
        barrier_rounds=int(inside.all(axis=1).sum()),
        cross_rounds=len(graph.edges),
        largest=state.largest,
        largest_fraction=state.largest / n if n else 0.0,
        barrier_crossed=barrier_crossed(state, barrier),
    )
    return selection, report


def solve_offline_random(pairs, r, rng):
    """Uniformly random selection, the baseline for offline sweeps"""
    selection = [rng.pick(pairs.choices) for _ in range(len(pairs))]
    state = _largest_of(pairs.selected(selection), r)
    return selection, state.largest


def brute_force_offline(pairs, r):
    """Exact minimum of the largest component over every selection"""
    n = len(pairs)
    if n > BRUTE_FORCE_LIMIT:
        raise ParameterError(f"brute force is limited to {BRUTE_FORCE_LIMIT} pairs, got {n}")
    if n == 0:
        return [], 0
    d = pairs.choices
    flat = pairs.points.reshape(-1, 2)
    dx = flat[:, None, 0] - flat[None, :, 0]
    dy = flat[:, None, 1] - flat[None, :, 1]
    close = (dx * dx + dy * dy) <= r * r
    earlier = [[np.nonzero(close[d * k + s, :d * k])[0].tolist() for s in range(d)]
               for k in range(n)]

    parent = list(range(d * n))
    size = [1] * (d * n)
    active = [False] * (d * n)
    picks = [0] * n
    best = [n + 1, None]

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    def descend(k, largest):
        if largest >= best[0]:
            return
        if k == n:
            best[0] = largest
            best[1] = list(picks)
            return
        for s in range(d):
            pid = d * k + s
            active[pid] = True
            history = []
            for q in earlier[k][s]:
                if not active[q]:
                    continue
                ra, rb = find(pid), find(q)
                if ra == rb:
                    continue
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
                history.append((ra, rb))
            picks[k] = s
            descend(k + 1, max(largest, size[find(pid)]))
            for ra, rb in reversed(history):
                size[ra] -= size[rb]
                parent[rb] = rb
            active[pid] = False

    descend(0, 0)
    return best[1], best[0]
