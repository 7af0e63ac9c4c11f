"""
Auxiliary stochastic processes: balls into bins with choices, the
two-choices coupon collector, and the vertex process on G(n, m).
"""
import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from core_model import ParameterError

logger = logging.getLogger(__name__)

BALLS_BINS_POLICIES = ('greedy', 'one-choice', 'custom')
VERTEX_STRATEGIES = ('random', 'min-degree-into-selected', 'greedy-min-merge')

COUPON_CHUNK = 1 << 16


@njit(cache=True)
def _greedy_fill(loads, candidates):
    rounds, d = candidates.shape
    for t in range(rounds):
        best = candidates[t, 0]
        for k in range(1, d):
            other = candidates[t, k]
            if loads[other] < loads[best]:
                best = other
        loads[best] += 1
    return loads


@njit(cache=True)
def _collect_chunk(collected, have, target, draws):
    """Buy boxes from `draws` until `target` types are held; returns (have, boxes used)"""
    used = 0
    for t in range(draws.shape[0]):
        if have >= target:
            break
        used += 1
        a = draws[t, 0]
        b = draws[t, 1]
        if not collected[a] and not collected[b]:
            collected[a] = True
            have += 1
    return have, used


@dataclass
class BinsState:
    loads: np.ndarray

    @property
    def max_load(self):
        return int(self.loads.max()) if self.loads.size else 0

    @property
    def histogram(self):
        """histogram[k] = number of bins holding exactly k balls"""
        return np.bincount(self.loads)

    @property
    def balls(self):
        return int(self.loads.sum())


def run_balls_bins(n_bins, rounds, policy='greedy', rng=None, choices=2):
    """Throw `rounds` balls into `n_bins` bins, each ball seeing `choices` random bins"""
    if n_bins < 1 or rounds < 1:
        raise ParameterError(f"need at least one bin and one round, got {n_bins}, {rounds}")
    if choices < 1:
        raise ParameterError(f"need at least one choice, got {choices}")
    candidates = rng.samples.integers(0, n_bins, size=(rounds, choices), dtype=np.int64)
    if policy == 'one-choice':
        loads = np.bincount(candidates[:, 0], minlength=n_bins).astype(np.int64)
    elif policy == 'greedy':
        loads = _greedy_fill(np.zeros(n_bins, dtype=np.int64), candidates)
    elif callable(policy):
        loads = np.zeros(n_bins, dtype=np.int64)
        for row in candidates:
            loads[row[policy(loads, row)]] += 1
    else:
        raise ParameterError(f"unknown balls-and-bins policy '{policy}'")
    return BinsState(loads)


@dataclass
class CouponState:
    N: int
    collected: np.ndarray
    boxes_bought: int

    @property
    def held(self):
        return int(self.collected.sum())


def run_coupon_2ccc(N, s, rng):
    """Buy two-coupon boxes until N - s types are held; a box counts only if both types are new"""
    if not 1 <= s < N:
        raise ParameterError(f"need 1 <= s < N, got s={s}, N={N}")
    collected = np.zeros(N, dtype=np.bool_)
    target = N - s
    have = 0
    bought = 0
    while have < target:
        draws = rng.samples.integers(0, N, size=(COUPON_CHUNK, 2), dtype=np.int64)
        have, used = _collect_chunk(collected, have, target, draws)
        bought += used
    logger.debug("Collected %d of %d coupon types after %d boxes", have, N, bought)
    return CouponState(N, collected, bought)


def _inverse_squares(N, s, power):
    i = np.arange(1, N - s + 1, dtype=np.float64)
    return float(np.sum((N / (N - i + 1.0)) ** power))


def coupon_expected_boxes(N, s):
    """Exact mean number of boxes, sum over i of (N / (N - i + 1))^2"""
    if not 0 <= s < N:
        raise ParameterError(f"need 0 <= s < N, got s={s}, N={N}")
    return _inverse_squares(N, s, 2)


def coupon_variance_bound(N, s):
    if not 0 <= s < N:
        raise ParameterError(f"need 0 <= s < N, got s={s}, N={N}")
    return _inverse_squares(N, s, 4)


def coupon_bound(N, s):
    """The 2N^2/s bound on boxes bought"""
    return 2.0 * N * N / s


def _decode_pair(k, n):
    """k-th pair (u, v), u < v, in lexicographic order"""
    total = n * (n - 1) // 2
    q = total - 1 - k
    t = (math.isqrt(8 * q + 1) - 1) // 2
    u = n - 2 - t
    offset = u * (2 * n - u - 1) // 2
    return u, k - offset + u + 1


def sample_gnm(n, m, rng):
    """m distinct uniform edges of K_n by a partial Fisher-Yates shuffle of pair indices"""
    total = n * (n - 1) // 2
    if n < 1 or not 0 <= m <= total:
        raise ParameterError(f"need 0 <= m <= n(n-1)/2, got n={n}, m={m}")
    if m == 0:
        return []
    offsets = rng.samples.integers(0, total - np.arange(m, dtype=np.int64)).tolist()
    swapped = {}
    edges = []
    for k, offset in enumerate(offsets):
        j = k + offset
        picked = swapped.get(j, j)
        swapped[j] = swapped.get(k, k)
        edges.append(_decode_pair(picked, n))
    return edges


@dataclass
class VertexResult:
    n: int
    m: int
    strategy: str
    largest: int
    selected: int
    rounds: int
    selected_vertices: tuple = ()

    @property
    def largest_fraction(self):
        return self.largest / self.n if self.n else 0.0


class _VertexRevealState:
    """Selected vertices of a revealed G(n, m) and the components they induce"""

    def __init__(self, n, edges):
        self.adj = [[] for _ in range(n)]
        for u, v in edges:
            self.adj[u].append(v)
            self.adj[v].append(u)
        self.selected = np.zeros(n, dtype=bool)
        self.parent = list(range(n))
        self.size = [1] * n
        self.largest = 0
        self.count = 0

    def find(self, v):
        parent = self.parent
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def selected_neighbours(self, v):
        return [w for w in self.adj[v] if self.selected[w]]

    def probe(self, v):
        roots = {self.find(w) for w in self.selected_neighbours(v)}
        own = 1 + sum(self.size[root] for root in roots)
        return max(self.largest, own), own

    def select(self, v):
        self.selected[v] = True
        self.count += 1
        for w in self.selected_neighbours(v):
            ra, rb = self.find(v), self.find(w)
            if ra == rb:
                continue
            if self.size[ra] < self.size[rb]:
                ra, rb = rb, ra
            self.parent[rb] = ra
            self.size[ra] += self.size[rb]
        self.largest = max(self.largest, self.size[self.find(v)])


def _choose_vertex(state, pair, strategy, rng):
    if strategy == 'random':
        return pair[rng.pick(2)]
    if strategy == 'min-degree-into-selected':
        degrees = [len(state.selected_neighbours(v)) for v in pair]
        return pair[0] if degrees[0] <= degrees[1] else pair[1]
    if strategy == 'greedy-min-merge':
        return pair[0] if state.probe(pair[0]) <= state.probe(pair[1]) else pair[1]
    raise ParameterError(f"unknown vertex strategy '{strategy}'")


def run_vertex_achlioptas(n, m, strategy, rng):
    """Reveal the vertices of G(n, m) two at a time and keep one of each pair"""
    if strategy not in VERTEX_STRATEGIES:
        raise ParameterError(f"unknown vertex strategy '{strategy}'")
    edges = sample_gnm(n, m, rng)
    order = rng.samples.permutation(n).tolist()
    state = _VertexRevealState(n, edges)
    rounds = 0
    for t in range(0, n - 1, 2):
        state.select(_choose_vertex(state, (order[t], order[t + 1]), strategy, rng))
        rounds += 1
    if n % 2 == 1:
        # An odd vertex out is revealed alone and must be kept.
        state.select(order[-1])
        rounds += 1
    return VertexResult(n=n, m=m, strategy=strategy, largest=state.largest,
                        selected=state.count, rounds=rounds,
                        selected_vertices=tuple(np.nonzero(state.selected)[0].tolist()))


def timed(func, *args, **kwargs):
    """Call func and return (result, elapsed milliseconds)"""
    started = time.perf_counter()
    result = func(*args, **kwargs)
    return result, (time.perf_counter() - started) * 1000.0
