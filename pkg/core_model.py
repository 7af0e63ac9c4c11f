"""
Geometry, randomness, discretization and incremental connectivity for the
power-of-choices geometric graph.

Points live in the unit square. Accepted points are joined whenever their
distance is at most the connection radius; connectivity is tracked with a
union-find over point indices, neighbours are found through a spatial hash
whose cells have diagonal r, and an occupancy bit-grid records which
boxes of the dissection contain at least one accepted point.

Occupancy arrays are indexed ``occupancy[i, j]`` with ``i`` the column
(x direction) and ``j`` the row (y direction).
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

KING = np.ones((3, 3), dtype=bool)
ROOK = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

# Side of a hash cell as a fraction of the radius, and the cell offsets a radius can reach.
CELL_SHRINK = (1.0 - 1e-9) / math.sqrt(2.0)
CELL_REACH = tuple((di, dj) for di in range(-2, 3) for dj in range(-2, 3))


class ParameterError(ValueError):
    """Raised when an operation is called outside its documented domain"""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ParameterError(f"point ({self.x}, {self.y}) lies outside the unit square")


@dataclass(frozen=True)
class BoxIndex:
    i: int
    j: int
    side: float


@dataclass(frozen=True)
class ComponentStats:
    largest: int
    own: int
    box: tuple
    new_box: bool


@dataclass
class RunRecord:
    """Result of one trial of a geometric process"""
    mode: str
    n: int
    c: Optional[float]
    r: float
    strategy: str
    seed: int
    largest_size: int
    largest_fraction: float
    barrier_crossed: Optional[bool] = None
    strategy_failed: bool = False
    runtime_ms: float = 0.0
    series: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def as_row(self):
        return {
            'mode': self.mode,
            'n': self.n,
            'c': self.c,
            'r': self.r,
            'strategy': self.strategy,
            'seed': self.seed,
            'largest_size': self.largest_size,
            'largest_fraction': self.largest_fraction,
            'barrier_crossed': self.barrier_crossed,
            'strategy_failed': self.strategy_failed,
            'runtime_ms': self.runtime_ms,
        }


def splitmix64(value):
    """One step of the splitmix64 mixer on a 64-bit integer"""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed, *indices):
    """Derive an order-independent 64-bit seed from a base seed and indices"""
    state = splitmix64(base_seed & MASK64)
    for index in indices:
        state = splitmix64(state ^ splitmix64(index & MASK64))
    return state


@dataclass
class RngStream:
    """
    Reproducible randomness for one trial.

    ``samples`` feeds the process (points, bins, coupons, graphs) and
    ``decisions`` feeds the player's tie-breaks, so a strategy that consumes
    more or fewer random numbers never shifts the offered points.
    """
    seed: int
    stream: int = 0
    samples: np.random.Generator = field(init=False, repr=False)
    decisions: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        root = np.random.SeedSequence(entropy=self.seed & MASK64, spawn_key=(self.stream,))
        sample_seq, decision_seq = root.spawn(2)
        self.samples = np.random.Generator(np.random.PCG64(sample_seq))
        self.decisions = np.random.Generator(np.random.PCG64(decision_seq))

    def pick(self, count):
        """Uniform index in range(count) from the decision stream"""
        if count == 1:
            return 0
        return int(self.decisions.integers(count))


def sample_point_tuple(rng, d=2):
    """Offer d independent uniform points of the unit square"""
    if d < 1:
        raise ParameterError("at least one point must be offered")
    xy = rng.samples.random(2 * d).tolist()
    return tuple(Point(xy[2 * k], xy[2 * k + 1]) for k in range(d))


def sample_point_pair(rng):
    """Offer two independent uniform points of the unit square"""
    return sample_point_tuple(rng, 2)


def sample_rounds(rng, rounds, d=2):
    """Draw the offers of many rounds at once, shape (rounds, d, 2)"""
    # Same numbers as `rounds` consecutive sample_point_tuple calls.
    return rng.samples.random((rounds, d, 2))


def grid_size(side):
    """Number of boxes per unit side for boxes of the given side length"""
    if side <= 0:
        raise ParameterError(f"box side must be positive, got {side}")
    return max(1, math.ceil(1.0 / side - 1e-9))


def box_coords(x, y, side, count):
    i = int(x / side)
    j = int(y / side)
    return (i if i < count else count - 1, j if j < count else count - 1)


def box_of(p, side):
    """Box of the dissection with the given side that holds p (half-open, clamped)"""
    count = grid_size(side)
    i, j = box_coords(p.x, p.y, side, count)
    return BoxIndex(i, j, side)


class ProcessState:
    """Evolving geometric graph of accepted points"""

    def __init__(self, radius, box_side=None):
        if radius < 0:
            raise ParameterError(f"radius must be non-negative, got {radius}")
        self.radius = radius
        # Hash cells have diagonal at most r, so every cell lies inside one component.
        self.cell_side = min(radius, 1.0) * CELL_SHRINK if radius > 0 else 1.0
        self.cell_count = grid_size(self.cell_side)
        if box_side is None:
            box_side = min(radius, 1.0) if radius > 0 else 1.0
        self.box_side = box_side
        self.box_count = grid_size(box_side)

        self.xs = []
        self.ys = []
        self.cells = defaultdict(list)
        self.parent = []
        self.size = []
        self.merges = 0
        self.occupancy = np.zeros((self.box_count, self.box_count), dtype=bool)
        self.occupied_count = 0
        self.round = 0
        self.largest = 0

    def __len__(self):
        return len(self.xs)

    @property
    def points(self):
        return [Point(x, y) for x, y in zip(self.xs, self.ys)]

    def find(self, index):
        parent = self.parent
        while parent[index] != index:
            parent[index] = parent[parent[index]]
            index = parent[index]
        return index

    def _union(self, a, b):
        ra = self.find(a)
        rb = self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.merges += 1
        return ra

    def _buckets(self, x, y):
        ci, cj = box_coords(x, y, self.cell_side, self.cell_count)
        cells = self.cells
        for di, dj in CELL_REACH:
            bucket = cells.get((ci + di, cj + dj))
            if bucket:
                yield bucket

    def neighbours(self, x, y):
        """Indices of accepted points within the connection radius of (x, y)"""
        if self.radius <= 0:
            return []
        r2 = self.radius * self.radius
        xs, ys = self.xs, self.ys
        found = []
        for bucket in self._buckets(x, y):
            for k in bucket:
                dx = xs[k] - x
                dy = ys[k] - y
                if dx * dx + dy * dy <= r2:
                    found.append(k)
        return found

    def touching_roots(self, x, y):
        """Roots of the components that a point at (x, y) would join"""
        roots = set()
        if self.radius <= 0:
            return roots
        r2 = self.radius * self.radius
        xs, ys = self.xs, self.ys
        for bucket in self._buckets(x, y):
            root = self.find(bucket[0])
            if root in roots:
                continue
            for k in bucket:
                dx = xs[k] - x
                dy = ys[k] - y
                if dx * dx + dy * dy <= r2:
                    roots.add(root)
                    break
        return roots

    def probe(self, p):
        """Largest component and own component size if p were added, without adding it"""
        own = 1 + sum(self.size[root] for root in self.touching_roots(p.x, p.y))
        return max(self.largest, own), own

    def component_sizes(self):
        """Sizes of all components, largest first"""
        sizes = [self.size[i] for i in range(len(self.parent)) if self.parent[i] == i]
        return sorted(sizes, reverse=True)

    def component_count(self):
        return len(self.xs) - self.merges

    def labels(self):
        """Root index of every accepted point"""
        return [self.find(i) for i in range(len(self.parent))]


def add_point(state, p, radius=None):
    """Accept p: join it to every earlier point within the radius and mark its box"""
    if radius is not None and radius != state.radius:
        raise ParameterError(f"radius {radius} differs from the radius {state.radius} of this state")
    x, y = p.x, p.y
    index = len(state.xs)
    roots = state.touching_roots(x, y)
    state.xs.append(x)
    state.ys.append(y)
    state.parent.append(index)
    state.size.append(1)
    for root in roots:
        state._union(index, root)
    state.cells[box_coords(x, y, state.cell_side, state.cell_count)].append(index)

    box = box_coords(x, y, state.box_side, state.box_count)
    new_box = not state.occupancy[box]
    if new_box:
        state.occupancy[box] = True
        state.occupied_count += 1

    own = state.size[state.find(index)]
    if own > state.largest:
        state.largest = own
    state.round += 1
    return ComponentStats(state.largest, own, box, new_box)


def label_grid(mask, adjacency='king'):
    """Label connected cells of a boolean grid; returns (labels, count)"""
    if adjacency == 'king':
        structure = KING
    elif adjacency == 'rook':
        structure = ROOK
    else:
        raise ParameterError(f"unknown adjacency '{adjacency}'")
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels, count


def grid_components(mask, adjacency='king'):
    """Connected components of the true cells of a grid, each a sorted list of (i, j)"""
    labels, count = label_grid(mask, adjacency)
    components = [[] for _ in range(count)]
    ii, jj = np.nonzero(labels)
    for i, j in zip(ii.tolist(), jj.tolist()):
        components[labels[i, j] - 1].append((i, j))
    return components


def occupancy_components(state, adjacency='king'):
    """Partition the occupied boxes of a state into king or rook components"""
    return grid_components(state.occupancy, adjacency)
