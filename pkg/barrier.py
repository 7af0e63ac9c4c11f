"""
The barrier of blocks that the defending player keeps from being crossed.

Boxes have the side of the connection radius r; a block is an h x h group of
boxes, and the barrier is a set of blocks cutting the block grid into pieces
of at most an a(K) fraction of all blocks. A block is bad when a king's-move
path of h occupied barrier boxes touches it, and dangerous when at most
`slack` more occupied boxes would make it bad.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core_model import ParameterError, grid_size, label_grid, box_coords

logger = logging.getLogger(__name__)

KING_STEPS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

DEFAULT_H_EXACT = 12


class GridTooCoarseError(ParameterError):
    """Raised when fewer than three blocks fit along a side of the unit square"""


@dataclass
class BlockState:
    occupied_boxes: int = 0
    dangerous: bool = False
    in_list: Optional[int] = None
    k_counter: int = 0


@dataclass
class Barrier:
    K: float
    h: int
    r: float
    box_count: int
    block_grid_side: int
    blocks: frozenset
    layout: str
    states: dict = field(default_factory=dict, repr=False)
    _allowed: dict = field(default_factory=dict, repr=False)
    _pieces: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.mask = np.zeros((self.block_grid_side, self.block_grid_side), dtype=bool)
        for bi, bj in self.blocks:
            self.mask[bi, bj] = True
        if not self.states:
            self.states = {block: BlockState() for block in self.blocks}

    def block_of_box(self, i, j):
        return (i // self.h, j // self.h)

    def block_of_point(self, p):
        i, j = box_coords(p.x, p.y, self.r, self.box_count)
        return (i // self.h, j // self.h)

    def contains_point(self, p):
        return self.block_of_point(p) in self.blocks

    def boxes(self, block):
        """All boxes of a block; edge blocks may be ragged"""
        bi, bj = block
        i_range = range(bi * self.h, min((bi + 1) * self.h, self.box_count))
        j_range = range(bj * self.h, min((bj + 1) * self.h, self.box_count))
        return [(i, j) for i in i_range for j in j_range]

    def box_bounds(self, block):
        """Half-open box ranges (i0, i1, j0, j1) of a block"""
        bi, bj = block
        return (bi * self.h, min((bi + 1) * self.h, self.box_count),
                bj * self.h, min((bj + 1) * self.h, self.box_count))

    def neighbourhood(self, block):
        """The block and its king-adjacent barrier blocks"""
        bi, bj = block
        found = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                other = (bi + di, bj + dj)
                if other in self.blocks:
                    found.append(other)
        return found

    def allowed_boxes(self, block):
        """Boxes a barrier path touching `block` may use"""
        cached = self._allowed.get(block)
        if cached is None:
            cached = frozenset(box for other in self.neighbourhood(block) for box in self.boxes(other))
            self._allowed[block] = cached
        return cached

    def piece_labels(self):
        """King components of the non-barrier blocks; 0 marks barrier blocks"""
        if self._pieces is None:
            self._pieces, _ = label_grid(~self.mask, 'king')
        return self._pieces

    def pieces(self):
        labels = self.piece_labels()
        count = int(labels.max()) if labels.size else 0
        return [int((labels == k).sum()) for k in range(1, count + 1)]

    def largest_piece_blocks(self):
        sizes = self.pieces()
        return max(sizes) if sizes else 0


def a_of_K(K):
    """Largest piece fraction guaranteed by a barrier of budget K"""
    if K <= 0:
        raise ParameterError(f"barrier budget K must be positive, got {K}")
    if K > 1:
        return 1.0 / (math.floor(K) + 1)
    return 1.0 - (K / 2.0) ** 2


def barrier_layout(K, z_b):
    """Blocks of the barrier on a z_b x z_b block grid and the layout name"""
    if K <= 0:
        raise ParameterError(f"barrier budget K must be positive, got {K}")
    if K > 1:
        strips = math.floor(K)
        columns = sorted({min(z_b - 1, int(math.floor(k * z_b / (strips + 1) + 0.5)))
                          for k in range(1, strips + 1)})
        blocks = {(column, j) for column in columns for j in range(z_b)}
        return frozenset(blocks), 'vertical-strips'

    leg = min(math.floor(K / 2.0 * z_b), z_b - 1)
    if leg == 0:
        return frozenset(), 'corner-square'
    # Two legs of `leg` blocks plus the elbow, so no king move leaves the corner square.
    blocks = {(leg, j) for j in range(leg)} | {(i, leg) for i in range(leg)} | {(leg, leg)}
    return frozenset(blocks), 'corner-square'


def build_barrier(K, h, r):
    """Construct the barrier for budget K over blocks of h x h boxes of side r"""
    if h < 1:
        raise ParameterError(f"block side h must be at least 1, got {h}")
    if r <= 0:
        raise ParameterError(f"radius must be positive, got {r}")
    if h * r > 1:
        raise ParameterError(f"h*r must not exceed 1 (h={h}, r={r})")
    box_count = grid_size(r)
    z_b = math.ceil(box_count / h)
    if z_b < 3:
        raise GridTooCoarseError(f"grid too coarse: only {z_b} blocks per side (h={h}, r={r})")
    blocks, layout = barrier_layout(K, z_b)
    barrier = Barrier(K=K, h=h, r=r, box_count=box_count, block_grid_side=z_b,
                      blocks=blocks, layout=layout)
    logger.info("Built %s barrier: K=%s, h=%d, %d of %d blocks, largest piece %d blocks",
                layout, K, h, len(blocks), z_b * z_b, barrier.largest_piece_blocks())
    return barrier


def default_slack(n, h):
    """round(2 log2 log2 n), clamped to [1, h-1]"""
    if n >= 4:
        raw = round(2 * math.log2(math.log2(n)))
    else:
        raw = 1
    return int(min(max(raw, 1), max(h - 1, 1)))


def default_list_capacity(h, barrier_blocks):
    return max(4, round(2.0 ** (-h) * barrier_blocks))


def resolve_danger_mode(h, h_exact=DEFAULT_H_EXACT, mode='auto'):
    if mode == 'auto':
        return 'exact' if h <= h_exact else 'surrogate'
    if mode not in ('exact', 'surrogate'):
        raise ParameterError(f"unknown dangerousness mode '{mode}'")
    return mode


def _chebyshev_to(bounds, i, j):
    i0, i1, j0, j1 = bounds
    di = i0 - i if i < i0 else (i - i1 + 1 if i >= i1 else 0)
    dj = j0 - j if j < j0 else (j - j1 + 1 if j >= j1 else 0)
    return di if di > dj else dj


def barrier_path_exists(allowed, occupancy, home, h, slack):
    """
    Whether a simple king's-move path of exactly h boxes inside `allowed`
    touches the `home` rectangle and has at most `slack` empty boxes.
    """
    if h <= 0:
        return True
    need = h - slack
    relevant = [box for box in allowed if _chebyshev_to(home, *box) <= h - 1]
    if len(relevant) < h:
        return False
    occupied_total = sum(1 for box in relevant if occupancy[box])
    if occupied_total < need:
        return False

    on_path = set()

    def extend(i, j, length, empties, touched):
        if length == h:
            return touched
        candidates = []
        for di, dj in KING_STEPS:
            nxt = (i + di, j + dj)
            if nxt not in allowed or nxt in on_path:
                continue
            dist = _chebyshev_to(home, *nxt)
            if not touched and dist > h - length - 1:
                continue
            candidates.append((not occupancy[nxt], dist, nxt))
        candidates.sort()
        for is_empty, dist, nxt in candidates:
            e = empties + is_empty
            if e > slack:
                continue
            on_path.add(nxt)
            found = extend(nxt[0], nxt[1], length + 1, e, touched or dist == 0)
            on_path.discard(nxt)
            if found:
                return True
        return False

    starts = sorted(relevant, key=lambda box: (not occupancy[box], _chebyshev_to(home, *box), box))
    for start in starts:
        empty = not occupancy[start]
        if empty > slack:
            continue
        on_path.add(start)
        found = extend(start[0], start[1], 1, int(empty), _chebyshev_to(home, *start) == 0)
        on_path.discard(start)
        if found:
            return True
    return False


def is_block_bad(barrier, occupancy, block, h=None):
    """Whether a path of h occupied barrier boxes touches the block"""
    h = barrier.h if h is None else h
    if block not in barrier.blocks:
        raise ParameterError(f"block {block} is not part of the barrier")
    allowed = frozenset(box for box in barrier.allowed_boxes(block) if occupancy[box])
    return barrier_path_exists(allowed, occupancy, barrier.box_bounds(block), h, 0)


def dangerous_surrogate(barrier, occupancy, block, h, slack):
    """Occupancy-density stand-in for dangerousness at large h"""
    boxes = barrier.allowed_boxes(block)
    total = len(boxes)
    occupied = sum(1 for box in boxes if occupancy[box])
    threshold = (h - slack) * h / (3.0 * h * h) * total
    return occupied >= threshold


def is_block_dangerous(barrier, occupancy, block, h=None, slack=0,
                       h_exact=DEFAULT_H_EXACT, mode='auto'):
    """Whether occupying at most `slack` more boxes could make the block bad"""
    h = barrier.h if h is None else h
    if not 0 <= slack <= h:
        raise ParameterError(f"slack must lie in [0, h], got {slack}")
    if block not in barrier.blocks:
        raise ParameterError(f"block {block} is not part of the barrier")
    if resolve_danger_mode(h, h_exact, mode) == 'surrogate':
        return dangerous_surrogate(barrier, occupancy, block, h, slack)
    return barrier_path_exists(barrier.allowed_boxes(block), occupancy,
                               barrier.box_bounds(block), h, slack)


def barrier_crossed(state, barrier):
    """Whether one king component of occupied boxes reaches two different pieces"""
    labels, count = label_grid(state.occupancy, 'king')
    if count < 1:
        return False
    pieces = barrier.piece_labels()
    ii, jj = np.nonzero(labels)
    piece = pieces[ii // barrier.h, jj // barrier.h]
    outside = piece > 0
    comps = labels[ii[outside], jj[outside]]
    pairs = set(zip(comps.tolist(), piece[outside].tolist()))
    return len(pairs) > len(set(comps.tolist()))


def count_bad_blocks(barrier, occupancy):
    return sum(1 for block in sorted(barrier.blocks) if is_block_bad(barrier, occupancy, block))
