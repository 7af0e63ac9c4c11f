"""
Combinatorial toolkit for grid lemmas and diagnostics.

Grid subgraphs are boolean masks indexed ``[i, j]`` (column, row); the
isoperimetric quantities count rook edges of the infinite lattice.
"""
import math
from dataclasses import dataclass, field
from itertools import islice

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from core_model import ParameterError, grid_components

MARGINS = ('top', 'bottom', 'left', 'right')


@dataclass(frozen=True)
class GridSubgraph:
    """Cells of [s]^2 induced as a subgraph of the rook or king grid"""
    s: int
    members: frozenset
    adjacency: str = 'rook'

    def __post_init__(self):
        for i, j in self.members:
            if not (0 <= i < self.s and 0 <= j < self.s):
                raise ParameterError(f"cell ({i}, {j}) lies outside the {self.s}x{self.s} grid")

    @classmethod
    def from_mask(cls, mask, adjacency='rook'):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ParameterError("grid subgraphs need a square mask")
        ii, jj = np.nonzero(mask)
        return cls(mask.shape[0], frozenset(zip(ii.tolist(), jj.tolist())), adjacency)

    def mask(self):
        grid = np.zeros((self.s, self.s), dtype=bool)
        for i, j in self.members:
            grid[i, j] = True
        return grid

    def __len__(self):
        return len(self.members)


def components(H):
    return grid_components(H.mask(), H.adjacency)


def boundary_edges(H):
    """Lattice edges between members and non-members, cells outside [s]^2 included"""
    padded = np.pad(H.mask(), 1)
    inner = padded[1:-1, 1:-1]
    total = 0
    for shifted in (padded[:-2, 1:-1], padded[2:, 1:-1], padded[1:-1, :-2], padded[1:-1, 2:]):
        total += int((inner & ~shifted).sum())
    return total


def small_components_volume(H, x):
    """Number of vertices in components with at most x vertices"""
    if x <= 0:
        raise ParameterError(f"component cap must be positive, got {x}")
    return sum(len(comp) for comp in components(H) if len(comp) <= x)


def _rook_masks(s):
    full = (1 << (s * s)) - 1
    first_column = sum(1 << (j * s) for j in range(s))
    last_column = first_column << (s - 1)
    return full, full & ~first_column, full & ~last_column


def _largest_rook_component(bits, s, masks):
    full, not_first, not_last = masks
    largest = 0
    remaining = bits
    while remaining:
        comp = remaining & -remaining
        while True:
            grown = (comp | ((comp << 1) & not_first) | ((comp >> 1) & not_last)
                     | ((comp << s) & full) | (comp >> s)) & bits
            if grown == comp:
                break
            comp = grown
        largest = max(largest, comp.bit_count())
        remaining &= ~comp
    return largest


def isoperimetry_violations(s, cap=None, per_component=False):
    """
    Check the isoperimetric bounds on every subset of [s]^2.

    Without a cap every subset must satisfy e >= 4 sqrt(v). With `cap`, only
    subsets whose components have at most `cap` cells are checked, against
    e >= 4 v / sqrt(cap). With `per_component` the cap is each subset's own
    largest component.
    """
    if s < 1:
        raise ParameterError(f"grid side must be positive, got {s}")
    if s * s > 24:
        raise ParameterError("exhaustive enumeration is limited to 24 cells")
    masks = _rook_masks(s)
    _, _, not_last = masks
    checked = 0
    violations = 0
    for bits in range(1, 1 << (s * s)):
        v = bits.bit_count()
        internal = (bits & (bits >> 1) & not_last).bit_count() + (bits & (bits >> s)).bit_count()
        e = 4 * v - 2 * internal
        if cap is None and not per_component:
            checked += 1
            if e * e < 16 * v:
                violations += 1
            continue
        x = _largest_rook_component(bits, s, masks)
        if not per_component:
            if x > cap:
                continue
            x = cap
        checked += 1
        # e >= 4v/sqrt(x) squared; both sides are non-negative.
        if e * e * x < 16 * v * v:
            violations += 1
    return {'checked': checked, 'violations': violations}


def _lambda_iter(alpha):
    lam = (1.0 / (1.0 + alpha)) ** 2
    while True:
        yield lam
        lam = lam + ((1.0 - lam) / (1.0 + alpha)) ** 2


def lambda_sequence(alpha, k):
    """lambda_1 .. lambda_k of the component-growth recurrence"""
    if alpha < 0:
        raise ParameterError(f"alpha must be non-negative, got {alpha}")
    if k < 1:
        raise ParameterError(f"k must be at least 1, got {k}")
    return list(islice(_lambda_iter(alpha), k))


def lambda_k(alpha, k):
    return lambda_sequence(alpha, k)[-1]


def k_for(eps, alpha, max_k=10 ** 6):
    """Smallest k with lambda_k > 1 - eps"""
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if alpha < 0:
        raise ParameterError(f"alpha must be non-negative, got {alpha}")
    for k, lam in enumerate(_lambda_iter(alpha), start=1):
        if lam > 1.0 - eps:
            return k
        if k >= max_k:
            raise ParameterError(f"lambda_k stays below {1.0 - eps} for k up to {max_k}")


def bblock_side(eps, c, n, rho):
    """Side b of a b-block in boxes of side rho, at least one box"""
    if n < 4:
        raise ParameterError(f"n must be at least 4, got {n}")
    b = (eps * c / 1000.0) * (1.0 / rho) / math.log2(math.log2(n))
    return max(1, int(b))


def bblocks_per_side(eps, c, n):
    """z = (1000 / (eps c)) log log n"""
    if n < 4:
        raise ParameterError(f"n must be at least 4, got {n}")
    return 1000.0 / (eps * c) * math.log2(math.log2(n))


@dataclass
class BBlockDiag:
    origin: tuple
    b: int
    eps: float
    good_lines: dict
    good: bool
    framed: bool
    full_rows: frozenset
    full_cols: frozenset
    skewered_with: set = field(default_factory=set)


def classify_bblock(occupancy, origin, b, eps, empty_threshold=1):
    """Good and framed flags of the b x b block whose lower-left box is `origin`"""
    if not 0 < eps < 1 / 7:
        raise ParameterError(f"margin fraction must lie in (0, 1/7), got {eps}")
    w = math.floor(eps * b)
    if w < 1:
        raise ParameterError(f"eps*b must be at least 1 (eps={eps}, b={b})")
    i0, j0 = origin
    block = np.asarray(occupancy, dtype=bool)[i0:i0 + b, j0:j0 + b]
    if block.shape != (b, b):
        raise ParameterError(f"block at {origin} does not fit in the occupancy grid")

    row_empty = (~block).sum(axis=0)
    col_empty = (~block).sum(axis=1)
    margins = {
        'top': row_empty[b - w:],
        'bottom': row_empty[:w],
        'left': col_empty[:w],
        'right': col_empty[b - w:],
    }
    good_lines = {name: int((lines <= empty_threshold).sum()) for name, lines in margins.items()}
    good = all(4 * good_lines[name] >= 3 * w for name in MARGINS)
    framed = all(bool((lines == 0).any()) for lines in margins.values())
    return BBlockDiag(
        origin=(i0, j0),
        b=b,
        eps=eps,
        good_lines=good_lines,
        good=good,
        framed=framed,
        full_rows=frozenset((j0 + np.nonzero(row_empty == 0)[0]).tolist()),
        full_cols=frozenset((i0 + np.nonzero(col_empty == 0)[0]).tolist()),
    )


def skewered(first, second):
    """Whether two side-sharing b-blocks have a common line full in both"""
    (ai, aj), (bi, bj) = first.origin, second.origin
    if aj == bj and abs(ai - bi) == first.b:
        return bool(first.full_rows & second.full_rows)
    if ai == bi and abs(aj - bj) == first.b:
        return bool(first.full_cols & second.full_cols)
    return False


@dataclass
class BBlockGrid:
    b: int
    z: int
    diags: dict
    good_mask: np.ndarray
    good_components: list


def classify_bblocks(occupancy, b, eps, empty_threshold=1):
    """Classify every whole b-block of the occupancy grid; ragged edges are skipped"""
    occupancy = np.asarray(occupancy, dtype=bool)
    z = occupancy.shape[0] // b
    diags = {}
    good_mask = np.zeros((z, z), dtype=bool)
    for bi in range(z):
        for bj in range(z):
            diag = classify_bblock(occupancy, (bi * b, bj * b), b, eps, empty_threshold)
            diags[(bi, bj)] = diag
            good_mask[bi, bj] = diag.good
    for (bi, bj), diag in diags.items():
        for other in ((bi + 1, bj), (bi, bj + 1)):
            if other in diags and skewered(diag, diags[other]):
                diag.skewered_with.add(other)
                diags[other].skewered_with.add((bi, bj))
    return BBlockGrid(b=b, z=z, diags=diags, good_mask=good_mask,
                      good_components=grid_components(good_mask, 'rook'))


def _h(x):
    return xlogy(x, x) - x + 1.0


def chernoff_upper(mu, k):
    """exp(-mu H(k/mu)) with H(x) = x ln x - x + 1"""
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if k < 0:
        raise ParameterError(f"k must be non-negative, got {k}")
    return float(np.exp(-mu * _h(k / mu)))


def chernoff_lower(mu, k):
    """Lower-tail form of the same bound, for k <= mu"""
    if k > mu:
        raise ParameterError(f"lower tail needs k <= mu, got k={k}, mu={mu}")
    return chernoff_upper(mu, k)


def offline_a_of_c(c):
    """Root a in (0, 1) of 480 sqrt(a) / (1 - sqrt(a))^2 = c"""
    if c <= 0:
        raise ParameterError(f"c must be positive, got {c}")

    def excess(t):
        return 480.0 * t / (1.0 - t) ** 2 - c

    t = brentq(excess, 0.0, 1.0 - 1e-15, xtol=1e-15, maxiter=500)
    return t * t

