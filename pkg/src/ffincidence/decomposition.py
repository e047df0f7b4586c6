"""Greedy grid decomposition, grid densities and the dyadic rectangle profile.

A *grid* is the set of intersections of ``k_rows`` parallel lines of one
direction with ``k_cols`` lines of the perpendicular direction.  Lines are
named by slope index and offset (see :mod:`ffincidence.ff_core`), so grid
membership of a point is two offset lookups.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ff_core
from .constants import exponent
from .ff_core import AffineLine, perpendicular_at
from .incidence import (
    BoundReport,
    BudgetExceededError,
    MultiplicityTable,
    PointSet2,
    count_rectangles_via_energy,
    dyadic_class,
    iter_rectangles,
    lift_coords,
    additive_energy_points,
)


@dataclass(frozen=True)
class Grid:
    p: int
    slope: int
    perp_slope: int
    rows: tuple[int, ...]  # offsets of lines with direction `slope`
    cols: tuple[int, ...]  # offsets of lines with direction `perp_slope`

    def __post_init__(self):
        perp, iso = ff_core.slope_tables(self.p)
        if iso[self.slope] or int(perp[self.slope]) != self.perp_slope:
            raise ValueError("grid directions must be perpendicular and non-isotropic")

    @property
    def size(self) -> int:
        return len(self.rows) * len(self.cols)

    def membership(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        r = ff_core.line_offset(coords[:, 0], coords[:, 1], self.slope, self.p)
        c = ff_core.line_offset(coords[:, 0], coords[:, 1], self.perp_slope, self.p)
        return np.isin(r, self.rows) & np.isin(c, self.cols)

    def count(self, A: PointSet2) -> int:
        return int(self.membership(A.coords).sum())

    def row_lines(self) -> list[AffineLine]:
        return [ff_core.line_from_offset(self.slope, o, self.p) for o in self.rows]

    def col_lines(self) -> list[AffineLine]:
        return [ff_core.line_from_offset(self.perp_slope, o, self.p) for o in self.cols]

    def points(self) -> list[tuple[int, int]]:
        p = self.p
        out = []
        for r in self.row_lines():
            for c in self.col_lines():
                out.append(_intersect(r, c, p))
        return out

    def to_dict(self) -> dict:
        return {"slope": self.slope, "perp_slope": self.perp_slope,
                "rows": list(self.rows), "cols": list(self.cols)}


def _intersect(l1: AffineLine, l2: AffineLine, p: int) -> tuple[int, int]:
    det = (l1.a * l2.b - l1.b * l2.a) % p
    if det == 0:
        raise ValueError("parallel lines")
    inv = pow(det, -1, p)
    x = (l1.c * l2.b - l1.b * l2.c) * inv % p
    y = (l1.a * l2.c - l1.c * l2.a) * inv % p
    return x, y


# --- fourth-vertex identity ----------------------------------------------


def delta_grid_count(A: PointSet2, x, line: AffineLine) -> int:
    """Rectangles with vertex x and adjacent sides on ``line`` and its perpendicular at x."""
    x = (int(x[0]) % A.p, int(x[1]) % A.p)
    if x not in A or not line.contains(x):
        raise ValueError("x must be a point of A lying on the line")
    perp = perpendicular_at(line, x)
    pts = A.as_set()
    ys = [y for y in pts if y != x and line.contains(y)]
    zs = [z for z in pts if z != x and perp.contains(z)]
    p = A.p
    return sum(((y[0] + z[0] - x[0]) % p, (y[1] + z[1] - x[1]) % p) in pts
               for y in ys for z in zs)


def delta_grid(A: PointSet2, x, line: AffineLine) -> Grid | None:
    """The grid {y + z - x} for y on ``line``, z on its perpendicular at x."""
    p = A.p
    perp = perpendicular_at(line, x)
    s, t = line.slope_index, perp.slope_index
    ys = A.coords[[line.contains(q) and tuple(q) != tuple(x) for q in A.coords.tolist()]]
    zs = A.coords[[perp.contains(q) and tuple(q) != tuple(x) for q in A.coords.tolist()]]
    if len(ys) == 0 or len(zs) == 0:
        return None
    # y + z - x lies on the line of direction s through z and on the line of
    # direction t through y
    rows = tuple(sorted(int(o) for o in ff_core.line_offset(zs[:, 0], zs[:, 1], s, p)))
    cols = tuple(sorted(int(o) for o in ff_core.line_offset(ys[:, 0], ys[:, 1], t, p)))
    return Grid(p, s, t, rows, cols)


def delta_grid_membership(A: PointSet2, x, line: AffineLine) -> int:
    """|A n G(x, line)|, the grid-membership side of the fourth-vertex identity."""
    g = delta_grid(A, x, line)
    return 0 if g is None else g.count(A)


# --- candidate grids -----------------------------------------------------


def _realized_pairs(coords: np.ndarray, p: int) -> list[tuple[int, int]]:
    """Non-isotropic perpendicular slope pairs (s < t) realized by >= 2 point pairs."""
    n = coords.shape[0]
    if n < 2:
        return []
    i, j = np.triu_indices(n, 1)
    s = ff_core.pair_slopes(coords[j, 0] - coords[i, 0], coords[j, 1] - coords[i, 1], p)
    cnt = np.bincount(s, minlength=p + 1)
    perp, iso = ff_core.slope_tables(p)
    out = []
    for sv in np.nonzero(cnt)[0]:
        sv = int(sv)
        t = int(perp[sv])
        if iso[sv]:
            continue
        a, b = min(sv, t), max(sv, t)
        if cnt[a] + cnt[b] >= 2 and (a, b) not in out:
            out.append((a, b))
    return sorted(out)


def _top_offsets(off: np.ndarray, k: int, p: int, weight: np.ndarray | None = None) -> tuple[int, ...]:
    """The k offsets holding the most points (restricted to ``weight``), offset ascending on ties."""
    cnt = np.bincount(off, weights=weight, minlength=p)
    # secondary key: unrestricted count, so empty restrictions still pick rich lines
    full = np.bincount(off, minlength=p)
    order = np.lexsort((np.arange(p), -full, -cnt))[:k]
    return tuple(sorted(int(o) for o in order))


def _best_grid(coords: np.ndarray, s: int, t: int, k: int, p: int) -> tuple[int, Grid]:
    """Top-k rows and columns, then alternate exact row/column re-choices.

    For fixed rows the best k columns are the top-k by count inside those
    rows (and vice versa), so each pass never lowers the count.
    """
    r_off = ff_core.line_offset(coords[:, 0], coords[:, 1], s, p)
    c_off = ff_core.line_offset(coords[:, 0], coords[:, 1], t, p)
    rows, cols = _top_offsets(r_off, k, p), _top_offsets(c_off, k, p)
    best = int((np.isin(r_off, rows) & np.isin(c_off, cols)).sum())
    for _ in range(4):
        cols2 = _top_offsets(c_off, k, p, np.isin(r_off, rows).astype(float))
        rows2 = _top_offsets(r_off, k, p, np.isin(c_off, cols2).astype(float))
        got = int((np.isin(r_off, rows2) & np.isin(c_off, cols2)).sum())
        if got <= best:
            break
        rows, cols, best = rows2, cols2, got
    return best, Grid(p, s, t, rows, cols)


def candidate_grids(coords: np.ndarray, p: int, k: int) -> list[tuple[int, Grid]]:
    """One k-by-k candidate per realized direction pair, with its point count.

    Sorted by count descending, then by direction pair.
    """
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
    if k > p:
        return []
    out = [_best_grid(coords, s, t, k, p) for s, t in _realized_pairs(coords, p)]
    out.sort(key=lambda cg: (-cg[0], cg[1].slope, cg[1].perp_slope))
    return out


# --- greedy decomposition ------------------------------------------------


@dataclass
class GridSelection:
    grid: Grid
    count: int  # |A_remaining n G| when selected


@dataclass
class LevelPart:
    level: int
    selections: list[GridSelection] = field(default_factory=list)
    points: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class GreedyDecomposition:
    p: int
    k: int
    levels: int
    density_floor: float
    A_prime: PointSet2
    parts: dict[int, LevelPart]
    selection_order: list[GridSelection] = field(default_factory=list)
    final_max_density: float = 0.0

    def part(self, i: int) -> PointSet2:
        lp = self.parts.get(i)
        return PointSet2(self.p, lp.points if lp else [])

    def grid_counts(self) -> dict[int, int]:
        return {i: len(lp.selections) for i, lp in sorted(self.parts.items())}

    def empirical_grid_constants(self, n: int) -> dict[int, float]:
        """count * n^(-7/41) * 2^(-i): the implied constant in the per-level grid count."""
        e = float(exponent("grid_count"))
        return {i: c * n ** (-e) * 2.0 ** (-i) for i, c in self.grid_counts().items()}

    def to_dict(self) -> dict:
        return {
            "params": {"p": self.p, "k": self.k, "levels": self.levels,
                       "density_floor": self.density_floor},
            "levels": [
                {"level": i,
                 "grids": [{**s.grid.to_dict(), "count": s.count} for s in lp.selections],
                 "points": [list(q) for q in lp.points]}
                for i, lp in sorted(self.parts.items())
            ],
            "A_prime": [list(q) for q in self.A_prime],
            "selection_order": [[s.grid.slope, s.grid.perp_slope, s.count] for s in self.selection_order],
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, d: dict) -> "GreedyDecomposition":
        prm = d["params"]
        p = prm["p"]
        parts = {}
        for lv in d["levels"]:
            sels = [GridSelection(Grid(p, g["slope"], g["perp_slope"], tuple(g["rows"]), tuple(g["cols"])),
                                  g["count"]) for g in lv["grids"]]
            parts[lv["level"]] = LevelPart(lv["level"], sels, [tuple(q) for q in lv["points"]])
        return cls(p, prm["k"], prm["levels"], prm["density_floor"],
                   PointSet2(p, d["A_prime"]), parts)

    @classmethod
    def load(cls, path) -> "GreedyDecomposition":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_parameters(n: int) -> tuple[int, int, float]:
    """(k, levels, density_floor) = (ceil n^(17/41), ceil(log2(n)/41), n^(-1/41))."""
    n = max(n, 2)
    k = max(2, math.ceil(n ** float(exponent("grid_side"))))
    levels = max(1, math.ceil(math.log2(n) * float(exponent("density_floor"))))
    floor = n ** -float(exponent("density_floor"))
    return k, levels, floor


def level_of(count: int, k: int, levels: int) -> int | None:
    """Smallest i in 1..levels with count >= 2^-i k^2, else None."""
    for i in range(1, levels + 1):
        if count * (1 << i) >= k * k:
            return i
    return None


def greedy_grid_decomposition(
    A: PointSet2,
    k: int | None = None,
    levels: int | None = None,
    density_floor: float | None = None,
) -> GreedyDecomposition:
    """Peel dense grids off A, richest first.

    Each step takes the candidate grid with the most remaining points; it
    goes to the first level i whose threshold 2^-i k^2 it meets.  When the
    best candidate is below 2^-levels k^2 the remaining points form A'.
    """
    dk, dl, df = default_parameters(A.n)
    k = dk if k is None else int(k)
    levels = dl if levels is None else int(levels)
    density_floor = df if density_floor is None else float(density_floor)
    if k < 2:
        raise ValueError("grid side must be at least 2")

    p = A.p
    remaining = np.ones(A.n, dtype=bool)
    parts: dict[int, LevelPart] = {}
    order: list[GridSelection] = []
    while True:
        cands = candidate_grids(A.coords[remaining], p, k)
        if not cands:
            break
        count, grid = cands[0]
        i = level_of(count, k, levels)
        if i is None:
            break
        hit = remaining & grid.membership(A.coords)
        sel = GridSelection(grid, count)
        lp = parts.setdefault(i, LevelPart(i))
        lp.selections.append(sel)
        lp.points.extend(tuple(map(int, q)) for q in A.coords[hit])
        order.append(sel)
        remaining &= ~hit

    rest = A.coords[remaining]
    cands = candidate_grids(rest, p, k)
    final = cands[0][0] / (k * k) if cands else 0.0
    return GreedyDecomposition(p, k, levels, density_floor, PointSet2(p, rest),
                               dict(sorted(parts.items())), order, final)


def verify_decomposition(A: PointSet2, dec: GreedyDecomposition) -> dict[str, bool]:
    """Re-derive every invariant of ``dec`` from A and the recorded grids."""
    k = dec.k
    pieces = [dec.A_prime.as_set()] + [set(map(tuple, lp.points)) for lp in dec.parts.values()]
    union = set().union(*pieces)
    disjoint = sum(map(len, pieces)) == len(union)
    checks = {"partition": disjoint and union == A.as_set()}

    contained = True
    windows = True
    for i, lp in dec.parts.items():
        grids = [s.grid for s in lp.selections]
        P = np.asarray(lp.points, dtype=np.int64).reshape(-1, 2)
        if P.size:
            inside = np.zeros(len(P), dtype=bool)
            for g in grids:
                inside |= g.membership(P)
            contained &= bool(inside.all())
        for s in lp.selections:
            # count ~ 2^-i k^2 in the factor-two sense
            windows &= s.count * (1 << (i + 1)) >= k * k and s.count * (1 << i) <= 2 * k * k
            windows &= s.grid.size == k * k
    checks["contained_in_grids"] = contained
    checks["density_windows"] = windows

    cands = candidate_grids(dec.A_prime.coords, dec.p, k)
    worst = cands[0][0] if cands else 0
    checks["floor"] = worst <= dec.density_floor * k * k
    return checks


def selection_monotone(dec: GreedyDecomposition) -> bool:
    """Within each level, the selected grid counts never increase."""
    for lp in dec.parts.values():
        c = [s.count for s in lp.selections]
        if any(b > a for a, b in zip(c, c[1:])):
            return False
    return True


# --- grid densities ------------------------------------------------------


@dataclass
class DensityReport:
    j: int
    max_density: float
    exceeds_floor: bool
    density_floor: float
    worst_grid: Grid | None = None
    k: int | None = None
    max_block_density: float | None = None
    covering_factor: float | None = None

    @property
    def floor_constant(self) -> float:
        """c with max_density = c * density_floor."""
        return self.max_density / self.density_floor if self.density_floor else math.inf

    @property
    def pigeonhole_holds(self) -> bool:
        if self.max_block_density is None:
            return True
        return self.max_density <= self.covering_factor * self.max_block_density + 1e-12


def grid_density_check(A: PointSet2, j: int, density_floor: float, k: int | None = None) -> DensityReport:
    """Worst candidate j-by-j grid density of A.

    With ``k`` given, each candidate j-grid is also covered by
    ceil(j/k)^2 blocks of at most k-by-k lines (rows and columns taken in
    rank order) and the densest block, measured against k^2, is reported.
    Averaging gives density(G) <= covering_factor * max block density.
    """
    if k is not None and j < k:
        raise ValueError("j must be at least k")
    cands = candidate_grids(A.coords, A.p, j)
    if not cands:
        return DensityReport(j, 0.0, False, density_floor, None, k,
                             0.0 if k else None, None if k is None else 1.0)
    count, worst = cands[0]
    dens = count / (j * j)
    rep = DensityReport(j, dens, dens > density_floor, density_floor, worst, k)
    if k is not None:
        nb = math.ceil(j / k)
        rep.covering_factor = nb * nb * k * k / (j * j)
        best = 0
        for _, g in cands:
            rows = _rank_lines(A, g.slope, g.rows)
            cols = _rank_lines(A, g.perp_slope, g.cols)
            for a in range(0, len(rows), k):
                for b in range(0, len(cols), k):
                    blk = Grid(A.p, g.slope, g.perp_slope, tuple(rows[a:a + k]), tuple(cols[b:b + k]))
                    best = max(best, blk.count(A))
        rep.max_block_density = best / (k * k)
    return rep


def _rank_lines(A: PointSet2, s: int, offsets) -> list[int]:
    off = ff_core.line_offset(A.coords[:, 0], A.coords[:, 1], s, A.p)
    cnt = np.bincount(off, minlength=A.p)
    return sorted(offsets, key=lambda o: (-cnt[o], o))


# --- dyadic rectangle profile --------------------------------------------


@dataclass
class DyadicRectangleProfile:
    n: int
    classes: dict[int, int]  # dyadic k -> ordered rectangles with n(l_R) ~ k
    t1: float
    t2: float

    @property
    def I(self) -> int:
        return sum(c for k, c in self.classes.items() if k <= self.t1)

    @property
    def II(self) -> int:
        return sum(c for k, c in self.classes.items() if self.t1 < k < self.t2)

    @property
    def III(self) -> int:
        return sum(c for k, c in self.classes.items() if k >= self.t2)

    @property
    def total(self) -> int:
        return sum(self.classes.values())

    def to_dict(self) -> dict:
        return {"n": self.n, "t1": self.t1, "t2": self.t2,
                "classes": {str(k): v for k, v in self.classes.items()},
                "I": self.I, "II": self.II, "III": self.III, "total": self.total}


def dyadic_rectangle_profile(A: PointSet2, budget: int | None = None,
                             t1: float | None = None, t2: float | None = None) -> DyadicRectangleProfile:
    """Classify each ordered rectangle by the richest of its four edge lines."""
    if budget is not None and A.n > budget:
        raise BudgetExceededError(f"profile enumeration limited to n <= {budget}, got {A.n}")
    n = A.n
    t1 = n ** float(exponent("grid_side")) if t1 is None else t1
    t2 = n ** float(exponent("rich_threshold")) if t2 is None else t2
    p = A.p
    table = MultiplicityTable(A).as_dict()
    P = [tuple(map(int, q)) for q in A.coords]
    line_cache: dict[tuple[int, int], tuple[int, AffineLine]] = {}

    def edge(i, j):
        key = (i, j) if i < j else (j, i)
        hit = line_cache.get(key)
        if hit is None:
            line = ff_core.line_through(P[i], P[j], p)
            hit = line_cache[key] = (table[line], line)
        return hit

    classes: dict[int, int] = {}
    for r1, r2, r3, r4 in iter_rectangles(A):
        # richest edge; equal counts fall back to canonical line order
        m, _ = max(edge(r1, r2), edge(r2, r3), edge(r3, r4), edge(r4, r1),
                   key=lambda e: (e[0], tuple(-v for v in (e[1].a, e[1].b, e[1].c))))
        k = dyadic_class(m)
        classes[k] = classes.get(k, 0) + 1
    return DyadicRectangleProfile(n, dict(sorted(classes.items())), t1, t2)


# --- subadditivity -------------------------------------------------------


class NotAPartitionError(ValueError):
    pass


@dataclass
class SubadditivityReport:
    energy_lhs: float  # Lambda(A)^(1/4), lifted to the paraboloid
    energy_rhs: float  # sum of Lambda(A_k)^(1/4)
    rect_lhs: float
    rect_rhs: float
    energies: list[int]
    rectangles: list[int]

    @property
    def holds(self) -> bool:
        return self.energy_lhs <= self.energy_rhs * (1 + 1e-12)

    @property
    def holds_rectangles_only(self) -> bool:
        return self.rect_lhs <= self.rect_rhs * (1 + 1e-12)


def fourth_root_subadditivity_check(A: PointSet2, parts: list[PointSet2]) -> SubadditivityReport:
    """Fourth-root subadditivity of the quadruple count over a partition of A.

    The subadditive quantity is the full count of algebraic rectangles,
    i.e. the additive energy of the lift (genuine rectangles plus the
    degenerate solutions (a, b, a, b), (a, b, b, a)); its fourth root is an
    L4 norm, so the triangle inequality applies.  The count of genuine
    rectangles alone is reported alongside; it is *not* subadditive (a
    rectangle split 1 + 3 has 8 > 0 + 0).
    """
    union = set()
    total = 0
    for part in parts:
        if part.p != A.p:
            raise NotAPartitionError("parts live over a different field")
        union |= part.as_set()
        total += part.n
    if union != A.as_set() or total != A.n:
        raise NotAPartitionError("parts do not partition A")

    def energy(S):
        return additive_energy_points(lift_coords(S), S.p)

    e_all = energy(A)
    e_parts = [energy(S) for S in parts]
    r_all = count_rectangles_via_energy(A)
    r_parts = [count_rectangles_via_energy(S) for S in parts]
    return SubadditivityReport(
        e_all ** 0.25, sum(e ** 0.25 for e in e_parts),
        r_all ** 0.25, sum(r ** 0.25 for r in r_parts),
        [e_all] + e_parts, [r_all] + r_parts,
    )


# --- rich lines of grid unions -------------------------------------------


def grid_union(grids: list[Grid]) -> PointSet2:
    if not grids:
        raise ValueError("need at least one grid to fix the field")
    return PointSet2.deduplicated(grids[0].p, [q for g in grids for q in g.points()])


def grid_union_rich_line_check(grids: list[Grid], j: int, p: int | None = None) -> BoundReport:
    """|L_j| for a union of m k-by-k grids against k^5 (j^-4 m^4 + 1)."""
    if not grids:
        return BoundReport.make("grid_union_rich_lines", 0, 1.0, True, m=0, k=0, j=j)
    B = grid_union(grids)
    m = len(grids)
    k = max(max(len(g.rows), len(g.cols)) for g in grids)
    counts = MultiplicityTable(B).counts()
    measured = int((counts >= j).sum())
    bound = k ** 5 * (j ** -4 * m ** 4 + 1)
    return BoundReport.make("grid_union_rich_lines", measured, bound, True, m=m, k=k, j=j)
