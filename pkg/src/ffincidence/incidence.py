"""Corners, rectangles, incidences and rich lines of point sets in F_p^2.

Every count here is an ordered count: a corner is an ordered triple with
the right angle at the middle point, and one geometric rectangle gives
eight ordered quadruples.  Brute-force ``*_oracle`` functions evaluate the
definitions directly and are kept deliberately naive; the fast kernels are
checked against them in the test-suite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import ff_core
from ._kernels import energy_sharded
from .ff_core import AffineLine, PrimeModulus, as_modulus

log = logging.getLogger(__name__)

# np.unique over all ordered pair sums stays cheap up to this many points.
_UNIQUE_PATH_MAX = 1500


class DuplicatePointError(ValueError):
    pass


class BudgetExceededError(RuntimeError):
    """Raised when a brute-force count would exceed its size budget."""


class PointSet2:
    """A duplicate-free finite subset of F_p^2.

    ``coords`` is an ``(n, 2)`` int64 array with residues in ``[0, p)``.
    """

    def __init__(self, p, points: Iterable[Sequence[int]] | np.ndarray = ()):
        self.modulus: PrimeModulus = as_modulus(p)
        q = self.modulus.p
        arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=np.int64)
        arr = arr.reshape(-1, 2) % q
        keys = arr[:, 0] * q + arr[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        if uniq.size != keys.size:
            dup = uniq[counts > 1][0]
            raise DuplicatePointError(f"duplicate point ({dup // q}, {dup % q})")
        arr.setflags(write=False)
        self.coords = arr

    @classmethod
    def deduplicated(cls, p, points) -> "PointSet2":
        q = int(p)
        seen = dict.fromkeys((int(x) % q, int(y) % q) for x, y in points)
        return cls(p, list(seen))

    @property
    def p(self) -> int:
        return self.modulus.p

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    def __len__(self):
        return self.n

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return (tuple(map(int, row)) for row in self.coords)

    def __contains__(self, pt) -> bool:
        return (int(pt[0]) % self.p, int(pt[1]) % self.p) in self.as_set()

    def __eq__(self, other):
        return isinstance(other, PointSet2) and self.p == other.p and self.as_set() == other.as_set()

    def __repr__(self):
        return f"PointSet2(p={self.p}, n={self.n})"

    def as_set(self) -> frozenset:
        return frozenset(self)

    def keys(self) -> np.ndarray:
        return self.coords[:, 0] * self.p + self.coords[:, 1]

    def subset(self, mask_or_index) -> "PointSet2":
        return PointSet2(self.modulus, self.coords[mask_or_index])

    def union(self, other: "PointSet2") -> "PointSet2":
        return PointSet2.deduplicated(self.modulus, list(self) + list(other))


def _sorted_keys(A: PointSet2) -> np.ndarray:
    return np.sort(A.keys())


def _member(sorted_keys: np.ndarray, keys: np.ndarray) -> np.ndarray:
    if sorted_keys.size == 0:
        return np.zeros(np.shape(keys), dtype=bool)
    pos = np.searchsorted(sorted_keys, keys)
    pos = np.minimum(pos, sorted_keys.size - 1)
    return sorted_keys[pos] == keys


# --- corners -------------------------------------------------------------


def corner_tensor(A: PointSet2) -> np.ndarray:
    """Boolean ``C[i, j, k]``: (A[i], A[j], A[k]) is a corner at A[j]."""
    p = A.p
    X = A.coords[:, 0]
    Y = A.coords[:, 1]
    ux = (X[None, :] - X[:, None])[:, :, None]  # x1 - x0 indexed (i, j)
    uy = (Y[None, :] - Y[:, None])[:, :, None]
    vx = (X[None, :] - X[:, None])[None, :, :]  # x2 - x1 indexed (j, k)
    vy = (Y[None, :] - Y[:, None])[None, :, :]
    dotp = (ux * vx + uy * vy) % p
    cross = (ux * vy - uy * vx) % p
    # cross != 0 already forces the three points to be distinct
    return (dotp == 0) & (cross != 0)


def count_corners_oracle(A: PointSet2, budget: int | None = None) -> int:
    if budget is not None and A.n > budget:
        raise BudgetExceededError(f"corner oracle limited to n <= {budget}, got {A.n}")
    if A.n < 3:
        return 0
    return int(corner_tensor(A).sum())


def corner_count_with_skips(A: PointSet2) -> tuple[int, int]:
    """Fast corner count and the number of triples skipped as isotropic.

    A skipped triple (x0, x1, x2) has both legs x1-x0 and x2-x1 along the
    same isotropic line through the apex x1 (an isotropic direction is its
    own perpendicular); such triples are collinear and never corners.
    """
    p = A.p
    perp, iso = ff_core.slope_tables(p)
    X, Y = A.coords[:, 0], A.coords[:, 1]
    total = 0
    skipped = 0
    for i in range(A.n):
        mask = np.ones(A.n, dtype=bool)
        mask[i] = False
        s = ff_core.pair_slopes(X[mask] - X[i], Y[mask] - Y[i], p)
        cnt = np.bincount(s, minlength=p + 1)
        prod = cnt * cnt[perp]
        total += int(prod[~iso].sum())
        skipped += int((prod[iso] - cnt[iso]).sum())
    if skipped:
        log.info("corner kernel skipped %d isotropic triples", skipped)
    return total, skipped


def count_corners_fast(A: PointSet2) -> int:
    """Sum over apexes of legs along every direction and its perpendicular."""
    return corner_count_with_skips(A)[0]


# --- rectangles ----------------------------------------------------------


def count_rectangles_oracle(A: PointSet2, budget: int | None = None) -> int:
    """Ordered quadruples whose four cyclic triples are all corners."""
    if budget is not None and A.n > budget:
        raise BudgetExceededError(f"rectangle oracle limited to n <= {budget}, got {A.n}")
    if A.n < 4:
        return 0
    C = corner_tensor(A)
    # indices (i, j, k, l) = (r1, r2, r3, r4)
    t = C[:, :, :, None] & C[None, :, :, :]  # C[i,j,k] & C[j,k,l]
    t &= C.transpose(2, 0, 1)[:, None, :, :]  # C[k,l,i]
    t &= C.transpose(1, 2, 0)[:, :, None, :]  # C[l,i,j]
    return int(t.sum())


def iter_rectangles(A: PointSet2) -> Iterator[tuple[int, int, int, int]]:
    """Yield every ordered rectangle as a tuple of row indices into A.coords.

    The first vertex is the apex ``x``; the second lies on a line through
    ``x`` and the fourth on the perpendicular through ``x``.
    """
    p = A.p
    perp, iso = ff_core.slope_tables(p)
    keys = A.keys()
    order = np.argsort(keys)
    skeys = keys[order]
    X, Y = A.coords[:, 0], A.coords[:, 1]
    idx = np.arange(A.n)
    for i in range(A.n):
        others = idx[idx != i]
        s = ff_core.pair_slopes(X[others] - X[i], Y[others] - Y[i], p)
        groups: dict[int, np.ndarray] = {}
        for sv in np.unique(s):
            groups[int(sv)] = others[s == sv]
        for sv, ys in groups.items():
            if iso[sv] or int(perp[sv]) not in groups:
                continue
            zs = groups[int(perp[sv])]
            wx = (X[ys][:, None] + X[zs][None, :] - X[i]) % p
            wy = (Y[ys][:, None] + Y[zs][None, :] - Y[i]) % p
            wk = wx * p + wy
            hit = _member(skeys, wk)
            for a, b in zip(*np.nonzero(hit)):
                w = order[np.searchsorted(skeys, wk[a, b])]
                yield i, int(ys[a]), int(w), int(zs[b])


def count_rectangles_perp(A: PointSet2) -> int:
    """Ordered rectangle count by perpendicular line pairs at each apex."""
    p = A.p
    perp, iso = ff_core.slope_tables(p)
    skeys = _sorted_keys(A)
    X, Y = A.coords[:, 0], A.coords[:, 1]
    total = 0
    for i in range(A.n):
        mask = np.ones(A.n, dtype=bool)
        mask[i] = False
        ox, oy = X[mask], Y[mask]
        s = ff_core.pair_slopes(ox - X[i], oy - Y[i], p)
        order = np.argsort(s, kind="stable")
        s_sorted = s[order]
        present, starts, counts = np.unique(s_sorted, return_index=True, return_counts=True)
        where = {int(v): (int(a), int(c)) for v, a, c in zip(present, starts, counts)}
        for sv, (a, c) in where.items():
            q = int(perp[sv])
            if iso[sv] or q not in where or sv > q:
                continue
            b, d = where[q]
            ys = order[a:a + c]
            zs = order[b:b + d]
            wx = (ox[ys][:, None] + ox[zs][None, :] - X[i]) % p
            wy = (oy[ys][:, None] + oy[zs][None, :] - Y[i]) % p
            total += 2 * int(_member(skeys, wx * p + wy).sum())
    return total


def lift_coords(A: PointSet2) -> np.ndarray:
    p = A.p
    X, Y = A.coords[:, 0], A.coords[:, 1]
    return np.stack([X, Y, (X * X + Y * Y) % p], axis=1)


def additive_energy_points(points: np.ndarray, p: int) -> int:
    """#{(a, b, c, d) : a + b = c + d} for rows of ``points`` in F_p^d."""
    pts = np.asarray(points, dtype=np.int64) % p
    n = pts.shape[0]
    if n == 0:
        return 0
    if pts.shape[1] == 3 and n > _UNIQUE_PATH_MAX:
        return energy_sharded(pts, p)
    s = (pts[:, None, :] + pts[None, :, :]) % p
    key = np.zeros((n, n), dtype=np.int64)
    for c in range(pts.shape[1]):
        key = key * p + s[:, :, c]
    _, mult = np.unique(key.ravel(), return_counts=True)
    return int((mult.astype(np.int64) ** 2).sum())


def trivial_energy(n: int) -> int:
    """Quadruples with (c, d) = (a, b) or (c, d) = (b, a)."""
    return 2 * n * n - n


def isotropic_collinear_energy(A: PointSet2) -> int:
    """Non-trivial energy quadruples of the lift lying on isotropic lines.

    These are the only energy solutions that are not genuine rectangles;
    they vanish unless -1 is a square mod p.
    """
    p = A.p
    t = ff_core.sqrt_minus_one(p)
    if t is None or A.n == 0:
        return 0
    X, Y = A.coords[:, 0], A.coords[:, 1]
    total = 0
    for s in (t, p - t):
        off = ff_core.line_offset(X, Y, s, p)
        for o in np.unique(off):
            params = X[off == o]  # direction (1, s): x is an affine parameter
            m = params.size
            if m < 2:
                continue
            sums = (params[:, None] + params[None, :]) % p
            _, mult = np.unique(sums.ravel(), return_counts=True)
            total += int((mult.astype(np.int64) ** 2).sum()) - trivial_energy(m)
    return total


def count_rectangles_via_energy(A: PointSet2) -> int:
    """Ordered rectangles as the non-trivial additive energy of the lift.

    a + b = c + d on the paraboloid forces (a - c).(b - c) = 0 in the
    plane, so non-trivial solutions are rectangles with diagonals {a, b}
    and {c, d}, except for solutions along isotropic lines, which are
    subtracted explicitly when -1 is a square.
    """
    if A.n < 4:
        return 0
    lam = additive_energy_points(lift_coords(A), A.p)
    return lam - trivial_energy(A.n) - isotropic_collinear_energy(A)


# --- lines ---------------------------------------------------------------


class MultiplicityTable:
    """n(l) for every line l meeting A in at least two points."""

    def __init__(self, A: PointSet2):
        self.pointset = A
        p = A.p
        n = A.n
        self._keys = np.empty(0, dtype=np.int64)
        self._counts = np.empty(0, dtype=np.int64)
        if n >= 2:
            i, j = np.triu_indices(n, 1)
            X, Y = A.coords[:, 0], A.coords[:, 1]
            s = ff_core.pair_slopes(X[j] - X[i], Y[j] - Y[i], p)
            off = np.where(s == p, X[i] % p, (Y[i] - s * X[i]) % p)
            keys, pairs = np.unique(s * p + off, return_counts=True)
            # C(m, 2) = pairs
            m = ((1 + np.sqrt(1 + 8 * pairs.astype(np.float64))) / 2).round().astype(np.int64)
            self._keys, self._counts = keys, m

    def __len__(self):
        return int(self._keys.size)

    def items(self) -> Iterator[tuple[AffineLine, int]]:
        p = self.pointset.p
        for k, c in zip(self._keys, self._counts):
            yield ff_core.line_from_offset(int(k) // p, int(k) % p, p), int(c)

    def as_dict(self) -> dict[AffineLine, int]:
        return dict(self.items())

    def counts(self) -> np.ndarray:
        return self._counts

    def __getitem__(self, line: AffineLine) -> int:
        p = self.pointset.p
        s = line.slope_index
        pt = line.points()[0]
        off = int(ff_core.line_offset(np.array([pt[0]]), np.array([pt[1]]), s, p)[0])
        pos = np.searchsorted(self._keys, s * p + off)
        if pos < self._keys.size and self._keys[pos] == s * p + off:
            return int(self._counts[pos])
        return sum(line.contains(q) for q in self.pointset)

    def pair_identity_holds(self) -> bool:
        n = self.pointset.n
        lhs = int((self._counts * (self._counts - 1) // 2).sum())
        return lhs == n * (n - 1) // 2


def dyadic_class(m: int) -> int:
    """Power of two ``k`` with ``k < m <= 2k``; so m ~ k in the factor-2 sense."""
    if m < 2:
        raise ValueError("dyadic classes start at m = 2")
    return 1 << ((int(m) - 1).bit_length() - 1)


def rich_lines(A: PointSet2, k: int) -> list[AffineLine]:
    if k < 2:
        raise ValueError("k must be at least 2")
    return sorted(line for line, c in MultiplicityTable(A).items() if c >= k)


@dataclass
class RichLineHistogram:
    classes: dict[int, int] = field(default_factory=dict)  # dyadic k -> #lines with n(l) ~ k
    lines: dict[int, list[AffineLine]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.classes.values())


def dyadic_histogram(A: PointSet2, table: MultiplicityTable | None = None) -> RichLineHistogram:
    table = table or MultiplicityTable(A)
    hist = RichLineHistogram()
    for line, c in table.items():
        k = dyadic_class(c)
        hist.classes[k] = hist.classes.get(k, 0) + 1
        hist.lines.setdefault(k, []).append(line)
    hist.classes = dict(sorted(hist.classes.items()))
    return hist


def incidences(A: PointSet2, L: Iterable[AffineLine]) -> int:
    lines = list(L)
    if not lines or A.n == 0:
        return 0
    a = np.array([l.a for l in lines], dtype=np.int64)
    b = np.array([l.b for l in lines], dtype=np.int64)
    c = np.array([l.c for l in lines], dtype=np.int64)
    X, Y = A.coords[:, 0], A.coords[:, 1]
    total = 0
    step = max(1, 2_000_000 // max(A.n, 1))
    for lo in range(0, len(lines), step):
        sl = slice(lo, lo + step)
        r = (a[sl, None] * X[None, :] + b[sl, None] * Y[None, :] - c[sl, None]) % A.p
        total += int((r == 0).sum())
    return total


def all_lines(p: int) -> list[AffineLine]:
    return [ff_core.line_from_offset(s, o, p) for s in range(p + 1) for o in range(p)]


def sumset_of_two_lines(line_a: AffineLine, A, line_b: AffineLine, B) -> PointSet2:
    """{a + b} for a in A on one line and b in B on a transversal line."""
    p = line_a.p
    if line_a.direction() == line_b.direction():
        raise ValueError("lines are parallel")
    for pt in A:
        if not line_a.contains(pt):
            raise ValueError(f"{tuple(pt)} is not on {line_a}")
    for pt in B:
        if not line_b.contains(pt):
            raise ValueError(f"{tuple(pt)} is not on {line_b}")
    sums = [((a[0] + b[0]) % p, (a[1] + b[1]) % p) for a in A for b in B]
    return PointSet2(p, sums)


# --- bound reports -------------------------------------------------------


@dataclass
class BoundReport:
    bound_id: str
    measured: float
    bound_value: float
    ratio: float
    hypothesis_ok: bool | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def make(cls, bound_id, measured, bound_value, hypothesis_ok=None, **params):
        if measured == 0:
            ratio = 0.0
        elif bound_value > 0:
            ratio = measured / bound_value
        else:
            ratio = math.inf
        return cls(bound_id, measured, float(bound_value), float(ratio), hypothesis_ok, params)

    def to_dict(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "measured": self.measured,
            "bound": self.bound_value,
            "ratio": self.ratio,
            "hypothesis_ok": self.hypothesis_ok,
            **({"params": self.params} if self.params else {}),
        }


def rich_line_bound_crude(n: float, k: float) -> float:
    return n ** (11 / 4) * k ** (-15 / 4) + n ** (5 / 4) / k


def rich_line_bound_strong(n: float, k: float, p: float) -> float:
    return n ** (11 / 4) * k ** (-15 / 4) + n / k + n ** (13 / 2) * p ** (-15 / 2)


def rich_line_reports(A: PointSet2, table: MultiplicityTable | None = None) -> list[BoundReport]:
    """One crude and one strong report per dyadic threshold k = 2, 4, 8, ..."""
    table = table or MultiplicityTable(A)
    counts = table.counts()
    out = []
    if counts.size == 0:
        return out
    k = 2
    n = A.n
    while k <= counts.max():
        measured = int((counts >= k).sum())
        out.append(BoundReport.make("rich_lines_crude", measured, rich_line_bound_crude(n, k), k=k))
        out.append(BoundReport.make("rich_lines_strong", measured, rich_line_bound_strong(n, k, A.p), k=k))
        k *= 2
    return out


def verify_incidence_bounds(
    A: PointSet2,
    L: Iterable[AffineLine],
    product: tuple[Sequence[int], Sequence[int]] | None = None,
) -> list[BoundReport]:
    """Measured incidences against every applicable incidence bound.

    ``product`` declares A = X x Y (axis-aligned) and enables the
    Cartesian-product bound.  Reports carry ratios only; nothing here
    passes or fails.
    """
    lines = list(L)
    p = A.p
    n, m = A.n, len(lines)
    inc = incidences(A, lines)
    reports = []
    sdz_ok = m > 0 and n ** 13 <= p ** 15 * m * m
    reports.append(BoundReport.make(
        "stevens_de_zeeuw", inc, n ** (11 / 15) * m ** (11 / 15) + n + m, sdz_ok))
    reports.append(BoundReport.make("vinh", inc, n * m / p + math.sqrt(n * m * p), True))
    if product is not None:
        X, Y = product
        if A.as_set() != {(x % p, y % p) for x in X for y in Y}:
            raise ValueError("declared product does not match the point set")
        ok = len(X) * m <= p * p
        reports.append(BoundReport.make(
            "cartesian_product", inc,
            len(X) ** 0.75 * len(Y) ** 0.5 * m ** 0.75 + m, ok))
    reports.extend(rich_line_reports(A))
    return reports
