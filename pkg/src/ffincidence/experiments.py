"""Set generators, exponent fits and bound sweeps.

Randomness comes from numpy's counter-based Philox bit generator keyed by
the generator seed, so a (kind, p, params, seed) tuple always yields the same
set.  A "random" set of size n is ``choice(p*p, n, replace=False)`` on
cell indices ``x*p + y``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import ff_core
from .constants import CONSTANTS_VERSION, EXPONENTS
from .decomposition import Grid, grid_union, grid_union_rich_line_check
from .incidence import (
    PointSet2,
    count_corners_fast,
    count_rectangles_via_energy,
    rich_line_reports,
    sumset_of_two_lines,
    verify_incidence_bounds,
)
from .paraboloid import (
    ParaboloidSet,
    SpaceFunction,
    certify_level_set,
    l2_sigma_norm,
    lift,
    mt_machine_check,
    restriction,
    stein_tomas_bound,
)

log = logging.getLogger(__name__)

KINDS = ("random", "full-plane", "cartesian-product", "few-lines", "grid-union",
         "paraboloid-subset", "isotropic-line", "two-line-sumset")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def default_workers() -> int:
    return max(1, int(os.environ.get("FFINCIDENCE_WORKERS", "1")))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    p: int
    params: tuple = ()  # sorted (name, value) pairs
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")

    def get(self, name, default=None):
        return dict(self.params).get(name, default)

    @classmethod
    def parse(cls, text: str, p: int, seed: int | None = None) -> "GeneratorSpec":
        """``"random:n=12,seed=1"`` style specs."""
        kind, _, rest = text.partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            params[key.strip()] = int(val) if val.strip().lstrip("-").isdigit() else val.strip()
        s = params.pop("seed", 0)
        if seed is not None:
            s = seed
        return cls(kind.strip(), int(p), tuple(sorted(params.items())), int(s))

    def describe(self) -> str:
        body = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}:{body}{',' if body else ''}seed={self.seed}"

    def with_(self, **kw) -> "GeneratorSpec":
        d = dict(self.params)
        p = kw.pop("p", self.p)
        seed = kw.pop("seed", self.seed)
        d.update(kw)
        return GeneratorSpec(self.kind, p, tuple(sorted(d.items())), seed)


def _random_cells(rng, p, n) -> np.ndarray:
    n = min(int(n), p * p)
    k = rng.choice(p * p, size=n, replace=False)
    return np.stack([k // p, k % p], axis=1)


def _random_nonisotropic_pair(rng, p) -> tuple[int, int]:
    perp, iso = ff_core.slope_tables(p)
    while True:
        s = int(rng.integers(0, p + 1))
        if not iso[s]:
            return s, int(perp[s])


def generate_product(spec: GeneratorSpec) -> tuple[PointSet2, list[int], list[int]]:
    p = spec.p
    a, b = int(spec.get("a", 3)), int(spec.get("b", spec.get("a", 3)))
    if spec.get("random", 0):
        rng = rng_for(spec.seed)
        X = sorted(int(v) for v in rng.choice(p, a, replace=False))
        Y = sorted(int(v) for v in rng.choice(p, b, replace=False))
    else:
        X, Y = list(range(a)), list(range(b))
    return PointSet2(p, [(x, y) for x in X for y in Y]), X, Y


def generate_grids(spec: GeneratorSpec) -> list[Grid]:
    p = spec.p
    rng = rng_for(spec.seed)
    m, k = int(spec.get("m", 2)), int(spec.get("k", 3))
    grids = []
    for _ in range(m):
        s, t = _random_nonisotropic_pair(rng, p)
        rows = tuple(sorted(int(v) for v in rng.choice(p, k, replace=False)))
        cols = tuple(sorted(int(v) for v in rng.choice(p, k, replace=False)))
        grids.append(Grid(p, s, t, rows, cols))
    return grids


def generate(spec: GeneratorSpec) -> PointSet2 | ParaboloidSet:
    p = spec.p
    rng = rng_for(spec.seed)
    kind = spec.kind
    if kind == "random":
        return PointSet2(p, _random_cells(rng, p, spec.get("n", 10)))
    if kind == "full-plane":
        return PointSet2(p, [(x, y) for x in range(p) for y in range(p)])
    if kind == "cartesian-product":
        return generate_product(spec)[0]
    if kind == "few-lines":
        pts = []
        for _ in range(int(spec.get("lines", 3))):
            s = int(rng.integers(0, p + 1))
            off = int(rng.integers(0, p))
            line = ff_core.line_from_offset(s, off, p)
            on = line.points()
            pick = rng.choice(p, min(int(spec.get("per", 5)), p), replace=False)
            pts.extend(on[int(i)] for i in pick)
        return PointSet2.deduplicated(p, pts)
    if kind == "grid-union":
        return grid_union(generate_grids(spec))
    if kind == "paraboloid-subset":
        return lift(PointSet2(p, _random_cells(rng, p, spec.get("n", 10))))
    if kind == "isotropic-line":
        t = ff_core.sqrt_minus_one(p)
        if t is None:
            raise ValueError(f"no isotropic lines over F_{p}: -1 is not a square")
        n = min(int(spec.get("n", p)), p)
        c = int(spec.get("offset", 0))
        # line y = t x + c with direction (1, t)
        return PointSet2(p, [(x, (t * x + c) % p) for x in range(n)])
    if kind == "two-line-sumset":
        a, b = int(spec.get("a", 3)), int(spec.get("b", 3))
        while True:
            s1, s2 = (int(v) for v in rng.choice(p + 1, 2, replace=False))
            l1 = ff_core.line_from_offset(s1, int(rng.integers(0, p)), p)
            l2 = ff_core.line_from_offset(s2, int(rng.integers(0, p)), p)
            if l1.direction() != l2.direction():
                break
        P1, P2 = l1.points(), l2.points()
        A = [P1[int(i)] for i in rng.choice(p, min(a, p), replace=False)]
        B = [P2[int(i)] for i in rng.choice(p, min(b, p), replace=False)]
        return sumset_of_two_lines(l1, A, l2, B)
    raise AssertionError(kind)


# --- exponent fits -------------------------------------------------------


@dataclass
class FitResult:
    exponent: float
    stderr: float
    intercept: float
    sizes: list[int]
    counts: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def exponent_fit(sizes, counts) -> FitResult:
    """Least-squares slope of log(count) against log(size).

    Zero counts are dropped with a warning; at least three strictly
    increasing sizes must remain.
    """
    pairs = [(int(s), int(c)) for s, c in zip(sizes, counts)]
    kept = [(s, c) for s, c in pairs if c > 0]
    if len(kept) < len(pairs):
        log.warning("dropping %d zero counts from the fit", len(pairs) - len(kept))
    if len(kept) < 3:
        raise ValueError("exponent fit needs at least three nonzero counts")
    xs = [s for s, _ in kept]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("sizes must be strictly increasing")
    res = stats.linregress(np.log(xs), np.log([c for _, c in kept]))
    return FitResult(float(res.slope), float(res.stderr), float(res.intercept),
                     xs, [c for _, c in kept])


COUNTERS = {
    "corners": count_corners_fast,
    "rectangles": count_rectangles_via_energy,
}


def family_fit(specs: list[GeneratorSpec], counter: str = "corners") -> FitResult:
    count = COUNTERS[counter]
    sets = [generate(s) for s in specs]
    sets = [S.base if isinstance(S, ParaboloidSet) else S for S in sets]
    return exponent_fit([A.n for A in sets], [count(A) for A in sets])


def full_plane_family(primes) -> list[GeneratorSpec]:
    return [GeneratorSpec("full-plane", p) for p in primes]


# --- bound sweeps --------------------------------------------------------


def random_level_set(p: int, size: int, seed: int) -> SpaceFunction:
    """Unit-modulus random phases on a uniformly random support of F^3."""
    rng = rng_for(seed)
    size = min(size, p ** 3)
    cells = rng.choice(p ** 3, size=size, replace=False)
    coords = np.stack([cells // (p * p), (cells // p) % p, cells % p], axis=1)
    phases = np.exp(2j * np.pi * rng.random(size))
    return SpaceFunction.from_sparse(p, coords, phases)


def _instance_stein_tomas(g: SpaceFunction) -> dict:
    G = g.support_size()
    measured = l2_sigma_norm(restriction(g)).value
    bound = stein_tomas_bound(G, g.p)
    return {"p": g.p, "n": G, "measured": measured, "bound": bound, "ratio": measured / bound}


def _instance_certify(g: SpaceFunction) -> dict:
    return certify_level_set(g).to_dict()


def _instance_mt(g: SpaceFunction) -> dict:
    r = mt_machine_check(g)
    return {"p": g.p, "n": r.support, "measured": r.lhs, "bound": r.rhs, "ratio": r.ratio}


def _worst(reports, bound_id) -> dict:
    reps = [r for r in reports if r.bound_id == bound_id]
    if not reps:
        return {"measured": 0, "bound": 0.0, "ratio": 0.0}
    r = max(reps, key=lambda r: r.ratio)
    return {"measured": r.measured, "bound": r.bound_value, "ratio": r.ratio, **r.params}


def _instance_rich(A: PointSet2, bound_id: str) -> dict:
    return {"p": A.p, "n": A.n, **_worst(rich_line_reports(A), bound_id)}


def _instance_grid_union(item) -> dict:
    grids, j = item
    r = grid_union_rich_line_check(grids, j)
    return {"p": grids[0].p if grids else None, "n": r.params.get("m", 0) * r.params.get("k", 0) ** 2,
            "measured": r.measured, "bound": r.bound_value, "ratio": r.ratio, **r.params}


def _instance_incidence(item, bound_id) -> dict:
    A, L = item
    r = next(r for r in verify_incidence_bounds(A, L) if r.bound_id == bound_id)
    return {"p": A.p, "n": A.n, "measured": r.measured, "bound": r.bound_value,
            "ratio": r.ratio, "hypothesis_ok": r.hypothesis_ok}


def _evaluate(args):
    bound_id, item = args
    if bound_id == "stein_tomas":
        return _instance_stein_tomas(item)
    if bound_id == "certify":
        return _instance_certify(item)
    if bound_id == "mt_machine":
        return _instance_mt(item)
    if bound_id in ("rich_lines_crude", "rich_lines_strong"):
        return _instance_rich(item, bound_id)
    if bound_id == "grid_union_rich_lines":
        return _instance_grid_union(item)
    if bound_id in ("vinh", "stevens_de_zeeuw"):
        return _instance_incidence(item, bound_id)
    raise ValueError(f"unknown bound {bound_id!r}")


BOUND_IDS = ("stein_tomas", "certify", "mt_machine", "rich_lines_crude", "rich_lines_strong",
             "grid_union_rich_lines", "vinh", "stevens_de_zeeuw")


@dataclass
class SweepReport:
    bound_id: str
    instances: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list[float]:
        return [float(i["ratio"]) for i in self.instances]

    @property
    def running_max(self) -> list[float]:
        return list(np.maximum.accumulate(self.ratios)) if self.instances else []

    @property
    def max_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def suite_constant(self) -> float:
        """Least-squares C in log(measured) = log(C) + log(bound): the geometric mean ratio."""
        pos = [r for r in self.ratios if r > 0]
        return float(math.exp(np.mean(np.log(pos)))) if pos else 0.0

    def aggregate(self) -> dict:
        c = self.suite_constant
        return {"max_ratio": self.max_ratio, "suite_constant": c,
                "max_over_constant": self.max_ratio / c if c else 0.0,
                "count": len(self.instances)}

    def to_json(self) -> dict:
        return {"meta": {"constants_version": CONSTANTS_VERSION, "bound_id": self.bound_id, **self.meta},
                "instances": self.instances, "aggregate": self.aggregate()}


def bound_sweep(family: list, bound_id: str, workers: int | None = None, meta: dict | None = None) -> SweepReport:
    """Evaluate ``bound_id`` on every family member, in family order."""
    if bound_id not in BOUND_IDS:
        raise ValueError(f"unknown bound {bound_id!r}; expected one of {BOUND_IDS}")
    workers = default_workers() if workers is None else workers
    jobs = [(bound_id, item) for item in family]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_evaluate, jobs))
    else:
        rows = [_evaluate(j) for j in jobs]
    for idx, row in enumerate(rows):
        row["index"] = idx
    return SweepReport(bound_id, rows, dict(meta or {}))


def level_set_family(primes, count: int, seed: int = 0) -> list[SpaceFunction]:
    """``count`` random level sets per prime, support sizes spread over [1, p^2]."""
    out = []
    for p in primes:
        rng = rng_for(seed * 1_000_003 + p)
        for i in range(count):
            size = int(rng.integers(1, p * p + 1))
            out.append(random_level_set(p, size, int(rng.integers(0, 2**31))))
    return out


def grid_union_family(primes, count: int, seed: int = 0) -> list[PointSet2]:
    out = []
    for p in primes:
        for i in range(count):
            spec = GeneratorSpec("grid-union", p, (("k", 3 + i % 3), ("m", 1 + i % 4)), seed * 7919 + i)
            out.append(generate(spec))
    return out


def grid_union_lemma_family(primes, count: int, seed: int = 0) -> list[tuple[list[Grid], int]]:
    out = []
    for p in primes:
        for i in range(count):
            k = 3 + i % 3
            spec = GeneratorSpec("grid-union", p, (("k", k), ("m", 1 + i % 4)), seed * 7919 + i)
            out.append((generate_grids(spec), 2 + i % k))
    return out


def report_envelope(p, spec: str | None, seed, instances: list[dict], aggregate: dict) -> dict:
    return {"meta": {"p": p, "spec": spec, "seed": seed, "constants_version": CONSTANTS_VERSION},
            "instances": instances, "aggregate": aggregate}


def constants_table() -> dict:
    return {name: str(e.value) for name, e in EXPONENTS.items()}
