"""Paraboloid lifts, additive energy and the Fourier extension operator.

Conventions, fixed so that extension and restriction are exact adjoints:

* ``P = {(x, x.x) : x in F^2}``, carrying the normalized counting measure
  (mass ``1/|P| = p^-2`` per point);
* extension ``(f dsigma)^(x) = p^-2 * sum_{xi in P} f(xi) e(x.xi)``;
* restriction ``g^(xi) = sum_{x in F^3} g(x) e(-x.xi)`` for ``xi`` in P;
* F^3 carries counting measure.

With these, ``||(1_S dsigma)^||_4^4 = p^-5 * Lambda(S)`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ff_core
from .constants import exponent
from .incidence import (
    PointSet2,
    additive_energy_points,
    count_rectangles_perp,
    isotropic_collinear_energy,
    lift_coords,
    trivial_energy,
)

DENSE_MAX_P = 31


class NotLevelSetError(ValueError):
    """A function was expected to have modulus exactly 1 on its support."""


# --- sets on the paraboloid ----------------------------------------------


@dataclass(frozen=True)
class ParaboloidSet:
    base: PointSet2

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def coords(self) -> np.ndarray:
        return lift_coords(self.base)

    def __len__(self):
        return self.n


def lift(A: PointSet2) -> ParaboloidSet:
    return ParaboloidSet(A)


def project(S: ParaboloidSet) -> PointSet2:
    return S.base


def on_paraboloid(coords: np.ndarray, p: int) -> np.ndarray:
    c = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
    return (c[:, 0] ** 2 + c[:, 1] ** 2 - c[:, 2]) % p == 0


def paraboloid_set_from_coords(coords, p) -> ParaboloidSet:
    c = np.asarray(coords, dtype=np.int64).reshape(-1, 3) % p
    if not on_paraboloid(c, p).all():
        raise ValueError("points off the paraboloid")
    return ParaboloidSet(PointSet2(p, c[:, :2]))


def additive_energy(S) -> int:
    """Lambda(S) by hashing pairwise sums; S is a ParaboloidSet or (coords, p)."""
    coords, p = _coords_p(S)
    return additive_energy_points(coords, p)


def additive_energy_oracle(S) -> int:
    """Lambda(S) by checking every quadruple."""
    coords, p = _coords_p(S)
    if coords.shape[0] == 0:
        return 0
    ab = (coords[:, None, :] + coords[None, :, :]) % p
    eq = (ab[:, :, None, None, :] == ab[None, None, :, :, :]).all(axis=-1)
    return int(eq.sum())


def _coords_p(S):
    if isinstance(S, ParaboloidSet):
        return S.coords, S.p
    coords, p = S
    return np.asarray(coords, dtype=np.int64).reshape(len(coords), -1) % int(p), int(p)


@dataclass
class EnergyReport:
    lam: int
    trivial: int
    rectangle_part: int
    collinear_part: int
    collinear_direct: int
    minus_one_square: bool

    @property
    def parts_sum(self) -> int:
        return self.trivial + self.rectangle_part + self.collinear_part

    @property
    def consistent(self) -> bool:
        return self.parts_sum == self.lam and self.collinear_part == self.collinear_direct

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "trivial": self.trivial,
                "rectangle_part": self.rectangle_part, "collinear_part": self.collinear_part,
                "collinear_direct": self.collinear_direct, "consistent": self.consistent}


def energy_rectangle_identity_check(S: ParaboloidSet) -> EnergyReport:
    """Split Lambda(S) into trivial, rectangle and collinear quadruples.

    The rectangle part is counted on the projection by perpendicular line
    pairs (no energy involved); the collinear part is the remainder and is
    compared with a direct count along isotropic lines.
    """
    lam = additive_energy(S)
    triv = trivial_energy(S.n) if S.n else 0
    rect = count_rectangles_perp(S.base)
    return EnergyReport(lam, triv, rect, lam - triv - rect,
                        isotropic_collinear_energy(S.base), ff_core.minus_one_is_square(S.p))


# --- functions -----------------------------------------------------------


@dataclass
class SurfaceFunction:
    """A complex function on P, stored over the base plane: ``values[x1, x2] = f(x, x.x)``."""

    p: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.p, self.p)

    @classmethod
    def indicator(cls, S, p: int | None = None) -> "SurfaceFunction":
        base = S.base if isinstance(S, ParaboloidSet) else S
        v = np.zeros((base.p, base.p), dtype=complex)
        if base.n:
            v[base.coords[:, 0], base.coords[:, 1]] = 1.0
        return cls(base.p, v)

    @classmethod
    def constant(cls, p: int, c: complex = 1.0) -> "SurfaceFunction":
        return cls(p, np.full((p, p), c, dtype=complex))

    def support(self) -> PointSet2:
        x, y = np.nonzero(self.values)
        return PointSet2(self.p, np.stack([x, y], axis=1))

    def support_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Lifted support points (m, 3) and their values (m,)."""
        x, y = np.nonzero(self.values)
        pts = np.stack([x, y, (x * x + y * y) % self.p], axis=1)
        return pts, self.values[x, y]

    def __mul__(self, c):
        return SurfaceFunction(self.p, self.values * c)

    __rmul__ = __mul__


@dataclass
class SpaceFunction:
    """A complex function on F^3, dense ``values[x1, x2, x3]``."""

    p: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.p, self.p, self.p)

    @classmethod
    def zeros(cls, p: int) -> "SpaceFunction":
        return cls(p, np.zeros((p, p, p), dtype=complex))

    @classmethod
    def from_sparse(cls, p: int, coords, values=None) -> "SpaceFunction":
        if p > DENSE_MAX_P:
            raise ValueError(f"dense F^3 arrays are capped at p <= {DENSE_MAX_P}")
        c = np.asarray(coords, dtype=np.int64).reshape(-1, 3) % p
        v = np.ones(len(c), dtype=complex) if values is None else np.asarray(values, dtype=complex)
        out = np.zeros((p, p, p), dtype=complex)
        np.add.at(out, (c[:, 0], c[:, 1], c[:, 2]), v)
        return cls(p, out)

    def to_sparse(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.argwhere(self.values != 0)
        return idx, self.values[tuple(idx.T)]

    def support_size(self) -> int:
        return int(np.count_nonzero(self.values))

    def slice_sets(self) -> dict[int, PointSet2]:
        """Non-empty slices z -> {x : (x, z) in supp}."""
        out = {}
        for z in range(self.p):
            x, y = np.nonzero(self.values[:, :, z])
            if x.size:
                out[z] = PointSet2(self.p, np.stack([x, y], axis=1))
        return out


def _check_dense(p: int):
    if p > DENSE_MAX_P:
        raise ValueError(f"dense F^3 transforms are capped at p <= {DENSE_MAX_P}")


def extension(f: SurfaceFunction, method: str = "transform") -> SpaceFunction:
    """(f dsigma)^ on all of F^3.

    ``method="direct"`` sums the characters over the support (O(p^3 |supp|));
    ``method="transform"`` spreads f over F^3 and applies the 1-d character
    transform along each axis (O(p^4)).
    """
    p = f.p
    _check_dense(p)
    W = ff_core.character_matrix(p)
    if method == "direct":
        pts, vals = f.support_coords()
        if len(vals) == 0:
            return SpaceFunction.zeros(p)
        out = np.einsum("m,am,bm,cm->abc", vals, W[:, pts[:, 0]], W[:, pts[:, 1]], W[:, pts[:, 2]],
                        optimize=True)
    elif method == "transform":
        F = np.zeros((p, p, p), dtype=complex)
        x = np.arange(p)
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        F[X1, X2, (X1 * X1 + X2 * X2) % p] = f.values
        out = np.tensordot(W, F, axes=([1], [0]))
        out = np.tensordot(W, out, axes=([1], [1])).transpose(1, 0, 2)
        out = np.tensordot(out, W, axes=([2], [1]))
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpaceFunction(p, out / (p * p))


def extension_at(f: SurfaceFunction, xs) -> np.ndarray:
    """(f dsigma)^ at the given points of F^3; no dense cap."""
    p = f.p
    pts, vals = f.support_coords()
    xs = np.asarray(xs, dtype=np.int64).reshape(-1, 3)
    phase = (xs @ pts.T) % p
    return (ff_core.character_table(p)[phase] @ vals) / (p * p)


def restriction(g: SpaceFunction) -> SurfaceFunction:
    """g^ restricted to P."""
    p = g.p
    coords, vals = g.to_sparse()
    x = np.arange(p)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    xi = np.stack([X1.ravel(), X2.ravel(), (X1 * X1 + X2 * X2).ravel() % p], axis=1)
    if len(vals) == 0:
        return SurfaceFunction(p, np.zeros((p, p), dtype=complex))
    phase = (-(xi @ coords.T)) % p
    ghat = ff_core.character_table(p)[phase] @ vals
    return SurfaceFunction(p, ghat.reshape(p, p))


def space_inner(u: SpaceFunction, g: SpaceFunction) -> complex:
    return complex(np.vdot(g.values, u.values))


def sigma_inner(f: SurfaceFunction, h: SurfaceFunction) -> complex:
    return complex(np.vdot(h.values, f.values)) / (f.p * f.p)


@dataclass
class NormReport:
    r: float
    value: float
    measure: str  # "counting" or "normalized-surface"


def lr_norm(u: SpaceFunction, r: float) -> NormReport:
    if r < 1:
        raise ValueError("r must be at least 1")
    a = np.abs(u.values)
    if math.isinf(r):
        return NormReport(r, float(a.max()), "counting")
    return NormReport(r, float((a ** r).sum() ** (1 / r)), "counting")


def l2_sigma_norm(f: SurfaceFunction) -> NormReport:
    v = float(np.sqrt((np.abs(f.values) ** 2).sum() / (f.p * f.p)))
    return NormReport(2, v, "normalized-surface")


def l4_energy_constant(p: int) -> float:
    """c(p) with ||(1_S dsigma)^||_4^4 = c(p) Lambda(S); equals p^3/|P|^4 = p^-5."""
    return float(p) ** -5


@dataclass
class L4EnergyReport:
    p: int
    lam: int
    l4_fourth: float
    predicted: float

    @property
    def rel_error(self) -> float:
        return abs(self.l4_fourth - self.predicted) / max(abs(self.predicted), 1e-300)


def l4_energy_identity_check(S: ParaboloidSet, method: str = "transform") -> L4EnergyReport:
    ext = extension(SurfaceFunction.indicator(S), method=method)
    lam = additive_energy(S)
    return L4EnergyReport(S.p, lam, lr_norm(ext, 4).value ** 4, l4_energy_constant(S.p) * lam)


def slice_l4_norm(A: PointSet2) -> float:
    """||(G_z dsigma)^||_L4 for the slice whose projection is A."""
    if A.n == 0:
        return 0.0
    return (l4_energy_constant(A.p) * additive_energy(lift(A))) ** 0.25


# --- level-set machinery -------------------------------------------------


def check_level_set(g: SpaceFunction, tol: float = 1e-9) -> None:
    a = np.abs(g.values)
    bad = (a > tol) & (np.abs(a - 1) > tol)
    if bad.any():
        raise NotLevelSetError("level-set functions must have modulus 1 on their support")


@dataclass
class MachineReport:
    support: int
    lhs: float
    rhs: float
    slice_norm_sum: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else 0.0


def mt_machine_check(g: SpaceFunction) -> MachineReport:
    """||g^||_{L2(P, dsigma)} against the slice-energy bound of the level-set machine."""
    check_level_set(g)
    p = g.p
    lhs = l2_sigma_norm(restriction(g)).value
    G = g.support_size()
    slice_sum = sum(slice_l4_norm(A) for A in g.slice_sets().values())
    rhs = G ** 0.5 + G ** float(exponent("mt_support")) * p ** 0.5 * slice_sum ** 0.5
    return MachineReport(G, lhs, rhs, slice_sum)


def stein_tomas_bound(G: int, p: int) -> float:
    return G ** 0.5 + G * p ** -0.5


def energy_route_bound(G: int, p: int) -> float:
    return G ** 0.5 + p ** float(exponent("energy_route_p")) * G ** float(exponent("energy_route_g"))


def holder_bound(G: int, p: int) -> float:
    return G ** 0.5 + G ** float(exponent("holder_g")) * p ** float(exponent("holder_p"))


def slice_degenerate_bound(G: int, p: int) -> float:
    return G ** 0.5 + G ** (7 / 8) * p ** (-5 / 14)


@dataclass
class CertificationReport:
    p: int
    support: int
    regime: str
    measured: float
    target: float
    governing_bound: float
    slice_sizes: dict[int, int] = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        """measured / |G|^(135/188)."""
        return self.measured / self.target if self.target else 0.0

    @property
    def bound_ratio(self) -> float:
        return self.measured / self.governing_bound if self.governing_bound else 0.0

    def to_dict(self) -> dict:
        return {"p": self.p, "n": self.support, "regime": self.regime,
                "measured": self.measured, "target": self.target, "ratio": self.ratio,
                "bound": self.governing_bound, "bound_ratio": self.bound_ratio}


def classify_regime(G: int, slice_sizes: list[int], p: int) -> tuple[str, float]:
    """(regime id, governing bound) for a support of size G with the given slices."""
    small = p ** float(exponent("stein_tomas_cut"))
    big = p ** float(exponent("holder_cut"))
    cut = p ** float(exponent("size_limit"))
    if G <= small:
        return "stein_tomas", stein_tomas_bound(G, p)
    if G >= big:
        return "holder", holder_bound(G, p)
    if all(s <= cut for s in slice_sizes):
        return "energy", energy_route_bound(G, p)
    if all(s >= cut for s in slice_sizes):
        return "slice_degenerate", slice_degenerate_bound(G, p)
    lo = [s for s in slice_sizes if s <= cut]
    hi = [s for s in slice_sizes if s > cut]
    # split into the small-slice and large-slice parts; triangle inequality
    b = classify_regime(sum(lo), lo, p)[1] + classify_regime(sum(hi), hi, p)[1]
    return "mixed", b


def certify_level_set(g: SpaceFunction) -> CertificationReport:
    check_level_set(g)
    p = g.p
    G = g.support_size()
    sizes = {z: A.n for z, A in g.slice_sets().items()}
    regime, bound = classify_regime(G, list(sizes.values()), p)
    measured = l2_sigma_norm(restriction(g)).value
    target = G ** float(exponent("level_set_target"))
    return CertificationReport(p, G, regime, measured, target, bound, sizes)


def restriction_ratio(f: SurfaceFunction, r: float) -> float:
    """||(f dsigma)^||_{L^r(F^3)} / ||f||_{L^2(P, dsigma)}."""
    den = l2_sigma_norm(f).value
    if den == 0:
        raise ValueError("zero function")
    return lr_norm(extension(f), r).value / den
