"""Prime-field arithmetic, additive characters and affine lines in F_p^2.

Directions in the plane are encoded as a *slope index*: ``s`` in ``[0, p)``
stands for the direction ``(1, s)`` and ``s == p`` for the vertical
direction ``(0, 1)``.  Lines in a fixed direction are told apart by an
integer offset (see :func:`line_offset`), which makes every per-direction
table a plain ``bincount``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Keeps packed pair-sum keys (s2 * p + s3) * 2 + w inside int64.
MAX_MODULUS = 2**31 - 1


class IsotropicLineError(ValueError):
    """Raised when a perpendicular is requested for a self-orthogonal line."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    for q in range(3, math.isqrt(n) + 1, 2):
        if n % q == 0:
            return False
    return True


@dataclass(frozen=True)
class PrimeModulus:
    """An odd prime ``p`` together with the cached answer to "is -1 a square"."""

    p: int
    minus_one_square: bool = field(init=False)

    def __post_init__(self):
        p = int(self.p)
        if p < 3 or not is_prime(p):
            raise ValueError(f"modulus must be an odd prime, got {self.p}")
        if p > MAX_MODULUS:
            raise ValueError(f"modulus {p} too large for word-size dot products")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "minus_one_square", p % 4 == 1)

    def __int__(self):
        return self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse mod p")
        return pow(a, -1, self.p)


def as_modulus(p) -> PrimeModulus:
    return p if isinstance(p, PrimeModulus) else PrimeModulus(int(p))


def minus_one_is_square(p) -> bool:
    """True iff some t satisfies t^2 = -1 (mod p), i.e. p = 1 (mod 4)."""
    return as_modulus(p).minus_one_square


def sqrt_minus_one(p) -> int | None:
    """Smallest t with t^2 = -1 mod p, or None."""
    m = as_modulus(p)
    if not m.minus_one_square:
        return None
    # Euler: a non-residue g gives g^((p-1)/4) as a square root of -1.
    for g in range(2, m.p):
        if pow(g, (m.p - 1) // 2, m.p) == m.p - 1:
            t = pow(g, (m.p - 1) // 4, m.p)
            return min(t, m.p - t)
    raise AssertionError("unreachable for p = 1 mod 4")


def additive_character(p, x) -> complex:
    """e(x) = exp(2 pi i x / p)."""
    m = as_modulus(p)
    return cmath.exp(2j * math.pi * (int(x) % m.p) / m.p)


@lru_cache(maxsize=64)
def character_table(p: int) -> np.ndarray:
    """Array ``E`` with ``E[t] = e(t)`` for ``t`` in ``[0, p)``."""
    t = np.arange(p)
    tab = np.exp(2j * np.pi * t / p)
    tab.setflags(write=False)
    return tab


@lru_cache(maxsize=64)
def character_matrix(p: int) -> np.ndarray:
    """``W[x, xi] = e(x * xi)``; the 1-d character transform."""
    t = np.arange(p)
    W = character_table(p)[np.outer(t, t) % p]
    W.setflags(write=False)
    return W


def dot(u, v, p) -> int:
    p = int(p)
    return sum(int(a) * int(b) for a, b in zip(u, v)) % p


def is_isotropic(d, p) -> bool:
    """True iff the nonzero direction ``d`` satisfies d.d = 0 (mod p)."""
    p = int(p)
    d = tuple(int(c) % p for c in d)
    if not any(d):
        raise ValueError("zero direction")
    return dot(d, d, p) == 0


def canonical_direction(d, p) -> tuple[int, int]:
    """Scale a nonzero 2-vector so its first nonzero coordinate is 1."""
    m = as_modulus(p)
    a, b = int(d[0]) % m.p, int(d[1]) % m.p
    if a:
        return 1, b * m.inv(a) % m.p
    if b:
        return 0, 1
    raise ValueError("zero direction")


@dataclass(frozen=True, order=True)
class AffineLine:
    """The line {(x, y) : a*x + b*y = c} with (a, b) scaled to a leading one.

    Equal lines compare (and hash) equal; ordering is the canonical order
    used for tie-breaking elsewhere.
    """

    a: int
    b: int
    c: int
    p: int

    @classmethod
    def from_coefficients(cls, a, b, c, p) -> "AffineLine":
        m = as_modulus(p)
        a, b, c = int(a) % m.p, int(b) % m.p, int(c) % m.p
        if a:
            s = m.inv(a)
        elif b:
            s = m.inv(b)
        else:
            raise ValueError("(a, b) must not both vanish")
        return cls(a * s % m.p, b * s % m.p, c * s % m.p, m.p)

    def direction(self) -> tuple[int, int]:
        return canonical_direction((self.b, -self.a), self.p)

    def contains(self, pt) -> bool:
        return (self.a * int(pt[0]) + self.b * int(pt[1]) - self.c) % self.p == 0

    def is_isotropic(self) -> bool:
        return (self.a * self.a + self.b * self.b) % self.p == 0

    def points(self) -> list[tuple[int, int]]:
        p = self.p
        if self.b:
            # y = (c - a x) / b, and b == 1 whenever a == 0
            binv = pow(self.b, -1, p)
            return [(x, (self.c - self.a * x) * binv % p) for x in range(p)]
        return [(self.c, y) for y in range(p)]

    @property
    def slope_index(self) -> int:
        return direction_slope(self.direction(), self.p)


def line_through(p1, p2, p) -> AffineLine:
    p = int(p)
    x1, y1 = int(p1[0]) % p, int(p1[1]) % p
    x2, y2 = int(p2[0]) % p, int(p2[1]) % p
    if (x1, y1) == (x2, y2):
        raise ValueError("line_through needs two distinct points")
    dx, dy = x2 - x1, y2 - y1
    # normal (dy, -dx) is orthogonal to the direction
    return AffineLine.from_coefficients(dy, -dx, dy * x1 - dx * y1, p)


def perpendicular_at(line: AffineLine, x) -> AffineLine:
    """The line through ``x`` whose direction is orthogonal to ``line``'s."""
    if line.is_isotropic():
        raise IsotropicLineError(f"{line} is isotropic; it is its own perpendicular")
    a, b, p = line.a, line.b, line.p
    # new direction is the old normal (a, b); its normal is (b, -a)
    return AffineLine.from_coefficients(b, -a, b * int(x[0]) - a * int(x[1]), p)


# --- slope-index helpers -------------------------------------------------


def direction_slope(d, p) -> int:
    a, b = canonical_direction(d, p)
    return b if a else int(p)


def slope_direction(s: int, p: int) -> tuple[int, int]:
    return (0, 1) if s == p else (1, s)


@lru_cache(maxsize=64)
def slope_tables(p: int) -> tuple[np.ndarray, np.ndarray]:
    """``(perp, iso)`` over slope indices ``0..p``.

    ``perp[s]`` is the slope index orthogonal to ``s``; ``iso[s]`` flags
    isotropic directions (for those ``perp[s] == s``).
    """
    s = np.arange(p + 1, dtype=np.int64)
    perp = np.empty(p + 1, dtype=np.int64)
    perp[0] = p
    perp[p] = 0
    inv = np.array([0] + [pow(int(v), -1, p) for v in range(1, p)], dtype=np.int64)
    perp[1:p] = (-inv[1:p]) % p
    iso = np.zeros(p + 1, dtype=bool)
    iso[:p] = (1 + s[:p] * s[:p]) % p == 0
    perp.setflags(write=False)
    iso.setflags(write=False)
    return perp, iso


@lru_cache(maxsize=64)
def inverse_table(p: int) -> np.ndarray:
    inv = np.zeros(p, dtype=np.int64)
    for v in range(1, p):
        inv[v] = pow(v, -1, p)
    inv.setflags(write=False)
    return inv


def pair_slopes(dx: np.ndarray, dy: np.ndarray, p: int) -> np.ndarray:
    """Slope indices of the (nonzero) difference vectors ``(dx, dy)``."""
    dx = np.asarray(dx, dtype=np.int64) % p
    dy = np.asarray(dy, dtype=np.int64) % p
    inv = inverse_table(p)
    return np.where(dx == 0, p, dy * inv[dx] % p)


def line_offset(x: np.ndarray, y: np.ndarray, s: int, p: int) -> np.ndarray:
    """Offset of the line of slope index ``s`` through each point.

    For ``s < p`` this is ``y - s*x``; for the vertical direction it is ``x``.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if s == p:
        return x % p
    return (y - s * x) % p


def line_from_offset(s: int, off: int, p: int) -> AffineLine:
    if s == p:
        return AffineLine.from_coefficients(1, 0, off, p)
    # y - s x = off  <=>  -s x + y = off
    return AffineLine.from_coefficients(-s, 1, off, p)
