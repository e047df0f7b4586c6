"""Shared helpers: pure-Python reference counts written straight from the definitions."""

import itertools

import numpy as np
import pytest

from ffincidence.incidence import PointSet2


def _dot(u, v, p):
    return (u[0] * v[0] + u[1] * v[1]) % p


def _sub(u, v, p):
    return ((u[0] - v[0]) % p, (u[1] - v[1]) % p)


def is_corner(x0, x1, x2, p):
    d1, d2 = _sub(x1, x0, p), _sub(x2, x1, p)
    cross = (d1[0] * d2[1] - d1[1] * d2[0]) % p
    return _dot(d1, d2, p) == 0 and cross != 0


def ref_corners(pts, p):
    return sum(is_corner(a, b, c, p) for a, b, c in itertools.permutations(pts, 3))


def ref_rectangles(pts, p):
    n = 0
    for r in itertools.permutations(pts, 4):
        if all(is_corner(r[i], r[(i + 1) % 4], r[(i + 2) % 4], p) for i in range(4)):
            n += 1
    return n


def ref_energy(vecs, p):
    """#{(a, b, c, d) : a + b = c + d} over F_p^k, by a plain sum dictionary."""
    mult = {}
    for a in vecs:
        for b in vecs:
            key = tuple((x + y) % p for x, y in zip(a, b))
            mult[key] = mult.get(key, 0) + 1
    return sum(v * v for v in mult.values())


def random_set(p, n, seed):
    rng = np.random.default_rng(seed)
    cells = rng.choice(p * p, size=n, replace=False)
    return PointSet2(p, np.stack([cells // p, cells % p], axis=1))


UNIT_SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.fixture
def unit_square():
    return PointSet2(7, UNIT_SQUARE)


@pytest.fixture
def full_f3():
    return PointSet2(3, [(x, y) for x in range(3) for y in range(3)])
