import cmath

import numpy as np
import pytest
from conftest import UNIT_SQUARE, random_set, ref_energy
from hypothesis import given, settings
from hypothesis import strategies as st

from ffincidence import incidence as inc
from ffincidence import paraboloid as par
from ffincidence.incidence import PointSet2


def iso_line(p=5):
    return PointSet2(p, [(x, 2 * x % p) for x in range(p)])


def random_surface(p, rng):
    v = rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))
    v[rng.random((p, p)) < 0.5] = 0
    return par.SurfaceFunction(p, v)


def random_space(p, rng):
    v = rng.normal(size=(p, p, p)) + 1j * rng.normal(size=(p, p, p))
    v[rng.random((p, p, p)) < 0.7] = 0
    return par.SpaceFunction(p, v)


def test_lift_examples():
    assert par.lift(PointSet2(7, [(0, 0)])).coords.tolist() == [[0, 0, 0]]
    assert par.lift(PointSet2(7, [(1, 2)])).coords.tolist() == [[1, 2, 5]]
    A = random_set(11, 30, 0)
    S = par.lift(A)
    assert par.project(S) == A
    assert par.on_paraboloid(S.coords, 11).all()
    assert not par.on_paraboloid(np.array([[1, 2, 0]]), 7).any()
    with pytest.raises(ValueError):
        par.paraboloid_set_from_coords([[1, 2, 0]], 7)


def test_energy_examples():
    assert par.additive_energy(par.lift(PointSet2(7, [(3, 4)]))) == 1
    assert par.additive_energy(par.lift(PointSet2(7, [(3, 4), (1, 1)]))) == 6
    # arbitrary subsets of F^3 are accepted as (coords, p)
    pts = [(0, 0, 0), (1, 0, 0), (2, 0, 0)]
    assert par.additive_energy((pts, 7)) == ref_energy(pts, 7)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 7, 11, 13]), st.integers(0, 20), st.integers(0, 2**32 - 1))
def test_energy_fast_matches_oracle(p, n, seed):
    S = par.lift(random_set(p, n, seed))
    lam = par.additive_energy(S)
    assert lam == par.additive_energy_oracle(S)
    assert lam == ref_energy([tuple(map(int, q)) for q in S.coords], p)
    assert 2 * n * n - n <= lam <= max(n ** 3, 1) or n == 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 7, 11, 13]), st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_energy_report_parts_sum(p, n, seed):
    A = random_set(p, n, seed)
    rep = par.energy_rectangle_identity_check(par.lift(A))
    assert rep.parts_sum == rep.lam
    assert rep.consistent
    assert rep.rectangle_part == inc.count_rectangles_oracle(A)
    if p % 4 == 3:
        assert rep.collinear_part == 0


def test_energy_report_unit_square():
    rep = par.energy_rectangle_identity_check(par.lift(PointSet2(7, UNIT_SQUARE)))
    assert rep.rectangle_part == 8
    assert rep.lam == 2 * 16 - 4 + 8


def test_energy_equals_trivial_without_rectangles():
    A = PointSet2(7, [(0, 0), (1, 0), (3, 2)])
    assert inc.count_rectangles_oracle(A) == 0
    assert par.additive_energy_oracle(par.lift(A)) == 2 * 9 - 3


def test_isotropic_blowup():
    S = par.lift(iso_line(5))
    rep = par.energy_rectangle_identity_check(S)
    assert par.additive_energy_oracle(S) == rep.lam == 125
    assert rep.collinear_part == 80 >= 5 ** 3 / 8
    assert rep.rectangle_part == 0 and rep.minus_one_square


def _extension_reference(f, x):
    p = f.p
    total = 0
    for a in range(p):
        for b in range(p):
            if f.values[a, b] != 0:
                xi = (a, b, (a * a + b * b) % p)
                phase = sum(u * v for u, v in zip(x, xi)) % p
                total += f.values[a, b] * cmath.exp(2j * cmath.pi * phase / p)
    return total / p ** 2


def test_extension_examples():
    p = 5
    one = par.SurfaceFunction.constant(p)
    ext = par.extension(one)
    assert ext.values[0, 0, 0] == pytest.approx(1)
    single = par.SurfaceFunction.indicator(PointSet2(p, [(2, 3)]))
    assert np.allclose(np.abs(par.extension(single).values), p ** -2)
    direct = par.extension(one, method="direct")
    assert np.abs(direct.values - ext.values).max() < 1e-9
    for z in range(1, p):
        assert ext.values[0, 0, z] == pytest.approx(_extension_reference(one, (0, 0, z)))
    with pytest.raises(ValueError):
        par.extension(one, method="fft")


@pytest.mark.parametrize("p", [5, 7, 11])
def test_extension_two_paths_and_reference(p):
    rng = np.random.default_rng(p)
    f = random_surface(p, rng)
    a = par.extension(f, "transform").values
    b = par.extension(f, "direct").values
    assert np.abs(a - b).max() <= 1e-9 * np.abs(a).max()
    for x in rng.integers(0, p, (5, 3)):
        ref = _extension_reference(f, tuple(int(v) for v in x))
        assert a[tuple(x)] == pytest.approx(ref, abs=1e-12)
        assert par.extension_at(f, x)[0] == pytest.approx(ref, abs=1e-12)


def test_restriction_examples():
    p = 5
    delta = par.SpaceFunction.from_sparse(p, [(0, 0, 0)])
    ghat = par.restriction(delta)
    assert np.allclose(ghat.values, 1)
    assert par.l2_sigma_norm(ghat).value == pytest.approx(1)
    assert np.allclose(par.restriction(par.SpaceFunction.zeros(p)).values, 0)


@pytest.mark.parametrize("p", [5, 7])
def test_adjointness(p):
    rng = np.random.default_rng(100 + p)
    for _ in range(10):
        f, g = random_surface(p, rng), random_space(p, rng)
        lhs = par.space_inner(par.extension(f), g)
        rhs = par.sigma_inner(f, par.restriction(g))
        assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1e-12)


def test_norm_examples():
    u = par.SpaceFunction.from_sparse(5, [(1, 2, 3)])
    for r in (1, 2, 4, 7.5):
        assert par.lr_norm(u, r).value == pytest.approx(1)
    assert par.l2_sigma_norm(par.SurfaceFunction.constant(5)).value == pytest.approx(1)
    rng = np.random.default_rng(0)
    v = random_space(5, rng)
    assert par.lr_norm(v, 4).value <= par.lr_norm(v, 2).value
    with pytest.raises(ValueError):
        par.lr_norm(u, 0.5)


def test_l4_constant_single_point():
    p = 5
    rep = par.l4_energy_identity_check(par.lift(PointSet2(p, [(1, 1)])))
    assert rep.lam == 1
    assert rep.l4_fourth == pytest.approx(p ** 3 / (p * p) ** 4)
    assert par.l4_energy_constant(p) == pytest.approx(p ** -5)


@pytest.mark.parametrize("p", [5, 7])
def test_l4_energy_identity(p):
    for seed in range(10):
        rep = par.l4_energy_identity_check(par.lift(random_set(p, 6, seed)))
        assert rep.rel_error < 1e-9
    iso = par.l4_energy_identity_check(par.lift(iso_line(5)))
    assert iso.lam == 125 and iso.rel_error < 1e-9


def test_level_set_validation():
    g = par.SpaceFunction.from_sparse(5, [(0, 0, 0), (1, 0, 0)], [1.0, 0.5])
    with pytest.raises(par.NotLevelSetError):
        par.mt_machine_check(g)
    with pytest.raises(par.NotLevelSetError):
        par.certify_level_set(g)


def test_mt_machine_examples():
    one = par.mt_machine_check(par.SpaceFunction.from_sparse(5, [(1, 2, 3)]))
    assert one.lhs == pytest.approx(1) and one.rhs >= 1
    slab = par.SpaceFunction.from_sparse(5, [(x, y, 0) for x in range(5) for y in range(5)])
    rep = par.mt_machine_check(slab)
    assert len(slab.slice_sets()) == 1
    assert rep.lhs <= rep.rhs


def test_certify_examples():
    one = par.certify_level_set(par.SpaceFunction.from_sparse(7, [(1, 2, 3)]))
    assert one.regime == "stein_tomas"
    assert (one.measured, one.target, one.ratio) == pytest.approx((1, 1, 1))
    rng = np.random.default_rng(3)
    cells = rng.choice(7 ** 3, 30, replace=False)
    g = par.SpaceFunction.from_sparse(7, np.stack([cells // 49, cells // 7 % 7, cells % 7], axis=1))
    rep = par.certify_level_set(g)
    assert rep.regime == "stein_tomas" and rep.support == 30
    assert 0 < rep.ratio < 10
    slab = par.SpaceFunction.from_sparse(5, [(x, y, 0) for x in range(5) for y in range(5)])
    assert par.certify_level_set(slab).regime == "slice_degenerate"


def test_classify_regime_branches():
    p = 31
    assert par.classify_regime(10, [10], p)[0] == "stein_tomas"
    assert par.classify_regime(int(p ** (47 / 21)) + 1, [p * p] * p, p)[0] == "holder"
    cut = int(p ** (26 / 21))
    G = int(p ** (94 / 53)) + 10
    assert par.classify_regime(G, [cut] * (G // cut), p)[0] in ("energy", "slice_degenerate")
    assert par.classify_regime(G, [1] * G, p)[0] == "energy"
    assert par.classify_regime(G, [G - 5, 1, 1, 1, 1, 1], p)[0] == "mixed"


def test_restriction_ratio_examples():
    for p in (5, 7):
        single = par.SurfaceFunction.indicator(PointSet2(p, [(0, 1)]))
        for r in (2, 4, 6):
            assert par.restriction_ratio(single, r) == pytest.approx(p ** (3 / r - 1))
        one = par.SurfaceFunction.constant(p)
        assert par.restriction_ratio(one, 4) == pytest.approx((1 + (p - 1) / p ** 2) ** 0.25)
    f = random_surface(5, np.random.default_rng(1))
    assert par.restriction_ratio(f, 4) == pytest.approx(par.restriction_ratio(10 * f, 4))
    with pytest.raises(ValueError):
        par.restriction_ratio(par.SurfaceFunction(5, np.zeros((5, 5))), 4)


def test_dense_cap():
    with pytest.raises(ValueError):
        par.extension(par.SurfaceFunction.constant(37))
