import json
import math
from fractions import Fraction

import numpy as np
import pytest

from ffincidence import constants
from ffincidence import experiments as ex
from ffincidence import ff_core as fc
from ffincidence import incidence as inc
from ffincidence.paraboloid import ParaboloidSet, on_paraboloid


def test_exponent_table_is_exact():
    for name, e in constants.EXPONENTS.items():
        assert isinstance(e.value, Fraction) and e.role
    values = {str(e.value) for e in constants.EXPONENTS.values()}
    for v in ("99/41", "17/7", "5/2", "17/41", "6/11", "135/188", "188/53", "123/260"):
        assert v in values
    assert constants.exponent("grid_side") == Fraction(17, 41)
    assert ex.constants_table()["rect_exponent"] == "99/41"


def test_spec_parse_and_describe():
    spec = ex.GeneratorSpec.parse("random:n=12,seed=1", 7)
    assert spec == ex.GeneratorSpec("random", 7, (("n", 12),), 1)
    assert spec.describe() == "random:n=12,seed=1"
    assert ex.GeneratorSpec.parse("random:n=12,seed=1", 7, seed=5).seed == 5
    assert spec.with_(n=20).get("n") == 20
    with pytest.raises(ValueError):
        ex.GeneratorSpec("spiral", 7)


def test_generate_examples():
    assert ex.generate(ex.GeneratorSpec("full-plane", 3)).n == 9
    iso = ex.generate(ex.GeneratorSpec("isotropic-line", 5))
    assert iso.n == 5
    line = fc.line_through(*list(iso)[:2], 5)
    assert fc.canonical_direction(line.direction(), 5) == (1, 2)
    assert all(line.contains(q) for q in iso)
    with pytest.raises(ValueError):
        ex.generate(ex.GeneratorSpec("isotropic-line", 7))


@pytest.mark.parametrize("kind,params", [
    ("random", (("n", 20),)),
    ("cartesian-product", (("a", 4), ("b", 3), ("random", 1))),
    ("few-lines", (("lines", 3), ("per", 4))),
    ("grid-union", (("k", 3), ("m", 2))),
    ("paraboloid-subset", (("n", 15),)),
    ("two-line-sumset", (("a", 3), ("b", 4))),
])
def test_generate_is_deterministic(kind, params):
    spec = ex.GeneratorSpec(kind, 11, params, 1)
    a, b = ex.generate(spec), ex.generate(spec)
    if isinstance(a, ParaboloidSet):
        assert on_paraboloid(a.coords, 11).all()
        a, b = a.base, b.base
    assert a == b and a.n > 0
    assert ex.generate(spec.with_(seed=2)) is not None


def test_generator_shapes():
    A, X, Y = ex.generate_product(ex.GeneratorSpec("cartesian-product", 13, (("a", 6), ("b", 6))))
    assert A.n == 36 and X == Y == list(range(6))
    assert ex.generate(ex.GeneratorSpec("two-line-sumset", 11, (("a", 4), ("b", 4)), 3)).n == 16
    assert ex.generate(ex.GeneratorSpec("random", 11, (("n", 20),), 1)).n == 20


def test_rng_is_philox_and_stable():
    a = ex.rng_for(7).integers(0, 1000, 5)
    b = np.random.Generator(np.random.Philox(7)).integers(0, 1000, 5)
    assert (a == b).all()


def test_exponent_fit_on_exact_power():
    sizes = [4, 16, 64, 256]
    fit = ex.exponent_fit(sizes, [s ** 2 * math.isqrt(s) for s in sizes])
    assert fit.exponent == pytest.approx(2.5)
    assert fit.stderr < 1e-6


def test_exponent_fit_errors():
    with pytest.raises(ValueError):
        ex.exponent_fit([3, 5, 7, 9], [0, 0, 0, 0])
    with pytest.raises(ValueError):
        ex.exponent_fit([3, 5, 4], [1, 2, 3])
    # the single-line family has no rectangles at any size
    specs = [ex.GeneratorSpec("few-lines", p, (("lines", 1), ("per", p))) for p in (7, 11, 19)]
    with pytest.raises(ValueError):
        ex.family_fit(specs, "rectangles")


def test_full_plane_fit_reports_slope():
    fit = ex.family_fit(ex.full_plane_family([3, 7, 11, 19]), "corners")
    assert fit.sizes == [9, 49, 121, 361]
    assert fit.counts == [p * p * (p * p - 1) * (p - 1) for p in (3, 7, 11, 19)]
    # log-log slope of p^2(p^2-1)(p-1) against p^2 tends to 5/2 from above
    assert 2.5 < fit.exponent < 2.7


def test_random_density_fit_is_reported():
    specs = [ex.GeneratorSpec("random", 31, (("n", n),), 0) for n in (40, 80, 160, 320)]
    fit = ex.family_fit(specs, "rectangles")
    assert math.isfinite(fit.exponent) and fit.stderr >= 0


def test_sweep_empty_and_unknown():
    rep = ex.bound_sweep([], "stein_tomas")
    assert rep.instances == [] and rep.max_ratio == 0 and rep.running_max == []
    with pytest.raises(ValueError):
        ex.bound_sweep([], "nope")


def test_stein_tomas_sweep():
    fam = ex.level_set_family([5, 7], 6, seed=1)
    rep = ex.bound_sweep(fam, "stein_tomas", workers=1)
    assert len(rep.instances) == 12
    assert [i["index"] for i in rep.instances] == list(range(12))
    assert all(math.isfinite(r) and r > 0 for r in rep.ratios)
    assert rep.running_max[-1] == rep.max_ratio
    assert all(b >= a for a, b in zip(rep.running_max, rep.running_max[1:]))
    out = rep.to_json()
    json.dumps(out)
    assert out["meta"]["constants_version"] == constants.CONSTANTS_VERSION
    assert set(out["aggregate"]) >= {"max_ratio", "suite_constant"}


def test_sweep_parallel_matches_serial():
    fam = ex.level_set_family([5], 4, seed=2)
    a = ex.bound_sweep(fam, "certify", workers=1)
    b = ex.bound_sweep(fam, "certify", workers=2)
    assert a.instances == b.instances


@pytest.mark.parametrize("bound_id", ["rich_lines_crude", "rich_lines_strong"])
def test_rich_line_sweep(bound_id):
    rep = ex.bound_sweep(ex.grid_union_family([11, 13], 5), bound_id)
    assert len(rep.instances) == 10 and all(math.isfinite(r) for r in rep.ratios)


def test_grid_union_and_incidence_sweeps():
    rep = ex.bound_sweep(ex.grid_union_lemma_family([11], 4), "grid_union_rich_lines")
    assert all(0 <= r < math.inf for r in rep.ratios)
    A = ex.generate(ex.GeneratorSpec("random", 11, (("n", 15),), 0))
    L = [line for line, _ in inc.MultiplicityTable(A).items()]
    for b in ("vinh", "stevens_de_zeeuw"):
        r = ex.bound_sweep([(A, L)], b).instances[0]
        assert r["measured"] == inc.incidences(A, L)


def test_mt_sweep():
    rep = ex.bound_sweep(ex.level_set_family([5], 3), "mt_machine")
    assert all(r <= 1 + 1e-9 for r in rep.ratios)


def test_reproducibility():
    fam1 = ex.level_set_family([5, 7], 3, seed=9)
    fam2 = ex.level_set_family([5, 7], 3, seed=9)
    r1 = ex.bound_sweep(fam1, "stein_tomas").instances
    r2 = ex.bound_sweep(fam2, "stein_tomas").instances
    for a, b in zip(r1, r2):
        assert a["n"] == b["n"]
        assert abs(a["measured"] - b["measured"]) <= 1e-12 * max(1, a["measured"])


def test_report_envelope():
    env = ex.report_envelope(7, "random:n=3,seed=0", 0, [{"n": 3, "measured": 0}], {"max_ratio": 0})
    assert env["meta"] == {"p": 7, "spec": "random:n=3,seed=0", "seed": 0,
                           "constants_version": constants.CONSTANTS_VERSION}


def test_default_workers(monkeypatch):
    monkeypatch.setenv("FFINCIDENCE_WORKERS", "3")
    assert ex.default_workers() == 3
    monkeypatch.delenv("FFINCIDENCE_WORKERS")
    assert ex.default_workers() == 1
