import json
import math

import numpy as np
import pytest

from automoment import voronoi as V
from automoment.arith import ArithmeticDomainError, PrimeLevel, sigma
from automoment.quadrature import QuadratureError


def test_test_functions_vanish_off_support():
    for g in (V.bump(9, 11), V.gaussian_bump(50, 4), V.gaussian_bump(30, 2, 20, 40)):
        x0, x1 = g.support
        assert np.all(g(np.array([x0 - 1, x0, x1, x1 + 3])) == 0)
    g = V.gaussian_bump(50, 4)
    assert np.max(np.abs(g(np.array([g.support[0] + 1e-9, g.support[1] - 1e-9])))) <= 1e-14
    assert V.bump(9, 11)(np.array([10.0]))[0] == pytest.approx(1.0)


def test_spec_roundtrip():
    g = V.balanced(V.gaussian_bump(40, 3), V.bump(60, 90), 5)
    h = V.SmoothTestFunction.from_spec(json.loads(json.dumps(g.to_spec())))
    x = np.linspace(30, 100, 101)
    assert np.array_equal(g(x), h(x))
    with pytest.raises(ValueError):
        V.SmoothTestFunction.from_spec({"tag": "triangle"})


def test_lhs_trivial_character():
    g = V.bump(9, 11)
    assert V.voronoi_lhs(g, 0, 1) == pytest.approx(sum(sigma(n) * g(np.array([n]))[0] for n in (10,)))


def test_lhs_periodic_and_conjugate():
    g = V.gaussian_bump(50, 4)
    for a, c in ((1, 3), (2, 7), (5, 12)):
        base = V.voronoi_lhs(g, a, c)
        assert abs(V.voronoi_lhs(g, a + c, c) - base) < 1e-12
        assert abs(V.voronoi_lhs(g, -a, c) - np.conj(base)) < 1e-12


def test_lhs_independent_order():
    g = V.gaussian_bump(50, 4)
    ref = 0j
    for n in range(int(g.support[1]), 0, -1):
        ref += sigma(n) * np.exp(2j * math.pi * ((n % 3) / 3)) * g(np.array([float(n)]))[0]
    assert abs(V.voronoi_lhs(g, 1, 3) - ref) < 1e-12


def test_gcd_rejected():
    g = V.bump(9, 11)
    with pytest.raises(ArithmeticDomainError):
        V.voronoi_lhs(g, 2, 4)
    with pytest.raises(ArithmeticDomainError):
        V.voronoi_rhs(g, 3, 6)


@pytest.mark.parametrize("g,a,c", [(V.gaussian_bump(10, 0.8), 0, 1), (V.gaussian_bump(50, 4), 1, 4)])
def test_voronoi_identity_examples(g, a, c):
    lhs = V.voronoi_lhs(g, a, c)
    rhs = V.voronoi_rhs(g, a, c)
    assert rhs.converged
    assert abs(lhs - rhs.value) <= 1e-6 * (1 + abs(lhs))


def test_balanced_main_term_vanishes():
    g = V.balanced(V.gaussian_bump(40, 3), V.gaussian_bump(70, 5), 6)
    assert abs(V.voronoi_main_term(g, 6)) < 1e-12
    res = V.voronoi_rhs(g, 5, 6)
    assert abs(res.value - (res.y0_part + res.k0_part)) < 1e-12


def test_main_term_against_direct_quadrature():
    from scipy.integrate import quad

    g = V.gaussian_bump(30, 3)
    f = lambda x: (math.log(x) + 2 * 0.5772156649015329 - 2 * math.log(7)) * g(np.array([x]))[0]
    ref = quad(f, *g.support, limit=200, epsabs=1e-13)[0] / 7
    assert abs(V.voronoi_main_term(g, 7) - ref) < 1e-10


def test_rhs_stable_under_doubling():
    g = V.gaussian_bump(80, 6)
    a = V.voronoi_rhs(g, 2, 9)
    b = V.voronoi_rhs(g, 2, 9, ell_cap=2 * V.DEFAULT_ELL_CAP, depth=2)
    assert abs(a.value - b.value) < 1e-7


def test_k0_tail_certified():
    g = V.gaussian_bump(30, 3)
    res = V.voronoi_rhs(g, 3, 7)
    assert res.k0_tail < 1e-10
    # the neglected K0 terms are indeed below the certificate
    more = V.voronoi_rhs(g, 3, 7, ell_cap=V.DEFAULT_ELL_CAP)
    assert abs(more.k0_part - res.k0_part) <= res.k0_tail + 1e-15


def test_ell_cap_too_small_reported():
    g = V.bump(40, 80)
    res = V.voronoi_rhs(g, 1, 3, ell_cap=64)
    assert not res.converged and res.y0_tail_proxy > 0
    with pytest.raises(QuadratureError):
        V.voronoi_rhs(g, 1, 3, ell_cap=64, strict=True)


# -- n_2 sums ---------------------------------------------------------------------------


def test_reduced_twist():
    assert V.reduced_twist(2, 3, 8) == (3, 4)
    assert V.reduced_twist(1, 1, 1) == (1, 1)


def test_nsum_modulus_one():
    res = V.nsum_decomposition_check(1, 1, 1, 1, 1, PrimeLevel(5, 11), 40.0)
    assert res.eta == 1 and res.gap < 1e-6


def test_nsum_desk_example_and_periodicity():
    level = PrimeLevel(5, 11)
    a = V.nsum_decomposition_check(1, 1, 3, 1, 1, level, 40.0)
    assert a.gap <= 1e-5 * abs(a.direct)
    b = V.nsum_decomposition_check(1, 4, 3, 1, 1, level, 40.0)
    assert abs(a.gap - b.gap) < 1e-12 and abs(a.direct - b.direct) < 1e-14


def test_nsum_inverse_composition():
    res = V.nsum_decomposition_check(2, 3, 8, 1, 1, PrimeLevel(5, 11), 40.0)
    assert (res.m * 3 * res.inverse) % res.eta == 1


def test_nsum_kernel_definition():
    level = PrimeLevel(5, 11)
    g = V.nsum_kernel(2, 5, 3, 1, level, 40.0)
    from automoment.bessel import bessel_j
    from automoment.afe import AfeWeightConfig
    from automoment.spectral import psi1

    x = 27.0
    ref = bessel_j(10, 4 * math.pi / 5 * math.sqrt(3 * 2 * x / 5)) * psi1(np.array([2 * x / 40]), 25.0, 5, AfeWeightConfig(k=11))[0] / math.sqrt(x)
    assert abs(g(np.array([x]))[0] - ref) < 1e-14
    assert g.support == (20.0, 40.0)


def test_nsum_rejects_noncoprime():
    with pytest.raises(ArithmeticDomainError):
        V.nsum_decomposition_check(1, 2, 4, 1, 1, PrimeLevel(5, 11), 40.0)


def test_corpus_roundtrip(tmp_path):
    rec = [{"g": {"tag": "gaussian_bump", "center": 10.0, "width": 0.8}, "a": 0, "c": 1, "expected_gap": 1e-6}]
    path = tmp_path / "c.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rec))
    rows = V.run_corpus(V.load_corpus(path))
    assert rows[0]["ok"] and rows[0]["gap"] < 1e-10
