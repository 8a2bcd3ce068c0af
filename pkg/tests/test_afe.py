import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from automoment import afe
from automoment.afe import AfeWeightConfig, HeckeSystem, VWeight
from automoment.arith import DirichletCharacter, PrimeLevel, a_coefficient, lcm, sigma_k


def mp_v(x, a=1.5, c=1.0, m=0):
    mpmath.mp.dps = 25

    def f(t):
        s = c + 1j * t
        h = mpmath.cos(mpmath.pi * s / 8) ** (4 * m)
        return (h * mpmath.gamma(a + s) ** 4 / mpmath.gamma(a) ** 4 * mpmath.mpf(x) ** (-s) / s).real

    return float(mpmath.quad(f, [-60, -20, -5, 0, 5, 20, 60]) / (2 * mpmath.pi))


# -- V -----------------------------------------------------------------------------


def test_v_small_argument_limit():
    assert abs(afe.v_weight(1e-10) - 1) < 1e-6


def test_v_reality_accumulator():
    v = VWeight()
    assert np.max(np.abs(v.complex_value(np.array([0.1, 1.0, 10.0])).imag)) < 1e-10


@pytest.mark.parametrize("x", [0.05, 1.0, 7.0, 300.0])
def test_v_matches_mpmath(x):
    assert abs(afe.v_weight(x) - mp_v(x)) < 1e-10


def test_v_gamma_variant_and_h_power():
    cfg = AfeWeightConfig(k=3, gamma_shift="(k-1)/2")
    assert abs(afe.v_weight(10.0, cfg) - mp_v(10.0, a=1.0)) < 1e-10
    cfg = AfeWeightConfig(k=5, h_power=2)
    assert abs(afe.v_weight(3.0, cfg) - mp_v(3.0, a=2.5, m=2)) < 1e-10


def test_v_large_argument_values():
    # face-value weight at k = 3 sits just above 1e-6 at 1e3; the shifted Gamma variant is far below
    assert afe.v_weight(1e3) == pytest.approx(1.04864594e-6, rel=1e-6)
    assert afe.v_weight(1e3, AfeWeightConfig(k=3, gamma_shift="(k-1)/2")) < 1e-6
    assert afe.v_weight(1e4) < 1e-6


def test_v_monotone_decay_for_constant_h():
    xs = np.logspace(-3, 3, 61)
    vals = afe.v_weight(xs)
    assert np.all(np.diff(vals) < 1e-12)


def test_v_small_x_law():
    # V(x) = 1 + O(x^A): the defect shrinks at least linearly
    d1 = abs(afe.v_weight(1e-4) - 1)
    d2 = abs(afe.v_weight(1e-6) - 1)
    assert d2 < 1e-2 * d1 + 1e-12


def test_v_convergence_and_decay_constant():
    v = VWeight()
    assert v.check_convergence(np.array([1e-6, 0.5, 2.0, 500.0])) < 1e-10
    const = v.decay_constant()
    xs = np.logspace(0, 4, 30)
    assert np.all(np.abs(v(xs)) * xs**3 <= const)


def test_config_validation():
    with pytest.raises(ValueError):
        AfeWeightConfig(gamma_shift="k")
    with pytest.raises(ValueError):
        AfeWeightConfig(contour_re=3.5)
    with pytest.raises(ValueError):
        AfeWeightConfig(k=1)
    with pytest.raises(ValueError):
        afe.v_weight(0.0)


# -- Hecke systems --------------------------------------------------------------------


def systems(q=7, k=3, count=10):
    level = PrimeLevel(q, k)
    return [HeckeSystem.random(level, seed) for seed in range(count)]


def test_hecke_examples():
    for s in systems():
        lam = afe.hecke_extend(s, 60)
        assert lam[1] == 1
        for p in (2, 3, 5):
            assert abs(lam[p * p] - (lam[p] ** 2 - s.character.value(p))) < 1e-12
        assert abs(lam[6] - lam[2] * lam[3]) < 1e-12
        assert np.all(np.abs(lam[[2, 3, 5, 11, 13]]) <= 2 + 1e-12)


def test_hecke_relation_full():
    for s in systems(q=11):
        cap = 500
        lam = afe.hecke_extend(s, cap)
        for m in range(1, cap + 1):
            for n in range(1, cap // m + 1):
                g = math.gcd(m, n)
                rhs = sum(s.character.value(d) * lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
                assert abs(lam[m] * lam[n] - rhs) < 1e-10


def test_prefix_stability_and_determinism():
    s = HeckeSystem.random(PrimeLevel(13, 3), 2024)
    a = afe.hecke_extend(s, 100)
    b = afe.hecke_extend(HeckeSystem.random(PrimeLevel(13, 3), 2024), 400)
    assert np.array_equal(a, b[:101])


def test_ramified_prime():
    level = PrimeLevel(5, 3)
    s = HeckeSystem.random(level, 1, lambda_q=0.5j)
    lam = afe.hecke_extend(s, 130)
    assert lam[5] == 0.5j and abs(lam[125] - (0.5j) ** 3) < 1e-15
    assert abs(lam[10] - lam[2] * lam[5]) < 1e-15


# -- L^4 coefficients -----------------------------------------------------------------


def brute_l4(lam, cap):
    out = np.zeros(cap + 1, dtype=complex)
    for a in range(1, cap + 1):
        for b in range(1, cap // a + 1):
            for c in range(1, cap // (a * b) + 1):
                for d in range(1, cap // (a * b * c) + 1):
                    out[a * b * c * d] += lam[a] * lam[b] * lam[c] * lam[d]
    return out


def test_l4_direct_examples():
    s = systems(count=1)[0]
    lam = afe.hecke_extend(s, 60)
    direct = afe.l4_coefficients_direct(s, 60)
    assert abs(direct[1] - 1) < 1e-15
    for p in (2, 3, 5, 11):
        assert abs(direct[p] - 4 * lam[p]) < 1e-12
        assert abs(direct[p * p] - (6 * lam[p] ** 2 + 4 * lam[p * p])) < 1e-12 if p * p <= 60 else True
    assert np.max(np.abs(direct - brute_l4(lam, 60))) < 1e-10


def test_l4_expanded_equals_direct_ten_seeds():
    for s in systems(q=7, count=10):
        d = afe.l4_coefficients_direct(s, 300)
        e = afe.l4_coefficients_expanded(s, 300)
        assert np.max(np.abs(d[1:] - e[1:])) < 1e-9


def test_l4_trivial_character_divisor_sequence():
    level = PrimeLevel(5, 3)
    chi = DirichletCharacter(5, 0)
    # alpha = beta = 1 gives lambda(n) = number of divisors of n (away from 5)
    sat = {p: (1.0, 1.0) for p in (2, 3, 7, 11, 13)}
    s = HeckeSystem(level, chi, 0, 0.0, sat)
    lam = afe.hecke_extend(s, 16)
    assert lam[16] == 5 and lam[12] == 6
    d = afe.l4_coefficients_direct(s, 16)
    e = afe.l4_coefficients_expanded(s, 16)
    assert abs(d[16] - e[16]) < 1e-12
    assert abs(d[16] - sigma_k(16, 8)) < 1e-12  # d * d * d * d = d_8


# -- enumeration ----------------------------------------------------------------------


def brute_count(q, xi_max):
    scale = (2 * math.pi) ** 4 / q**2
    mmax = int(xi_max / scale)
    count = 0
    for j in range(1, mmax + 1):
        for b in range(1, mmax + 1):
            for c in range(1, mmax + 1):
                for d in range(1, mmax + 1):
                    base = (j * lcm(b, c) * d) ** 2 * b * c
                    if base > mmax:
                        break
                    for n in range(1, mmax // base + 1):
                        if scale * base * n <= xi_max:
                            count += 1
    return count


@pytest.mark.parametrize("q,xi_max", [(53, 1.0), (53, 40.0), (101, 30.0), (7, 5000.0)])
def test_enumeration_count_matches_bruteforce(q, xi_max):
    assert len(afe.enumerate_tuples(q, xi_max)) == brute_count(q, xi_max)


def test_enumerated_terms_recompute():
    for t in afe.enumerate_tuples(53, 40.0):
        l = lcm(t.b, t.c)
        coef = a_coefficient(t.b, t.c, t.d, t.j) * sigma_k(t.n, 4) / (t.j * l * t.d * math.sqrt(t.b * t.c * t.n))
        assert abs(t.coefficient - coef) <= 1e-12 * max(1.0, abs(coef))
        assert t.xi > 0
        sqf = all(e == 1 for _, e in _fac(t.b)) and all(e == 1 for _, e in _fac(t.c))
        assert (t.coefficient != 0) == (a_coefficient(t.b, t.c, t.d, t.j) != 0)
        if not sqf:
            assert t.coefficient == 0


def _fac(n):
    from automoment.arith import factorize

    return factorize(n) if n > 1 else []


def test_enumerate_empty_with_certificate():
    res = afe.afe_enumerate(PrimeLevel(5, 3), tail_tol=1.0)
    assert res.terms == [] and 0 < res.tail_bound <= 1.0


def test_enumerate_tail_certificate_and_budget():
    res = afe.afe_enumerate(PrimeLevel(11, 3), tail_tol=1e-2)
    assert res.tail_bound <= 1e-2 * (1 + 1e-9)
    assert all(t.xi <= res.xi_max for t in res.terms)
    with pytest.raises(ValueError):
        afe.afe_enumerate(PrimeLevel(11, 3), tail_tol=1e-12, budget=1000)
    with pytest.raises(ValueError):
        afe.afe_enumerate(PrimeLevel(11, 3), tail_tol=0)


def test_tail_certificate_dominates_actual_tail():
    # neglected mass for a small level, summed over a generous window beyond Xi
    level = PrimeLevel(5, 3)
    res = afe.afe_enumerate(level, tail_tol=0.5)
    far = afe.enumerate_tuples(5, 20 * res.xi_max)
    v = VWeight(AfeWeightConfig(k=3))
    beyond = [t for t in far if t.xi > res.xi_max]
    actual = sum(abs(t.coefficient) * abs(v(t.xi)) for t in beyond)
    assert actual <= res.tail_bound


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 12), st.integers(1, 12))
def test_coefficient_vanishing_rule(b, c, d, j):
    a = a_coefficient(b, c, d, j)
    from automoment.arith import is_squarefree

    if not (is_squarefree(b) and is_squarefree(c)):
        assert a == 0
