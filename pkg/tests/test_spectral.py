import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from automoment import spectral as S
from automoment.arith import (
    DirichletCharacter,
    PrimeLevel,
    characters,
    euler_phi,
    kloosterman,
    kloosterman_twisted,
    mod_inverse,
)
from automoment.bessel import bessel_j
from automoment.spectral import CoefficientVector, TruncationError


def oracle_quadratic_form(alpha, level, c_cap, parity=None):
    """Direct double loop over (m, n) pairs, characters and moduli."""
    parity = level.parity if parity is None else parity
    chis = characters(level.q, parity)
    total = 0j
    for chi in chis:
        for am, m in zip(alpha.values, alpha.indices):
            for an, n in zip(alpha.values, alpha.indices):
                delta = 1.0 if m == n else 0.0
                acc = 0j
                for c in range(level.q, c_cap + 1, level.q):
                    acc += kloosterman_twisted(int(m), int(n), c, chi) / c * bessel_j(
                        level.k - 1, 4 * math.pi * math.sqrt(m * n) / c
                    )
                total += am * np.conj(an) * (delta + 2 * math.pi * (1j) ** (-level.k) * acc)
    return total * 2 / euler_phi(level.q)


# -- windows and vectors ----------------------------------------------------------------


def test_psi_bump_shape():
    assert S.psi_bump(np.array([1.5]))[0] == pytest.approx(1.0)
    assert np.all(S.psi_bump(np.array([0.5, 1.0, 2.0, 2.5])) == 0)
    x = np.linspace(1.001, 1.999, 999)
    assert np.all(S.psi_bump(x) <= 1.0 + 1e-15)


def test_coefficient_vector_validation():
    v = CoefficientVector([3, 4], [1.0, 2j], 2.0)
    assert v.norm2 == pytest.approx(5.0) and v.check_norm()
    with pytest.raises(ValueError):
        CoefficientVector([2, 3], [1.0, 1.0], 2.0)
    with pytest.raises(ValueError):
        CoefficientVector([3, 5], [1.0, 1.0], 2.0)


def test_sieve_experiment_scales():
    exp = S.SieveExperiment(PrimeLevel(101, 3), 101.0**2, b=2, c=3)
    assert exp.Y == pytest.approx(101**2 / (16 * math.pi**4 * 36))
    assert exp.T == exp.H == pytest.approx(exp.Y / 101)
    assert exp.N == pytest.approx(math.sqrt(exp.Y / 6))


def test_prop25_vector_entries():
    level = PrimeLevel(151, 3)
    Y = 151**2 / (16 * math.pi**4)
    v = S.prop25_vector(1, 1, Y, level)
    from automoment.afe import v_weight

    for m, a in zip(v.indices, v.values):
        x = m / Y
        psi = math.exp(1 / ((x - 1) * (x - 2)) + 4)
        from automoment.arith import sigma_k

        ref = sigma_k(int(m), 4) / math.sqrt(m) * psi * v_weight(x * 151**2 / 151**2.01)
        assert abs(a - ref) < 1e-12 * max(1, abs(ref))
    assert np.all((v.indices > Y) & (v.indices <= 2 * Y))


def test_empty_window_gives_zero():
    level = PrimeLevel(37, 3)
    Y = 37**2 / (16 * math.pi**4)
    assert Y < 1
    v = S.prop25_vector(1, 1, Y, level)
    assert len(v) == 0
    assert S.prop25_quantity(1, 1, v, level).value == 0.0


# -- Petersson ------------------------------------------------------------------------


def test_delta_diagonal_large_level():
    level = PrimeLevel(101, 11)
    for chi in characters(101, parity=-1)[:5]:
        r = S.petersson_delta(3, 3, level, chi)
        assert abs(r.value - 1) < 1e-10 + r.tail


def test_delta_doubling_within_tail():
    level = PrimeLevel(7, 3)
    chi = characters(7, parity=-1)[1]
    a = S.petersson_delta(2, 5, level, chi, c_cap=70 * 7)
    b = S.petersson_delta(2, 5, level, chi, c_cap=140 * 7)
    assert abs(a.value - b.value) < a.tail


def test_delta_trivial_character_matches_untwisted():
    level = PrimeLevel(5, 4)
    chi = DirichletCharacter(5, 0)
    c_cap = 60
    ref = 0.0
    for c in range(5, c_cap + 1, 5):
        ref += kloosterman(2, 3, c) / c * bessel_j(3, 4 * math.pi * math.sqrt(6) / c)
    ref = 2 * math.pi * ref  # i^{-4} = 1
    assert abs(S.petersson_delta(2, 3, level, chi, c_cap).value - ref) < 1e-12


def test_delta_hermitian_and_character_swap():
    level = PrimeLevel(11, 3)
    rng = np.random.default_rng(3)
    chis = characters(11, parity=-1)
    for _ in range(100):
        m, n = (int(v) for v in rng.integers(1, 40, 2))
        chi = chis[int(rng.integers(0, len(chis)))]
        a = S.petersson_delta(m, n, level, chi, c_cap=11 * 12).value
        b = S.petersson_delta(n, m, level, chi, c_cap=11 * 12).value
        c = S.petersson_delta(m, n, level, chi.conj(), c_cap=11 * 12).value
        assert abs(a - np.conj(b)) < 1e-9
        assert abs(b - c) < 1e-9


def test_tail_reporting():
    level = PrimeLevel(7, 3)
    chi = characters(7, parity=-1)[0]
    with pytest.raises(TruncationError):
        S.petersson_delta(30, 31, level, chi, c_cap=7, tail_tol=1e-10)
    cap = S.auto_c_cap(level, (2 * 3) ** 1.0)
    assert S.petersson_tail_bound(level, 6.0, cap) < 1e-10 or cap == 200 * 7


def test_auto_cap_minimal():
    level = PrimeLevel(13, 7)
    w = (5 * 8) ** 3
    cap = S.auto_c_cap(level, w)
    assert S.petersson_tail_bound(level, w, cap) < 1e-10
    if cap > 13:
        assert S.petersson_tail_bound(level, w, cap - 13) >= 1e-10


# -- quadratic form --------------------------------------------------------------------


def test_quadratic_form_matches_oracle_small():
    level = PrimeLevel(11, 3)
    rng = np.random.default_rng(0)
    alpha = CoefficientVector(np.arange(6, 11), rng.standard_normal(5) + 1j * rng.standard_normal(5), 5.0)
    res = S.harmonic_quadratic_form(alpha, level, c_cap=11 * 15)
    ref = oracle_quadratic_form(alpha, level, 11 * 15)
    assert abs(res.value - ref.real) < 1e-9 and abs(ref.imag) < 1e-9


def test_folded_matches_per_character():
    for q, k in ((11, 3), (13, 4), (17, 11)):
        level = PrimeLevel(q, k)
        alpha = S.random_alpha(q, seed=q)
        a = S.harmonic_quadratic_form(alpha, level)
        b = S.harmonic_quadratic_form(alpha, level, folded=True)
        assert abs(a.value - b.value) < 1e-10
        assert a.imag_residual < 1e-10


def test_character_order_invariance_and_cap_doubling():
    level = PrimeLevel(13, 11)
    alpha = S.random_alpha(13, seed=5)
    res = S.harmonic_quadratic_form(alpha, level)
    per = np.array(res.per_character)
    rev = np.sum(per[::-1]) * 2 / euler_phi(13)
    assert abs(rev.real - res.value) < 1e-9
    doubled = S.harmonic_quadratic_form(alpha, level, c_cap=2 * res.c_cap)
    assert abs(doubled.value - res.value) < 1e-9


def test_per_character_means_nonnegative():
    level = PrimeLevel(19, 3)
    alpha = S.random_alpha(19, seed=2)
    res = S.harmonic_quadratic_form(alpha, level)
    assert all(v.real > -1e-8 for v in res.per_character)
    assert res.value >= -1e-8


def test_single_coefficient_diagonal_dominance():
    level = PrimeLevel(101, 3)
    alpha = CoefficientVector([4], [1.0], 3.0)
    res = S.prop25_quantity(1, 1, alpha, level)
    ref = sum(S.petersson_delta(4, 4, level, chi, c_cap=res.c_cap).value for chi in characters(101, -1)) * 2 / 100
    assert abs(res.value - ref.real) < 1e-10
    assert abs(res.value - 1) < 0.05


def test_prop25_bc_support_rule():
    level = PrimeLevel(11, 3)
    with pytest.raises(ValueError):
        S.prop25_quantity(2, 1, CoefficientVector([3], [1.0], 2.0), level)


# -- asymptotic large sieve ---------------------------------------------------------------


def test_large_sieve_zero_vector():
    alpha = CoefficientVector(np.arange(14, 27), np.zeros(13), 13)
    assert S.large_sieve_sides(alpha, PrimeLevel(13, 11), 1) == (0.0, 0.0, 0.0, 0.0)


def test_pht_single_coefficient():
    level = PrimeLevel(13, 11)
    n0 = 30
    alpha = CoefficientVector([n0], [1.0], 26)
    for t in (1, 2, 3, 5):
        for h in (1, 2, 3):
            qbar = mod_inverse(13, t) if t > 1 else 0
            direct = kloosterman(h * qbar, n0, t) * bessel_j(10, 4 * math.pi * math.sqrt(h * n0 / 13) / t)
            assert abs(S.p_ht(alpha, h, t, level) - direct) < 1e-12


def test_large_sieve_residual_within_envelope():
    level = PrimeLevel(13, 11)
    alpha = S.random_alpha(26, seed=1)
    lhs, rhs, res, env = S.large_sieve_sides(alpha, level, 2)
    assert res == pytest.approx(lhs - rhs)
    assert env == pytest.approx(26**0.1 * (26 / 169 + math.sqrt(26 / 26)) * alpha.norm2)
    assert abs(res) <= 100 * env


def test_large_sieve_preconditions():
    level = PrimeLevel(13, 11)
    with pytest.raises(ValueError):
        S.large_sieve_sides(S.random_alpha(10, 0), level, 1)
    with pytest.raises(ValueError):
        S.large_sieve_sides(S.random_alpha(26, 0), level, 3)


def test_random_alpha_deterministic():
    a, b = S.random_alpha(20, 9), S.random_alpha(20, 9)
    assert np.array_equal(a.values, b.values)


# -- GL(1) large sieve -------------------------------------------------------------------


def brute_gl1(alpha, beta, Q):
    total = 0.0
    for r in range(1, Q + 1):
        for a in range(r):
            if math.gcd(a, r) != 1:
                continue
            s = 0j
            for m, am in enumerate(alpha, 1):
                for n, bn in enumerate(beta, 1):
                    if math.gcd(m * n, r) != 1:
                        continue
                    nbar = mod_inverse(n, r) if r > 1 else 0
                    s += am * bn * np.exp(2j * math.pi * ((a * m * nbar) % r) / r)
            total += abs(s) ** 2
    return total


def test_gl1_unit_vectors():
    for Q in (1, 5, 12):
        lhs, rhs, ok = S.gl1_large_sieve_check([1.0], [1.0], Q)
        assert lhs == pytest.approx(sum(euler_phi(r) for r in range(1, Q + 1)))
        assert rhs == Q * Q + 1 and ok


def test_gl1_zero_vectors():
    assert S.gl1_large_sieve_check(np.zeros(4), np.zeros(3), 6) == (0.0, 0.0, True)


def test_gl1_matches_bruteforce():
    rng = np.random.default_rng(11)
    a = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    lhs, _, _ = S.gl1_large_sieve_check(a, b, 9)
    assert abs(lhs - brute_gl1(a, b, 9)) < 1e-9 * max(1, lhs)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 20), st.integers(0, 2**32))
def test_gl1_inequality_randomised(M, N, Q, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    assert S.gl1_large_sieve_check(a, b, Q)[2]


# -- trend ---------------------------------------------------------------------------------


def test_moment_trend_rows():
    rows = S.moment_trend([PrimeLevel(37, 3), PrimeLevel(41, 3)], prefactors=False)
    assert rows[0]["value"] == 0.0 and rows[0]["status"] == "empty"
    assert rows[1]["value"] > 0 and rows[1]["status"] == "ok"
    assert set(rows[1]) >= {"q", "k", "seed", "X", "Y", "c_cap", "value", "tail", "norm2", "ratio"}


def test_moment_trend_small_primes_empty():
    rows = S.moment_trend(S.primes_between(2, 7), prefactors=False, k=5)
    assert [r["q"] for r in rows] == [2, 3, 5, 7]
    assert all(r["value"] == 0.0 and r["k"] == 5 for r in rows)


def test_moment_trend_isolates_failures():
    rows = S.moment_trend([PrimeLevel(41, 3)], c_cap=40, prefactors=False)
    assert rows[0]["status"].startswith("failed")


def test_cauchy_schwarz_prefactors_bruteforce():
    X = 30.0
    bound = 5
    w = p = 0.0
    from automoment.arith import sigma_k

    for b in range(1, 6):
        for c in range(1, 6):
            for j in range(1, 6):
                for d in range(1, 6):
                    l = b * c // math.gcd(b, c)
                    if j * l * d <= bound:
                        base = math.gcd(b, c) / (j * d * b * c)
                        p += base
                        w += base * (sigma_k(j, 2) * sigma_k(d * l // b, 2) * sigma_k(d * l // c, 2)) ** 2
    assert S.cauchy_schwarz_prefactors(X) == pytest.approx((w, p))


def test_loglog_slope():
    qs = np.array([10.0, 20.0, 40.0])
    assert S.loglog_slope(qs, 3 * qs**0.5) == pytest.approx(0.5)
