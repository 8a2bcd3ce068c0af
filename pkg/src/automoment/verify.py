"""Invariant suites behind ``automoment verify``.

Each suite returns a :class:`SuiteResult` carrying its worst observed error
against a tolerance.  Exact integer suites report the largest integer
discrepancy (0 when the identity holds).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from . import afe, arith, bessel, spectral, voronoi
from .arith import PrimeLevel


@dataclass(frozen=True)
class SuiteResult:
    name: str
    topic: str
    worst_error: float
    tolerance: float
    passed: bool
    detail: str = ""

    def as_dict(self):
        return asdict(self)


def _result(name, topic, err, tol, detail=""):
    err = float(err)
    return SuiteResult(name, topic, err, tol, bool(err <= tol), detail)


# --------------------------------------------------------------------------


def suite_divisor_product(tol=0.0, nmax=200, **_):
    worst = 0
    for n1 in range(1, nmax + 1):
        for n2 in range(1, nmax + 1):
            g = math.gcd(n1, n2)
            rhs = sum(
                arith.moebius(d) * arith.sigma(n1 // d) * arith.sigma(n2 // d) for d in arith.divisors(g)
            )
            worst = max(worst, abs(arith.sigma(n1 * n2) - rhs))
    return _result("divisor_product_identity", "divisor function of a product", worst, tol, f"n1, n2 <= {nmax}")


def suite_ramanujan(tol=1e-9, nmax=200, **_):
    worst = 0.0
    for t in range(1, nmax + 1):
        _, inv = arith.unit_inverse_table(t)
        for h in range(1, nmax + 1):
            total = complex(np.sum(arith.e_frac(h * inv, t)))
            worst = max(worst, abs(total - arith.ramanujan_sum(h, t)))
    return _result("ramanujan_closed_form", "Ramanujan sum evaluation", worst, tol, f"t, h <= {nmax}")


def _systems(q, k, seeds):
    return [afe.HeckeSystem.random(PrimeLevel(q, k), s) for s in seeds]


def suite_hecke(tol=1e-10, q=11, k=3, seed=0, cap=500, **_):
    worst = 0.0
    for system in _systems(q, k, range(seed, seed + 10)):
        lam = afe.hecke_extend(system, cap)
        chi = system.character
        for m in range(1, cap + 1):
            for n in range(1, cap // m + 1):
                g = math.gcd(m, n)
                rhs = sum(chi.value(d) * lam[m * n // (d * d)] for d in arith.divisors(g))
                worst = max(worst, abs(lam[m] * lam[n] - rhs))
    return _result("hecke_relation", "Hecke relation with nebentypus", worst, tol, f"10 systems, mn <= {cap}")


def suite_l4(tol=1e-9, q=11, k=3, seed=0, cap=300, **_):
    worst = 0.0
    for system in _systems(q, k, range(seed, seed + 10)):
        d = afe.l4_coefficients_direct(system, cap)
        e = afe.l4_coefficients_expanded(system, cap)
        worst = max(worst, float(np.max(np.abs(d[1:] - e[1:]))))
    return _result("l4_expansion", "fourth-power coefficient expansion", worst, tol, f"10 systems, n <= {cap}")


def suite_afe_small(tol=1e-6, **_):
    v = afe.VWeight()
    err = abs(v(1e-10) - 1.0)
    imag = float(np.max(np.abs(v.complex_value(np.array([0.1, 1.0, 10.0])).imag)))
    return _result(
        "afe_weight_small_x", "weight V near zero and reality", max(err, imag), tol, f"|V(1e-10)-1|={err:.2e} imag={imag:.2e}"
    )


def suite_afe_decay(tol=1e-6, **_):
    v = afe.VWeight()
    xs = np.array([1e3, 1e4, 1e5])
    vals = np.abs(v(xs))
    # (x+1)^3 |V(x)| must collapse between 1e3 and 1e5, relative to its value at 1e3
    scaled = (xs + 1) ** 3 * vals
    return _result(
        "afe_weight_decay",
        "weight V decay (x+1)^3 V(x) -> 0",
        scaled[-1] / scaled[0],
        tol,
        "V(1e3)={:.4e} V(1e4)={:.4e} V(1e5)={:.4e}".format(*vals),
    )


def suite_pht_single(tol=1e-12, **_):
    level = PrimeLevel(13, 11)
    n0 = 30
    alpha = spectral.CoefficientVector([n0], [1.0], 26)
    worst = 0.0
    for t in range(1, 7):
        qbar = arith.mod_inverse(13, t) if t > 1 else 0
        for h in range(1, 4):
            direct = arith.kloosterman(h * qbar, n0, t) * bessel.bessel_j(
                10, 4 * math.pi * math.sqrt(h * n0 / 13) / t
            )
            worst = max(worst, abs(spectral.p_ht(alpha, h, t, level) - direct))
    return _result("pht_single_coefficient", "P_ht single-term reduction", worst, tol, "q=13 k=11 n0=30")


def suite_trace_routes(tol=1e-10, seed=0, **_):
    worst = 0.0
    for q, k in ((11, 3), (13, 11)):
        level = PrimeLevel(q, k)
        alpha = spectral.random_alpha(q, seed)
        a = spectral.harmonic_quadratic_form(alpha, level)
        b = spectral.harmonic_quadratic_form(alpha, level, folded=True)
        worst = max(worst, abs(a.value - b.value), a.imag_residual)
    return _result("trace_formula_routes", "per-character vs folded character average", worst, tol)


def suite_bessel_dual(tol=1e-6, **_):
    xs = np.geomspace(8.0, 12.0, 50)
    dy = np.max(np.abs(bessel.y0_series(xs) - bessel.y0_asymptotic(xs)))
    dk = np.max(np.abs(bessel.k0_series(xs) - bessel.k0_asymptotic(xs)))
    dj = 0.0
    for order in (1, 2, 10, 40):
        sw = bessel.j_switch_point(order)
        for x in np.linspace(0.8 * sw, sw, 50):
            dj = max(dj, abs(bessel.bessel_j_series(order, x) - bessel.bessel_j_recurrence(order, x)))
    return _result("bessel_dual_representation", "J, Y0, K0 series vs large-x forms", max(dy, dk, dj), tol)


def suite_mellin(tol=1e-8, **_):
    xs = np.logspace(-2, math.log10(4.0), 50)
    worst = 0.0
    for kind in ("Y0", "K0"):
        k = bessel.MellinKernel(kind)
        base = k.evaluate(xs)
        worst = max(worst, float(np.max(np.abs(k.doubled().evaluate(xs) - base))))
        ref = bessel.y0_series(xs) if kind == "Y0" else bessel.k0_series(xs)
        worst = max(worst, float(np.max(np.abs(base - ref))))
    prof = bessel.MellinKernel("Y0").decay_profile(np.linspace(1, 100, 400))
    bounded = float(np.max(prof)) < 1.5
    return _result(
        "mellin_contour", "Mellin representations of Y0 and K0", worst if bounded else math.inf, tol, "height doubling"
    )


def _corpus(name):
    with resources.files("automoment.data").joinpath(name).open() as fh:
        return json.load(fh)


def suite_voronoi(tol=1e-6, **_):
    rows = voronoi.run_corpus(_corpus("voronoi_corpus.json"))
    return _result("voronoi_identity", "Voronoi summation for d(n)", max(r["gap"] for r in rows), tol, f"{len(rows)} cases")


def suite_nsum(tol=1e-5, **_):
    rows = voronoi.run_corpus(_corpus("nsum_corpus.json"))
    return _result("nsum_decomposition", "n2-sum = R1 + R2 + R3", max(r["gap"] for r in rows), tol, f"{len(rows)} cases")


def suite_gl1(tol=1e-9, seed=0, **_):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        M, N, Q = (int(v) for v in (rng.integers(1, 41), rng.integers(1, 41), rng.integers(1, 21)))
        a = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        lhs, rhs, _ok = spectral.gl1_large_sieve_check(a, b, Q)
        worst = max(worst, max(0.0, lhs - rhs) / rhs)
    return _result("gl1_large_sieve", "bilinear large sieve with inverses", worst, tol, "100 random instances")


SUITES = [
    suite_divisor_product,
    suite_ramanujan,
    suite_hecke,
    suite_l4,
    suite_afe_small,
    suite_afe_decay,
    suite_pht_single,
    suite_trace_routes,
    suite_bessel_dual,
    suite_mellin,
    suite_voronoi,
    suite_nsum,
    suite_gl1,
]


def run_suites(q=11, k=3, seed=0, tolerance=None, only=None):
    """Run every suite; ``tolerance`` overrides each suite's own."""
    out = []
    for suite in SUITES:
        if only and suite.__name__ not in only:
            continue
        kwargs = {"q": q, "k": k, "seed": seed}
        if tolerance is not None:
            kwargs["tol"] = tolerance
        out.append(suite(**kwargs))
    return out
