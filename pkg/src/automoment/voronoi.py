"""Voronoi summation for the divisor function, checked numerically.

For smooth compactly supported g and a d = 1 (mod c),

    sum_n d(n) e(an/c) g(n)
        = (1/c) int (log x + 2 gamma - 2 log c) g(x) dx
          - (2 pi/c) sum_l d(l) e(-dl/c) int Y_0(4 pi sqrt(l x)/c) g(x) dx
          + (4/c)    sum_l d(l) e(dl/c)  int K_0(4 pi sqrt(l x)/c) g(x) dx,

with d(n) the number of divisors.  Integrals are taken in u = sqrt(x),
where the Bessel phase 4 pi sqrt(l) u / c is linear, on Gauss-Legendre
panels no wider than one oscillation period.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .afe import AfeWeightConfig
from .arith import ArithmeticDomainError, PrimeLevel, e_frac, mod_inverse, sigma_k_table
from .bessel import jn, k0, y0
from .gammafn import EULER_GAMMA
from .quadrature import QuadratureError, panel_rule
from .spectral import psi1

__all__ = [
    "SmoothTestFunction",
    "bump",
    "gaussian_bump",
    "balanced",
    "VoronoiResult",
    "voronoi_lhs",
    "voronoi_main_term",
    "voronoi_rhs",
    "NsumResult",
    "nsum_kernel",
    "nsum_direct",
    "nsum_decomposition_check",
    "reduced_twist",
    "load_corpus",
    "run_corpus",
]

BLOCK = 64
DEFAULT_ELL_CAP = 20000
K0_TAIL_TOL = 1e-10


# --------------------------------------------------------------------------
# test functions


def _smooth_step(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
        b = np.where(y < 1, np.exp(-1.0 / np.where(y < 1, 1.0 - y, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothTestFunction:
    """A smooth function supported on [x0, x1] with a serialisable description."""

    tag: str
    params: dict
    support: tuple
    func: object = field(repr=False, compare=False)

    def __post_init__(self):
        x0, x1 = self.support
        if not 0 < x0 < x1:
            raise ValueError(f"support {self.support} must satisfy 0 < x0 < x1")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        x0, x1 = self.support
        out = np.zeros_like(x)
        inside = (x > x0) & (x < x1)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out

    def evaluate(self, x):
        return self(x)

    def to_spec(self) -> dict:
        return {"tag": self.tag, **self.params}

    @classmethod
    def from_spec(cls, spec: dict) -> "SmoothTestFunction":
        spec = dict(spec)
        tag = spec.pop("tag")
        if tag == "bump":
            return bump(**spec)
        if tag == "gaussian_bump":
            return gaussian_bump(**spec)
        if tag == "balanced":
            return balanced(cls.from_spec(spec["first"]), cls.from_spec(spec["second"]), spec["c"])
        raise ValueError(f"unknown test-function tag {tag!r}")


def bump(x0: float, x1: float) -> SmoothTestFunction:
    """exp(-w/(x - x0) - w/(x1 - x) + 4) with w = x1 - x0; peak 1 at the midpoint."""
    w = x1 - x0

    def f(x):
        return np.exp(-w / (x - x0) - w / (x1 - x) + 4.0)

    return SmoothTestFunction("bump", {"x0": x0, "x1": x1}, (x0, x1), f)


def gaussian_bump(center: float, width: float, x0: float | None = None, x1: float | None = None):
    """exp(-((x - center)/width)^2) times a flat-top cutoff.

    The default support is center -/+ 6 width (Gaussian below 3e-16 at the
    edges); the cutoff ramps over the outer tenth of the support on each side.
    """
    x0 = center - 6 * width if x0 is None else x0
    x1 = center + 6 * width if x1 is None else x1
    ramp = 0.1 * (x1 - x0)

    def f(x):
        cut = _smooth_step((x - x0) / ramp) * _smooth_step((x1 - x) / ramp)
        return np.exp(-(((x - center) / width) ** 2)) * cut

    return SmoothTestFunction(
        "gaussian_bump", {"center": center, "width": width, "x0": x0, "x1": x1}, (x0, x1), f
    )


def balanced(first: SmoothTestFunction, second: SmoothTestFunction, c: int) -> SmoothTestFunction:
    """first - kappa * second with kappa chosen so the modulus-c main term vanishes."""
    kappa = _main_integral(first, c) / _main_integral(second, c)
    support = (min(first.support[0], second.support[0]), max(first.support[1], second.support[1]))

    def f(x):
        return first(x) - kappa * second(x)

    params = {"first": first.to_spec(), "second": second.to_spec(), "c": c}
    return SmoothTestFunction("balanced", params, support, f)


# --------------------------------------------------------------------------
# quadrature in u = sqrt(x)


def _u_rule(g: SmoothTestFunction, omega: float, depth: int = 1, order: int = 20):
    """Nodes u and weights for int g(u^2) F(u) 2u du, panels at most one period of omega."""
    u0, u1 = math.sqrt(g.support[0]), math.sqrt(g.support[1])
    periods = (u1 - u0) * omega / (2 * math.pi)
    n_panels = depth * (48 + int(math.ceil(periods)))
    u, w = panel_rule(u0, u1, n_panels, order)
    return u, w * 2 * u * g(u * u)


def _main_integral(g: SmoothTestFunction, c: int, depth: int = 1) -> float:
    u, w = _u_rule(g, 0.0, depth)
    return float(np.sum(w * (2 * np.log(u) + 2 * EULER_GAMMA - 2 * math.log(c))))


def voronoi_main_term(g: SmoothTestFunction, c: int, depth: int = 1) -> float:
    return _main_integral(g, c, depth) / c


# --------------------------------------------------------------------------
# the two sides


def voronoi_lhs(g: SmoothTestFunction, a: int, c: int) -> complex:
    """sum_n d(n) e(an/c) g(n) over the integers in g's support."""
    if c < 1:
        raise ArithmeticDomainError("c must be >= 1")
    if math.gcd(a, c) != 1:
        raise ArithmeticDomainError(f"gcd({a}, {c}) > 1: no inverse d with ad = 1 mod c")
    n0 = max(1, int(math.floor(g.support[0])))
    n = np.arange(n0, int(math.ceil(g.support[1])) + 1)
    tau = sigma_k_table(int(n[-1]), 2)[n]
    return complex(np.sum(tau * e_frac(a * n, c) * g(n)))


@dataclass(frozen=True)
class VoronoiResult:
    value: complex
    main: float
    y0_part: complex
    k0_part: complex
    ell_cap: int
    y0_tail_proxy: float
    k0_tail: float
    converged: bool


def _k0_tail_bound(g, c, L, abs_mass):
    """Certified bound for (4/c) sum_{l > L} d(l) |int K_0 g|, using d(l) <= l, K_0(z) <= e^{-z} for z >= pi/2."""
    a = 4 * math.pi * math.sqrt(g.support[0]) / c
    if a * math.sqrt(L + 1) < max(math.pi / 2, 2.0):
        return math.inf
    s = math.sqrt(L)
    integral = 2 * math.exp(-a * s) * (s**3 / a + 3 * s**2 / a**2 + 6 * s / a**3 + 6 / a**4)
    return 4.0 / c * abs_mass * integral


class _RuleCache:
    """u-rules for g, one per power-of-two bucket of the oscillation frequency."""

    def __init__(self, g, depth):
        self.g, self.depth, self.rules = g, depth, {}

    def __call__(self, omega):
        bucket = 0 if omega <= 1 else int(math.ceil(math.log2(omega)))
        if bucket not in self.rules:
            self.rules[bucket] = _u_rule(self.g, 2.0**bucket if bucket else 0.0, self.depth)
        return self.rules[bucket]


def _bessel_block(rules, c, ells, kernel):
    omega = 4 * math.pi * math.sqrt(float(ells[-1])) / c
    u, w = rules(omega if kernel == "Y0" else 0.0)
    arg = (4 * math.pi / c) * np.sqrt(ells.astype(float))[:, None] * u[None, :]
    vals = y0(arg) if kernel == "Y0" else k0(arg)
    return vals @ w


def voronoi_rhs(
    g: SmoothTestFunction,
    a: int,
    c: int,
    ell_cap: int = DEFAULT_ELL_CAP,
    depth: int = 1,
    tol: float = 1e-10,
    strict: bool = False,
) -> VoronoiResult:
    """Dual side of the Voronoi formula.

    The K_0 series stops once its certified tail is below 1e-10.  The Y_0
    series is summed in blocks of 64 until ten times the last block's mass
    falls below tol (1 + |partial rhs|); that proxy is empirical.  If
    ell_cap is reached first the result is flagged, or raised with strict.
    """
    if math.gcd(a, c) != 1:
        raise ArithmeticDomainError(f"gcd({a}, {c}) > 1: no inverse d with ad = 1 mod c")
    d = mod_inverse(a % c, c) if c > 1 else 0
    main = voronoi_main_term(g, c, depth)
    rules = _RuleCache(g, depth)
    abs_mass = float(np.sum(np.abs(rules(0.0)[1])))

    tau = sigma_k_table(ell_cap, 2)
    # K_0 part
    k_sum = 0j
    L = 0
    k_tail = math.inf
    while L < ell_cap:
        ells = np.arange(L + 1, min(L + BLOCK, ell_cap) + 1)
        ints = _bessel_block(rules, c, ells, "K0")
        k_sum += np.sum(tau[ells] * e_frac(d * ells, c) * ints)
        L = int(ells[-1])
        k_tail = _k0_tail_bound(g, c, L, abs_mass)
        if k_tail < K0_TAIL_TOL:
            break
    k_part = 4.0 / c * k_sum

    # Y_0 part
    y_sum = 0j
    L = 0
    proxy = math.inf
    converged = False
    while L < ell_cap:
        ells = np.arange(L + 1, min(L + BLOCK, ell_cap) + 1)
        ints = _bessel_block(rules, c, ells, "Y0")
        terms = tau[ells] * e_frac(-d * ells, c) * ints
        y_sum += np.sum(terms)
        L = int(ells[-1])
        proxy = 10 * 2 * math.pi / c * float(np.sum(np.abs(terms)))
        if proxy < tol * (1 + abs(main + k_part - 2 * math.pi / c * y_sum)):
            converged = True
            break
    y_part = -2 * math.pi / c * y_sum
    converged = converged and k_tail < K0_TAIL_TOL
    if strict and not converged:
        raise QuadratureError(f"ell_cap={ell_cap} too small: Y0 tail proxy {proxy:.2e}, K0 tail {k_tail:.2e}")
    value = main + y_part + k_part
    return VoronoiResult(complex(value), main, complex(y_part), complex(k_part), L, proxy, k_tail, converged)


# --------------------------------------------------------------------------
# the n_2-sum and its three-term decomposition


def reduced_twist(bc: int, n1: int, t: int):
    """(m, eta) with bc n1 / t = m / eta in lowest terms."""
    g = math.gcd(bc * n1, t)
    return bc * n1 // g, t // g


def nsum_kernel(n1, t, h, bc, level: PrimeLevel, Y: float, X: float | None = None, config=None):
    """g(x) = x^{-1/2} J_{k-1}((4 pi/t) sqrt(h bc n1 x / q)) Psi_1(bc n1 x / Y)."""
    q, k = level.q, level.k
    X = float(q * q) if X is None else X
    config = config or AfeWeightConfig(k=k)
    x0, x1 = Y / (bc * n1), 2 * Y / (bc * n1)
    scale = 4 * math.pi / t * math.sqrt(h * bc * n1 / q)

    def f(x):
        return jn(k - 1, scale * np.sqrt(x)) * psi1(bc * n1 * x / Y, X, q, config) / np.sqrt(x)

    params = {"n1": n1, "t": t, "h": h, "bc": bc, "q": q, "k": k, "Y": Y, "X": X}
    return SmoothTestFunction("nsum_kernel", params, (x0, x1), f)


def nsum_direct(n1, r, t, h, bc, level, Y, X=None):
    """sum_{n2} d(n2) n2^{-1/2} J_{k-1}(...) Psi_1(bc n1 n2/Y) e(r bc n1 n2 / t)."""
    g = nsum_kernel(n1, t, h, bc, level, Y, X)
    n = np.arange(max(1, int(math.floor(g.support[0]))), int(math.ceil(g.support[1])) + 1)
    tau = sigma_k_table(int(n[-1]), 2)[n]
    return complex(np.sum(tau * g(n) * e_frac(r * bc * n1 * n, t)))


@dataclass(frozen=True)
class NsumResult:
    direct: complex
    r1r2r3: complex
    gap: float
    r1: float
    r2: complex
    r3: complex
    eta: int
    m: int
    inverse: int
    y0_tail_proxy: float
    converged: bool


def nsum_decomposition_check(
    n1: int,
    r: int,
    t: int,
    h: int,
    bc: int,
    level: PrimeLevel,
    Y: float,
    X: float | None = None,
    ell_cap: int = DEFAULT_ELL_CAP,
    depth: int = 1,
    tol: float = 1e-8,
) -> NsumResult:
    """Direct n_2-sum against R_1 + R_2 + R_3 from Voronoi with modulus eta."""
    if math.gcd(r, t) != 1:
        raise ArithmeticDomainError(f"gcd(r, t) = gcd({r}, {t}) > 1")
    m, eta = reduced_twist(bc, n1, t)
    if eta > 1:
        inv = mod_inverse(m * r % eta, eta)
        separate = mod_inverse(m % eta, eta) * mod_inverse(r % eta, eta) % eta
        if inv != separate:
            raise AssertionError("inverse of the product differs from the product of inverses")
    else:
        inv = 0
    g = nsum_kernel(n1, t, h, bc, level, Y, X)
    direct = nsum_direct(n1, r, t, h, bc, level, Y, X)
    res = voronoi_rhs(g, (m * r) % eta if eta > 1 else 0, eta, ell_cap=ell_cap, depth=depth, tol=tol)
    total = res.value
    return NsumResult(
        direct,
        total,
        abs(direct - total),
        res.main,
        res.y0_part,
        res.k0_part,
        eta,
        m,
        inv,
        res.y0_tail_proxy,
        res.converged,
    )


# --------------------------------------------------------------------------
# corpus files


def load_corpus(path) -> list[dict]:
    """Read a JSON list (or JSON-lines file) of corpus records."""
    with open(path) as fh:
        text = fh.read()
    text = text.strip()
    if text.startswith("["):
        return json.loads(text)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def run_corpus(records, ell_cap: int = DEFAULT_ELL_CAP) -> list[dict]:
    """Evaluate Voronoi records {g, a, c, expected_gap} and n_2-sum records {nsum: {...}, expected_gap}."""
    out = []
    for rec in records:
        row = dict(rec)
        if "nsum" in rec:
            p = rec["nsum"]
            level = PrimeLevel(p["q"], p["k"])
            res = nsum_decomposition_check(
                p["n1"], p["r"], p["t"], p["h"], p["bc"], level, p["Y"], p.get("X"), ell_cap
            )
            scale = abs(res.direct)
            row.update(lhs=[res.direct.real, res.direct.imag], rhs=[res.r1r2r3.real, res.r1r2r3.imag])
            row.update(gap=res.gap / scale if scale else res.gap, converged=res.converged)
        else:
            g = SmoothTestFunction.from_spec(rec["g"])
            lhs = voronoi_lhs(g, rec["a"], rec["c"])
            res = voronoi_rhs(g, rec["a"], rec["c"], ell_cap=ell_cap)
            row.update(lhs=[lhs.real, lhs.imag], rhs=[res.value.real, res.value.imag])
            row.update(gap=abs(lhs - res.value) / (1 + abs(lhs)), converged=res.converged)
        row["ok"] = bool(row["gap"] <= rec.get("expected_gap", 1e-6))
        out.append(row)
    return out
