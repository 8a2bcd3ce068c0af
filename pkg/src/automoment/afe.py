"""Approximate functional equation machinery.

The smooth weight

    V(xi) = 1/(2 pi i) int_{(c)} H(s)^4 Gamma(a + s)^4 / Gamma(a)^4 xi^{-s} ds / s,

synthetic Hecke eigenvalue systems with nebentypus, the two routes to the
Dirichlet coefficients of L(f, s)^4 (plain four-fold convolution and the
expansion through A(b, c; d, j)), and enumeration of the terms
(b, c, d, j, n) of the fourth-power sum with a certified tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import zeta

from .arith import (
    ArithmeticDomainError,
    DirichletCharacter,
    PrimeLevel,
    a_coefficient,
    factorize,
    is_squarefree,
    lcm,
    sigma_k_table,
)
from .gammafn import log_cos_pi, loggamma
from .quadrature import QuadratureError, panel_rule

__all__ = [
    "AfeWeightConfig",
    "VWeight",
    "v_weight",
    "HeckeSystem",
    "hecke_extend",
    "l4_coefficients_direct",
    "l4_coefficients_expanded",
    "AfeTerm",
    "AfeEnumeration",
    "afe_enumerate",
    "enumerate_tuples",
    "dirichlet_convolve",
]

FOUR_PI_SQ = (2.0 * np.pi) ** 4


# --------------------------------------------------------------------------
# the weight V


@dataclass(frozen=True)
class AfeWeightConfig:
    """Parameters of the weight V.

    ``h_power`` m selects H(s) = cos(pi s / 8)^m (m = 0 is H = 1).
    ``gamma_shift`` is ``"k/2"`` (the weight's Gamma(k/2 + s)) or
    ``"(k-1)/2"`` (the completed L-function's Gamma(s + (k-1)/2)).
    """

    k: int = 3
    h_power: int = 0
    contour_re: float = 1.0
    truncation_height: float = 30.0
    gamma_shift: str = "k/2"
    panel_order: int = 20

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("weight k must be >= 2")
        if self.h_power < 0:
            raise ValueError("h_power must be >= 0")
        if self.gamma_shift not in ("k/2", "(k-1)/2"):
            raise ValueError(f"unknown gamma_shift {self.gamma_shift!r}")
        if not 0.0 < self.contour_re < 3.0:
            raise ValueError("contour_re must lie in (0, 3) where H is bounded")
        if self.truncation_height <= 0:
            raise ValueError("truncation_height must be positive")
        s = np.array([0.3 + 0.7j, 1.1 - 2.0j, 2.5j])
        if abs(complex(self.h(np.array([0.0]))[0]) - 1) > 1e-12:
            raise ValueError("H(0) must equal 1")
        if np.max(np.abs(self.h(s) - self.h(-s))) > 1e-12:
            raise ValueError("H must be even")

    @property
    def gamma_base(self) -> float:
        return self.k / 2 if self.gamma_shift == "k/2" else (self.k - 1) / 2

    def h(self, s):
        s = np.asarray(s, dtype=np.complex128)
        if self.h_power == 0:
            return np.ones_like(s)
        return np.exp(self.h_power * log_cos_pi(s / 8.0))

    def log_h4(self, s):
        if self.h_power == 0:
            return np.zeros_like(np.asarray(s, dtype=np.complex128))
        return 4.0 * self.h_power * log_cos_pi(np.asarray(s, dtype=np.complex128) / 8.0)


class VWeight:
    """Vectorised evaluator of V for one configuration.

    For xi >= 1 the integral runs on Re(s) = contour_re.  For xi < 1 the
    line is moved to Re(s) = -a/2 (a the Gamma base, first pole at -a) and
    the residue H(0)^4 = 1 at s = 0 is added back; on the original line the
    value 1 would sit under an integrand of size xi^{-contour_re}.
    """

    def __init__(self, config: AfeWeightConfig | None = None):
        self.config = config or AfeWeightConfig()
        a = self.config.gamma_base
        self.left_re = -0.5 * a
        self._log_g0 = float(loggamma(np.array([a + 0j]))[0].real)
        self.height = self._safe_height()

    def _log_integrand_mag(self, c, t):
        s = c + 1j * np.asarray(t, dtype=float)
        a = self.config.gamma_base
        val = self.config.log_h4(s) + 4.0 * (loggamma(a + s) - self._log_g0) - np.log(s)
        return val.real

    def _safe_height(self):
        cfg = self.config
        height = cfg.truncation_height
        for c in (cfg.contour_re, self.left_re):
            peak = float(np.max(self._log_integrand_mag(c, np.linspace(0, 5, 11))))
            while self._log_integrand_mag(c, np.array([height]))[0] - peak > -45.0:
                height *= 1.5
        return height

    def _line(self, xi, c):
        """Complex (1/2 pi) int_{-T}^{T} of the integrand on Re(s) = c, for each xi."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        lx = np.log(xi)
        freq = float(np.max(np.abs(lx))) + 1.0
        width = min(0.5, np.pi / freq)
        n_panels = int(math.ceil(2 * self.height / width))
        t, w = panel_rule(-self.height, self.height, n_panels, self.config.panel_order)
        s = c + 1j * t
        a = self.config.gamma_base
        base = self.config.log_h4(s) + 4.0 * (loggamma(a + s) - self._log_g0) - np.log(s)
        vals = np.exp(base[None, :] - s[None, :] * lx[:, None])
        return vals @ w / (2.0 * np.pi)

    def complex_value(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if np.any(xi <= 0):
            raise ValueError("xi must be positive")
        out = np.empty(xi.shape, dtype=np.complex128)
        small = xi < 1.0
        if np.any(small):
            out[small] = 1.0 + self._line(xi[small], self.left_re)
        if np.any(~small):
            out[~small] = self._line(xi[~small], self.config.contour_re)
        return out

    def __call__(self, xi):
        xi_arr = np.asarray(xi, dtype=float)
        val = self.complex_value(xi_arr).real
        return val.reshape(xi_arr.shape) if xi_arr.ndim else float(val[0])

    def check_convergence(self, xi, tol=1e-10):
        """Compare against a run with doubled height; raises QuadratureError on disagreement."""
        other = VWeight.__new__(VWeight)
        other.__dict__.update(self.__dict__)
        other.height = 2.0 * self.height
        diff = float(np.max(np.abs(other.complex_value(xi) - self.complex_value(xi))))
        if diff > tol:
            raise QuadratureError(f"V quadrature not converged (doubling height moved it by {diff:.2e})")
        return diff

    def decay_constant(self, power: float = 3.0, safety: float = 10.0) -> float:
        """safety * max over a probe grid of x^power |V(x)|."""
        return _decay_constant(self.config, power, safety)


@lru_cache(maxsize=32)
def _decay_constant(config, power, safety):
    probe = np.logspace(-3, 5, 161)
    v = VWeight(config)
    return safety * float(np.max(probe**power * np.abs(v(probe))))


@lru_cache(maxsize=32)
def _weight_for(config):
    return VWeight(config)


def v_weight(xi, config: AfeWeightConfig | None = None):
    return _weight_for(config or AfeWeightConfig())(xi)


# --------------------------------------------------------------------------
# Hecke systems


def _primes_up_to(n):
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


@dataclass(frozen=True)
class HeckeSystem:
    """Multiplicative eigenvalue system with nebentypus chi.

    At p != q the Satake pair is (alpha_p, chi(p)/alpha_p) with alpha_p on
    the unit circle, drawn from a generator keyed on (seed, p) so that the
    table for any cap is a prefix of the table for a larger cap.  ``satake``
    overrides individual primes.  At the ramified prime q, lambda(q^j) =
    lambda_q^j.
    """

    level: PrimeLevel
    character: DirichletCharacter
    seed: int = 0
    lambda_q: complex = 0.0
    satake: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.character.modulus != self.level.q:
            raise ArithmeticDomainError("character modulus must equal the level")
        if abs(self.lambda_q) > 1 + 1e-12:
            raise ArithmeticDomainError("|lambda(q)| must be <= 1")

    @classmethod
    def random(cls, level: PrimeLevel, seed: int, character: DirichletCharacter | None = None, lambda_q=0.0):
        if character is None:
            rng = np.random.default_rng([seed, 0])
            character = DirichletCharacter(level.q, int(rng.integers(0, level.q - 1)))
        return cls(level, character, seed, lambda_q)

    def alpha(self, p: int) -> complex:
        if p in self.satake:
            return complex(self.satake[p][0])
        theta = np.random.default_rng([self.seed, 1, p]).uniform(0.0, 2.0 * np.pi)
        return complex(np.exp(1j * theta))

    def satake_pair(self, p: int) -> tuple[complex, complex]:
        if p in self.satake:
            a, b = self.satake[p]
            return complex(a), complex(b)
        a = self.alpha(p)
        return a, self.character.value(p) / a

    def chi(self, n):
        return self.character(n)


def hecke_extend(system: HeckeSystem, cap: int) -> np.ndarray:
    """lam[n] = lambda(n) for 1 <= n <= cap (lam[0] = 0)."""
    if cap < 1:
        raise ArithmeticDomainError("cap must be >= 1")
    q = system.level.q
    lam = np.zeros(cap + 1, dtype=np.complex128)
    lam[1] = 1.0
    prime_power = {}
    for p in _primes_up_to(cap):
        if p == q:
            val, pe = complex(system.lambda_q), p
            power = 1.0 + 0j
            while pe <= cap:
                power *= val
                prime_power[pe] = power
                pe *= p
            continue
        a, b = system.satake_pair(p)
        lp = a + b
        chip = system.character.value(p)
        prev, cur = 1.0 + 0j, lp
        pe = p
        while pe <= cap:
            prime_power[pe] = cur
            prev, cur = cur, lp * cur - chip * prev
            pe *= p
    for n in range(2, cap + 1):
        (p, e), *rest = factorize(n)
        pe = p**e
        lam[n] = prime_power[pe] * lam[n // pe]
    return lam


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    cap = len(f) - 1
    out = np.zeros(cap + 1, dtype=np.result_type(f, g))
    for d in range(1, cap + 1):
        m = cap // d
        out[d : d * m + 1 : d] += f[d] * g[1 : m + 1]
    return out


def l4_coefficients_direct(system: HeckeSystem, cap: int) -> np.ndarray:
    """Coefficients of L(f, s)^4 up to cap by four-fold convolution of lambda."""
    lam = hecke_extend(system, cap)
    out = dirichlet_convolve(lam, lam)
    out = dirichlet_convolve(out, lam)
    return dirichlet_convolve(out, lam)


def l4_coefficients_expanded(system: HeckeSystem, cap: int) -> np.ndarray:
    """Coefficients of L(f, s)^4 via the (b, c, d, j, n) expansion.

    Coefficient at N sums chi(j[b,c]d) A(b,c;d,j) lambda(b c n) sigma_4(n)
    over tuples with b c [b,c]^2 d^2 j^2 n = N.
    """
    lam = hecke_extend(system, cap)
    s4 = sigma_k_table(cap, 4)
    out = np.zeros(cap + 1, dtype=np.complex128)
    sqfree = [b for b in range(1, cap + 1) if is_squarefree(b)]
    for j in range(1, math.isqrt(cap) + 1):
        for b in sqfree:
            if b * b * j * j > cap:
                break
            for c in sqfree:
                l = lcm(b, c)
                base = b * c * l * l * j * j
                if base > cap:
                    if c > b and b * c * c * c * j * j > cap:
                        break
                    continue
                d = 1
                while base * d * d <= cap:
                    step = base * d * d
                    coeff = system.character.value(j * l * d) * a_coefficient(b, c, d, j)
                    if coeff != 0:
                        nmax = cap // step
                        n = np.arange(1, nmax + 1)
                        out[step * n] += coeff * lam[b * c * n] * s4[n]
                    d += 1
    return out


# --------------------------------------------------------------------------
# term enumeration


@dataclass(frozen=True)
class AfeTerm:
    b: int
    c: int
    d: int
    j: int
    n: int
    coefficient: float
    xi: float


@dataclass
class AfeEnumeration:
    terms: list
    xi_max: float
    tail_bound: float
    decay_constant: float
    decay_power: float
    rankin_exponent: float


def _xi_scale(q):
    return FOUR_PI_SQ / (q * q)


def _tuple_count(mmax):
    """Number of (b, c, d, j, n) with (j [b,c] d)^2 b c n <= mmax."""
    total = 0
    for j, b, c, l, d in _outer_tuples(mmax):
        total += mmax // ((j * l * d) ** 2 * b * c)
    return total


def _outer_tuples(mmax):
    j = 1
    while j * j <= mmax:
        b = 1
        while j * j * b * b * b <= mmax:
            c = 1
            while True:
                l = lcm(b, c)
                if (j * l) ** 2 * b * c > mmax:
                    # [b, c] >= c, so (j c)^2 b c bounds every later c
                    if (j * c) ** 2 * b * c > mmax:
                        break
                    c += 1
                    continue
                d = 1
                while (j * l * d) ** 2 * b * c <= mmax:
                    yield j, b, c, l, d
                    d += 1
                c += 1
            b += 1
        j += 1


def enumerate_tuples(q: int, xi_max: float, budget: int = 10**8):
    """All AfeTerms with xi <= xi_max, in (j, b, c, d, n) lexicographic order."""
    scale = _xi_scale(q)
    mmax = int(math.floor(xi_max / scale * (1 + 1e-12)))
    if mmax < 1:
        return []
    count = _tuple_count(mmax)
    if count > budget:
        raise ValueError(f"{count} tuples exceed the enumeration budget {budget}")
    s4 = sigma_k_table(mmax, 4)
    out = []
    for j, b, c, l, d in _outer_tuples(mmax):
        base = (j * l * d) ** 2 * b * c
        a = a_coefficient(b, c, d, j)
        for n in range(1, mmax // base + 1):
            xi = scale * base * n
            if xi > xi_max:
                break
            coef = a * int(s4[n]) / (j * l * d * math.sqrt(b * c * n))
            out.append(AfeTerm(b, c, d, j, n, coef, xi))
    return out


def _rankin_mass(e):
    """Upper bound for sum over all tuples of |coefficient| * M^{-e}, M = (j[b,c]d)^2 bcn."""
    return float(zeta(1 + 2 * e) ** 10 * zeta(0.5 + e) ** 4 / zeta(2 + 4 * e))


def afe_enumerate(
    level: PrimeLevel,
    config: AfeWeightConfig | None = None,
    tail_tol: float = 1e-3,
    decay_power: float = 3.0,
    budget: int = 10**8,
) -> AfeEnumeration:
    """Terms with xi <= Xi and a certified bound on the neglected mass.

    With |V(x)| <= C x^{-A} and Rankin's trick [xi > Xi] <= (xi/Xi)^delta,
    the tail is at most C Xi^{-delta} K^{delta-A} Z(A - delta) where K is
    (2 pi)^4 / q^2 and Z bounds the Dirichlet series of |coefficients|.
    delta is chosen on a grid to minimise Xi.
    """
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    config = config or AfeWeightConfig(k=level.k)
    const = _weight_for(config).decay_constant(decay_power)
    scale = _xi_scale(level.q)
    best = None
    for delta in np.linspace(0.1, decay_power - 0.55, 40):
        e = decay_power - delta
        mass = const * scale ** (-e) * _rankin_mass(e)
        xi_max = (mass / tail_tol) ** (1.0 / delta)
        if best is None or xi_max < best[0]:
            best = (xi_max, delta, mass)
    xi_max, delta, mass = best
    terms = enumerate_tuples(level.q, xi_max, budget)
    tail = mass * xi_max ** (-delta)
    return AfeEnumeration(terms, xi_max, tail, const, decay_power, float(delta))
