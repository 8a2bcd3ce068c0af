"""Exact arithmetic kernels.

Divisor functions, Moebius, Dirichlet characters modulo a prime,
Ramanujan sums, plain and character-twisted Kloosterman sums, and the
integer coefficient ``A(b, c; d, j)`` of the fourth-power expansion.

Everything here is a pure function of its arguments.  Additive characters
``e(x) = exp(2 pi i x)`` are always evaluated on the reduced fraction, so
large integer arguments lose no precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, gcd, isqrt

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "ArithmeticDomainError",
    "PrimeLevel",
    "DirichletCharacter",
    "is_prime",
    "factorize",
    "sigma_k",
    "sigma",
    "moebius",
    "euler_phi",
    "lcm",
    "is_squarefree",
    "divisors",
    "sigma_product_identity_check",
    "a_coefficient",
    "ramanujan_sum",
    "ramanujan_sum_enumerated",
    "kloosterman",
    "kloosterman_twisted",
    "mod_inverse",
    "unit_inverse_table",
    "e_frac",
    "characters",
    "primitive_root",
]


class ArithmeticDomainError(ValueError):
    """Argument outside the domain of an arithmetic function."""


def _check_positive(name, value):
    if int(value) != value or value < 1:
        raise ArithmeticDomainError(f"{name} must be a positive integer, got {value!r}")


# --------------------------------------------------------------------------
# primes and factorization

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact for n < 3.3e24)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of n as ((p, e), ...) by trial division."""
    _check_positive("n", n)
    out = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        out.append((m, 1))
    return tuple(out)


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


# --------------------------------------------------------------------------
# multiplicative functions


def sigma_k(n: int, k: int) -> int:
    """Number of ordered k-tuples of positive integers with product n.

    ``sigma_k(n, 2)`` is the ordinary divisor count.
    """
    _check_positive("n", n)
    _check_positive("k", k)
    out = 1
    for _, e in factorize(n):
        out *= comb(e + k - 1, k - 1)
    return out


def sigma(n: int) -> int:
    return sigma_k(n, 2)


def moebius(n: int) -> int:
    _check_positive("n", n)
    out = 1
    for _, e in factorize(n):
        if e > 1:
            return 0
        out = -out
    return out


def is_squarefree(n: int) -> bool:
    return moebius(n) != 0


def euler_phi(n: int) -> int:
    _check_positive("n", n)
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def sigma_k_table(nmax: int, k: int) -> np.ndarray:
    """Array t with t[n] = sigma_k(n) for 1 <= n <= nmax (t[0] = 0).

    Built by repeated Dirichlet convolution with the constant function 1.
    """
    t = np.zeros(nmax + 1, dtype=np.int64)
    t[1:] = 1
    for _ in range(k - 1):
        nxt = np.zeros_like(t)
        for d in range(1, nmax + 1):
            nxt[d::d] += t[d]
        t = nxt
    return t


def sigma_product_identity_check(n1: int, n2: int) -> bool:
    """Exact check of sigma(n1 n2) = sum_{d | (n1, n2)} mu(d) sigma(n1/d) sigma(n2/d)."""
    _check_positive("n1", n1)
    _check_positive("n2", n2)
    lhs = sigma(n1 * n2)
    rhs = sum(moebius(d) * sigma(n1 // d) * sigma(n2 // d) for d in divisors(gcd(n1, n2)))
    return lhs == rhs


def a_coefficient(b: int, c: int, d: int, j: int) -> int:
    """``mu(b) mu(c) sigma(d[b,c]/b) sigma(d[b,c]/c) sigma(j)`` as an exact integer."""
    for name, v in (("b", b), ("c", c), ("d", d), ("j", j)):
        _check_positive(name, v)
    mb, mc = moebius(b), moebius(c)
    if mb == 0 or mc == 0:
        return 0
    l = lcm(b, c)
    return mb * mc * sigma(d * l // b) * sigma(d * l // c) * sigma(j)


# --------------------------------------------------------------------------
# modular arithmetic


def mod_inverse(a: int, m: int) -> int:
    """Inverse of a modulo m by the extended Euclidean algorithm."""
    if m == 1:
        return 0
    old_r, r = a % m, m
    old_s, s = 1, 0
    while r:
        quo = old_r // r
        old_r, r = r, old_r - quo * r
        old_s, s = s, old_s - quo * s
    if old_r != 1:
        raise ArithmeticDomainError(f"{a} is not invertible modulo {m}")
    return old_s % m


@lru_cache(maxsize=4096)
def unit_inverse_table(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Residues a in [0, c) coprime to c together with their inverses.

    The extended Euclidean recursion runs elementwise over the whole residue
    array at once.  Returned arrays are read-only and shared between callers.
    """
    _check_positive("c", c)
    if c == 1:
        units = np.zeros(1, dtype=np.int64)
        inv = np.zeros(1, dtype=np.int64)
    else:
        a = np.arange(c, dtype=np.int64)
        units = a[np.gcd(a, c) == 1]
        old_r = units.copy()
        r = np.full_like(units, c)
        old_s = np.ones_like(units)
        s = np.zeros_like(units)
        while np.any(r):
            live = r != 0
            quo = np.zeros_like(r)
            quo[live] = old_r[live] // r[live]
            old_r, r = np.where(live, r, old_r), np.where(live, old_r - quo * r, r)
            old_s, s = np.where(live, s, old_s), np.where(live, old_s - quo * s, s)
        inv = old_s % c
    units.setflags(write=False)
    inv.setflags(write=False)
    return units, inv


def e_frac(num, den):
    """exp(2 pi i num/den) with num reduced modulo den before the division."""
    num = np.asarray(num)
    if np.issubdtype(num.dtype, np.integer):
        red = np.mod(num, den)
        return np.exp(1j * TWO_PI * (red / den))
    x = num / den
    return np.exp(1j * TWO_PI * (x - np.floor(x)))


# --------------------------------------------------------------------------
# Dirichlet characters modulo a prime


@lru_cache(maxsize=256)
def primitive_root(q: int) -> int:
    """Least primitive root of the prime q."""
    if not is_prime(q):
        raise ArithmeticDomainError(f"modulus {q} is not prime")
    if q == 2:
        return 1
    fac = [p for p, _ in factorize(q - 1)]
    for g in range(2, q):
        if all(pow(g, (q - 1) // p, q) != 1 for p in fac):
            return g
    raise AssertionError("unreachable: every prime has a primitive root")


@lru_cache(maxsize=256)
def _discrete_log_table(q: int) -> np.ndarray:
    g = primitive_root(q)
    ind = np.full(q, -1, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        ind[x] = i
        x = x * g % q
    ind.setflags(write=False)
    return ind


@dataclass(frozen=True)
class PrimeLevel:
    """Prime level q and weight k of the family."""

    q: int
    k: int

    def __post_init__(self):
        if not is_prime(self.q) or self.q < 5:
            raise ArithmeticDomainError(f"level q={self.q} must be a prime >= 5")
        if self.k < 2:
            raise ArithmeticDomainError(f"weight k={self.k} must be >= 2")

    @property
    def in_odd_weight_range(self) -> bool:
        """True when k is odd and at least 3."""
        return self.k >= 3 and self.k % 2 == 1

    @property
    def parity(self) -> int:
        return -1 if self.k % 2 else 1


@dataclass(frozen=True)
class DirichletCharacter:
    """Character chi_a(n) = e(a ind(n) / (q - 1)) modulo the prime q.

    ``ind`` is the discrete logarithm to the least primitive root.
    """

    modulus: int
    index: int
    table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = self.modulus
        if not is_prime(q):
            raise ArithmeticDomainError(f"modulus {q} is not prime")
        object.__setattr__(self, "index", self.index % (q - 1))
        ind = _discrete_log_table(q)
        tab = np.zeros(q, dtype=np.complex128)
        tab[1:] = e_frac(self.index * ind[1:], q - 1)
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def generator(self) -> int:
        return primitive_root(self.modulus)

    @property
    def parity(self) -> int:
        """chi(-1), equal to (-1)^index."""
        return -1 if self.index % 2 else 1

    @property
    def is_trivial(self) -> bool:
        return self.index == 0

    def __call__(self, n):
        return self.table[np.mod(n, self.modulus)]

    def value(self, n: int) -> complex:
        return complex(self.table[n % self.modulus])

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, -self.index)


def characters(q: int, parity: int | None = None) -> list[DirichletCharacter]:
    """All characters mod q in index order, optionally filtered by chi(-1)."""
    out = [DirichletCharacter(q, a) for a in range(q - 1)]
    if parity is not None:
        out = [chi for chi in out if chi.parity == parity]
    return out


# --------------------------------------------------------------------------
# complete exponential sums


def ramanujan_sum(h: int, t: int) -> int:
    """Closed form mu(t/(t,h)) phi(t) / phi(t/(t,h))."""
    _check_positive("h", h)
    _check_positive("t", t)
    s = t // gcd(t, h)
    return moebius(s) * euler_phi(t) // euler_phi(s)


def ramanujan_sum_enumerated(h: int, t: int, check: bool = True) -> int:
    """Ramanujan sum by direct summation of e(h rbar / t) over units r mod t.

    With ``check`` the result is compared against the closed form and a
    disagreement above 1e-9 raises ``AssertionError``.
    """
    _check_positive("h", h)
    _check_positive("t", t)
    _, inv = unit_inverse_table(t)
    total = complex(np.sum(e_frac(h * inv, t)))
    value = int(round(total.real))
    if check:
        closed = ramanujan_sum(h, t)
        if abs(total - closed) > 1e-9:
            raise AssertionError(
                f"Ramanujan sum c_{t}({h}): enumeration {total} vs closed form {closed}"
            )
    return value


def kloosterman(m: int, n: int, c: int) -> float:
    """S(m, n; c) = sum over a abar = 1 (mod c) of e((a m + abar n)/c)."""
    _check_positive("c", c)
    units, inv = unit_inverse_table(c)
    total = complex(np.sum(e_frac(units * (m % c) + inv * (n % c), c)))
    if abs(total.imag) > 1e-9:
        raise AssertionError(f"S({m},{n};{c}) has imaginary part {total.imag}")
    return total.real


def kloosterman_twisted(m: int, n: int, c: int, chi: DirichletCharacter) -> complex:
    """sum over a d = 1 (mod c) of chi(d) e((a m + d n)/c), chi read mod its modulus."""
    _check_positive("c", c)
    d, a = unit_inverse_table(c)
    phases = e_frac(a * (m % c) + d * (n % c), c)
    return complex(np.sum(chi(d) * phases))
