"""Harmonic averages through the Petersson formula and the large sieves.

The central object is the parity-restricted character average

    (2/phi(q)) sum_{chi(-1) = eps} sum^h_f |sum_n a_n lambda_f(n)|^2,

expanded as sum_{m,n} a_m conj(a_n) Delta_chi(m, n).  For every modulus
c = 0 (mod q) the Kloosterman-Bessel contribution of each unit d mod c is
a bilinear form in a; these are grouped by d mod q so that the character
sum reduces to a (characters x residues) product, or, through
orthogonality, to the two residues d = +1 and d = -1 (mod q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .afe import AfeWeightConfig, _weight_for
from .arith import (
    ArithmeticDomainError,
    DirichletCharacter,
    PrimeLevel,
    characters,
    euler_phi,
    is_prime,
    kloosterman,
    kloosterman_twisted,
    lcm,
    mod_inverse,
    sigma_k_table,
    unit_inverse_table,
)
from .bessel import jn

__all__ = [
    "PeterssonValue",
    "CoefficientVector",
    "SieveExperiment",
    "QuadraticFormResult",
    "TruncationError",
    "psi_bump",
    "psi1",
    "petersson_tail_bound",
    "auto_c_cap",
    "petersson_delta",
    "harmonic_quadratic_form",
    "prop25_vector",
    "prop25_quantity",
    "p_ht",
    "large_sieve_sides",
    "random_alpha",
    "gl1_large_sieve_check",
    "cauchy_schwarz_prefactors",
    "moment_trend",
    "loglog_slope",
    "primes_between",
]

MAX_CAP_MULTIPLE = 200
DEFAULT_TAIL_TOL = 1e-10
EPS_HAT = 0.01
ENVELOPE_EPS = 0.1


class TruncationError(RuntimeError):
    """A truncated Petersson sum missed its tolerance or went negative."""


# --------------------------------------------------------------------------
# windows


def psi_bump(x):
    """exp(1/((x-1)(x-2))) scaled to peak 1 at x = 3/2, zero off (1, 2)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 1.0) & (x < 2.0)
    xi = x[inside]
    out[inside] = np.exp(1.0 / ((xi - 1.0) * (xi - 2.0)) + 4.0)
    return out


def psi1(x, X: float, q: int, config: AfeWeightConfig | None = None, eps_hat: float = EPS_HAT):
    """Psi(x) V(x X / q^{2 + eps_hat})."""
    x = np.asarray(x, dtype=float)
    out = psi_bump(x)
    live = out != 0
    if np.any(live):
        v = _weight_for(config or AfeWeightConfig())
        out[live] *= v(x[live] * X / q ** (2.0 + eps_hat))
    return out


# --------------------------------------------------------------------------
# coefficient vectors and experiment descriptors


@dataclass
class CoefficientVector:
    """Complex coefficients a_n supported on N < n <= 2N."""

    indices: np.ndarray
    values: np.ndarray
    N: float
    norm2: float = field(init=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if len(self.indices) and (np.any(self.indices <= self.N) or np.any(self.indices > 2 * self.N)):
            raise ValueError(f"support must lie in ({self.N}, {2 * self.N}]")
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("indices must be distinct")
        self.norm2 = float(np.sum(np.abs(self.values) ** 2))

    @classmethod
    def empty(cls, N: float = 1.0):
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.complex128), N)

    def check_norm(self) -> bool:
        return abs(float(np.sum(np.abs(self.values) ** 2)) - self.norm2) <= 1e-12 * max(1.0, self.norm2)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class SieveExperiment:
    """Scales attached to one active tuple (b, c, d, j) at AFE scale X."""

    level: PrimeLevel
    X: float
    b: int = 1
    c: int = 1
    d: int = 1
    j: int = 1

    @property
    def Y(self) -> float:
        return self.X / (16.0 * math.pi**4 * (self.j * lcm(self.b, self.c) * self.d) ** 2)

    @property
    def T(self) -> float:
        return self.Y / self.level.q

    @property
    def H(self) -> float:
        return self.Y / self.level.q

    @property
    def N(self) -> float:
        """Upper dyadic anchor for the n-block, sqrt(Y/(bc))."""
        return math.sqrt(self.Y / (self.b * self.c))

    def window(self, x):
        return psi_bump(x)

    def describe(self) -> dict:
        return {"q": self.level.q, "k": self.level.k, "X": self.X, "Y": self.Y, "T": self.T, "H": self.H, "N": self.N}


# --------------------------------------------------------------------------
# Petersson formula


@dataclass(frozen=True)
class PeterssonValue:
    value: complex
    tail: float
    c_cap: int


def _tail_constant(level: PrimeLevel) -> float:
    """Constant C with tail <= C (mn)^{(k-1)/2} R^{2-k}, R = c_cap/q."""
    k, q = level.k, level.q
    return 2 * math.pi * (2 * math.pi) ** (k - 1) / math.factorial(k - 1) * q ** (-(k - 1)) / (k - 2)


def petersson_tail_bound(level: PrimeLevel, mn_weight: float, c_cap: int) -> float:
    """Certified bound for the neglected c > c_cap terms.

    ``mn_weight`` is (mn)^{(k-1)/2} for a single pair, or
    (sum |a_m| m^{(k-1)/2})^2 for a quadratic form.
    """
    if level.k < 3:
        raise ArithmeticDomainError("the tail bound needs k >= 3")
    r = c_cap // level.q
    if r < 1:
        raise ArithmeticDomainError("c_cap must be at least q")
    return _tail_constant(level) * mn_weight * r ** (2 - level.k)


def auto_c_cap(level: PrimeLevel, mn_weight: float, tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest multiple of q whose certified tail is below tol, at most 200 q."""
    if mn_weight <= 0:
        return level.q
    need = (_tail_constant(level) * mn_weight / tol) ** (1.0 / (level.k - 2))
    r = min(MAX_CAP_MULTIPLE, max(1, math.ceil(need)))
    while r > 1 and petersson_tail_bound(level, mn_weight, (r - 1) * level.q) < tol:
        r -= 1
    return r * level.q


def _check_cap(level, c_cap):
    if c_cap % level.q or c_cap < level.q:
        raise ArithmeticDomainError(f"c_cap={c_cap} must be a positive multiple of q={level.q}")


def petersson_delta(
    m: int,
    n: int,
    level: PrimeLevel,
    chi: DirichletCharacter,
    c_cap: int | None = None,
    tail_tol: float | None = None,
) -> PeterssonValue:
    """delta_{m,n} + 2 pi i^{-k} sum_{q | c <= c_cap} S_chi(m, n; c)/c J_{k-1}(4 pi sqrt(mn)/c)."""
    if m < 1 or n < 1:
        raise ArithmeticDomainError("m, n must be positive")
    if chi.modulus != level.q:
        raise ArithmeticDomainError("character modulus must equal the level")
    weight = (m * n) ** ((level.k - 1) / 2)
    if c_cap is None:
        c_cap = auto_c_cap(level, weight)
    _check_cap(level, c_cap)
    cs = np.arange(level.q, c_cap + 1, level.q)
    bessel = jn(level.k - 1, 4 * math.pi * math.sqrt(m * n) / cs)
    total = 0j
    for c, jv in zip(cs, bessel):
        total += kloosterman_twisted(m, n, int(c), chi) / c * jv
    value = (1.0 if m == n else 0.0) + 2 * math.pi * (1j) ** (-level.k) * total
    tail = petersson_tail_bound(level, weight, c_cap)
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(f"Petersson tail {tail:.3e} exceeds {tail_tol:.3e} at c_cap={c_cap}")
    return PeterssonValue(complex(value), tail, int(c_cap))


# --------------------------------------------------------------------------
# the character-averaged quadratic form


@dataclass(frozen=True)
class QuadraticFormResult:
    value: float
    tail: float
    c_cap: int
    imag_residual: float
    per_character: tuple = ()
    folded: bool = False


def _grouped_sums(idx, vals, level: PrimeLevel, c_cap: int) -> np.ndarray:
    """G[r] = sum_c 1/c sum_{d = r (q)} sum_{m,n} a_m e(dbar m/c) J(..) conj(a_n) e(d n/c)."""
    q, k = level.q, level.k
    G = np.zeros(q, dtype=np.complex128)
    if len(idx) == 0:
        return G
    root = np.sqrt(idx.astype(float))
    outer = np.outer(root, root)
    conj_vals = np.conj(vals)
    for c in range(q, c_cap + 1, q):
        d, dbar = unit_inverse_table(c)
        W = jn(k - 1, 4 * math.pi * outer / c) / c
        x = vals[None, :] * np.exp(2j * math.pi * (np.outer(dbar, idx) % c) / c)
        y = conj_vals[None, :] * np.exp(2j * math.pi * (np.outer(d, idx) % c) / c)
        z = np.einsum("um,mn,un->u", x, W, y)
        res = d % q
        G += np.bincount(res, weights=z.real, minlength=q) + 1j * np.bincount(res, weights=z.imag, minlength=q)
    return G


def harmonic_quadratic_form(
    alpha: CoefficientVector,
    level: PrimeLevel,
    parity: int | None = None,
    c_cap: int | None = None,
    folded: bool = False,
    tail_tol: float | None = None,
    neg_tol: float = 1e-8,
) -> QuadraticFormResult:
    """(2/phi(q)) sum_{chi(-1) = parity} sum^h |sum a_n lambda(n)|^2 by the Petersson formula.

    ``parity`` defaults to (-1)^k.  With ``folded`` the character sum is
    collapsed by orthogonality to the residues +1 and -1 mod q; otherwise
    each character is summed separately and the per-character averages are
    returned alongside.
    """
    q, k = level.q, level.k
    parity = level.parity if parity is None else parity
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    idx, vals = alpha.indices, alpha.values
    weight = float(np.sum(np.abs(vals) * idx.astype(float) ** ((k - 1) / 2))) ** 2
    if c_cap is None:
        c_cap = auto_c_cap(level, weight)
    _check_cap(level, c_cap)
    tail = petersson_tail_bound(level, weight, c_cap) if weight > 0 else 0.0
    if len(idx) == 0:
        return QuadraticFormResult(0.0, 0.0, int(c_cap), 0.0, (), folded)
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(f"Petersson tail {tail:.3e} exceeds {tail_tol:.3e} at c_cap={c_cap}")
    G = _grouped_sums(idx, vals, level, c_cap)
    factor = 2 * math.pi * (1j) ** (-k)
    diag = alpha.norm2
    per_char = ()
    if folded:
        off = G[1] + parity * G[q - 1]
        total = diag + factor * off
    else:
        chis = characters(q, parity)
        table = np.array([chi.table for chi in chis])
        per = diag + factor * (table @ G)
        per_char = tuple(complex(v) for v in per)
        total = np.sum(per) * 2 / euler_phi(q)
    value = float(np.real(total))
    if value < -neg_tol:
        raise TruncationError(f"negative mean square {value:.3e}: truncation failure")
    return QuadraticFormResult(value, tail, int(c_cap), float(abs(np.imag(total))), per_char, folded)


def prop25_vector(
    b: int,
    c: int,
    Y: float,
    level: PrimeLevel,
    X: float | None = None,
    config: AfeWeightConfig | None = None,
) -> CoefficientVector:
    """a_{bcn} = sigma_4(n) Psi_1(bcn/Y) / sqrt(bcn) on bcn in (Y, 2Y].

    A window with Y < 1 is treated as empty.
    """
    if Y < 1:
        return CoefficientVector.empty(max(Y, 1e-300))
    X = float(level.q**2) if X is None else X
    bc = b * c
    n = np.arange(1, int(2 * Y // bc) + 1)
    m = bc * n
    keep = (m > Y) & (m <= 2 * Y)
    n, m = n[keep], m[keep]
    s4 = sigma_k_table(int(n.max()) if len(n) else 1, 4)
    config = config or AfeWeightConfig(k=level.k)
    vals = s4[n] * psi1(m / Y, X, level.q, config) / np.sqrt(m)
    live = vals != 0
    return CoefficientVector(m[live], vals[live].astype(np.complex128), Y)


def prop25_quantity(
    b: int,
    c: int,
    alpha: CoefficientVector,
    level: PrimeLevel,
    parity: int | None = None,
    c_cap: int | None = None,
    folded: bool = False,
) -> QuadraticFormResult:
    """The mean square over forms of sum_n a_{bcn} lambda_f(bcn)."""
    if np.any(alpha.indices % (b * c)):
        raise ValueError("alpha must be supported on multiples of bc")
    return harmonic_quadratic_form(alpha, level, parity, c_cap, folded)


# --------------------------------------------------------------------------
# the asymptotic large sieve


def p_ht(alpha: CoefficientVector, h: int, t: int, level: PrimeLevel) -> complex:
    """sum_n a_n S(h qbar, n; t) J_{k-1}(4 pi sqrt(h n / q) / t), qbar inverse to q mod t."""
    q, k = level.q, level.k
    qbar = mod_inverse(q, t) if t > 1 else 0
    hq = h * qbar
    kl = np.array([kloosterman(hq, int(n), t) for n in alpha.indices])
    bes = jn(k - 1, 4 * math.pi * np.sqrt(h * alpha.indices / q) / t)
    return complex(np.sum(alpha.values * kl * bes))


def large_sieve_sides(alpha: CoefficientVector, level: PrimeLevel, H_cut: int, c_cap: int | None = None):
    """(lhs, rhs_main, residual, envelope) for the asymptotic large sieve."""
    q = level.q
    N = alpha.N
    if N < q:
        raise ValueError("the asymptotic large sieve needs N >= q")
    T = N / q
    if not 1 <= H_cut <= T:
        raise ValueError(f"H_cut must lie in [1, T] with T = {T}")
    if alpha.norm2 == 0:
        return 0.0, 0.0, 0.0, 0.0
    lhs = harmonic_quadratic_form(alpha, level, level.parity, c_cap).value
    rhs = 0.0
    for t in range(1, int(math.floor(T)) + 1):
        if t % q == 0:
            continue
        inner = sum(abs(p_ht(alpha, h, t, level)) ** 2 for h in range(1, H_cut + 1))
        rhs += (2 * math.pi / t) ** 2 * inner
    rhs /= q
    envelope = N**ENVELOPE_EPS * (N / q**2 + math.sqrt(N / (q * H_cut))) * alpha.norm2
    return lhs, rhs, lhs - rhs, envelope


def random_alpha(N: int, seed: int) -> CoefficientVector:
    """Complex Gaussian coefficients on N < n <= 2N from a seeded generator."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return CoefficientVector(np.arange(N + 1, 2 * N + 1), vals, N)


# --------------------------------------------------------------------------
# GL(1) large sieve


def gl1_large_sieve_check(alpha_m, beta_n, Q: int):
    """Both sides of the bilinear large sieve with modular inverses.

    lhs = sum_{r <= Q} sum_{a mod r, (a, r) = 1} |sum_{(mn, r) = 1} alpha_m beta_n e(a m nbar / r)|^2,
    rhs = (Q^2 + M N) |alpha|^2 |beta|^2; index i of each vector is the integer i + 1.
    """
    alpha = np.asarray(alpha_m, dtype=np.complex128)
    beta = np.asarray(beta_n, dtype=np.complex128)
    M, N = len(alpha), len(beta)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    ms = np.arange(1, M + 1)
    ns = np.arange(1, N + 1)
    lhs = 0.0
    for r in range(1, Q + 1):
        units, _ = unit_inverse_table(r)
        mok = np.gcd(ms, r) == 1
        nok = np.gcd(ns, r) == 1
        if r == 1:
            lhs += abs(np.sum(alpha) * np.sum(beta)) ** 2
            continue
        nbar = np.array([mod_inverse(int(n), r) for n in ns[nok]], dtype=np.int64)
        x = np.arange(r)
        F = np.exp(2j * math.pi * (np.outer(x, nbar) % r) / r) @ beta[nok]
        am = np.outer(units, ms[mok]) % r
        S = F[am] @ alpha[mok]
        lhs += float(np.sum(np.abs(S) ** 2))
    rhs = (Q**2 + M * N) * float(np.sum(np.abs(alpha) ** 2)) * float(np.sum(np.abs(beta) ** 2))
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-9))


# --------------------------------------------------------------------------
# growth-trend experiment


def cauchy_schwarz_prefactors(X: float) -> tuple[float, float]:
    """The two arithmetic sums over j [b, c] d <= sqrt(X) weighting the Cauchy-Schwarz step.

    Returns (sum (b,c) d(j)^2 d(d[b,c]/b)^2 d(d[b,c]/c)^2 / (jdbc), sum (b,c)/(jdbc))
    with d(.) the divisor-counting function.
    """
    bound = math.isqrt(int(math.floor(X)))
    weighted = plain = 0.0
    tau = sigma_k_table(max(bound, 1), 2)
    for b in range(1, bound + 1):
        for c in range(1, bound + 1):
            l = lcm(b, c)
            if l > bound:
                continue
            g = math.gcd(b, c)
            for j in range(1, bound // l + 1):
                for d in range(1, bound // (j * l) + 1):
                    base = g / (j * d * b * c)
                    plain += base
                    weighted += base * (tau[j] * tau[d * l // b] * tau[d * l // c]) ** 2
    return weighted, plain


def loglog_slope(qs, values) -> float:
    """Least-squares slope of log(value) against log(q) over positive values."""
    qs = np.asarray(qs, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if np.count_nonzero(keep) < 2:
        return float("nan")
    return float(np.polyfit(np.log(qs[keep]), np.log(values[keep]), 1)[0])


def moment_trend(
    levels,
    X_of_q=None,
    b: int = 1,
    c: int = 1,
    c_cap: int | None = None,
    folded: bool = False,
    seed: int = 0,
    prefactors: bool = True,
    k: int = 3,
):
    """One row per level with the sigma_4-weighted mean square at X = q^2.

    Rows are dicts with q, k, seed, X, Y, c_cap, value, tail, norm2, ratio,
    the two Cauchy-Schwarz prefactors and a status field; a failing level is
    recorded with status "failed" and the sweep continues.
    """
    rows = []
    for level in levels:
        q, kq = (level, k) if isinstance(level, int) else (level.q, level.k)
        X = float(q**2) if X_of_q is None else float(X_of_q(q))
        Y = X / (16.0 * math.pi**4 * lcm(b, c) ** 2)
        row = {"q": q, "k": kq, "seed": seed, "X": X, "Y": Y}
        if Y < 1 and is_prime(q):
            # empty window: valid even for the small primes 2 and 3
            row.update(c_cap=0, value=0.0, tail=0.0, norm2=0.0, ratio=0.0, status="empty")
            if prefactors:
                w, p = cauchy_schwarz_prefactors(X)
                row.update(cs_weighted=w, cs_plain=p)
            rows.append(row)
            continue
        try:
            level = PrimeLevel(q, kq) if isinstance(level, int) else level
            alpha = prop25_vector(b, c, Y, level, X)
            res = prop25_quantity(b, c, alpha, level, c_cap=c_cap, folded=folded)
            row.update(
                c_cap=res.c_cap,
                value=res.value,
                tail=res.tail,
                norm2=alpha.norm2,
                ratio=res.value / alpha.norm2 if alpha.norm2 else 0.0,
                status="ok",
            )
        except (TruncationError, ArithmeticDomainError, ValueError) as exc:
            row.update(c_cap=c_cap, value=None, tail=None, norm2=None, ratio=None, status=f"failed: {exc}")
        if prefactors:
            w, p = cauchy_schwarz_prefactors(X)
            row.update(cs_weighted=w, cs_plain=p)
        rows.append(row)
    return rows


def primes_between(lo: int, hi: int) -> list[int]:
    return [p for p in range(max(lo, 2), hi + 1) if is_prime(p)]
