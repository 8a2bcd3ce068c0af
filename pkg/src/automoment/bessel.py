"""Bessel kernels J_{k-1}, Y_0 and K_0 in several independent representations.

Every kernel has at least two routes so the routes can police each other:

* ``J_n``: power series in (x/2) evaluated in extended decimal precision,
  and Miller's backward recurrence normalised by J_0 + 2 sum J_{2m} = 1.
* ``Y_0``, ``K_0``: the logarithmic power series with harmonic numbers,
  Hankel's large-argument expansion, and the Mellin-Barnes integral on a
  vertical line Re(s) = -sigma plus the residue at s = 0.

The array functions (``jn``, ``y0``, ``k0``) are the fast paths used by the
summation kernels elsewhere in the package.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

from .gammafn import EULER_GAMMA, digamma, log_cos_pi, loggamma, tan_pi, trigamma
from .quadrature import QuadratureError, panel_rule

__all__ = [
    "BesselDomainError",
    "MellinKernel",
    "bessel_j",
    "bessel_j_series",
    "bessel_j_recurrence",
    "j_switch_point",
    "jn",
    "y0",
    "k0",
    "y0_series",
    "k0_series",
    "y0_asymptotic",
    "k0_asymptotic",
    "y0_via_mellin",
    "k0_via_mellin",
    "kernel_table",
    "emit_table_csv",
]

MAX_ORDER = 200
SERIES_CUTOFF_Y0K0 = 12.0


class BesselDomainError(ValueError):
    pass


def _check_order(order):
    if int(order) != order or order < 0:
        raise BesselDomainError(f"order must be a non-negative integer, got {order!r}")
    if order > MAX_ORDER:
        raise BesselDomainError(f"order {order} above {MAX_ORDER} is outside desk scale")


# --------------------------------------------------------------------------
# J_n


def j_switch_point(order: int) -> float:
    """Largest x handled by the power series in ``bessel_j``."""
    return max(20.0, 2.0 * order)


def bessel_j_series(order: int, x: float) -> float:
    """J_order(x) = sum_l (-1)^l (x/2)^(2l+order) / (l! (l+order)!).

    Summed in Decimal with enough guard digits to absorb the cancellation
    (the largest term is at most e^x times the result's natural scale).
    """
    _check_order(order)
    if x < 0:
        raise BesselDomainError("x must be non-negative")
    if x == 0:
        return 1.0 if order == 0 else 0.0
    with localcontext() as ctx:
        ctx.prec = 30 + int(0.4343 * x) + int(0.5 * math.log10(1 + order))
        half = Decimal(x) / 2
        y = half * half
        term = half**order / math.factorial(order)
        total = term
        tiny = Decimal(10) ** -18
        l = 0
        while True:
            l += 1
            term = -term * y / (l * (l + order))
            total += term
            if l > float(half) and abs(term) <= tiny * abs(total):
                break
        return float(total)


def _miller_start(order, xmax):
    m = max(order, int(xmax)) + 40 + int(10 * xmax ** (1 / 3))
    return m + (m % 2)


def bessel_j_recurrence(order: int, x: float) -> float:
    """J_order(x) by Miller's backward recurrence (scalar)."""
    _check_order(order)
    if x <= 0:
        raise BesselDomainError("recurrence route needs x > 0")
    m = _miller_start(order, x)
    jp, j = 0.0, 1e-300
    ans = 0.0
    norm = 0.0
    two_over_x = 2.0 / x
    for kk in range(m, 0, -1):
        jm = kk * two_over_x * j - jp
        jp, j = j, jm
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            ans *= 1e-250
            norm *= 1e-250
        if kk - 1 == order:
            ans = j
        if (kk - 1) % 2 == 0 and kk - 1 > 0:
            norm += 2.0 * j
    norm += j
    return ans / norm


def bessel_j(order: int, x: float) -> float:
    """J_order(x) for 1 <= order <= 200 and 0 <= x <= 1e4."""
    _check_order(order)
    if order < 1:
        raise BesselDomainError("order must be >= 1")
    if x < 0:
        raise BesselDomainError("x must be non-negative")
    if x <= j_switch_point(order):
        return bessel_j_series(order, x)
    return bessel_j_recurrence(order, x)


def _jn_series_float(order, x):
    half = 0.5 * x
    y = half * half
    if order == 0:
        term = np.ones_like(half)
    else:
        with np.errstate(divide="ignore"):
            term = np.exp(order * np.log(half) - math.lgamma(order + 1))
    total = term.copy()
    for l in range(1, 80):
        term = -term * y / (l * (l + order))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
            break
    return total


def _jn_miller_array(order, x):
    m = _miller_start(order, float(np.max(x)))
    jp = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    ans = np.zeros_like(x)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for kk in range(m, 0, -1):
        jm = kk * two_over_x * j - jp
        jp, j = j, jm
        big = np.abs(j) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j, jp, ans, norm = j * scale, jp * scale, ans * scale, norm * scale
        if kk - 1 == order:
            ans = j.copy()
        if (kk - 1) % 2 == 0 and kk - 1 > 0:
            norm = norm + 2.0 * j
    norm = norm + j
    return ans / norm


def jn(order: int, x):
    """Vectorised J_order on an array of non-negative reals.

    Float series where its cancellation stays below four digits
    (x <= sqrt(18 (order + 1))), backward recurrence elsewhere.
    """
    _check_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BesselDomainError("x must be non-negative")
    flat = x.ravel()
    out = np.empty_like(flat)
    cut = max(6.0, math.sqrt(18.0 * (order + 1)))
    small = flat <= cut
    if np.any(small):
        out[small] = _jn_series_float(order, flat[small])
    if np.any(~small):
        out[~small] = _jn_miller_array(order, flat[~small])
    return out.reshape(x.shape)


# --------------------------------------------------------------------------
# Y_0 and K_0: series and Hankel expansions


def _log_series_terms(x, sign):
    """(sum_k s^k (x/2)^{2k}/k!^2, sum_{k>=1} s^{k+1} H_k (x/2)^{2k}/k!^2, abs mass)."""
    y = 0.25 * x * x
    term = np.ones_like(x)
    base = np.ones_like(x)
    harm_sum = np.zeros_like(x)
    mass = np.ones_like(x)
    h = 0.0
    for k in range(1, 120):
        term = term * y / (k * k)
        h += 1.0 / k
        base = base + (sign**k) * term
        harm_sum = harm_sum + (sign ** (k + 1)) * h * term
        mass = mass + (1 + h) * term
        if np.all(term * (1 + h) <= 1e-18 * mass):
            break
    return base, harm_sum, mass


def y0_series(x):
    """Y_0(x) = (2/pi)(ln(x/2) + gamma) sum (-1)^k (x/2)^{2k}/k!^2 + (2/pi) sum (-1)^{k+1} H_k ..."""
    x = np.asarray(x, dtype=float)
    base, harm, _ = _log_series_terms(x, -1.0)
    return (2.0 / np.pi) * ((np.log(0.5 * x) + EULER_GAMMA) * base + harm)


def k0_series(x):
    """K_0(x) = -(ln(x/2) + gamma) sum (x/2)^{2k}/k!^2 + sum H_k (x/2)^{2k}/k!^2."""
    x = np.asarray(x, dtype=float)
    base, harm, _ = _log_series_terms(x, 1.0)
    return -(np.log(0.5 * x) + EULER_GAMMA) * base + harm


def _series_roundoff(x):
    x = np.asarray(x, dtype=float)
    _, _, mass = _log_series_terms(x, 1.0)
    return 4e-16 * mass * (1.0 + np.abs(np.log(0.5 * x) + EULER_GAMMA))


def y0_asymptotic(x, with_error=False):
    """Hankel expansion Y_0(x) = sqrt(2/(pi x)) (P sin(x - pi/4) + Q cos(x - pi/4))."""
    x = np.asarray(x, dtype=float)
    p, q, last = _hankel_pq(x)
    chi = x - 0.25 * np.pi
    val = np.sqrt(2.0 / (np.pi * x)) * (p * np.sin(chi) + q * np.cos(chi))
    if with_error:
        return val, np.sqrt(2.0 / (np.pi * x)) * last
    return val


def _hankel_pq(x):
    # mu = 4 nu^2 = 0; P = sum (-1)^m a_{2m} x^{-2m}, Q = sum (-1)^m a_{2m+1} x^{-2m-1}
    # with a_k = prod_{j=1}^k (2j-1)^2 / (k! 8^k) (absolute values)
    inv = 1.0 / x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    mag = np.ones_like(x)
    live = np.ones(x.shape, dtype=bool)
    last = np.zeros_like(x)
    for k in range(1, 200):
        new = mag * ((2 * k - 1) ** 2) / (8.0 * k) * inv
        # stop at the smallest term, or once terms no longer move a double
        live &= (new < mag) & (mag > 1e-17)
        if not np.any(live):
            break
        mag = np.where(live, new, mag)
        signed = np.where(live, new, 0.0)
        last = np.where(live, new, last)
        m = k // 2
        s = -1.0 if m % 2 else 1.0
        if k % 2 == 0:
            p = p + s * signed
        else:
            q = q + s * signed
    # leading Q term is -a_1/x: with the (-1)^m convention Q = a_1/x - a_3/x^3 ...
    # and Y_0 uses P sin + Q cos with Q(x) ~ -1/(8x)
    return p, -q, last


def k0_asymptotic(x, with_error=False):
    """K_0(x) ~ sqrt(pi/(2x)) e^{-x} sum_k (-1)^k a_k x^{-k}."""
    x = np.asarray(x, dtype=float)
    inv = 1.0 / x
    total = np.ones_like(x)
    mag = np.ones_like(x)
    live = np.ones(x.shape, dtype=bool)
    last = np.zeros_like(x)
    for k in range(1, 200):
        new = mag * ((2 * k - 1) ** 2) / (8.0 * k) * inv
        # stop at the smallest term, or once terms no longer move a double
        live &= (new < mag) & (mag > 1e-17)
        if not np.any(live):
            break
        mag = np.where(live, new, mag)
        last = np.where(live, new, last)
        total = total + np.where(live, (-1.0) ** k * new, 0.0)
    pref = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x)
    if with_error:
        return pref * total, pref * last
    return pref * total


def y0(x):
    """Y_0 on x > 0: series up to 12, Hankel expansion beyond."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise BesselDomainError("Y_0 needs x > 0")
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF_Y0K0
    if np.any(small):
        out[small] = y0_series(x[small])
    if np.any(~small):
        out[~small] = y0_asymptotic(x[~small])
    return out if out.ndim else float(out)


def k0(x):
    """K_0 on x > 0: series up to 12, asymptotic expansion beyond."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise BesselDomainError("K_0 needs x > 0")
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF_Y0K0
    if np.any(small):
        out[small] = k0_series(x[small])
    if np.any(~small):
        out[~small] = k0_asymptotic(x[~small])
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Mellin-Barnes route


def _log_gamma_y0(s):
    # gamma(s) = -2^{s-1} pi^{-1} Gamma(s/2)^2 cos(pi s/2); the minus sign is applied by the caller
    return (s - 1.0) * np.log(2.0) - np.log(np.pi) + 2.0 * loggamma(0.5 * s) + log_cos_pi(0.5 * s)


def _log_gamma_k0(s):
    return (s - 2.0) * np.log(2.0) + 2.0 * loggamma(0.5 * s)


@dataclass(frozen=True)
class MellinKernel:
    """Mellin kernel of Y_0 or K_0 on the shifted line Re(s) = -sigma.

    The node table (t, weights, kernel values) is built once at construction.
    ``panel_order`` Gauss-Legendre nodes per unit panel along t in [0, height].
    """

    kind: str
    contour_sigma: float = 0.5
    truncation_height: float | None = None
    panel_order: int = 24
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("Y0", "K0"):
            raise BesselDomainError(f"unknown Mellin kernel {self.kind!r}")
        if not 0.0 < self.contour_sigma < 1.0:
            raise BesselDomainError("contour_sigma must lie in (0, 1)")
        if self.truncation_height is None:
            object.__setattr__(self, "truncation_height", 256.0 if self.kind == "Y0" else 64.0)
        if self.truncation_height <= 0:
            raise BesselDomainError("truncation_height must be positive")
        n_panels = max(1, int(math.ceil(self.truncation_height)))
        t, w = panel_rule(0.0, self.truncation_height, n_panels, self.panel_order)
        vals = self.gamma_fn(-self.contour_sigma + 1j * t)
        for arr in (t, w, vals):
            arr.setflags(write=False)
        object.__setattr__(self, "_nodes", t)
        object.__setattr__(self, "_weights", w)
        object.__setattr__(self, "_values", vals)

    def gamma_fn(self, s):
        s = np.asarray(s, dtype=np.complex128)
        if self.kind == "Y0":
            return -np.exp(_log_gamma_y0(s))
        return np.exp(_log_gamma_k0(s))

    def _dlog(self, s, x):
        base = np.log(2.0) + digamma(0.5 * s) - np.log(x)
        d2 = 0.5 * trigamma(0.5 * s)
        if self.kind == "Y0":
            tn = tan_pi(0.5 * s)
            base = base - 0.5 * np.pi * tn
            d2 = d2 - 0.25 * np.pi**2 * (1.0 + tn * tn)
        return base, d2

    def residue(self, x):
        """Residue terms picked up at s = 0 when the line moves to -sigma."""
        lx = np.log(x)
        if self.kind == "Y0":
            return (2.0 / np.pi) * lx + self.kappa
        return -lx + self.kappa

    @property
    def kappa(self) -> float:
        if self.kind == "Y0":
            return -(2.0 / np.pi) * math.log(2.0) + 2.0 * EULER_GAMMA / np.pi
        return math.log(2.0) - EULER_GAMMA

    def tail(self, x):
        """Integration-by-parts estimate of the t > height part of the t-integral."""
        x = np.asarray(x, dtype=float)
        big_t = self.truncation_height
        s = -self.contour_sigma + 1j * big_t
        g = self.gamma_fn(s) * np.exp(-s * np.log(x))
        d1, d2 = self._dlog(s, x)
        lam = 1j * d1
        dlam = -d2
        return -(g / lam) * (1.0 + dlam / lam**2)

    def line_integral(self, x, tail_correction=True):
        """(1/2 pi i) int over Re(s) = -sigma of gamma(s) x^{-s} ds."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        phase = np.exp(np.outer(-np.log(x), -self.contour_sigma + 1j * self._nodes))
        half = phase @ (self._weights * self._values)
        if tail_correction:
            half = half + self.tail(x)
        # integrand at -t is the conjugate of the integrand at t
        return half.real / np.pi

    def evaluate(self, x, tail_correction=True):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise BesselDomainError("Mellin route needs x > 0")
        out = self.line_integral(x, tail_correction) + self.residue(np.atleast_1d(x))
        return out if x.ndim else float(out[0])

    def doubled(self) -> "MellinKernel":
        return MellinKernel(self.kind, self.contour_sigma, 2.0 * self.truncation_height, self.panel_order)

    def decay_profile(self, t):
        """|gamma(-sigma + i t)| * t^(sigma + 1)."""
        t = np.asarray(t, dtype=float)
        return np.abs(self.gamma_fn(-self.contour_sigma + 1j * t)) * t ** (self.contour_sigma + 1)

    def abs_integral(self, height):
        """int_{-height}^{height} |gamma(-sigma + i t)| dt plus a power-law tail beyond height."""
        n_panels = max(1, int(math.ceil(height)))
        t, w = panel_rule(0.0, height, n_panels, self.panel_order)
        core = 2.0 * np.sum(w * np.abs(self.gamma_fn(-self.contour_sigma + 1j * t)))
        end = abs(complex(self.gamma_fn(-self.contour_sigma + 1j * height)))
        if self.kind == "Y0":
            # |gamma(-sigma + i t)| ~ t^{-sigma-1}(1 + O(t^-2)); integrate the power law
            tail = 2.0 * end * height / self.contour_sigma
        else:
            tail = 0.0
        return core + tail


def _mellin_checked(kind, x, kernel, check):
    if kernel is None:
        kernel = MellinKernel(kind)
    if kernel.kind != kind:
        raise BesselDomainError(f"kernel kind {kernel.kind} does not match {kind}")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x > 4):
        raise BesselDomainError("the Mellin route is used for 0 < x <= 4")
    val = kernel.evaluate(x)
    if check:
        other = kernel.doubled().evaluate(x)
        diff = float(np.max(np.abs(np.asarray(other) - np.asarray(val))))
        if diff > 1e-8:
            raise QuadratureError(
                f"{kind} Mellin quadrature not converged: doubling height changed result by {diff:.3e}"
            )
    return val


def y0_via_mellin(x, kernel: MellinKernel | None = None, check: bool = False):
    return _mellin_checked("Y0", x, kernel, check)


def k0_via_mellin(x, kernel: MellinKernel | None = None, check: bool = False):
    return _mellin_checked("K0", x, kernel, check)


# --------------------------------------------------------------------------
# table hook


def kernel_table(name: str, xs, order: int | None = None):
    """Rows (x, value, representation, est_error) for every route defined at x."""
    xs = np.asarray(xs, dtype=float)
    rows = []
    if name in ("Y0", "K0"):
        series = y0_series if name == "Y0" else k0_series
        asym = y0_asymptotic if name == "Y0" else k0_asymptotic
        kern = MellinKernel(name)
        dkern = kern.doubled()
        for x in xs:
            if x <= SERIES_CUTOFF_Y0K0:
                rows.append((float(x), float(series(x)), "series", float(_series_roundoff(x))))
            if x >= 6.0:
                v, err = asym(np.array([x]), with_error=True)
                rows.append((float(x), float(v[0]), "asymptotic", float(err[0])))
            if x <= 4.0:
                v = kern.evaluate(x)
                rows.append((float(x), float(v), "mellin", abs(float(dkern.evaluate(x)) - float(v))))
    elif name == "J":
        n = 1 if order is None else order
        for x in xs:
            if x <= j_switch_point(n):
                rows.append((float(x), bessel_j_series(n, float(x)), "series", 1e-16 * abs(float(x)) + 1e-18))
            if x > 0:
                rows.append((float(x), bessel_j_recurrence(n, float(x)), "recurrence", 1e-15))
    else:
        raise BesselDomainError(f"unknown kernel {name!r}")
    return rows


def emit_table_csv(name: str, xs, order: int | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "value", "representation", "est_error"])
    for x, v, rep, err in kernel_table(name, xs, order):
        writer.writerow([repr(x), repr(v), rep, repr(err)])
    return buf.getvalue()
