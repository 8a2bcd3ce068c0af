"""Complex log-Gamma, digamma and trigamma on numpy arrays.

``loggamma`` uses the g=7, n=9 Lanczos approximation with reflection for
Re z < 1/2; relative error of exp(loggamma) is below 1e-13 on the strip
|Re z| <= 4 away from the poles.  Branches of the complex logarithm are
not tracked: callers only exponentiate or take real parts.
"""

from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243  # 30 digits
LOG_2PI = np.log(2.0 * np.pi)

_LANCZOS_G = 7.0
_LANCZOS_P = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)

# B_{2k} / (2k) and B_{2k} for the digamma / trigamma asymptotic tails
_BERN = np.array([1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510])


def log_sin_pi(z):
    """log(sin(pi z)) without overflow for large |Im z|."""
    z = np.asarray(z, dtype=np.complex128)
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    # sin(pi w) = (i/2) e^{-i pi w} (1 - e^{2 i pi w}), |e^{2 i pi w}| <= 1 here
    val = -1j * np.pi * w + np.log(1 - np.exp(2j * np.pi * w)) + np.log(0.5j)
    return np.where(flip, np.conj(val), val)


def log_cos_pi(z):
    """log(cos(pi z))."""
    return log_sin_pi(np.asarray(z, dtype=np.complex128) + 0.5)


def _lanczos_right(z):
    # valid for Re z >= 1/2
    z = z - 1.0
    x = np.full_like(z, _LANCZOS_P[0])
    for i in range(1, len(_LANCZOS_P)):
        x = x + _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(x)


def loggamma(z):
    """Complex log Gamma(z) (principal branch not guaranteed)."""
    z = np.asarray(z, dtype=np.complex128)
    left = z.real < 0.5
    zr = np.where(left, 1.0 - z, z)
    out = _lanczos_right(zr)
    refl = np.log(np.pi) - log_sin_pi(z) - out
    return np.where(left, refl, out)


def gamma(z):
    return np.exp(loggamma(z))


def _shifted(z, n_shift=12):
    z = np.asarray(z, dtype=np.complex128)
    left = z.real < 0.5
    zr = np.where(left, 1.0 - z, z)
    return z, left, zr, zr + n_shift, n_shift


def digamma(z):
    """psi(z) by recurrence into the asymptotic region; reflection handles Re z < 1/2."""
    z, left, zr, w, n = _shifted(z)
    acc = np.zeros_like(zr)
    for j in range(n):
        acc = acc + 1.0 / (zr + j)
    w2 = 1.0 / (w * w)
    tail = np.zeros_like(w)
    p = np.ones_like(w)
    for k, b in enumerate(_BERN, start=1):
        p = p * w2
        tail = tail + b / (2 * k) * p
    right = np.log(w) - 0.5 / w - tail - acc
    # psi(1 - z) - psi(z) = pi cot(pi z)
    refl = right - np.pi * _cot_pi(z)
    return np.where(left, refl, right)


def trigamma(z):
    """psi'(z)."""
    z, left, zr, w, n = _shifted(z)
    acc = np.zeros_like(zr)
    for j in range(n):
        acc = acc + 1.0 / (zr + j) ** 2
    w2 = 1.0 / (w * w)
    tail = np.zeros_like(w)
    p = 1.0 / w
    for b in _BERN:
        p = p * w2
        tail = tail + b * p
    right = 1.0 / w + 0.5 * w2 + tail + acc
    # psi'(1 - z) + psi'(z) = pi^2 / sin^2(pi z)
    refl = np.exp(2.0 * (np.log(np.pi) - log_sin_pi(z))) - right
    return np.where(left, refl, right)


def _cot_pi(z):
    z = np.asarray(z, dtype=np.complex128)
    # cot(pi z) = i (1 + e^{2 i pi z}) / (e^{2 i pi z} - 1), stable when Im z >= 0
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    e2 = np.exp(2j * np.pi * w)
    val = 1j * (1 + e2) / (e2 - 1)
    return np.where(flip, np.conj(val), val)


def tan_pi(z):
    z = np.asarray(z, dtype=np.complex128)
    return -_cot_pi(z + 0.5)
