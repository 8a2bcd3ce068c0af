"""Composite Gauss-Legendre rules on panels."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """A quadrature failed its convergence check."""


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(a: float, b: float, n_panels: int, order: int = 20):
    """Nodes and weights of an n_panels x order composite rule on [a, b]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def panels_for_scale(a: float, b: float, scale: float, order: int = 20, per_scale: float = 1.0) -> int:
    """Panel count so each panel spans at most ``per_scale * scale``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return max(1, int(np.ceil((b - a) / (scale * per_scale))))
