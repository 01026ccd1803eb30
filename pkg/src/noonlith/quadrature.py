"""Composite Gauss-Legendre quadrature with panel doubling.

Panels are doubled until two successive levels agree to ``rtol`` (the
difference of the two levels is the Richardson-style error estimate).  The
integrand is always called with the full node array, so a batch of
integrals (one per trailing output) can share the work.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonConvergenceError


@lru_cache(maxsize=64)
def _reference_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(a: float, b: float, panels: int, order: int = 16):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on ``[a, b]``."""
    if panels < 1:
        raise ValueError("need at least one panel")
    x, w = _reference_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def union_rule(intervals, panels: int, order: int = 16):
    """Concatenated panel rules over several disjoint intervals."""
    parts = [panel_rule(a, b, panels, order) for a, b in intervals]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | complex | float
    error: float
    panels: int


def _relative_change(fine, coarse) -> tuple[float, float]:
    fine = np.asarray(fine)
    err = float(np.max(np.abs(fine - np.asarray(coarse))))
    scale = float(np.max(np.abs(fine)))
    return err, scale


def integrate(f, a: float, b: float, *, order: int = 16, panels: int = 1, rtol: float = 1e-6,
              atol: float = 0.0, max_doublings: int = 14) -> QuadResult:
    """Integrate ``f`` over ``[a, b]``.

    ``f(x)`` receives a 1-D node array and returns an array whose last axis
    runs over the nodes. The result keeps the leading axes.
    """
    def level(p):
        x, w = panel_rule(a, b, p, order)
        return np.asarray(f(x)) @ w

    coarse = level(panels)
    for _ in range(max_doublings):
        panels *= 2
        fine = level(panels)
        err, scale = _relative_change(fine, coarse)
        if err <= max(atol, rtol * scale):
            return QuadResult(fine, err, panels)
        coarse = fine
    raise NonConvergenceError(
        f"1-D quadrature on [{a}, {b}] not converged after {panels} panels (error {err:.3g})",
        estimate=coarse, error=err)


def integrate2d(f, box1, box2, *, order: int = 16, panels: int = 1, rtol: float = 1e-6,
                atol: float = 0.0, max_doublings: int = 8) -> QuadResult:
    """Tensor-product version of :func:`integrate` on ``box1 x box2``.

    ``f(x, y)`` receives two 1-D node arrays and returns an array whose last
    two axes run over ``x`` and ``y`` nodes respectively.
    """
    def level(p):
        x, wx = panel_rule(box1[0], box1[1], p, order)
        y, wy = panel_rule(box2[0], box2[1], p, order)
        return np.asarray(f(x, y)) @ wy @ wx

    coarse = level(panels)
    for _ in range(max_doublings):
        panels *= 2
        fine = level(panels)
        err, scale = _relative_change(fine, coarse)
        if err <= max(atol, rtol * scale):
            return QuadResult(fine, err, panels)
        coarse = fine
    raise NonConvergenceError(
        f"2-D quadrature not converged after {panels} panels per axis (error {err:.3g})",
        estimate=coarse, error=err)
