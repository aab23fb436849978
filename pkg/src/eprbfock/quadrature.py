"""Globally adaptive Gauss-Legendre quadrature in one variable."""

from __future__ import annotations

import heapq
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import AccuracyError


class QuadResult(NamedTuple):
    value: float
    error: float
    n_intervals: int


def gauss_legendre_panel(f, a: float, b: float, nodes: np.ndarray, weights: np.ndarray) -> float:
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * nodes
    return float(half * np.dot(weights, f(x)))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    points: Sequence[float] = (),
    rtol: float = 1e-10,
    atol: float = 1e-14,
    order: int = 10,
    initial_panels: int = 4,
    max_intervals: int = 5000,
) -> QuadResult:
    """Integrate a vectorized ``f`` over ``[a, b]``.

    Each panel is estimated with an ``order``-point rule and with the same
    rule on both halves; their difference is the panel error.  The panel
    with the largest error is bisected until the summed error drops below
    ``max(atol, rtol * |value|)``.  ``points`` are forced panel boundaries,
    e.g. where the integrand peaks.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        res = adaptive_gauss_legendre(f, b, a, points=points, rtol=rtol, atol=atol, order=order,
                                      initial_panels=initial_panels, max_intervals=max_intervals)
        return QuadResult(-res.value, res.error, res.n_intervals)
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def estimate(lo, hi):
        mid = 0.5 * (lo + hi)
        coarse = gauss_legendre_panel(f, lo, hi, nodes, weights)
        fine = (gauss_legendre_panel(f, lo, mid, nodes, weights)
                + gauss_legendre_panel(f, mid, hi, nodes, weights))
        return fine, abs(fine - coarse)

    cuts = sorted({a, b, *(p for p in points if a < p < b)})
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges.extend(np.linspace(lo, hi, initial_panels + 1)[:-1])
    edges.append(b)

    heap = []
    total = err_total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = estimate(lo, hi)
        heapq.heappush(heap, (-err, lo, hi, val))
        total += val
        err_total += err

    while err_total > max(atol, rtol * abs(total)):
        if len(heap) >= max_intervals:
            raise AccuracyError(
                f"adaptive quadrature did not converge on [{a}, {b}]: "
                f"estimate {total:.6e} +/- {err_total:.3e}",
                estimate=total, error_bound=err_total)
        neg_err, lo, hi, val = heapq.heappop(heap)
        total -= val
        err_total += neg_err
        mid = 0.5 * (lo + hi)
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            sub_val, sub_err = estimate(sub_lo, sub_hi)
            heapq.heappush(heap, (-sub_err, sub_lo, sub_hi, sub_val))
            total += sub_val
            err_total += sub_err
    return QuadResult(total, err_total, len(heap))


def composite_gauss_legendre_rule(lo: float, hi: float, panels: int, order: int = 8):
    """Nodes and weights of a composite rule with ``panels`` equal panels."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    x = (mids[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w
