"""Composite Gauss-Legendre rule on [0, 1] with panels graded toward 0.

Integrands of the form u / sqrt(delta + a u^2) vary on the scale
sqrt(delta / a), which can be arbitrarily small.  Geometric grading
resolves every scale down to ``umin`` with a fixed number of nodes.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=8)
def graded_rule(nper: int = 20, ratio: float = 0.25, umin: float = 1e-12):
    x, w = leggauss(nper)
    edges = [1.0]
    while edges[-1] > umin:
        edges.append(edges[-1] * ratio)
    edges = np.concatenate([[0.0], np.array(edges[::-1])])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (lo[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=8)
def gauss_rule(n: int = 16):
    x, w = leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
