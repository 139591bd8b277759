"""
Gaussian quadrature meshes used by the plate integrals, the dispersion
integral and the multipole matrix elements.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_laguerre


@lru_cache(maxsize=64)
def _legendre_reference(n_points):
    nodes, weights = leggauss(n_points)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=32)
def _laguerre_reference(n_points):
    nodes, weights = roots_laguerre(n_points)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_mesh(xmin, xmax, n_points):
    """Gauss-Legendre nodes and weights mapped from [-1, 1] to [xmin, xmax].

    Args:
        xmin: Lower integration limit
        xmax: Upper integration limit
        n_points: Number of nodes

    Returns:
        tuple: (nodes, weights) as 1-D arrays
    """
    y, w = _legendre_reference(n_points)
    nodes = 0.5 * (y + 1.0) * (xmax - xmin) + xmin
    weights = 0.5 * (xmax - xmin) * w
    return nodes, weights


def composite_gauss_legendre(edges, n_points):
    """Composite Gauss-Legendre rule over consecutive panels.

    Args:
        edges: Increasing panel boundaries, shape (n_panels + 1,)
        n_points: Nodes per panel

    Returns:
        tuple: (nodes, weights), each of shape (n_panels * n_points,)
    """
    edges = np.asarray(edges, dtype=float)
    y, w = _legendre_reference(n_points)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = lo + half * (y[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def gauss_laguerre_mesh(n_points):
    """Nodes and weights of the Gauss-Laguerre rule for ∫_0^∞ e^{-u} f(u) du.

    Exact for polynomials f up to degree 2*n_points - 1. The arrays are shared
    and read-only.
    """
    return _laguerre_reference(n_points)
