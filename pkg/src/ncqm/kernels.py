"""Gaussian delta-family kernels, their moments and PDE, and the deformation product.

The kernel associated with a positive definite width matrix ``lam`` is

    W_lam(x) = (pi^N det lam)^(-1/2) exp(-x . lam^-1 . x),

a Gaussian regularization of the N-dimensional delta distribution.  The
associated commutative deformation product acts on pairs of functions as
exp((1/2) lam_ij d/dx_i<- d/dx_j->) and is evaluated here in closed form on
the polynomial-times-Gaussian class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DivergentStar,
    NotPositiveDefinite,
    UnsupportedOrder,
)
from .polygauss import (
    PolyGaussian,
    _DivergentStarSignal,
    star_closed_form,
    star_series_polynomials,
)


@dataclass(frozen=True)
class PosDefSymMatrix:
    """Validated symmetric positive definite matrix (entries length^2)."""

    entries: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("width matrix must be square")
        scale = max(1.0, np.max(np.abs(m)))
        if np.max(np.abs(m - m.T)) > self.tol * scale:
            raise NotPositiveDefinite("width matrix is not symmetric within tolerance")
        m = 0.5 * (m + m.T)
        if np.min(np.linalg.eigvalsh(m)) <= 0.0:
            raise NotPositiveDefinite("width matrix has a non-positive eigenvalue")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def inverse(self):
        return np.linalg.inv(self.entries)


def _coerce_width(lam):
    if isinstance(lam, PosDefSymMatrix):
        return lam
    return PosDefSymMatrix(np.asarray(lam, dtype=float))


def weierstrass(x, lam):
    """Evaluate W_lam at x (a point or an array of points)."""
    lam = _coerce_width(lam)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != lam.dim:
        raise DimensionMismatch("point dimension does not match the width matrix")
    norm = (math.pi ** lam.dim * np.linalg.det(lam.entries)) ** -0.5
    vals = norm * np.exp(-np.einsum("...i,ij,...j->...", pts, lam.inverse, pts))
    return float(vals[0]) if single else vals


def weierstrass_polygaussian(lam, center=None, scale=1.0):
    """W_lam(x - center) as a :class:`PolyGaussian`."""
    lam = _coerce_width(lam)
    norm = scale * (math.pi ** lam.dim * np.linalg.det(lam.entries)) ** -0.5
    pg = PolyGaussian.gaussian(lam.inverse, scalar=norm)
    if center is not None and np.any(np.asarray(center) != 0.0):
        pg = pg.shift(np.asarray(center, dtype=float))
    return pg


def weierstrass_moments(lam, order):
    """Exact moments of the normalized kernel: 1, the zero vector, lam/2."""
    lam = _coerce_width(lam)
    if order == 0:
        return 1.0
    if order == 1:
        return np.zeros(lam.dim)
    if order == 2:
        return 0.5 * lam.entries
    raise UnsupportedOrder(f"moment order {order} not supported (0, 1, 2 only)")


def weierstrass_pde_residual(x, lam):
    """Residual of (-lam_ij d_i d_j + 4 x.lam^-1.x - 2N) W_lam at x, evaluated analytically."""
    lam = _coerce_width(lam)
    x = np.asarray(x, dtype=float)
    if x.shape != (lam.dim,):
        raise DimensionMismatch("point dimension does not match the width matrix")
    w = weierstrass(x, lam)
    linv = lam.inverse
    g = linv @ x
    # d_i d_j W = (4 g_i g_j - 2 linv_ij) W
    lap = np.einsum("ij,ij->", lam.entries, 4.0 * np.outer(g, g) - 2.0 * linv)
    quad = 4.0 * x @ linv @ x
    return float((-lap + quad - 2.0 * lam.dim) * w)


def star_product(f: PolyGaussian, g: PolyGaussian, lam) -> PolyGaussian:
    """Deformation product of two members of the closed class.

    Pure polynomial pairs go through the terminating derivative series; any
    Gaussian content routes through the Fourier-domain closed form, which is
    exact on the class.  Raises :class:`DivergentStar` when the closed-form
    quadratic form degenerates (e.g. the unsmeared kernel-kernel product).
    """
    lam = _coerce_width(lam)
    if f.nvars != g.nvars or f.nvars != lam.dim:
        raise DimensionMismatch("star operands and width matrix must share the dimension")
    if f.is_polynomial() and g.is_polynomial():
        return star_series_polynomials(f, g, lam.entries)
    try:
        return star_closed_form(f, g, lam.entries)
    except _DivergentStarSignal as exc:
        raise DivergentStar(str(exc)) from exc


def star_pointwise_limit(f: PolyGaussian, g: PolyGaussian) -> PolyGaussian:
    """The lam -> 0 limit: the plain pointwise product."""
    return f.times(g)


def star_commutative_limit_check(f, g, schedule, sample_points=None):
    """Deviation of the deformation product from the pointwise product along a width schedule.

    ``schedule`` is a decreasing sequence of scalars eps; the product is taken
    at lam = eps * I.  Returns a dict with the per-step deviations and simple
    monotonicity / first-order-slope diagnostics.
    """
    if not (f.is_polynomial() and g.is_polynomial()):
        raise DimensionMismatch("limit check is defined for polynomial inputs")
    n = f.nvars
    if sample_points is None:
        grid = np.linspace(-1.0, 1.0, 5)
        mesh = np.meshgrid(*([grid] * n), indexing="ij")
        sample_points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    plain = f.times(g)(sample_points)
    deviations = []
    for eps in schedule:
        starred = star_product(f, g, np.eye(n) * float(eps))
        deviations.append(float(np.max(np.abs(starred(sample_points) - plain))))
    deviations = np.array(deviations)
    ratios = deviations[:-1] / np.maximum(deviations[1:], 1e-300)
    return {
        "schedule": [float(e) for e in schedule],
        "deviations": deviations.tolist(),
        "monotone_decreasing": bool(np.all(np.diff(deviations) <= 0.0)),
        "final_deviation": float(deviations[-1]),
        "ratios": ratios.tolist(),
    }
