"""Closed class of polynomial-times-Gaussian functions and exact Gaussian calculus.

A :class:`PolyGaussian` represents

    f(x) = scalar * P(x) * exp(-x^T quad x + lin . x)

with complex symmetric ``quad``, complex ``lin`` and a complex-coefficient
polynomial ``P`` stored as a multi-index table.  The class is closed under
pointwise products, derivatives, shifts, complex conjugation, Fourier
transforms and Gaussian integration, which is what makes every closed-form
identity in this package computable without series truncation.

Total polynomial degree is capped at :data:`MAX_DEGREE`; all identities
realized here need degree <= 4, the cap only guards against runaway
intermediate growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iproduct

import numpy as np

from .errors import DegreeTooHigh, DimensionMismatch

MAX_DEGREE = 16

# ---------------------------------------------------------------------------
# Polynomial tables: dict mapping multi-index tuples -> complex coefficients.
# ---------------------------------------------------------------------------


def p_zero():
    return {}


def p_const(nvars, value=1.0):
    return {(0,) * nvars: complex(value)}


def p_monomial(idx, coeff=1.0):
    return {tuple(int(k) for k in idx): complex(coeff)}


def p_degree(p):
    return max((sum(m) for m in p), default=0)


def p_add(p, q, scale=1.0):
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0.0) + scale * c
    return {m: c for m, c in out.items() if c != 0.0}


def p_scale(p, a):
    if a == 0.0:
        return {}
    return {m: a * c for m, c in p.items()}


def p_mul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0.0) + c1 * c2
    for m in out:
        if sum(m) > MAX_DEGREE:
            raise DegreeTooHigh(f"polynomial degree {sum(m)} exceeds cap {MAX_DEGREE}")
    return {m: c for m, c in out.items() if c != 0.0}


def p_pow(p, k):
    nvars = len(next(iter(p), ()))
    out = p_const(nvars) if nvars else {(): 1.0}
    for _ in range(int(k)):
        out = p_mul(out, p)
    return out


def p_deriv(p, i):
    out = {}
    for m, c in p.items():
        if m[i] > 0:
            dm = list(m)
            dm[i] -= 1
            out[tuple(dm)] = out.get(tuple(dm), 0.0) + c * m[i]
    return out


def p_eval(p, points):
    """Evaluate a polynomial table on points of shape (..., nvars)."""
    points = np.asarray(points)
    out = np.zeros(points.shape[:-1], dtype=complex)
    for m, c in p.items():
        term = np.full(points.shape[:-1], c, dtype=complex)
        for i, k in enumerate(m):
            if k:
                term = term * points[..., i] ** k
        out = out + term
    return out


def _central_moment(cov, idx, cache):
    """Formal Gaussian central moment E[prod_a xi_a^{idx_a}] with covariance cov.

    Isserlis recursion; valid for complex symmetric cov (formal calculus).
    """
    if sum(idx) == 0:
        return 1.0 + 0.0j
    if sum(idx) % 2 == 1:
        return 0.0 + 0.0j
    key = idx
    hit = cache.get(key)
    if hit is not None:
        return hit
    a = next(i for i, k in enumerate(idx) if k > 0)
    rest = list(idx)
    rest[a] -= 1
    total = 0.0 + 0.0j
    for b, k in enumerate(rest):
        if k > 0 and cov[a, b] != 0.0:
            sub = list(rest)
            sub[b] -= 1
            total += cov[a, b] * k * _central_moment(cov, tuple(sub), cache)
    cache[key] = total
    return total


def _expect_poly(p_inner, means, cov):
    """E[P(m + xi)] for formal Gaussian xi with covariance ``cov``.

    ``means`` is a list of polynomial tables over the *outer* variables; the
    result is a polynomial table over the outer variables.
    """
    nouter = len(next(iter(means[0]), ())) if means else 0
    cache = {}
    out = {}
    for idx, coeff in p_inner.items():
        ranges = [range(k + 1) for k in idx]
        for js in _iproduct(*ranges):
            cm = _central_moment(cov, js, cache)
            if cm == 0.0:
                continue
            weight = coeff * cm
            for k, j in zip(idx, js):
                weight *= math.comb(k, j)
            term = p_const(nouter)
            for a, (k, j) in enumerate(zip(idx, js)):
                if k - j > 0:
                    term = p_mul(term, p_pow(means[a], k - j))
            out = p_add(out, term, scale=weight)
    return out


# ---------------------------------------------------------------------------
# Branch-tracked determinant powers.
# ---------------------------------------------------------------------------


def inv_sqrt_det_posreal(m):
    """det(m)^(-1/2) for complex symmetric m with positive definite real part.

    The branch is the analytic continuation from Re(m), computed exactly via
    det m = det(Re m) * prod(1 + i s_k) with s_k the eigenvalues of
    Re(m)^{-1/2} Im(m) Re(m)^{-1/2}; every factor has positive real part so
    principal logarithms are safe.
    """
    m = np.asarray(m, dtype=complex)
    re, im = m.real, m.imag
    evals, evecs = np.linalg.eigh(re)
    if np.min(evals) <= 0.0:
        raise DivergentIntegralError("real part of quadratic form is not positive definite")
    isq = evecs @ np.diag(evals**-0.5) @ evecs.T
    s = np.linalg.eigvalsh(isq @ im @ isq)
    logdet = np.sum(np.log(evals)) + np.sum(np.log1p(1j * s))
    return np.exp(-0.5 * logdet)


def inv_sqrt_det_segment(x_mat, singular_tol=1e-12):
    """det(I + X)^(-1/2) analytically continued from t = 0 along det(I + t X).

    The eigenvalues of I + t X move on straight segments 1 + t nu_k, which
    cannot wind around the origin, so the continued logarithm of each factor
    is its principal value and the continuation is exact.  A segment that
    meets the origin for t in (0, 1] (nu_k real and <= -1) signals a genuine
    divergence of the underlying Gaussian reduction.
    """
    nu = np.linalg.eigvals(np.asarray(x_mat, dtype=complex))
    w = 1.0 + nu
    if np.min(np.abs(w)) < singular_tol:
        raise DivergentIntegralError("quadratic form is singular; Gaussian reduction diverges")
    crossing = (np.abs(nu.imag) < singular_tol * (1.0 + np.abs(nu.real))) & (
        nu.real < -1.0
    )
    if np.any(crossing):
        raise DivergentIntegralError(
            "quadratic form crosses a singularity along the width homotopy"
        )
    return np.exp(-0.5 * np.sum(np.log(w)))


class DivergentIntegralError(ArithmeticError):
    """Gaussian reduction failed (singular or non-integrable quadratic form)."""


# ---------------------------------------------------------------------------
# PolyGaussian
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyGaussian:
    """scalar * P(x) * exp(-x^T quad x + lin . x) on R^nvars."""

    quad: np.ndarray
    lin: np.ndarray
    scalar: complex
    poly: dict = None

    def __post_init__(self):
        quad = np.asarray(self.quad, dtype=complex)
        lin = np.asarray(self.lin, dtype=complex)
        if quad.shape != (lin.size, lin.size):
            raise DimensionMismatch("quad/lin shape mismatch")
        object.__setattr__(self, "quad", 0.5 * (quad + quad.T))
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "scalar", complex(self.scalar))
        # None means the constant 1; an empty table is the genuine zero function
        poly = p_const(lin.size) if self.poly is None else dict(self.poly)
        object.__setattr__(self, "poly", poly)

    # -- constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, quad, lin=None, scalar=1.0):
        quad = np.asarray(quad, dtype=complex)
        if lin is None:
            lin = np.zeros(quad.shape[0])
        return cls(quad, lin, scalar)

    @classmethod
    def polynomial(cls, poly, nvars):
        z = np.zeros((nvars, nvars))
        return cls(z, np.zeros(nvars), 1.0, dict(poly))

    @property
    def nvars(self):
        return self.lin.size

    @property
    def degree(self):
        return p_degree(self.poly)

    def is_polynomial(self, tol=0.0):
        return (
            np.max(np.abs(self.quad)) <= tol and np.max(np.abs(self.lin)) <= tol
        )

    # -- pointwise algebra ---------------------------------------------------

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        expo = -np.einsum("...i,ij,...j->...", points, self.quad, points)
        expo = expo + points @ self.lin
        vals = self.scalar * p_eval(self.poly, points) * np.exp(expo)
        return vals if vals.size > 1 else complex(vals.reshape(-1)[0])

    def scale(self, a):
        return PolyGaussian(self.quad, self.lin, self.scalar * a, self.poly)

    def times(self, other):
        if other.nvars != self.nvars:
            raise DimensionMismatch("pointwise product requires equal nvars")
        return PolyGaussian(
            self.quad + other.quad,
            self.lin + other.lin,
            self.scalar * other.scalar,
            p_mul(self.poly, other.poly),
        )

    def add(self, other, rtol=1e-12):
        """Sum of two members sharing the same Gaussian part."""
        scale_ref = max(1.0, np.max(np.abs(self.quad)), np.max(np.abs(self.lin)))
        if (
            np.max(np.abs(self.quad - other.quad)) > rtol * scale_ref
            or np.max(np.abs(self.lin - other.lin)) > rtol * scale_ref
        ):
            raise DimensionMismatch("cannot add PolyGaussians with different Gaussian parts")
        poly = p_add(
            p_scale(self.poly, self.scalar), p_scale(other.poly, other.scalar)
        )
        return PolyGaussian(self.quad, self.lin, 1.0, poly)

    def conjugate(self):
        return PolyGaussian(
            self.quad.conj(),
            self.lin.conj(),
            np.conj(self.scalar),
            {m: np.conj(c) for m, c in self.poly.items()},
        )

    def derivative(self, i):
        """Partial derivative with respect to coordinate i (stays in class)."""
        dpoly = p_deriv(self.poly, i)
        # chain rule on exp(-x quad x + lin x)
        chain = p_monomial((0,) * self.nvars, self.lin[i])
        for j in range(self.nvars):
            e = [0] * self.nvars
            e[j] = 1
            chain = p_add(chain, p_monomial(tuple(e), -2.0 * self.quad[i, j]))
        total = p_add(dpoly, p_mul(chain, self.poly))
        return PolyGaussian(self.quad, self.lin, self.scalar, total)

    def shift(self, a):
        """f(x) -> f(x - a) for real or complex shift a."""
        a = np.asarray(a, dtype=complex)
        # exp(-(x-a) Q (x-a) + lin (x-a)) and P(x-a)
        lin_new = self.lin + 2.0 * self.quad @ a
        const = -a @ self.quad @ a - self.lin @ a
        means = []
        for i in range(self.nvars):
            e = [0] * self.nvars
            e[i] = 1
            means.append(p_add(p_monomial(tuple(e)), p_const(self.nvars, -a[i])))
        poly_new = _expect_poly(self.poly, means, np.zeros((self.nvars, self.nvars)))
        return PolyGaussian(self.quad, lin_new, self.scalar * np.exp(const), poly_new)

    # -- Gaussian reductions ---------------------------------------------------

    def integral(self):
        """Exact integral over R^nvars; requires Re(quad) positive definite."""
        m = self.quad
        det_factor = inv_sqrt_det_posreal(m)
        minv = np.linalg.inv(m)
        center = 0.5 * (minv @ self.lin)
        means = [p_const(self.nvars, center[i]) for i in range(self.nvars)]
        shifted = _expect_poly(self.poly, means, 0.5 * minv)
        value = shifted.get((0,) * self.nvars, 0.0)
        expo = 0.25 * self.lin @ minv @ self.lin
        return self.scalar * math.pi ** (self.nvars / 2.0) * det_factor * np.exp(expo) * value

    def fourier(self, scale=1.0, prefactor=1.0):
        """g(y) = prefactor * Integral f(p) exp(i*scale * y.p) d^n p as a PolyGaussian in y.

        Requires Re(quad) positive definite.
        """
        n = self.nvars
        m = self.quad
        det_factor = inv_sqrt_det_posreal(m)
        minv = np.linalg.inv(m)
        # linear term in the exponent: (lin + i*scale*y) . p
        # completed square: exp(1/4 L^T minv L), L = lin + i*scale*y
        quad_out = (scale**2 / 4.0) * minv
        lin_out = 0.5j * scale * (minv @ self.lin)
        const = 0.25 * self.lin @ minv @ self.lin
        # mean of p under the reduced Gaussian: 1/2 minv (lin + i*scale*y)
        means = []
        base = 0.5 * (minv @ self.lin)
        coef = 0.5j * scale * minv
        for i in range(n):
            mp = p_const(n, base[i])
            for j in range(n):
                e = [0] * n
                e[j] = 1
                mp = p_add(mp, p_monomial(tuple(e), coef[i, j]))
            means.append(mp)
        poly_out = _expect_poly(self.poly, means, 0.5 * minv)
        s = prefactor * self.scalar * math.pi ** (n / 2.0) * det_factor * np.exp(const)
        return PolyGaussian(quad_out, lin_out, s, poly_out)

    # -- serialization ---------------------------------------------------------

    def to_json_dict(self):
        def c2(v):
            return [float(np.real(v)), float(np.imag(v))]

        return {
            "quad": [[c2(v) for v in row] for row in self.quad],
            "lin": [c2(v) for v in self.lin],
            "scalar": c2(self.scalar),
            "poly": [
                {"idx": list(m), "coeff": c2(c)} for m, c in sorted(self.poly.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        def c1(v):
            return complex(v[0], v[1])

        quad = np.array([[c1(v) for v in row] for row in data["quad"]])
        lin = np.array([c1(v) for v in data["lin"]])
        poly = {tuple(t["idx"]): c1(t["coeff"]) for t in data["poly"]}
        return cls(quad, lin, c1(data["scalar"]), poly)


# ---------------------------------------------------------------------------
# Star products on the class.
# ---------------------------------------------------------------------------


def star_series_polynomials(f: PolyGaussian, g: PolyGaussian, lam) -> PolyGaussian:
    """Terminating derivative series for a pair of pure polynomials."""
    lam = np.asarray(lam, dtype=float)
    n = f.nvars
    result = p_zero()
    # level k holds {(f multi-derivative, g multi-derivative): weight}
    level = {((0,) * n, (0,) * n): 1.0 + 0.0j}
    df_cache = {(0,) * n: p_scale(f.poly, f.scalar)}
    dg_cache = {(0,) * n: p_scale(g.poly, g.scalar)}

    def deriv_of(cache, midx):
        if midx in cache:
            return cache[midx]
        i = next(i for i, k in enumerate(midx) if k > 0)
        prev = list(midx)
        prev[i] -= 1
        cache[midx] = p_deriv(deriv_of(cache, tuple(prev)), i)
        return cache[midx]

    k = 0
    while level:
        factor = 0.5**k / math.factorial(k)
        alive = {}
        for (mf, mg), wt in level.items():
            pf = deriv_of(df_cache, mf)
            pg = deriv_of(dg_cache, mg)
            if pf and pg:
                result = p_add(result, p_mul(pf, pg), scale=factor * wt)
                alive[(mf, mg)] = wt
        nxt = {}
        for (mf, mg), wt in alive.items():
            for i in range(n):
                for j in range(n):
                    if lam[i, j] != 0.0:
                        a = list(mf)
                        a[i] += 1
                        b = list(mg)
                        b[j] += 1
                        key = (tuple(a), tuple(b))
                        nxt[key] = nxt.get(key, 0.0) + wt * lam[i, j]
        level = nxt
        k += 1
        if k > 2 * MAX_DEGREE:
            break
    return PolyGaussian.polynomial(result, n)


def star_closed_form(f: PolyGaussian, g: PolyGaussian, lam) -> PolyGaussian:
    """Gaussian closed form of the deformation product on the closed class.

    Realizes exp(1/2 lam_ij d/dy_i d/dz_j) f(y) g(z) at y = z = x through a
    formal Gaussian expectation over the doubled variables w = (y, z) with
    cross covariance lam/2, which is the analytic continuation of the
    Fourier-domain double integral.
    """
    lam = np.asarray(lam, dtype=float)
    n = f.nvars
    if g.nvars != n or lam.shape != (n, n):
        raise DimensionMismatch("star product operands must share the dimension")
    lam_inv = np.linalg.inv(lam)
    two = 2 * n

    s_inv = np.zeros((two, two))
    s_inv[:n, n:] = 2.0 * lam_inv
    s_inv[n:, :n] = 2.0 * lam_inv
    s_cov = np.zeros((two, two))
    s_cov[:n, n:] = 0.5 * lam
    s_cov[n:, :n] = 0.5 * lam

    big_m = np.zeros((two, two), dtype=complex)
    big_m[:n, :n] = f.quad
    big_m[n:, n:] = g.quad
    big_c = np.concatenate([f.lin, g.lin])

    try:
        det_factor = inv_sqrt_det_segment(2.0 * s_cov @ big_m)
    except DivergentIntegralError as exc:
        raise _DivergentStarSignal(str(exc)) from exc
    green = np.linalg.inv(s_inv + 2.0 * big_m)

    # outer variables x enter through w0 = (x, x)
    # exponent at w0 + xi: -(w0 Mx w0) + c.w0 + xi-part with b = c - 2 M w0
    dup = np.zeros((two, n))
    dup[:n, :] = np.eye(n)
    dup[n:, :] = np.eye(n)

    quad_out = dup.T @ big_m @ dup
    lin_out = dup.T @ big_c
    # tilt: exp(1/2 b^T green b), b(x) = big_c - 2 big_m dup x  (affine in x)
    beta = big_c
    gamma = -2.0 * big_m @ dup
    quad_out = quad_out - 0.5 * gamma.T @ green @ gamma
    lin_out = lin_out + gamma.T @ green @ beta
    const = 0.5 * beta @ green @ beta

    # effective mean of w: w0 + green b(x) (affine polynomials in x)
    off = green @ beta
    coef = dup + green @ gamma
    means = []
    for a in range(two):
        mp = p_const(n, off[a])
        for j in range(n):
            e = [0] * n
            e[j] = 1
            mp = p_add(mp, p_monomial(tuple(e), coef[a, j]))
        means.append(mp)
    p_joint = p_mul(_embed(f.poly, n, 0), _embed(g.poly, n, n))
    poly_out = _expect_poly(p_joint, means, green)

    scalar = f.scalar * g.scalar * det_factor * np.exp(const)
    return PolyGaussian(quad_out, lin_out, scalar, poly_out)


class _DivergentStarSignal(ArithmeticError):
    """Internal marker translated to the public error by callers."""


def _embed(poly, n, offset):
    """Lift an n-variable polynomial into 2n variables starting at ``offset``."""
    out = {}
    for m, c in poly.items():
        idx = [0] * (2 * n)
        idx[offset : offset + n] = m
        out[tuple(idx)] = c
    return out
