"""Localized normalizable states, their overlaps, matrix elements and displacements.

A state labelled by (z, lam) has momentum wave function

    <p|z;lam> = (2 pi hbar)^(-N/2) exp(-i z.p / hbar) exp(-p.lam.p / (4 hbar^2)),

normalizable for complex labels z, and reducing for real z = x to a Gaussian
packet centered at x with width set by lam.  The closed forms below hold for
an arbitrary antisymmetric field matrix A coupled to the coordinates (the
momentum representation stays sharp), and they all come with momentum-space
quadrature oracles since the position representation does not survive A != 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MismatchedLambda, UnknownOpTag
from .kernels import PosDefSymMatrix, _coerce_width, weierstrass
from .polygauss import PolyGaussian, p_add, p_const, p_monomial, p_mul
from .quadrature import adaptive_gaussian_quadrature

OP_TAGS = ("X_i", "XX_ij", "P_i", "PP_ij", "P2")


@dataclass(frozen=True)
class CoherentLabel:
    """Label (z, lam, hbar) of a localized state; z real means configuration labels."""

    z: np.ndarray
    lam: PosDefSymMatrix
    hbar: float = 1.0

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        lam = _coerce_width(self.lam)
        if z.size != lam.dim:
            raise DimensionMismatch("label length does not match the width matrix")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self):
        return self.z.size

    @property
    def is_real(self):
        return bool(np.max(np.abs(self.z.imag)) == 0.0)

    @property
    def x(self):
        return self.z.real


@dataclass(frozen=True)
class FieldConfig:
    """Constant antisymmetric field matrix A (may be zero) and hbar."""

    a_matrix: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=float)
        if np.max(np.abs(a + a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
            raise DimensionMismatch("field matrix must be antisymmetric")
        object.__setattr__(self, "a_matrix", 0.5 * (a - a.T))

    @classmethod
    def zero(cls, dim, hbar=1.0):
        return cls(np.zeros((dim, dim)), hbar)

    @property
    def dim(self):
        return self.a_matrix.shape[0]


def _check_pair(s1: CoherentLabel, s2: CoherentLabel):
    if s1.dim != s2.dim:
        raise DimensionMismatch("labels have different dimensions")
    if (
        np.max(np.abs(s1.lam.entries - s2.lam.entries)) > 1e-12
        or abs(s1.hbar - s2.hbar) > 1e-15
    ):
        raise MismatchedLambda("states carry different width matrices or hbar")


def norm_squared(lam) -> float:
    """<x;lam|x;lam> = ((2 pi)^N det lam)^(-1/2), independent of x."""
    lam = _coerce_width(lam)
    return ((2.0 * math.pi) ** lam.dim * np.linalg.det(lam.entries)) ** -0.5


def overlap(s1: CoherentLabel, s2: CoherentLabel) -> complex:
    """<z1;lam|z2;lam> in closed form; W_{2 lam}(x1 - x2) for real labels."""
    _check_pair(s1, s2)
    d = s1.z.conj() - s2.z
    linv = s1.lam.inverse
    return norm_squared(s1.lam) * np.exp(-0.5 * d @ linv @ d)


def momentum_wavefunction(s: CoherentLabel) -> PolyGaussian:
    """<p|z;lam> as a PolyGaussian over p."""
    n = s.dim
    hbar = s.hbar
    quad = s.lam.entries / (4.0 * hbar**2)
    lin = -1j * s.z / hbar
    scalar = (2.0 * math.pi * hbar) ** (-n / 2.0)
    return PolyGaussian(quad, lin, scalar)


# -- momentum-representation operator actions --------------------------------


def apply_position_op(f: PolyGaussian, i: int, field: FieldConfig) -> PolyGaussian:
    """x_i acting in the momentum representation: (i hbar d/dp_i - (A p)_i / (2 hbar)) f."""
    hbar = field.hbar
    out = f.derivative(i).scale(1j * hbar)
    a_row = field.a_matrix[i]
    mono = {}
    for j in range(f.nvars):
        if a_row[j] != 0.0:
            e = [0] * f.nvars
            e[j] = 1
            mono[tuple(e)] = -a_row[j] / (2.0 * hbar)
    if mono:
        out = out.add(f.times(PolyGaussian.polynomial(mono, f.nvars)))
    return out


def apply_momentum_op(f: PolyGaussian, i: int) -> PolyGaussian:
    """p_i acting by multiplication."""
    e = [0] * f.nvars
    e[i] = 1
    return f.times(PolyGaussian.polynomial(p_monomial(tuple(e)), f.nvars))


def _pair_integral(bra: PolyGaussian, ket: PolyGaussian, rtol=1e-11) -> complex:
    """Integral of conj(bra) * ket over momentum space (exact Gaussian reduction)."""
    return bra.conjugate().times(ket).integral()


def matrix_element_quadrature(op_tag, s1, s2, field, i=0, j=0, rtol=1e-10):
    """Momentum-space quadrature oracle for <s1| op |s2> (independent of closed forms)."""
    _check_pair(s1, s2)
    bra = momentum_wavefunction(s1).conjugate()
    ket = momentum_wavefunction(s2)
    if op_tag == "X_i":
        ket = apply_position_op(ket, i, field)
    elif op_tag == "XX_ij":
        ket = apply_position_op(apply_position_op(ket, j, field), i, field)
    elif op_tag == "P_i":
        ket = apply_momentum_op(ket, i)
    elif op_tag == "PP_ij":
        ket = apply_momentum_op(apply_momentum_op(ket, j), i)
    elif op_tag == "P2":
        acc = None
        for k in range(s1.dim):
            term = apply_momentum_op(apply_momentum_op(momentum_wavefunction(s2), k), k)
            acc = term if acc is None else acc.add(term)
        ket = acc
    else:
        raise UnknownOpTag(f"unknown operator tag {op_tag!r}")
    integrand = bra.times(ket)
    weight = np.real(integrand.quad)

    def func(points):
        return integrand(points)

    return adaptive_gaussian_quadrature(func, weight, rtol=rtol)


# -- closed forms -------------------------------------------------------------


def matrix_element(op_tag, s1: CoherentLabel, s2: CoherentLabel, field: FieldConfig, i=0, j=0):
    """Closed-form <x1;lam| op |x2;lam> for real labels, arbitrary antisymmetric A."""
    _check_pair(s1, s2)
    if not (s1.is_real and s2.is_real):
        raise MismatchedLambda("closed forms are exposed for real labels only")
    if op_tag not in OP_TAGS:
        raise UnknownOpTag(f"unknown operator tag {op_tag!r}")
    x1, x2 = s1.x, s2.x
    lam = s1.lam.entries
    linv = s1.lam.inverse
    a_mat = field.a_matrix
    hbar = field.hbar
    w = overlap(s1, s2)
    ssum = x1 + x2
    d = x1 - x2
    if op_tag == "X_i":
        val = 0.5 * ssum[i] - 0.5j * (a_mat @ linv @ d)[i]
        return val * w
    if op_tag == "XX_ij":
        t = ssum - 1j * (a_mat @ linv @ d)
        val = (
            0.25 * t[i] * t[j]
            + 0.25 * lam[i, j]
            + 0.5j * a_mat[i, j]
            - 0.25 * (a_mat @ linv @ a_mat)[i, j]
        )
        return val * w
    g = linv @ d
    if op_tag == "P_i":
        return 1j * hbar * g[i] * w
    if op_tag == "PP_ij":
        return hbar**2 * (linv[i, j] - g[i] * g[j]) * w
    if op_tag == "P2":
        return hbar**2 * (np.trace(linv) - g @ g) * w
    raise UnknownOpTag(op_tag)


def matrix_element_commutative(op_tag, s1, s2, i=0, j=0):
    """The zero-field closed forms, written independently for reduction checks."""
    _check_pair(s1, s2)
    x1, x2 = s1.x, s2.x
    lam = s1.lam.entries
    linv = s1.lam.inverse
    hbar = s1.hbar
    w = overlap(s1, s2)
    ssum = x1 + x2
    g = linv @ (x1 - x2)
    if op_tag == "X_i":
        return 0.5 * ssum[i] * w
    if op_tag == "XX_ij":
        return (0.25 * ssum[i] * ssum[j] + 0.25 * lam[i, j]) * w
    if op_tag == "P_i":
        return 1j * hbar * g[i] * w
    if op_tag == "PP_ij":
        return hbar**2 * (linv[i, j] - g[i] * g[j]) * w
    if op_tag == "P2":
        return hbar**2 * (np.trace(linv) - g @ g) * w
    raise UnknownOpTag(op_tag)


def uncertainty_matrices(s: CoherentLabel, field: FieldConfig):
    """Position and momentum spread matrices of a real-labelled state.

    Returns (dx, dp) with dx = lam/4 + i A/2 - A lam^-1 A / 4 and
    dp = hbar^2 lam^-1; their product saturates the mixed uncertainty bound.
    """
    if not s.is_real:
        raise MismatchedLambda("uncertainties are defined for real labels")
    lam = s.lam.entries
    linv = s.lam.inverse
    a_mat = field.a_matrix
    dx = 0.25 * lam + 0.5j * a_mat - 0.25 * (a_mat @ linv @ a_mat)
    dp = field.hbar**2 * linv
    return dx, dp


def uncertainty_product(s: CoherentLabel, field: FieldConfig):
    """The closed-form product dx_ij dp_kl as a 4-index array."""
    lam = s.lam.entries
    linv = s.lam.inverse
    a_mat = field.a_matrix
    core = lam + 2j * a_mat - a_mat @ linv @ a_mat
    return 0.25 * field.hbar**2 * np.einsum("kl,ij->ijkl", linv, core)


# -- displacements -------------------------------------------------------------


@dataclass(frozen=True)
class DisplacementResult:
    """Closed-form action of a displacement on a localized state.

    The displaced state is scalar_phase * |label;lam> with ``label`` possibly
    complex.  ``momentum_phase_field`` describes the equivalent shifted-packet
    representation: the vector q such that the momentum wave function also
    equals exp(i q.p) <p - p0|x;lam> (q = -A p0 / (2 hbar^2), zero at A = 0).
    """

    label: CoherentLabel
    scalar_phase: complex
    momentum_phase_field: np.ndarray

    def momentum_wavefunction(self) -> PolyGaussian:
        return momentum_wavefunction(self.label).scale(self.scalar_phase)


def displacement_action(kind, s: CoherentLabel, field: FieldConfig, shift=None):
    """Closed-form displacement of a real-labelled state.

    kind = "config_shift": exp(-i a.p_op / hbar)|x;lam> = |x + a;lam> with unit phase.
    kind = "momentum_shift": exp(i p0.x_op / hbar)|x;lam> =
        exp(i p0.x / hbar) exp(-p0.lam.p0 / (4 hbar^2))
        |z = x - A p0/(2 hbar) + i lam p0/(2 hbar); lam>.
    """
    if not s.is_real:
        raise MismatchedLambda("displacements are defined on real labels")
    shift = np.zeros(s.dim) if shift is None else np.asarray(shift, dtype=float)
    if shift.size != s.dim:
        raise DimensionMismatch("shift vector has wrong length")
    hbar = field.hbar
    if kind == "config_shift":
        label = CoherentLabel(s.x + shift, s.lam, s.hbar)
        return DisplacementResult(label, 1.0 + 0.0j, np.zeros(s.dim))
    if kind == "momentum_shift":
        lam = s.lam.entries
        a_mat = field.a_matrix
        z = s.x - (a_mat @ shift) / (2.0 * hbar) + 0.5j * (lam @ shift) / hbar
        phase = np.exp(1j * (shift @ s.x) / hbar - (shift @ lam @ shift) / (4.0 * hbar**2))
        return DisplacementResult(
            CoherentLabel(z, s.lam, s.hbar), phase, (a_mat @ shift) / (2.0 * hbar**2)
        )
    raise UnknownOpTag(f"unknown displacement kind {kind!r}")


def shifted_momentum_wavefunction(s: CoherentLabel, field: FieldConfig, p0):
    """Reference form <p|exp(i p0.x_op/hbar)|x;lam> = exp(i (A p0).p/(2 hbar^2)) <p-p0|x;lam>.

    The phase vector is +A p0/(2 hbar^2) because the bilinear A_ij p0_i p_j
    equals -(A p0).p for antisymmetric A.
    """
    p0 = np.asarray(p0, dtype=float)
    base = momentum_wavefunction(s)
    shifted = base.shift(p0)  # f(p - p0)
    q = (field.a_matrix @ p0) / (2.0 * field.hbar**2)
    return PolyGaussian(shifted.quad, shifted.lin + 1j * q, shifted.scalar, shifted.poly)


def momentum_from_coherent(p, lam, field, test_state=None, rtol=1e-9):
    """Check the momentum-eigenstate superposition identity in smeared form.

    Both sides of

        Integral dx exp(i p.x_op/hbar)|x;lam> = (2 pi hbar)^(N/2) |p>

    are paired against a Gaussian momentum test state.  The inner momentum
    integral is exact (Gaussian reduction); the configuration integral uses
    adaptive quadrature.  Returns (lhs, rhs, |lhs - rhs|).
    """
    lam = _coerce_width(lam)
    p = np.asarray(p, dtype=float)
    n = lam.dim
    hbar = field.hbar
    if test_state is None:
        test_state = PolyGaussian.gaussian(
            np.eye(n) * 0.5, np.zeros(n), (math.pi) ** (-n / 4.0)
        )
    bra = test_state.conjugate()

    def integrand(points):
        vals = np.empty(points.shape[0], dtype=complex)
        for k, x in enumerate(points):
            s = CoherentLabel(x, lam, hbar)
            pg = shifted_momentum_wavefunction(s, field, p)
            vals[k] = bra.times(pg).integral()
        return vals

    # the x-integral of <phi|e^{ip.x_op/hbar}|x;lam> is a Gaussian of width ~ sqrt(lam)
    # around the stationary point; weight matched to lam^-1 scale
    weight = lam.inverse / 2.0
    lhs = adaptive_gaussian_quadrature(integrand, weight, rtol=rtol)
    rhs = (2.0 * math.pi * hbar) ** (n / 2.0) * complex(bra(p[None, :]))
    return lhs, rhs, abs(lhs - rhs)


def eigenstate_residual(s: CoherentLabel, field: FieldConfig, pgrid):
    """Max residual of <p|(x_op_i + (i/(2 hbar)) (lam - i A)_ij p_op_j)|x;lam> = x_i <p|x;lam>."""
    base = momentum_wavefunction(s)
    lam = s.lam.entries
    a_mat = field.a_matrix
    hbar = field.hbar
    worst = 0.0
    for i in range(s.dim):
        lhs = apply_position_op(base, i, field)
        for j in range(s.dim):
            coeff = (lam[i, j] - 1j * a_mat[i, j]) * 0.5j / hbar
            if coeff != 0.0:
                lhs = lhs.add(apply_momentum_op(base, j).scale(coeff))
        rhs_vals = s.x[i] * base(pgrid)
        worst = max(worst, float(np.max(np.abs(lhs(pgrid) - rhs_vals))))
    return worst
