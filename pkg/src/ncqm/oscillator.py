"""Ordinary 2D isotropic oscillator evolved in a standard Fock basis.

Cross-check oracle for the vanishing-field limit of the evolution module.
Deliberately self-contained: it uses only the textbook ladder construction
with commutator [a, a+] = 1 per axis and must not import the sector-algebra
modules it is used to check.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln


def _axis_ladder(levels):
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def coherent_coefficients(alpha, levels):
    """Unit-norm coherent state coefficients exp(-|a|^2/2) a^k / sqrt(k!)."""
    k = np.arange(levels)
    if alpha == 0:
        out = np.zeros(levels, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * abs(alpha) ** 2 + k * math.log(abs(alpha)) - 0.5 * gammaln(k + 1.0)
    return np.exp(logmag) * np.exp(1j * k * np.angle(alpha))


def evolve_isotropic(x0, p0, mass, omega, hbar, times, levels=64):
    """Position expectation of a displaced ground state under H = p^2/2m + m w^2 x^2/2.

    The 2D isotropic oscillator factorizes into independent axes; each axis
    starts in the coherent state alpha = sqrt(m w / 2 hbar)(x0 + i p0/(m w))
    and evolves by the exact eigenphases exp(-i w (n + 1/2) t).

    Returns an array of shape (len(times), 2) with <x_1(t)>, <x_2(t)>.
    """
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    scale = math.sqrt(mass * omega / (2.0 * hbar))
    a_op = _axis_ladder(levels)
    x_op = (a_op + a_op.conj().T) * math.sqrt(hbar / (2.0 * mass * omega))
    n_levels = np.arange(levels)
    out = np.empty((len(times), 2))
    for axis in range(2):
        alpha = scale * (x0[axis] + 1j * p0[axis] / (mass * omega))
        c0 = coherent_coefficients(alpha, levels)
        for it, t in enumerate(times):
            phase = np.exp(-1j * omega * (n_levels + 0.5) * t)
            ct = phase * c0
            out[it, axis] = np.real(np.vdot(ct, x_op @ ct))
    return out
