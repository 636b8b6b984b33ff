"""Truncated Fock spaces for the sector mode algebras.

Each sector alpha carries two commuting mode algebras (b, b+) and (d, d+)
with commutator normalization [b, b+] = 2 theta_alpha on the untruncated
space.  Matrices here act on the tensor product of K-level mode spaces;
operator identities are asserted only on the edge-valid window (levels whose
images stay below the truncation), since the top rows of any truncated ladder
polynomial are corrupted by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.special import eval_genlaguerre, gammainc, gammaln

from .blockframe import BlockFrame, rotate_from_frame
from .errors import DimensionMismatch, FrameMismatch, TruncationTooSmall

DEFAULT_LEVELS = 32
MAX_LEVELS = 128
TAIL_THRESHOLD = 1e-10


@dataclass(frozen=True)
class FockTruncation:
    """K levels per mode plus the per-mode normalization theta (commutator 2 theta)."""

    levels: int
    thetas: tuple

    def __post_init__(self):
        if self.levels < 4:
            raise ValueError("at least 4 levels per mode are required")
        thetas = tuple(float(t) for t in self.thetas)
        if any(t <= 0 for t in thetas):
            raise ValueError("mode normalizations must be positive")
        object.__setattr__(self, "thetas", thetas)

    @classmethod
    def classical(cls, frame: BlockFrame, levels=DEFAULT_LEVELS):
        """b-sector modes only: one mode per sector alpha."""
        return cls(levels, tuple(frame.thetas))

    @classmethod
    def full(cls, frame: BlockFrame, levels=DEFAULT_LEVELS):
        """b- and d-sector modes: [b_1..b_n, d_1..d_n]."""
        return cls(levels, tuple(frame.thetas) + tuple(frame.thetas))

    @property
    def nmodes(self):
        return len(self.thetas)

    @property
    def dim(self):
        return self.levels**self.nmodes


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the truncated tensor space with its ladder degree.

    ``ladder_degree`` is the polynomial degree in ladder operators; identities
    involving this operator are trusted on levels 0..K-1-degree per mode.
    """

    matrix: np.ndarray
    trunc: FockTruncation
    ladder_degree: int = 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.trunc.dim, self.trunc.dim):
            raise DimensionMismatch("matrix does not match the truncation")
        object.__setattr__(self, "matrix", m)

    def dag(self):
        return FockOperator(self.matrix.conj().T, self.trunc, self.ladder_degree)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            if other.trunc != self.trunc:
                raise FrameMismatch("operators live on different truncations")
            return FockOperator(
                self.matrix @ other.matrix,
                self.trunc,
                self.ladder_degree + other.ladder_degree,
            )
        return NotImplemented


@dataclass(frozen=True)
class FockState:
    """Coefficient vector over the tensor basis with a normalization tag.

    tag = "standard": unit-norm coefficients; tag = "paper-vacuum": scaled so
    the vacuum squared norm is prod_m (2 pi theta_m)^(-1/2) over the modes of
    this space.
    """

    coeffs: np.ndarray
    trunc: FockTruncation
    tag: str = "standard"

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.size != self.trunc.dim:
            raise DimensionMismatch("coefficient vector does not match the truncation")
        object.__setattr__(self, "coeffs", c)

    def inner(self, other) -> complex:
        if other.trunc != self.trunc or other.tag != self.tag:
            raise FrameMismatch("states live on different spaces or conventions")
        return complex(np.vdot(self.coeffs, other.coeffs))


def _mode_ladder(levels, two_theta):
    """Single-mode lowering matrix: b|k> = sqrt(two_theta * k)|k-1>."""
    return np.diag(np.sqrt(two_theta * np.arange(1, levels)), k=1).astype(complex)


def _embed(mats, levels, nmodes):
    """Kronecker embedding of per-mode matrices (identity where absent)."""
    eye = np.eye(levels, dtype=complex)
    factors = [mats.get(m, eye) for m in range(nmodes)]
    return reduce(np.kron, factors)


def mode_lowering(trunc: FockTruncation, mode: int) -> FockOperator:
    """Lowering operator of one mode embedded in the tensor space."""
    b = _mode_ladder(trunc.levels, 2.0 * trunc.thetas[mode])
    return FockOperator(_embed({mode: b}, trunc.levels, trunc.nmodes), trunc, 1)


def ladder_matrices(frame: BlockFrame, levels=DEFAULT_LEVELS):
    """All sector ladder operators on the full (b, d) tensor space.

    Returns (trunc, {"b": [...], "b_dag": [...], "d": [...], "d_dag": [...]})
    with one operator per sector alpha.
    """
    trunc = FockTruncation.full(frame, levels)
    n = frame.nsectors
    b = [mode_lowering(trunc, a) for a in range(n)]
    d = [mode_lowering(trunc, n + a) for a in range(n)]
    return trunc, {
        "b": b,
        "b_dag": [op.dag() for op in b],
        "d": d,
        "d_dag": [op.dag() for op in d],
    }


def position_momentum_from_ladders(frame: BlockFrame, levels=DEFAULT_LEVELS, hbar=1.0):
    """Frame coordinates and momenta on the full space.

    x_{alpha,1} = (b + b+)/2,  x_{alpha,2} = -i (b - b+)/2,
    p_{alpha,1} = (i hbar / 2 theta)(b+ - b + d+ - d),
    p_{alpha,2} = -(hbar / 2 theta)(b+ + b - d+ - d).
    """
    trunc, lad = ladder_matrices(frame, levels)
    xs, ps = [], []
    for a, theta in enumerate(frame.thetas):
        b, bd = lad["b"][a].matrix, lad["b_dag"][a].matrix
        d, dd = lad["d"][a].matrix, lad["d_dag"][a].matrix
        x1 = 0.5 * (b + bd)
        x2 = -0.5j * (b - bd)
        p1 = 0.5j * hbar / theta * (bd - b + dd - d)
        p2 = -0.5 * hbar / theta * (bd + b - dd - d)
        xs.append(
            (FockOperator(x1, trunc, 1), FockOperator(x2, trunc, 1))
        )
        ps.append(
            (FockOperator(p1, trunc, 1), FockOperator(p2, trunc, 1))
        )
    return trunc, xs, ps


def original_coordinates(frame: BlockFrame, xs_frame, trunc):
    """Rotate frame coordinate operators back: x_i = sum R_{(alpha,a),i} x_{alpha,a}."""
    flat = [op.matrix for pair in xs_frame for op in pair]
    n = frame.dim
    out = []
    for i in range(n):
        acc = np.zeros((trunc.dim, trunc.dim), dtype=complex)
        for row in range(n):
            acc += frame.rotation[row, i] * flat[row]
        out.append(FockOperator(acc, trunc, 1))
    return out


def window_projector(trunc: FockTruncation, margin: int) -> np.ndarray:
    """Diagonal 0/1 matrix keeping basis states with every mode index < K - margin."""
    keep_1d = np.arange(trunc.levels) < trunc.levels - margin
    keep = reduce(np.kron, [keep_1d.astype(float)] * trunc.nmodes)
    return np.diag(keep)


def windowed_residual(matrix, trunc: FockTruncation, margin: int) -> float:
    """Max magnitude of a matrix restricted to the edge-valid window."""
    keep_1d = np.arange(trunc.levels) < trunc.levels - margin
    keep = reduce(np.kron, [keep_1d] * trunc.nmodes)
    sub = matrix[np.ix_(keep, keep)]
    return float(np.max(np.abs(sub))) if sub.size else 0.0


def coherent_tail_mass(w, two_theta, levels) -> float:
    """Occupancy mass of a coherent state at or above the truncation.

    Occupation numbers are Poisson with mean |w|^2 / (2 theta); the tail is
    the regularized lower incomplete gamma gammainc(K, mean).
    """
    mean = abs(w) ** 2 / two_theta
    return float(gammainc(levels, mean)) if mean > 0 else 0.0


def coherent_vector(w, trunc: FockTruncation, tag="standard", tail_threshold=TAIL_THRESHOLD):
    """Tensor coherent vector with per-mode eigenvalues ``w``.

    Mode coefficients are exp(-|z|^2/2) z^k / sqrt(k!) with z = w / sqrt(2 theta),
    so b v = w v on the edge-valid window.  Raises TruncationTooSmall when any
    mode tail exceeds the threshold.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if w.size != trunc.nmodes:
        raise DimensionMismatch("one eigenvalue per mode is required")
    factors = []
    for wm, theta in zip(w, trunc.thetas):
        two_theta = 2.0 * theta
        tail = coherent_tail_mass(wm, two_theta, trunc.levels)
        if tail > tail_threshold:
            raise TruncationTooSmall(
                f"coherent tail mass {tail:.2e} exceeds {tail_threshold:.1e} at K={trunc.levels}"
            )
        z = wm / math.sqrt(two_theta)
        k = np.arange(trunc.levels)
        if wm == 0:
            coeff = np.zeros(trunc.levels, dtype=complex)
            coeff[0] = 1.0
        else:
            logmag = -0.5 * abs(z) ** 2 + k * np.log(abs(z)) - 0.5 * gammaln(k + 1.0)
            coeff = np.exp(logmag) * np.exp(1j * k * np.angle(z))
        factors.append(coeff)
    vec = reduce(np.kron, factors)
    if tag == "paper-vacuum":
        vec = vec * paper_vacuum_scale(trunc)
    elif tag != "standard":
        raise ValueError(f"unknown normalization tag {tag!r}")
    return FockState(vec, trunc, tag)


def paper_vacuum_scale(trunc: FockTruncation) -> float:
    """Amplitude factor giving the vacuum squared norm prod_m (2 pi theta_m)^(-1/2)."""
    return float(np.prod([(2.0 * math.pi * t) ** -0.25 for t in trunc.thetas]))


def localized_state_vector(x, frame: BlockFrame, levels=DEFAULT_LEVELS, tag="paper-vacuum"):
    """The localized state on the full space: b-modes at z_alpha, d-modes at conj(z_alpha).

    z_alpha = x_{alpha,1} + i x_{alpha,2} in frame coordinates.
    """
    trunc = FockTruncation.full(frame, levels)
    xf = frame.rotation @ np.asarray(x, dtype=float)
    z = xf[0::2] + 1j * xf[1::2]
    return trunc, coherent_vector(np.concatenate([z, z.conj()]), trunc, tag=tag)


def displacement_matrix(zeta, two_theta, levels, tail_threshold=TAIL_THRESHOLD) -> np.ndarray:
    """Single-mode displacement exp((zeta b+ - conj(zeta) b) / (2 theta)).

    Entries are the exact matrix elements of the untruncated operator in the
    Laguerre form: with z = zeta / sqrt(2 theta) and x = |z|^2,

        <m|D|n> = sqrt(n!/m!) z^(m-n) exp(-x/2) L_n^{(m-n)}(x)     (m >= n)

    and the conjugate-transpose-with-sign relation for m < n.  Each entry is
    evaluated directly (magnitudes combined in log space), which avoids the
    catastrophic cancellation of multiplying the normal-ordered triangular
    factors at large |z| and deep truncations.
    """
    tail = coherent_tail_mass(zeta, two_theta, levels)
    if tail > tail_threshold:
        raise TruncationTooSmall(
            f"displacement tail mass {tail:.2e} exceeds {tail_threshold:.1e} at K={levels}"
        )
    return displacement_matrices(np.array([zeta]), two_theta, levels)[0]


def displacement_matrices(zetas, two_theta, levels, chunk=512) -> np.ndarray:
    """Vectorized exact displacement matrices, one per entry of ``zetas``.

    Returns an array of shape (len(zetas), levels, levels); no tail check is
    applied (weights quench large displacements in quadrature use).  Work is
    chunked to bound the broadcast temporaries.
    """
    zetas = np.asarray(zetas, dtype=complex)
    k = np.arange(levels)
    lgam = gammaln(k + 1.0)
    m_idx, n_idx = np.meshgrid(k, k, indexing="ij")
    lo = np.minimum(m_idx, n_idx)
    hi = np.maximum(m_idx, n_idx)
    alpha = hi - lo
    base = 0.5 * (lgam[lo] - lgam[hi])
    out = np.empty((zetas.size, levels, levels), dtype=complex)
    for start in range(0, zetas.size, chunk):
        z = zetas[start : start + chunk] / math.sqrt(two_theta)
        absz = np.abs(z)
        x = absz**2
        lag = eval_genlaguerre(lo[None, :, :], alpha[None, :, :], x[:, None, None])
        safe = np.where(absz > 0, absz, 1.0)
        with np.errstate(divide="ignore"):
            logmag = (
                base[None, :, :]
                + alpha[None, :, :] * np.log(safe)[:, None, None]
                - 0.5 * x[:, None, None]
                + np.log(np.abs(lag))
            )
        logmag = np.where(
            (alpha[None, :, :] > 0) & (absz[:, None, None] == 0), -np.inf, logmag
        )
        phase = np.where(absz > 0, z / safe, 1.0)
        upper = phase[:, None, None] ** alpha[None, :, :]
        lower = (-np.conj(phase))[:, None, None] ** alpha[None, :, :]
        phases = np.where((m_idx >= n_idx)[None, :, :], upper, lower)
        out[start : start + chunk] = np.sign(lag) * np.exp(logmag) * phases
    return out


def displacement_generator(zeta, two_theta, levels) -> np.ndarray:
    """The truncated anti-Hermitian generator (zeta b+ - conj(zeta) b)/(2 theta)."""
    b = _mode_ladder(levels, two_theta)
    return (zeta * b.conj().T - np.conj(zeta) * b) / two_theta
