"""Canonical 2x2 block form of real antisymmetric matrices.

A real antisymmetric N x N matrix A (N = 2n) is rotated by an orthogonal
R into Theta = R A R^T consisting of 2x2 blocks theta_alpha * eps with
eps = [[0, 1], [-1, 0]] and theta_alpha > 0 sorted descending.  The rotation
rows come from the complex eigendecomposition of A (eigenvalues +- i theta),
with conjugate eigenvector pairs combined into real 2-plane bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTheta, DimensionMismatch, NotAntisymmetric, OddDimension

EPS_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])

DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class AntisymMatrix:
    """Validated real antisymmetric matrix (entries have dimension length^2)."""

    entries: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch("antisymmetric matrix must be square")
        residual = np.max(np.abs(a + a.T))
        scale = max(1.0, np.max(np.abs(a)))
        if residual > self.tol * scale:
            raise NotAntisymmetric(
                f"symmetrization residual {residual:.3e} exceeds tol {self.tol:.1e}"
            )
        object.__setattr__(self, "entries", 0.5 * (a - a.T))

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class BlockFrame:
    """Orthogonal frame R and sector parameters theta of a canonical block form."""

    rotation: np.ndarray
    thetas: np.ndarray
    orientation: int
    degenerate: bool = False

    @property
    def dim(self):
        return self.rotation.shape[0]

    @property
    def nsectors(self):
        return self.thetas.size

    def theta_matrix(self):
        """The canonical block-diagonal image Theta = R A R^T."""
        blocks = [t * EPS_BLOCK for t in self.thetas]
        out = np.zeros((self.dim, self.dim))
        for a, blk in enumerate(blocks):
            out[2 * a : 2 * a + 2, 2 * a : 2 * a + 2] = blk
        return out

    def field_matrix(self):
        """Reconstruct A = R^T Theta R."""
        return self.rotation.T @ self.theta_matrix() @ self.rotation

    def to_json_dict(self):
        return {
            "rotation": self.rotation.tolist(),
            "thetas": self.thetas.tolist(),
            "orientation": int(self.orientation),
            "degenerate": bool(self.degenerate),
        }

    @classmethod
    def from_json_dict(cls, data):
        return cls(
            np.array(data["rotation"], dtype=float),
            np.array(data["thetas"], dtype=float),
            int(data["orientation"]),
            bool(data.get("degenerate", False)),
        )


def _coerce_antisym(a, tol):
    if isinstance(a, AntisymMatrix):
        return a
    return AntisymMatrix(np.asarray(a, dtype=float), tol=tol)


def block_diagonalize(a, tol=1e-12):
    """Compute the canonical block frame of a real antisymmetric matrix.

    i*A is Hermitian, so its eigenproblem is solved with ``eigh``; the
    eigenvectors for eigenvalue -theta (theta > 0) encode the real 2-plane
    bases r1, r2 via v = (r1 + i r2)/sqrt(2), which satisfy A r2 = theta r1
    and A r1 = -theta r2, i.e. the block theta * eps with eps_12 = +1.
    """
    am = _coerce_antisym(a, tol)
    n = am.dim
    if n % 2 != 0:
        raise OddDimension(f"dimension {n} is odd; no 2x2 block form exists")
    evals, evecs = np.linalg.eigh(1j * am.entries)

    # one eigenvector per 2-plane: eigenvalues -theta on the negative side
    neg = np.where(evals < 0)[0]
    thetas = -evals[neg]
    order = np.argsort(-thetas, kind="stable")
    neg = neg[order]
    thetas = thetas[order]
    scale = max(1.0, float(np.max(np.abs(am.entries))))
    if thetas.size != n // 2 or np.min(thetas, initial=np.inf) <= tol * scale:
        raise DegenerateTheta(
            "antisymmetric matrix has (near-)zero sector parameters; no positive theta frame"
        )

    rows = np.empty((n, n))
    for a_idx, col in enumerate(neg):
        v = evecs[:, col]
        r1 = np.sqrt(2.0) * v.real
        r2 = np.sqrt(2.0) * v.imag
        # in-plane gauge: rotate so the dominant component of r1 is positive
        # and the matching component of r2 vanishes (deterministic output)
        m = int(np.argmax(r1**2 + r2**2))
        rho = np.hypot(r1[m], r2[m])
        c, s = r1[m] / rho, -r2[m] / rho
        r1, r2 = c * r1 - s * r2, s * r1 + c * r2
        rows[2 * a_idx] = r1
        rows[2 * a_idx + 1] = r2

    degenerate = bool(
        thetas.size > 1
        and np.any(np.diff(thetas) > -DEGENERACY_RTOL * np.max(thetas))
    )
    orientation = int(round(float(np.linalg.det(rows))))
    return BlockFrame(rows, thetas, orientation, degenerate)


def theta_inverse(frame, tol=1e-12):
    """Block-diagonal inverse of Theta: blocks -(1/theta) * eps."""
    if np.min(frame.thetas) <= tol:
        raise DegenerateTheta("cannot invert a frame with vanishing theta")
    out = np.zeros((frame.dim, frame.dim))
    for a, t in enumerate(frame.thetas):
        out[2 * a : 2 * a + 2, 2 * a : 2 * a + 2] = -EPS_BLOCK / t
    return out


def rotate_to_frame(value, frame):
    """Map a vector v -> R v or a matrix M -> R M R^T into frame coordinates."""
    value = np.asarray(value)
    r = frame.rotation
    if value.ndim == 1:
        if value.size != frame.dim:
            raise DimensionMismatch("vector length does not match frame dimension")
        return r @ value
    if value.shape != (frame.dim, frame.dim):
        raise DimensionMismatch("matrix shape does not match frame dimension")
    return r @ value @ r.T


def rotate_from_frame(value, frame):
    """Inverse of :func:`rotate_to_frame`."""
    value = np.asarray(value)
    r = frame.rotation
    if value.ndim == 1:
        if value.size != frame.dim:
            raise DimensionMismatch("vector length does not match frame dimension")
        return r.T @ value
    if value.shape != (frame.dim, frame.dim):
        raise DimensionMismatch("matrix shape does not match frame dimension")
    return r.T @ value @ r


def matched_width_matrix(frame):
    """The width matrix whose frame image is diag(theta_alpha) per 2-plane.

    This is the choice that aligns localized states with the sector Fock
    algebras: Lambda = diag(theta_1, theta_1, ..., theta_n, theta_n) in frame
    coordinates, pulled back to the original coordinates.
    """
    lam_frame = np.diag(np.repeat(frame.thetas, 2))
    return frame.rotation.T @ lam_frame @ frame.rotation
