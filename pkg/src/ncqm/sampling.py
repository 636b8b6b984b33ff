"""Seeded random instances shared by the verification suites and tests."""

from __future__ import annotations

import numpy as np

EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, eig_low=0.4, eig_high=2.5):
    q = random_orthogonal(rng, n)
    return q @ np.diag(rng.uniform(eig_low, eig_high, size=n)) @ q.T


def random_antisymmetric(rng, n, scale=1.0):
    m = rng.normal(size=(n, n)) * scale
    return 0.5 * (m - m.T)


def block_field(thetas):
    """Canonical antisymmetric matrix with the given sector parameters."""
    n = len(thetas)
    out = np.zeros((2 * n, 2 * n))
    for a, t in enumerate(thetas):
        out[2 * a : 2 * a + 2, 2 * a : 2 * a + 2] = t * EPS2
    return out


def shuffled_block_field(rng, thetas):
    """A known-theta instance conjugated by a random rotation (construction oracle)."""
    q = random_orthogonal(rng, 2 * len(thetas))
    return q.T @ block_field(thetas) @ q
