"""Unitary time evolution of enveloping states and probability-conservation checks.

The Hamiltonian on operator-valued states is

    H(op) = (hbar^2 / 2 mass) (Ainv)_ij (Ainv)_ik [x_j, [x_k, op]] + V_q op

with V_q the hermitized potential; evolution integrates
i hbar d(op)/dt = H(op) either through the dense superoperator exponential
(exact up to expm accuracy) or a matrix-free fourth-order Runge-Kutta step.
The zero-field branch checks the continuity equation of the smoothed
representation in closed form on the polynomial-times-Gaussian class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .blockframe import BlockFrame, theta_inverse
from .envrep import (
    EnvelopingState,
    Superoperator,
    _check_same_space,
    inner_product,
    op_p,
    original_coordinate_matrices,
    require_invertible,
)
from .errors import (
    DegreeTooHigh,
    DimensionMismatch,
    GridTooCoarse,
    NonHermitianHamiltonian,
    NormDriftExceeded,
)
from .fock import FockOperator, FockTruncation
from .kernels import star_product, _coerce_width
from .polygauss import PolyGaussian

MAX_POTENTIAL_DEGREE = 4
EXPM_DIM_CAP = 64


@dataclass(frozen=True)
class PolynomialPotential:
    """Real-coefficient polynomial in the coordinates, total degree <= 4."""

    coeffs: dict
    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        clean = {}
        for idx, c in self.coeffs.items():
            idx = tuple(int(k) for k in idx)
            if sum(idx) > MAX_POTENTIAL_DEGREE:
                raise DegreeTooHigh(
                    f"potential degree {sum(idx)} exceeds cap {MAX_POTENTIAL_DEGREE}"
                )
            if float(c) != 0.0:
                clean[idx] = float(c)
        object.__setattr__(self, "coeffs", clean)

    @property
    def dim(self):
        return len(next(iter(self.coeffs), ())) if self.coeffs else 0

    @classmethod
    def isotropic_harmonic(cls, dim, mass=1.0, omega=1.0):
        coeffs = {}
        for i in range(dim):
            idx = [0] * dim
            idx[i] = 2
            coeffs[tuple(idx)] = 0.5 * mass * omega**2
        return cls(coeffs, mass)

    @classmethod
    def free(cls, dim, mass=1.0):
        return cls({}, mass)


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float
    steps: int
    integrator: str = "expm"
    conservation_tol: float = 1e-8

    def __post_init__(self):
        if self.steps < 1 or not math.isfinite(self.t_final):
            raise ValueError("steps >= 1 and finite t_final are required")
        if self.integrator not in ("expm", "rk4", "chebyshev"):
            raise ValueError("integrator must be 'expm', 'rk4' or 'chebyshev'")


def hermitize(potential: PolynomialPotential, frame: BlockFrame, trunc: FockTruncation) -> FockOperator:
    """Substitute coordinate matrices into the potential and hermitize.

    Each monomial is fully symmetrized over factor orderings (the neutral
    choice; the final (V + V^dag)/2 makes degree <= 2 results insensitive to
    it), then the average with the adjoint is returned.
    """
    xmats = original_coordinate_matrices(frame, trunc)
    dim = trunc.dim
    acc = np.zeros((dim, dim), dtype=complex)
    degree = 0
    for idx, coeff in potential.coeffs.items():
        if len(idx) != frame.dim:
            raise DimensionMismatch("potential and frame dimensions differ")
        factors = [i for i, k in enumerate(idx) for _ in range(k)]
        degree = max(degree, len(factors))
        if not factors:
            acc += coeff * np.eye(dim)
            continue
        orderings = set(permutations(factors))
        term = np.zeros((dim, dim), dtype=complex)
        for ordering in orderings:
            prod = np.eye(dim, dtype=complex)
            for i in ordering:
                prod = prod @ xmats[i]
            term += prod
        acc += coeff * term / len(orderings)
    acc = 0.5 * (acc + acc.conj().T)
    return FockOperator(acc, trunc, max(degree, 1))


def hamiltonian_superop(
    v_q: FockOperator, frame: BlockFrame, mass: float, hbar: float = 1.0
) -> Superoperator:
    """H(op) = (hbar^2/2m) (Ainv)_ij (Ainv)_ik [x_j, [x_k, op]] + V_q op."""
    require_invertible(frame)
    trunc = v_q.trunc
    xmats = original_coordinate_matrices(frame, trunc)
    a_inv = frame.rotation.T @ theta_inverse(frame) @ frame.rotation
    g_mat = a_inv.T @ a_inv  # g_jk = sum_i Ainv_ij Ainv_ik
    kin_coeff = hbar**2 / (2.0 * mass)
    pairs = [
        (j, k, g_mat[j, k])
        for j in range(frame.dim)
        for k in range(frame.dim)
        if g_mat[j, k] != 0.0
    ]
    vmat = v_q.matrix

    def apply_matrix(op):
        acc = vmat @ op
        for j, k, g in pairs:
            inner_c = xmats[k] @ op - op @ xmats[k]
            acc = acc + (kin_coeff * g) * (xmats[j] @ inner_c - inner_c @ xmats[j])
        return acc

    def apply(s: EnvelopingState) -> EnvelopingState:
        return EnvelopingState(apply_matrix(s.op), s.frame, s.trunc, s.hbar)

    sup = Superoperator(apply, "H")
    object.__setattr__(sup, "apply_matrix", apply_matrix)
    return sup


def kinetic_superop(frame: BlockFrame, trunc: FockTruncation, mass: float, hbar: float = 1.0) -> Superoperator:
    """(1/2m) sum_i P_i P_i as a composition of momentum actions."""
    pops = [op_p(i, frame, trunc, hbar) for i in range(frame.dim)]

    def apply(s):
        acc = None
        for p in pops:
            term = p(p(s)).scale(1.0 / (2.0 * mass))
            acc = term if acc is None else acc.add(term)
        return acc

    return Superoperator(apply, "P2/2m")


def superop_matrix(superop: Superoperator, frame: BlockFrame, trunc: FockTruncation, hbar=1.0) -> np.ndarray:
    """Dense matrix of a superoperator in the vectorized operator basis."""
    dim = trunc.dim
    out = np.empty((dim * dim, dim * dim), dtype=complex)
    basis = np.zeros((dim, dim), dtype=complex)
    for col in range(dim * dim):
        basis.flat[col] = 1.0
        image = superop(EnvelopingState(basis.copy(), frame, trunc, hbar))
        out[:, col] = image.op.reshape(-1)
        basis.flat[col] = 0.0
    return out


def check_hermitian(superop, frame, trunc, hbar=1.0, tol=1e-8, samples=4, seed=5):
    """Hermiticity of a superoperator under the trace inner product."""
    from .envrep import random_window_state

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        s1 = random_window_state(frame, trunc, rng, margin=0, hbar=hbar)
        s2 = random_window_state(frame, trunc, rng, margin=0, hbar=hbar)
        lhs = inner_product(superop(s1), s2)
        rhs = inner_product(s1, superop(s2))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))
    if worst > tol:
        raise NonHermitianHamiltonian(
            f"hermiticity residual {worst:.2e} exceeds tolerance {tol:.1e}"
        )
    return worst


def _chebyshev_stepper(happly, probe, dt, hbar):
    """Matrix-free Chebyshev expansion of exp(-i dt H / hbar) for hermitian H.

    The spectral interval is bracketed by power iteration with safety margins;
    Bessel coefficients are truncated at machine precision, so the step is an
    exact exponential for practical purposes (unlike rk4, whose stability and
    norm-conservation budgets collapse for stiff kinetic terms at small
    sector parameters).
    """
    rng = np.random.default_rng(1234)
    v = rng.normal(size=probe.shape) + 1j * rng.normal(size=probe.shape)
    v /= np.linalg.norm(v)
    lam_max = 0.0
    for _ in range(25):
        w = happly(v)
        lam_max = float(np.abs(np.vdot(v, w).real))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    lam_max = 1.1 * lam_max / hbar + 1e-12
    lam_min = -0.05 * lam_max
    half_span = 0.5 * (lam_max - lam_min)
    center = 0.5 * (lam_max + lam_min)
    rho = half_span * dt
    from scipy.special import jv

    nterms = int(rho + 40 + 8 * rho ** (1.0 / 3.0))
    coeff = np.array([jv(k, rho) for k in range(nterms)])
    keep = np.nonzero(np.abs(coeff) > 1e-17)[0]
    nterms = int(keep[-1]) + 1 if keep.size else 1
    coeff = coeff[:nterms]
    phase = np.exp(-1j * center * dt)

    def apply_scaled(op):
        # (H/hbar - center) / half_span
        return (happly(op) / hbar - center * op) / half_span

    def step(op):
        tk_prev = op
        tk = apply_scaled(op)
        acc = coeff[0] * tk_prev + 2.0 * (-1j) * coeff[1] * tk
        for k in range(2, nterms):
            tk_prev, tk = tk, 2.0 * apply_scaled(tk) - tk_prev
            acc = acc + (2.0 * (-1j) ** k * coeff[k]) * tk
        return phase * acc

    return step


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    norms: np.ndarray
    energies: np.ndarray


def evolve(
    s0: EnvelopingState,
    hamiltonian: Superoperator,
    cfg: EvolutionConfig,
    sample_every: int = 1,
) -> Trajectory:
    """Integrate i hbar d(op)/dt = H(op) and certify norm conservation.

    The trajectory is sampled every ``sample_every`` steps (state copies are
    kept, so keep it coarse for long runs).  Norm drift beyond the configured
    tolerance raises NormDriftExceeded; trace-norm constancy is the global
    conservation statement for the field-coupled dynamics.
    """
    check_hermitian(hamiltonian, s0.frame, s0.trunc, s0.hbar)
    dt = cfg.t_final / cfg.steps
    hbar = s0.hbar
    weight = float(np.prod([2.0 * math.pi * t for t in s0.frame.thetas]))
    norm0 = inner_product(s0, s0).real
    times = [0.0]
    states = [s0]
    norms = [norm0]
    energies = [inner_product(s0, hamiltonian(s0)).real]

    happly = getattr(hamiltonian, "apply_matrix", None)
    if happly is None:
        def happly(op):
            return hamiltonian(
                EnvelopingState(op, s0.frame, s0.trunc, s0.hbar)
            ).op

    propagator = None
    cheb = None
    if cfg.integrator == "expm":
        if s0.trunc.dim > EXPM_DIM_CAP:
            raise ValueError(
                f"dense exponential is limited to dimension {EXPM_DIM_CAP}; use rk4"
            )
        lmat = superop_matrix(hamiltonian, s0.frame, s0.trunc, hbar)
        propagator = expm(-1j * dt / hbar * lmat)
    elif cfg.integrator == "chebyshev":
        cheb = _chebyshev_stepper(happly, s0.op, dt, hbar)

    def step(op):
        if propagator is not None:
            return (propagator @ op.reshape(-1)).reshape(op.shape)
        if cheb is not None:
            return cheb(op)
        scale = -1j / hbar
        k1 = scale * happly(op)
        k2 = scale * happly(op + (0.5 * dt) * k1)
        k3 = scale * happly(op + (0.5 * dt) * k2)
        k4 = scale * happly(op + dt * k3)
        return op + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    op = s0.op
    for n in range(1, cfg.steps + 1):
        op = step(op)
        norm = weight * float(np.sum(np.abs(op) ** 2))
        if abs(norm - norm0) > cfg.conservation_tol * max(norm0, 1.0):
            raise NormDriftExceeded(
                f"norm drift {abs(norm - norm0):.2e} at step {n} exceeds "
                f"{cfg.conservation_tol:.1e}"
            )
        if n % sample_every == 0 or n == cfg.steps:
            state = EnvelopingState(op.copy(), s0.frame, s0.trunc, s0.hbar)
            times.append(n * dt)
            states.append(state)
            norms.append(norm)
            energies.append(inner_product(state, hamiltonian(state)).real)
    return Trajectory(np.array(times), states, np.array(norms), np.array(energies))


def position_expectations(traj: Trajectory):
    """<x_{alpha,a}(t)> for every sampled state (frame coordinates)."""
    from .envrep import classical_coordinates

    s0 = traj.states[0]
    xs = classical_coordinates(s0.frame, s0.trunc)
    flat = [m for pair in xs for m in pair]
    out = np.empty((len(traj.states), len(flat)), dtype=complex)
    for it, s in enumerate(traj.states):
        nrm = inner_product(s, s).real
        weight = float(np.prod([2.0 * math.pi * t for t in s.frame.thetas]))
        for k, xm in enumerate(flat):
            out[it, k] = weight * np.trace(s.op.conj().T @ (xm @ s.op)) / nrm
    return out


# -- commutative-branch continuity check ----------------------------------------


def _hermite_basis_momentum(levels, mass, omega, hbar, dim):
    """Momentum-space oscillator eigenfunctions as PolyGaussians, per axis.

    u_n(p) = (-i)^n (pi m w hbar)^(-1/4) / sqrt(2^n n!) H_n(p / sqrt(m w hbar))
             exp(-p^2 / (2 m w hbar)), assembled over ``dim`` axes by products.
    """
    s = math.sqrt(mass * omega * hbar)
    # physicists' Hermite polynomials via recurrence, one variable
    herm = [{(0,): 1.0}, {(1,): 2.0 / s}]
    for n in range(2, levels):
        nxt = {}
        for idx, c in herm[-1].items():
            nxt[(idx[0] + 1,)] = nxt.get((idx[0] + 1,), 0.0) + 2.0 / s * c
        for idx, c in herm[-2].items():
            nxt[idx] = nxt.get(idx, 0.0) - 2.0 * (n - 1) * c
        herm.append(nxt)
    norm0 = (math.pi * mass * omega * hbar) ** -0.25
    out = []
    for n in range(levels):
        scale = norm0 / math.sqrt(2.0**n * math.gamma(n + 1.0)) * (-1j) ** n
        out.append((herm[n], scale))
    return out


def harmonic_momentum_evolution(psi0: PolyGaussian, mass, omega, hbar, t, levels=4):
    """Exact momentum-space evolution of a packet in an isotropic harmonic well.

    Expands psi0 over tensor oscillator eigenfunctions (coefficients via exact
    Gaussian reductions), applies the phases exp(-i w (n_total + N/2) t) and
    reassembles a single PolyGaussian (all terms share the eigenbasis Gaussian).

    The truncated expansion is itself an exact solution of the evolution, so
    downstream conservation checks are unaffected by ``levels``; coefficients
    are renormalized to unit probability.  ``levels`` is kept small because
    star products later square the polynomial degree (cap at play).
    """
    dim = psi0.nvars
    basis = _hermite_basis_momentum(levels, mass, omega, hbar, 1)
    width = mass * omega * hbar
    from itertools import product as iproduct

    quad_basis = np.eye(dim) / (2.0 * width)
    terms = {}
    total_mass = 0.0
    for multi in iproduct(range(levels), repeat=dim):
        poly = {(0,) * dim: 1.0}
        scale = 1.0
        for axis, n in enumerate(multi):
            hpoly, s = basis[n]
            lifted = {}
            for idx, c in hpoly.items():
                key = [0] * dim
                key[axis] = idx[0]
                lifted[tuple(key)] = c
            newpoly = {}
            for i1, c1 in poly.items():
                for i2, c2 in lifted.items():
                    key = tuple(a + b for a, b in zip(i1, i2))
                    newpoly[key] = newpoly.get(key, 0.0) + c1 * c2
            poly = newpoly
            scale *= s
        u_n = PolyGaussian(quad_basis, np.zeros(dim), scale, poly)
        c_n = u_n.conjugate().times(psi0).integral()
        if abs(c_n) > 1e-16:
            terms[multi] = (c_n, u_n)
            total_mass += abs(c_n) ** 2
    renorm = 1.0 / math.sqrt(total_mass)
    total = None
    for multi, (c_n, u_n) in terms.items():
        phase = np.exp(-1j * omega * (sum(multi) + dim / 2.0) * t)
        term = u_n.scale(renorm * c_n * phase)
        total = term if total is None else total.add(term)
    return total


def free_momentum_evolution(psi0: PolyGaussian, mass, hbar, t):
    """psi(p, t) = exp(-i p^2 t / (2 m hbar)) psi0(p), exact and in class."""
    dim = psi0.nvars
    return PolyGaussian(
        psi0.quad + 0.5j * t / (mass * hbar) * np.eye(dim),
        psi0.lin,
        psi0.scalar,
        psi0.poly,
    )


def smoothed_wavefunction(psi_momentum: PolyGaussian, lam, hbar=1.0) -> PolyGaussian:
    """psi_lam(x) = Integral dp (2 pi hbar)^(-N/2) e^{i x.p/hbar} e^{-p.lam.p/(4 hbar^2)} psi(p)."""
    lam = _coerce_width(lam)
    n = psi_momentum.nvars
    damped = PolyGaussian(
        psi_momentum.quad + lam.entries / (4.0 * hbar**2),
        psi_momentum.lin,
        psi_momentum.scalar,
        psi_momentum.poly,
    )
    return damped.fourier(scale=1.0 / hbar, prefactor=(2.0 * math.pi * hbar) ** (-n / 2.0))


def probability_density(psi_lam: PolyGaussian, lam) -> PolyGaussian:
    """rho_lam = conj(psi_lam) star psi_lam."""
    return star_product(psi_lam.conjugate(), psi_lam, lam)


def probability_current(psi_lam: PolyGaussian, lam, mass, hbar=1.0):
    """J_i = (hbar / 2 i m)(conj(psi) star d_i psi - d_i conj(psi) star psi)."""
    lam = _coerce_width(lam)
    out = []
    conj = psi_lam.conjugate()
    for i in range(psi_lam.nvars):
        term1 = star_product(conj, psi_lam.derivative(i), lam)
        term2 = star_product(conj.derivative(i), psi_lam, lam)
        out.append(term1.add(term2.scale(-1.0)).scale(hbar / (2j * mass)))
    return out


def continuity_check_commutative(
    psi0: PolyGaussian,
    potential: PolynomialPotential,
    lam,
    grid,
    t_final,
    hbar=1.0,
    omega=None,
    n_times=3,
    dt_fd=1e-4,
    dx_fd=1e-4,
):
    """Residual of d(rho)/dt + div J = 0 on a grid, zero-field branch.

    ``potential`` must be free (no coefficients) or isotropic harmonic (with
    ``omega`` supplied); the momentum-space evolution is exact in both cases.
    Derivatives are central finite differences.  Returns a report dict with the
    max residual, the probability totals per sampled time, and a coarsening
    diagnostic (residual with doubled steps; a >10x jump raises GridTooCoarse).
    """
    lam = _coerce_width(lam)
    grid = np.asarray(grid, dtype=float)
    mass = potential.mass
    harmonic = bool(potential.coeffs)

    def psi_p(t):
        if harmonic:
            return harmonic_momentum_evolution(psi0, mass, omega, hbar, t)
        return free_momentum_evolution(psi0, mass, hbar, t)

    def rho_at(t, pts):
        psi_lam = smoothed_wavefunction(psi_p(t), lam, hbar)
        return probability_density(psi_lam, lam)(pts)

    def divj_at(t, pts, h):
        psi_lam = smoothed_wavefunction(psi_p(t), lam, hbar)
        cur = probability_current(psi_lam, lam, mass, hbar)
        total = np.zeros(pts.shape[0], dtype=complex)
        for i, j_i in enumerate(cur):
            e = np.zeros(pts.shape[1])
            e[i] = h
            total += (j_i(pts + e) - j_i(pts - e)) / (2.0 * h)
        return total

    def residual_for(h_t, h_x):
        worst = 0.0
        for t in np.linspace(0.2 * t_final, t_final, n_times):
            drho = (rho_at(t + h_t, grid) - rho_at(t - h_t, grid)) / (2.0 * h_t)
            divj = divj_at(t, grid, h_x)
            worst = max(worst, float(np.max(np.abs(drho + divj))))
        return worst

    residual = residual_for(dt_fd, dx_fd)
    coarse = residual_for(2.0 * dt_fd, 2.0 * dx_fd)
    if residual > 10.0 * max(coarse, 1e-300):
        raise GridTooCoarse(
            f"residual {residual:.2e} grows >10x when steps are halved from {coarse:.2e}"
        )
    totals = []
    for t in np.linspace(0.0, t_final, n_times):
        psi_lam = smoothed_wavefunction(psi_p(t), lam, hbar)
        totals.append(float(probability_density(psi_lam, lam).integral().real))
    return {
        "max_residual": residual,
        "coarser_residual": coarse,
        "probability_totals": totals,
    }
