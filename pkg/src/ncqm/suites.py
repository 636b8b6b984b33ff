"""Verification suites behind the command-line ``verify`` command.

Each suite replays the package's closed forms against independent oracles
(quadrature, finite differences, construction, or a self-contained reference
implementation) and emits one report row per check.  Tolerances are fixed
here; a failing row means the identity is broken, not that a knob needs
retuning.
"""

from __future__ import annotations

import math
from itertools import product as iproduct

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import blockframe, coherent, dynamics, envrep, fock, kernels, oscillator
from .polygauss import PolyGaussian, p_monomial
from .quadrature import gauss_hermite_nodes, integrate_gaussian_weighted
from .report import VerificationReport
from .sampling import (
    block_field,
    random_antisymmetric,
    random_orthogonal,
    random_spd,
    shuffled_block_field,
)

SUITE_NAMES = ("kernels", "star", "blockframe", "coherent", "fock", "envrep", "dynamics")


def run_suites(names, seed=0, report=None):
    report = report if report is not None else VerificationReport(seed=seed)
    runners = {
        "kernels": suite_kernels,
        "star": suite_star,
        "blockframe": suite_blockframe,
        "coherent": suite_coherent,
        "fock": suite_fock,
        "envrep": suite_envrep,
        "dynamics": suite_dynamics,
    }
    for name in names:
        if name not in runners:
            raise KeyError(f"unknown suite {name!r}")
        runners[name](report, seed)
    return report


# ---------------------------------------------------------------------------


def suite_kernels(report, seed=0):
    rng = np.random.default_rng(seed + 101)
    worst = 0.0
    for _ in range(100):
        n = int(rng.choice([1, 2, 4]))
        lam = random_spd(rng, n)
        x = rng.normal(size=n)
        closed = kernels.weierstrass(x, lam)

        def integrand(p, x=x, lam=lam):
            return np.exp(
                -0.25 * np.einsum("ni,ij,nj->n", p, lam, p) + 1j * p @ x
            ) / (2.0 * math.pi) ** len(x)

        quad = integrate_gaussian_weighted(integrand, lam / 4.0, order=32).real
        worst = max(worst, abs(closed - quad))
    report.add("kernel_closed_form_vs_fourier", "kernel-integral-representation", worst, 1e-8)

    lam = random_spd(rng, 2)
    pg = kernels.weierstrass_polygaussian(lam)
    report.add(
        "kernel_normalization",
        "kernel-unit-mass",
        abs(pg.integral().real - 1.0),
        1e-9,
    )
    report.add(
        "kernel_fixed_value_origin",
        "kernel-closed-form",
        abs(kernels.weierstrass(np.zeros(2), np.eye(2)) - 1.0 / math.pi),
        1e-12,
    )

    worst0 = worst1 = worst2 = 0.0
    for _ in range(10):
        n = int(rng.choice([1, 2]))
        lam = random_spd(rng, n)
        pg = kernels.weierstrass_polygaussian(lam)
        worst0 = max(worst0, abs(kernels.weierstrass_moments(lam, 0) - pg.integral().real))
        for i in range(n):
            e = [0] * n
            e[i] = 1
            m1 = pg.times(PolyGaussian.polynomial(p_monomial(tuple(e)), n)).integral().real
            worst1 = max(worst1, abs(m1 - kernels.weierstrass_moments(lam, 1)[i]))
        m2 = kernels.weierstrass_moments(lam, 2)
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                val = pg.times(PolyGaussian.polynomial(p_monomial(tuple(e)), n)).integral().real
                worst2 = max(worst2, abs(val - m2[i, j]))
    report.add("kernel_moment_order0", "kernel-moments", worst0, 1e-8)
    report.add("kernel_moment_order1", "kernel-moments", worst1, 1e-8)
    report.add("kernel_moment_order2", "kernel-moments", worst2, 1e-8)

    worst = 0.0
    worst_fd = 0.0
    for _ in range(10):
        n = int(rng.choice([1, 2, 3]))
        lam = random_spd(rng, n)
        x = rng.normal(size=n) * 0.7
        resid = kernels.weierstrass_pde_residual(x, lam)
        scale = kernels.weierstrass(x, lam)
        worst = max(worst, abs(resid) / max(scale, 1e-300))
        # finite-difference replica of the elliptic operator
        h = 1e-4
        lap = 0.0
        for i in range(n):
            for j in range(n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h
                ej[j] = h
                dij = (
                    kernels.weierstrass(x + ei + ej, lam)
                    - kernels.weierstrass(x + ei - ej, lam)
                    - kernels.weierstrass(x - ei + ej, lam)
                    + kernels.weierstrass(x - ei - ej, lam)
                ) / (4.0 * h * h)
                lap += lam[i, j] * dij
        fd_resid = -lap + (4.0 * x @ np.linalg.inv(lam) @ x - 2.0 * n) * scale
        worst_fd = max(worst_fd, abs(fd_resid - resid))
    report.add("kernel_pde_analytic", "kernel-elliptic-identity", worst, 1e-10)
    report.add("kernel_pde_vs_finite_difference", "kernel-elliptic-identity", worst_fd, 1e-6)


def _random_poly(rng, n, degree):
    poly = {}
    for idx in iproduct(*([range(degree + 1)] * n)):
        if sum(idx) <= degree and rng.random() < 0.6:
            poly[idx] = complex(rng.normal())
    poly.setdefault((0,) * n, 1.0)
    return PolyGaussian.polynomial(poly, n)


def suite_star(report, seed=0):
    rng = np.random.default_rng(seed + 202)

    # terminating-series values against an explicit low-order expansion
    f = PolyGaussian.polynomial(p_monomial((1,)), 1)
    out = kernels.star_product(f, f, np.array([[1.0]]))
    exact = dict(out.poly)
    err = abs(exact.get((2,), 0.0) - 1.0) + abs(exact.get((0,), 0.0) - 0.5)
    report.add("star_linear_pair_exact", "star-series-termination", err, 1e-14)

    pts2 = rng.normal(size=(30, 2))
    worst_comm = worst_assoc = worst_limit = 0.0
    lam2 = random_spd(rng, 2)
    for _ in range(8):
        fp, gp, hp = (_random_poly(rng, 2, 2) for _ in range(3))
        ab = kernels.star_product(fp, gp, lam2)(pts2)
        ba = kernels.star_product(gp, fp, lam2)(pts2)
        worst_comm = max(worst_comm, float(np.max(np.abs(ab - ba))))
        lhs = kernels.star_product(kernels.star_product(fp, gp, lam2), hp, lam2)(pts2)
        rhs = kernels.star_product(fp, kernels.star_product(gp, hp, lam2), lam2)(pts2)
        worst_assoc = max(worst_assoc, float(np.max(np.abs(lhs - rhs))))
        zero = kernels.star_product(fp, gp, np.eye(2) * 1e-300)(pts2)
        worst_limit = max(worst_limit, float(np.max(np.abs(zero - fp.times(gp)(pts2)))))
    report.add("star_commutative", "star-commutativity", worst_comm, 1e-10)
    report.add("star_associative", "star-associativity", worst_assoc, 1e-10)
    report.add("star_zero_width_pointwise", "star-pointwise-limit", worst_limit, 1e-10)

    limit = kernels.star_commutative_limit_check(
        _random_poly(rng, 2, 3), _random_poly(rng, 2, 3), [1e-2 / 2**k for k in range(36)]
    )
    report.add(
        "star_limit_monotone",
        "star-pointwise-limit",
        0.0 if limit["monotone_decreasing"] else 1.0,
        0.5,
    )
    report.add("star_limit_final", "star-pointwise-limit", limit["final_deviation"], 1e-10)
    ratio = limit["ratios"][2]
    report.add(
        "star_limit_first_order_slope",
        "star-pointwise-limit",
        abs(ratio - 2.0),
        0.2,
    )

    # mollified kernel-kernel identity
    worst = 0.0
    for _ in range(4):
        n = 2
        lam = random_spd(rng, n)
        a = rng.normal(size=n) * 0.5
        b0 = rng.normal(size=n) * 0.5
        t_mat = random_spd(rng, n, 1.0, 2.5)
        linv = np.linalg.inv(lam)
        conv_quad = np.linalg.inv(lam + np.linalg.inv(t_mat))
        c_w = (math.pi**n * np.linalg.det(lam)) ** -0.5
        c_conv = c_w * math.pi ** (n / 2.0) * np.linalg.det(linv + t_mat) ** -0.5
        smeared = PolyGaussian.gaussian(conv_quad, scalar=c_conv).shift(b0)
        lhs = kernels.star_product(
            kernels.weierstrass_polygaussian(lam, center=a), smeared, lam
        )
        pts = rng.normal(size=(25, n)) * 0.8
        rhs = kernels.weierstrass(pts - a, lam) * np.exp(-(a - b0) @ t_mat @ (a - b0))
        worst = max(worst, float(np.max(np.abs(lhs(pts) - rhs))))
    report.add("star_kernel_delta_smeared", "star-kernel-reproducing-identity", worst, 1e-7)

    # closed form vs double-Fourier quadrature on a 5x5 grid
    lam = random_spd(rng, 2)
    mf = random_spd(rng, 2, 0.15, 0.3)
    mg = random_spd(rng, 2, 0.15, 0.3)
    f = PolyGaussian(mf, rng.normal(size=2) * 0.3 + 0.2j * rng.normal(size=2), 0.8,
                     {(0, 0): 1.0, (1, 0): 0.4, (0, 2): -0.15})
    g = PolyGaussian(mg, rng.normal(size=2) * 0.3 + 0.2j * rng.normal(size=2), 1.1,
                     {(0, 0): 0.6, (1, 1): 0.3})
    closed = kernels.star_product(f, g, lam)
    fhat = f.fourier(scale=-1.0)
    ghat = g.fourier(scale=-1.0)
    grid1 = np.linspace(-0.8, 0.8, 5)
    mesh = np.meshgrid(grid1, grid1, indexing="ij")
    grid = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    weight = np.zeros((4, 4))
    weight[:2, :2] = np.real(fhat.quad)
    weight[2:, 2:] = np.real(ghat.quad)
    weight[:2, 2:] = lam / 4.0
    weight[2:, :2] = lam / 4.0
    # shared nodes: the x-dependence is a pure phase, evaluated for the whole grid
    nodes, wts = gauss_hermite_nodes(4, 32)
    tmat = np.linalg.inv(np.linalg.cholesky(weight)).T
    kl = nodes @ tmat.T
    jac = abs(np.linalg.det(tmat))
    boost = np.exp(np.sum(nodes**2, axis=1))
    k_part, l_part = kl[:, :2], kl[:, 2:]
    base = (
        fhat(k_part)
        * ghat(l_part)
        * np.exp(-0.5 * np.einsum("ni,ij,nj->n", k_part, lam, l_part))
        * wts
        * boost
        * jac
    )
    phases = np.exp(1j * (k_part + l_part) @ grid.T)
    quad_vals = (base @ phases) / (2 * math.pi) ** 4
    worst = float(np.max(np.abs(closed(grid) - quad_vals)))
    report.add("star_double_fourier_grid", "star-integral-representation", worst, 1e-7)


def suite_blockframe(report, seed=0):
    rng = np.random.default_rng(seed + 303)
    worst_orth = worst_block = worst_sv = worst_det = 0.0
    for _ in range(1000):
        n = int(rng.choice([2, 4, 6, 8]))
        a = random_antisymmetric(rng, n)
        try:
            frame = blockframe.block_diagonalize(a)
        except blockframe.DegenerateTheta:
            continue
        r = frame.rotation
        worst_orth = max(worst_orth, float(np.max(np.abs(r @ r.T - np.eye(n)))))
        worst_block = max(
            worst_block, float(np.max(np.abs(r @ a @ r.T - frame.theta_matrix())))
        )
        sv = np.sort(np.linalg.svd(a, compute_uv=False))[::-2]
        worst_sv = max(worst_sv, float(np.max(np.abs(np.sort(sv) - np.sort(frame.thetas)))))
        worst_det = max(worst_det, abs(abs(np.linalg.det(r)) - 1.0))
    report.add("blockframe_orthogonality", "orthogonal-congruence", worst_orth, 1e-9)
    report.add("blockframe_block_form", "canonical-block-form", worst_block, 1e-9)
    report.add("blockframe_theta_vs_singular_values", "sector-parameters-as-singular-values", worst_sv, 1e-10)
    report.add("blockframe_unit_determinant", "orthogonal-congruence", worst_det, 1e-10)

    worst_inv = worst_dense = 0.0
    for _ in range(50):
        n = int(rng.choice([2, 4, 6]))
        thetas = np.sort(rng.uniform(0.3, 3.0, size=n // 2))[::-1]
        a = shuffled_block_field(rng, thetas)
        frame = blockframe.block_diagonalize(a)
        tinv = blockframe.theta_inverse(frame)
        worst_inv = max(
            worst_inv,
            float(np.max(np.abs(frame.theta_matrix() @ tinv - np.eye(n)))),
        )
        worst_dense = max(
            worst_dense,
            float(np.max(np.abs(np.linalg.inv(a) - frame.rotation.T @ tinv @ frame.rotation))),
        )
    report.add("blockframe_theta_inverse", "sector-inverse-blocks", worst_inv, 1e-12)
    report.add("blockframe_inverse_vs_dense", "sector-inverse-blocks", worst_dense, 1e-10)

    worst_round = worst_eig = 0.0
    for _ in range(30):
        n = 4
        thetas = np.sort(rng.uniform(0.5, 2.5, size=2))[::-1]
        frame = blockframe.block_diagonalize(shuffled_block_field(rng, thetas))
        v = rng.normal(size=n)
        back = blockframe.rotate_from_frame(blockframe.rotate_to_frame(v, frame), frame)
        worst_round = max(worst_round, float(np.max(np.abs(back - v))))
        lam = random_spd(rng, n)
        lam_f = blockframe.rotate_to_frame(lam, frame)
        worst_eig = max(
            worst_eig,
            float(np.max(np.abs(np.sort(np.linalg.eigvalsh(lam_f)) - np.sort(np.linalg.eigvalsh(lam))))),
        )
    report.add("blockframe_rotation_round_trip", "frame-change-of-basis", worst_round, 1e-12)
    report.add("blockframe_width_eigenvalues", "frame-change-of-basis", worst_eig, 1e-10)


def suite_coherent(report, seed=0):
    rng = np.random.default_rng(seed + 404)
    hbar = 1.0

    report.add(
        "coherent_norm_identity_width",
        "state-norm-closed-form",
        abs(coherent.norm_squared(np.eye(2)) - 1.0 / (2.0 * math.pi)),
        1e-9,
    )

    worst_overlap = 0.0
    for _ in range(40):
        n = int(rng.choice([2, 4]))
        lam = random_spd(rng, n)
        s1 = coherent.CoherentLabel(rng.normal(size=n), lam, hbar)
        s2 = coherent.CoherentLabel(rng.normal(size=n), lam, hbar)
        closed = coherent.overlap(s1, s2)
        bra = coherent.momentum_wavefunction(s1).conjugate()
        ket = coherent.momentum_wavefunction(s2)
        integrand = bra.times(ket)
        quad = integrate_gaussian_weighted(
            lambda p: integrand(p), np.real(integrand.quad), order=24
        )
        worst_overlap = max(worst_overlap, abs(closed - quad))
        herm = abs(closed - np.conj(coherent.overlap(s2, s1)))
        worst_overlap = max(worst_overlap, herm)
    report.add("coherent_overlap_vs_quadrature", "overlap-closed-form", worst_overlap, 1e-9)

    worst = 0.0
    worst_herm = 0.0
    for draw in range(200):
        n = 2 if draw % 5 else 4
        lam = random_spd(rng, n)
        a_mat = random_antisymmetric(rng, n)
        field = coherent.FieldConfig(a_mat, hbar)
        s1 = coherent.CoherentLabel(rng.normal(size=n) * 0.8, lam, hbar)
        s2 = coherent.CoherentLabel(rng.normal(size=n) * 0.8, lam, hbar)
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        order = 28 if n == 2 else 18
        for tag in coherent.OP_TAGS:
            closed = coherent.matrix_element(tag, s1, s2, field, i, j)
            quad = _fixed_order_element(tag, s1, s2, field, i, j, order)
            worst = max(worst, abs(closed - quad))
        worst_herm = max(
            worst_herm,
            abs(
                coherent.matrix_element("X_i", s1, s2, field, i)
                - np.conj(coherent.matrix_element("X_i", s2, s1, field, i))
            ),
        )
    report.add("coherent_matrix_elements_vs_quadrature", "matrix-element-closed-forms", worst, 1e-8)
    report.add("coherent_matrix_element_hermiticity", "matrix-element-closed-forms", worst_herm, 1e-12)

    worst_red = 0.0
    for _ in range(25):
        n = int(rng.choice([2, 4]))
        lam = random_spd(rng, n)
        zero = coherent.FieldConfig.zero(n, hbar)
        s1 = coherent.CoherentLabel(rng.normal(size=n), lam, hbar)
        s2 = coherent.CoherentLabel(rng.normal(size=n), lam, hbar)
        for tag in coherent.OP_TAGS:
            i = int(rng.integers(n))
            j = int(rng.integers(n))
            worst_red = max(
                worst_red,
                abs(
                    coherent.matrix_element(tag, s1, s2, zero, i, j)
                    - coherent.matrix_element_commutative(tag, s1, s2, i, j)
                ),
            )
    report.add("coherent_zero_field_reduction", "zero-field-reduction", worst_red, 1e-14)

    worst_unc = worst_unc_quad = 0.0
    for _ in range(20):
        n = 2
        lam = random_spd(rng, n)
        a_mat = random_antisymmetric(rng, n)
        field = coherent.FieldConfig(a_mat, hbar)
        s = coherent.CoherentLabel(rng.normal(size=n), lam, hbar)
        dx, dp = coherent.uncertainty_matrices(s, field)
        prod = coherent.uncertainty_product(s, field)
        worst_unc = max(
            worst_unc,
            float(np.max(np.abs(np.einsum("ij,kl->ijkl", dx, dp) - prod))),
        )
        nrm = coherent.overlap(s, s).real
        xbar = np.array(
            [_fixed_order_element("X_i", s, s, field, i, 0, 20) / nrm for i in range(n)]
        )
        for i in range(n):
            for j in range(n):
                xx = _fixed_order_element("XX_ij", s, s, field, i, j, 20) / nrm
                worst_unc_quad = max(worst_unc_quad, abs(xx - xbar[i] * xbar[j] - dx[i, j]))
                pp = _fixed_order_element("PP_ij", s, s, field, i, j, 20) / nrm
                worst_unc_quad = max(worst_unc_quad, abs(pp - dp[i, j]))
    report.add("coherent_uncertainty_product_analytic", "spread-matrices-closed-form", worst_unc, 1e-12)
    report.add("coherent_uncertainty_vs_quadrature", "spread-matrices-closed-form", worst_unc_quad, 1e-8)

    worst_eig = 0.0
    pgrid = rng.normal(size=(40, 2))
    for _ in range(10):
        lam = random_spd(rng, 2)
        field = coherent.FieldConfig(random_antisymmetric(rng, 2), hbar)
        s = coherent.CoherentLabel(rng.normal(size=2), lam, hbar)
        worst_eig = max(worst_eig, coherent.eigenstate_residual(s, field, pgrid))
    report.add("coherent_twisted_eigenstate", "twisted-operator-eigenstates", worst_eig, 1e-10)

    worst_disp = 0.0
    for _ in range(10):
        lam = random_spd(rng, 2)
        field = coherent.FieldConfig(random_antisymmetric(rng, 2), hbar)
        s = coherent.CoherentLabel(rng.normal(size=2), lam, hbar)
        p0 = rng.normal(size=2)
        disp = coherent.displacement_action("momentum_shift", s, field, p0)
        lhs = disp.momentum_wavefunction()(pgrid)
        rhs = coherent.shifted_momentum_wavefunction(s, field, p0)(pgrid)
        worst_disp = max(worst_disp, float(np.max(np.abs(lhs - rhs))))
        ident = coherent.displacement_action("config_shift", s, field, np.zeros(2))
        worst_disp = max(worst_disp, float(np.max(np.abs(ident.label.z - s.z))))
    report.add("coherent_displacement_forms", "momentum-displacement-closed-form", worst_disp, 1e-10)

    worst_pid = 0.0
    for _ in range(4):
        lam = random_spd(rng, 2)
        field = coherent.FieldConfig(random_antisymmetric(rng, 2), hbar)
        p = rng.normal(size=2)
        _, _, diff = coherent.momentum_from_coherent(p, lam, field)
        worst_pid = max(worst_pid, diff)
        zero = coherent.FieldConfig.zero(2, hbar)
        l1, _, _ = coherent.momentum_from_coherent(p, lam, field)
        l0, _, _ = coherent.momentum_from_coherent(p, lam, zero)
        worst_pid = max(worst_pid, abs(l1 - l0))
    report.add("coherent_momentum_superposition", "momentum-eigenstate-superposition", worst_pid, 1e-7)


def _fixed_order_element(tag, s1, s2, field, i, j, order):
    bra = coherent.momentum_wavefunction(s1).conjugate()
    ket = coherent.momentum_wavefunction(s2)
    if tag == "X_i":
        ket = coherent.apply_position_op(ket, i, field)
    elif tag == "XX_ij":
        ket = coherent.apply_position_op(coherent.apply_position_op(ket, j, field), i, field)
    elif tag == "P_i":
        ket = coherent.apply_momentum_op(ket, i)
    elif tag == "PP_ij":
        ket = coherent.apply_momentum_op(coherent.apply_momentum_op(ket, j), i)
    elif tag == "P2":
        acc = None
        for k in range(s1.dim):
            term = coherent.apply_momentum_op(
                coherent.apply_momentum_op(coherent.momentum_wavefunction(s2), k), k
            )
            acc = term if acc is None else acc.add(term)
        ket = acc
    integrand = bra.times(ket)
    return integrate_gaussian_weighted(
        lambda p: integrand(p), np.real(integrand.quad), order=order
    )


def suite_fock(report, seed=0):
    rng = np.random.default_rng(seed + 505)
    worst_tables = 0.0
    worst_cross = 0.0
    worst_constraint = 0.0
    worst_back = 0.0
    for levels in (8, 16, 32):
        thetas = np.sort(rng.uniform(0.4, 2.5, size=1))[::-1]
        frame = blockframe.block_diagonalize(shuffled_block_field(rng, thetas))
        trunc, xs, ps = fock.position_momentum_from_ladders(frame, levels)
        theta = frame.thetas[0]
        eye = np.eye(trunc.dim)
        x1, x2 = xs[0][0].matrix, xs[0][1].matrix
        p1, p2 = ps[0][0].matrix, ps[0][1].matrix
        _, lad = fock.ladder_matrices(frame, levels)
        b, bd = lad["b"][0].matrix, lad["b_dag"][0].matrix
        d, dd = lad["d"][0].matrix, lad["d_dag"][0].matrix
        margin = 2
        checks = [
            (b @ bd - bd @ b - 2.0 * theta * eye),
            (d @ dd - dd @ d - 2.0 * theta * eye),
            (x1 @ x2 - x2 @ x1 - 1j * theta * eye),
            (x1 @ p1 - p1 @ x1 - 1j * eye),
            (x2 @ p2 - p2 @ x2 - 1j * eye),
            (x1 @ p2 - p2 @ x1),
            (p1 @ p2 - p2 @ p1),
        ]
        for mat in checks:
            worst_tables = max(worst_tables, fock.windowed_residual(mat, trunc, margin))
        for u, v in ((b, d), (b, dd), (bd, d), (bd, dd)):
            worst_cross = max(worst_cross, float(np.max(np.abs(u @ v - v @ u))))
        pp = p1 + 1j * p2
        pm = p1 - 1j * p2
        for mat in (
            b @ pm - pm @ b - 2j * eye,
            bd @ pp - pp @ bd - 2j * eye,
            d @ pp - pp @ d - 2j * eye,
            dd @ pm - pm @ dd - 2j * eye,
            b @ pp - pp @ b,
            bd @ pm - pm @ bd,
        ):
            worst_tables = max(worst_tables, fock.windowed_residual(mat, trunc, margin))
        u1 = x1 + 1j * x2
        u2 = x2 - 1j * x1
        v1 = (x1 - 1j * x2) + 1j * theta * (p1 - 1j * p2)
        v2 = 1j * v1
        worst_constraint = max(
            worst_constraint,
            float(np.max(np.abs(u2 + 1j * u1))),
            float(np.max(np.abs(u1 - b))),
            float(np.max(np.abs(v1 - d))),
            float(np.max(np.abs(v2 - 1j * d))),
        )
        xorig = fock.original_coordinates(frame, xs, trunc)
        a_mat = frame.field_matrix()
        for i in range(2):
            for j in range(2):
                comm = xorig[i].matrix @ xorig[j].matrix - xorig[j].matrix @ xorig[i].matrix
                worst_back = max(
                    worst_back,
                    fock.windowed_residual(comm - 1j * a_mat[i, j] * eye, trunc, margin),
                )
    report.add("fock_commutator_tables", "sector-algebra-tables", worst_tables, 1e-10)
    report.add("fock_cross_sector_commutators", "sector-algebra-tables", worst_cross, 1e-12)
    report.add("fock_projected_operator_constraints", "projected-operator-constraints", worst_constraint, 1e-12)
    report.add("fock_rotated_back_commutators", "coordinate-commutators", worst_back, 1e-10)

    # displacement operators
    theta = 0.8
    levels = 40
    zeta = 0.7 - 0.4j
    dmat = fock.displacement_matrix(zeta, 2.0 * theta, levels)
    dgen = expm(fock.displacement_generator(zeta, 2.0 * theta, levels))
    m = 20
    report.add(
        "fock_displacement_vs_expm",
        "displacement-matrix-elements",
        float(np.max(np.abs(dmat[:m, :m] - dgen[:m, :m]))),
        1e-9,
    )
    report.add(
        "fock_displacement_vacuum_element",
        "displacement-matrix-elements",
        abs(dmat[0, 0] - math.exp(-abs(zeta) ** 2 / (4.0 * theta))),
        1e-9,
    )
    prod = dmat @ fock.displacement_matrix(-zeta, 2.0 * theta, levels)
    report.add(
        "fock_displacement_group_inverse",
        "displacement-unitarity",
        float(np.max(np.abs(prod[:m, :m] - np.eye(levels)[:m, :m]))),
        1e-8,
    )
    uni = dmat.conj().T @ dmat
    report.add(
        "fock_displacement_unitarity",
        "displacement-unitarity",
        float(np.max(np.abs(uni[:m, :m] - np.eye(levels)[:m, :m]))),
        1e-8,
    )

    # localized-state vectors
    thetas = (1.0,)
    frame = blockframe.block_diagonalize(block_field(thetas))
    trunc, vac = fock.localized_state_vector(np.zeros(2), frame, 40)
    report.add(
        "fock_vacuum_norm",
        "nonstandard-vacuum-normalization",
        abs(vac.inner(vac).real - 1.0 / (2.0 * math.pi)),
        1e-12,
    )
    lam = blockframe.matched_width_matrix(frame)
    worst_ov = worst_eigvec = worst_exp = 0.0
    for _ in range(6):
        xa = rng.normal(size=2) * 0.7
        xb = rng.normal(size=2) * 0.7
        _, va = fock.localized_state_vector(xa, frame, 40)
        _, vb = fock.localized_state_vector(xb, frame, 40)
        closed = coherent.overlap(
            coherent.CoherentLabel(xa, lam), coherent.CoherentLabel(xb, lam)
        )
        worst_ov = max(worst_ov, abs(va.inner(vb) - closed))
        xf = frame.rotation @ xa
        z = xf[0] + 1j * xf[1]
        bmat = fock.mode_lowering(va.trunc, 0).matrix
        keep = fock.window_projector(va.trunc, 1)
        resid = keep @ (bmat @ va.coeffs - z * va.coeffs)
        worst_eigvec = max(worst_eigvec, float(np.linalg.norm(resid) / np.linalg.norm(va.coeffs)))
        _, xs, _ = fock.position_momentum_from_ladders(frame, 40)
        ex = np.vdot(va.coeffs, xs[0][0].matrix @ va.coeffs) / np.vdot(va.coeffs, va.coeffs)
        worst_exp = max(worst_exp, abs(ex.real - xf[0]))
    report.add("fock_coherent_overlap_vs_closed_form", "overlap-closed-form", worst_ov, 1e-8)
    report.add("fock_coherent_eigenvector", "lowering-eigenvector-property", worst_eigvec, 1e-8)
    report.add("fock_coherent_position_expectation", "position-expectation", worst_exp, 1e-8)

    # tail-mass monotonicity under K doubling
    tails = [fock.coherent_tail_mass(1.2, 2.0, k) for k in (8, 16, 32, 64)]
    mono = all(a > b for a, b in zip(tails, tails[1:]))
    report.add("fock_tail_monotonicity", "plumbing", 0.0 if mono else 1.0, 0.5)


def suite_envrep(report, seed=0):
    rng = np.random.default_rng(seed + 606)
    hbar = 1.0

    frame1 = blockframe.block_diagonalize(block_field((1.0,)))
    trunc1 = fock.FockTruncation.classical(frame1, 32)
    res1 = envrep.heisenberg_suite(frame1, trunc1, samples=3, hbar=hbar, seed=seed)
    thetas2 = (3.0, 1.0)
    frame2 = blockframe.block_diagonalize(shuffled_block_field(rng, thetas2))
    trunc2 = fock.FockTruncation.classical(frame2, 16)
    res2 = envrep.heisenberg_suite(frame2, trunc2, samples=2, hbar=hbar, seed=seed)
    report.add("envrep_commutator_xx", "coordinate-commutators", max(res1["xx"], res2["xx"]), 1e-9)
    report.add("envrep_commutator_xp", "mixed-commutators", max(res1["xp"], res2["xp"]), 1e-9)
    report.add("envrep_commutator_pp", "momentum-commutators", max(res1["pp"], res2["pp"]), 1e-9)
    report.add(
        "envrep_hermiticity",
        "phase-space-operator-hermiticity",
        max(res1["hermiticity"], res2["hermiticity"]),
        1e-8,
    )
    report.add(
        "envrep_momentum_realization",
        "momentum-realization-consistency",
        max(res1["p_realization"], res2["p_realization"]),
        1e-10,
    )

    lam = blockframe.matched_width_matrix(frame1)
    phi_vac = coherent.momentum_wavefunction(coherent.CoherentLabel(np.zeros(2), lam, hbar))
    vac_img = envrep.state_to_operator(phi_vac, frame1, trunc1, hbar)
    report.add(
        "envrep_vacuum_image_norm",
        "nonstandard-vacuum-normalization",
        abs(envrep.inner_product(vac_img, vac_img).real - 1.0 / (2.0 * math.pi)),
        1e-6,
    )

    worst_inner = 0.0
    for _ in range(50):
        g1 = _matched_gaussian(rng, frame1.thetas[0], hbar)
        g2 = _matched_gaussian(rng, frame1.thetas[0], hbar)
        s1 = envrep.state_to_operator(g1, frame1, trunc1, hbar)
        s2 = envrep.state_to_operator(g2, frame1, trunc1, hbar)
        trace_val = envrep.inner_product(s1, s2)
        momentum_val = g1.conjugate().times(g2).integral()
        worst_inner = max(worst_inner, abs(trace_val - momentum_val) / max(abs(momentum_val), 1e-8))
    report.add("envrep_trace_vs_momentum_inner", "trace-inner-product", worst_inner, 1e-6)

    g1 = _matched_gaussian(rng, 1.0, hbar)
    g2 = PolyGaussian(g1.quad, g1.lin, 1.0, {(1, 0): 0.5, (0, 1): -0.2j})
    a = 0.4 - 0.7j
    ssum = envrep.state_to_operator(g1.add(g2.scale(a)), frame1, trunc1, hbar, order=70)
    s1 = envrep.state_to_operator(g1, frame1, trunc1, hbar, order=70)
    s2 = envrep.state_to_operator(g2, frame1, trunc1, hbar, order=70)
    report.add(
        "envrep_map_linearity",
        "plumbing",
        float(np.max(np.abs(ssum.op - (s1.op + a * s2.op)))),
        1e-10,
    )
    report.add(
        "envrep_sesquilinearity",
        "plumbing",
        abs(
            envrep.inner_product(s1.scale(a), s2)
            - np.conj(a) * envrep.inner_product(s1, s2)
        ),
        1e-12,
    )
    sep1 = PolyGaussian.gaussian(0.25 * np.eye(2), np.array([3.0, 0.0]), 1.0)
    sep2 = PolyGaussian.gaussian(0.25 * np.eye(2), np.array([-3.0, 0.0]), 1.0)
    os1 = envrep.state_to_operator(sep1, frame1, trunc1, hbar)
    os2 = envrep.state_to_operator(sep2, frame1, trunc1, hbar)
    report.add(
        "envrep_orthogonal_states",
        "trace-inner-product",
        abs(envrep.inner_product(os1, os2)),
        1e-6,
    )
    report.add(
        "envrep_positive_norm",
        "trace-inner-product",
        0.0 if envrep.inner_product(os1, os1).real > 0 else 1.0,
        0.5,
    )

    img_cf = envrep.localized_state_image(np.array([0.4, -0.3]), frame1, trunc1, hbar)
    phi_loc = coherent.momentum_wavefunction(
        coherent.CoherentLabel(np.array([0.4, -0.3]), lam, hbar)
    )
    img_q = envrep.state_to_operator(phi_loc, frame1, trunc1, hbar)
    report.add(
        "envrep_localized_image_closed_form",
        "localized-state-operator-image",
        float(np.max(np.abs(img_cf.op - img_q.op))),
        1e-8,
    )

    b_sup = envrep.op_b(0, frame1, trunc1)
    d_sup = envrep.op_d(0, frame1, trunc1)
    s = envrep.random_window_state(frame1, trunc1, rng, margin=4, hbar=hbar)
    comm = b_sup(d_sup(s)).add(d_sup(b_sup(s)).scale(-1.0))
    report.add(
        "envrep_left_right_commute",
        "left-right-action-commutation",
        float(np.max(np.abs(comm.op))),
        1e-12,
    )


def _matched_gaussian(rng, theta, hbar):
    base = theta / (4.0 * hbar**2)
    m = rng.normal(size=(2, 2))
    quad = base * math.exp(rng.normal() * 0.25) * np.eye(2) + 0.1 * base * (m + m.T) / 2
    x0 = rng.normal(size=2) * 0.9
    p0 = rng.normal(size=2) * 0.9
    lin = 2.0 * base * p0 - 1j * x0 / hbar
    scal = complex(rng.normal() + 1j * rng.normal())
    if abs(scal) < 0.1:
        scal = 1.0
    return PolyGaussian(quad, lin, scal)


def suite_dynamics(report, seed=0):
    rng = np.random.default_rng(seed + 707)
    hbar = 1.0

    # hermitization
    frame = blockframe.block_diagonalize(block_field((1.0,)))
    trunc = fock.FockTruncation.classical(frame, 32)
    worst_herm = 0.0
    for _ in range(5):
        coeffs = {}
        for idx in iproduct(range(4), range(4)):
            if 0 < sum(idx) <= 3 and rng.random() < 0.7:
                coeffs[idx] = float(rng.normal())
        pot = dynamics.PolynomialPotential(coeffs, mass=1.0)
        vq = dynamics.hermitize(pot, frame, trunc)
        worst_herm = max(worst_herm, float(np.max(np.abs(vq.matrix - vq.matrix.conj().T))))
    report.add("dynamics_potential_hermitian", "hermitized-potential", worst_herm, 1e-12)

    pot = dynamics.PolynomialPotential.isotropic_harmonic(2, mass=1.0, omega=1.0)
    vq = dynamics.hermitize(pot, frame, trunc)
    ham = dynamics.hamiltonian_superop(vq, frame, 1.0, hbar)
    kin = dynamics.kinetic_superop(frame, trunc, 1.0, hbar)
    s = envrep.random_window_state(frame, trunc, rng, margin=4, hbar=hbar)
    alt = kin(s).add(envrep.EnvelopingState(vq.matrix @ s.op, frame, trunc, hbar))
    report.add(
        "dynamics_hamiltonian_vs_momentum_square",
        "hamiltonian-superoperator-form",
        float(np.max(np.abs(ham(s).op - alt.op))),
        1e-10,
    )
    report.add(
        "dynamics_kinetic_positivity",
        "kinetic-positivity",
        max(0.0, -envrep.inner_product(s, kin(s)).real),
        1e-10,
    )

    # NC harmonic oscillator conservation, 1000 expm steps
    s0 = envrep.localized_state_image(np.array([0.35, 0.0]), frame, trunc, hbar)
    cfg = dynamics.EvolutionConfig(1.0, 1000, "expm", 1e-8)
    traj = dynamics.evolve(s0, ham, cfg, sample_every=100)
    report.add(
        "dynamics_norm_conservation",
        "global-norm-conservation",
        float(np.max(np.abs(traj.norms - traj.norms[0])) / traj.norms[0]),
        1e-8,
    )
    report.add(
        "dynamics_energy_conservation",
        "energy-conservation",
        float(np.max(np.abs(traj.energies - traj.energies[0])) / abs(traj.energies[0])),
        1e-7,
    )
    cfg_rk = dynamics.EvolutionConfig(1.0, 1000, "rk4", 1e-5)
    traj_rk = dynamics.evolve(s0, ham, cfg_rk, sample_every=100)
    diff = max(
        float(np.max(np.abs(a.op - b.op))) for a, b in zip(traj.states, traj_rk.states)
    )
    report.add("dynamics_rk4_vs_expm", "plumbing", diff, 1e-6)
    # time reversal with the exact propagator
    back = dynamics.evolve(
        traj.states[-1], ham, dynamics.EvolutionConfig(-1.0, 1000, "expm", 1e-8), sample_every=1000
    )
    report.add(
        "dynamics_time_reversibility",
        "plumbing",
        float(np.max(np.abs(back.states[-1].op - s0.op))),
        1e-9,
    )

    # commutative-limit sweep against the self-contained oscillator oracle
    devs = _theta_sweep_deviations()
    mono = all(a > b for a, b in zip(devs, devs[1:]))
    report.add("dynamics_sweep_monotone", "vanishing-field-limit", 0.0 if mono else 1.0, 0.5)
    report.add("dynamics_sweep_final_deviation", "vanishing-field-limit", devs[-1], 2e-2)

    # continuity equation, zero-field branch
    grid1 = np.linspace(-1.0, 1.0, 5)
    mesh = np.meshgrid(grid1, grid1, indexing="ij")
    grid = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    s_w = 0.6
    psi0 = PolyGaussian.gaussian(
        np.eye(2) / (4 * s_w), np.array([0.3 - 0.2j, -0.1 + 0.4j]), 1.0
    )
    psi0 = psi0.scale(1.0 / math.sqrt(psi0.conjugate().times(psi0).integral().real))
    rep_free = dynamics.continuity_check_commutative(
        psi0, dynamics.PolynomialPotential.free(2, 1.0), np.eye(2), grid, 0.8
    )
    report.add(
        "dynamics_continuity_free",
        "smoothed-continuity-equation",
        rep_free["max_residual"],
        1e-5,
    )
    pot_h = dynamics.PolynomialPotential.isotropic_harmonic(2, 1.0, 1.0)
    psi_gs = PolyGaussian.gaussian(np.eye(2) / 2.0, np.zeros(2), math.pi**-0.5)
    rep_gs = dynamics.continuity_check_commutative(
        psi_gs, pot_h, np.eye(2), grid, 0.8, omega=1.0
    )
    report.add(
        "dynamics_continuity_stationary",
        "smoothed-continuity-equation",
        rep_gs["max_residual"],
        1e-6,
    )
    psi_m = PolyGaussian.gaussian(np.eye(2) / 2.0, np.array([-0.25j, 0.15j]), math.pi**-0.5)
    psi_m = psi_m.scale(1.0 / math.sqrt(psi_m.conjugate().times(psi_m).integral().real))
    rep_m = dynamics.continuity_check_commutative(
        psi_m, pot_h, np.eye(2), grid, 0.8, omega=1.0
    )
    report.add(
        "dynamics_continuity_moving",
        "smoothed-continuity-equation",
        rep_m["max_residual"],
        1e-5,
    )
    totals = rep_free["probability_totals"] + rep_m["probability_totals"]
    report.add(
        "dynamics_global_probability",
        "smoothed-probability-normalization",
        float(np.max(np.abs(np.array(totals) - 1.0))),
        1e-6,
    )


SWEEP_THETAS = (2.0, 0.632, 0.2)
SWEEP_LEVELS = (32, 48, 128)
SWEEP_OMEGA = 0.3


def _theta_sweep_deviations(thetas=SWEEP_THETAS, levels=SWEEP_LEVELS, omega=SWEEP_OMEGA):
    """Deviation of <x(t)> from the commutative oscillator per field strength."""
    mass = hbar = 1.0
    width = 2.0 * hbar / (mass * omega)
    x0 = np.array([1.0, 0.0])
    devs = []
    for theta, k_levels in zip(thetas, levels):
        frame = blockframe.block_diagonalize(block_field((theta,)))
        trunc = fock.FockTruncation.classical(frame, k_levels)
        s0 = envrep.gaussian_packet_image(x0, width, frame, trunc, hbar, tail_threshold=1e-3)
        pot = dynamics.PolynomialPotential.isotropic_harmonic(2, mass, omega)
        vq = dynamics.hermitize(pot, frame, trunc)
        ham = dynamics.hamiltonian_superop(vq, frame, mass, hbar)
        cfg = dynamics.EvolutionConfig(1.0, 10, "chebyshev", 1e-8)
        traj = dynamics.evolve(s0, ham, cfg, sample_every=1)
        xs = np.real(dynamics.position_expectations(traj)) @ frame.rotation
        oracle = oscillator.evolve_isotropic(x0, np.zeros(2), mass, omega, hbar, traj.times)
        devs.append(
            float(
                np.max(np.linalg.norm(xs - oracle, axis=1))
                / np.max(np.linalg.norm(oracle, axis=1))
            )
        )
    return devs
