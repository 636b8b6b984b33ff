"""Command-line batch harness: verification suites, block canonicalization, evolution runs.

Exit codes: 0 all checks pass, 1 a check or precondition failed, 2 usage or
parse errors.  Numeric matrices always come from JSON files (never flags);
reports are written atomically and contain no timestamps, so a rerun with the
same seed is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import blockframe, dynamics, envrep, fock, oscillator
from .errors import NcqmError
from .report import VerificationReport, write_text_atomic
from .suites import SUITE_NAMES, SWEEP_LEVELS, SWEEP_OMEGA, SWEEP_THETAS, run_suites


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ncqm",
        description="Verification toolkit for quantum mechanics with a constant "
        "conjugate field in momentum space",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run verification suites and write reports")
    p_verify.add_argument("--config", help="JSON config file (suites, seed, output_dir)")
    p_verify.add_argument("--all", action="store_true", help="run every suite")
    p_verify.add_argument("--suites", nargs="*", default=None, help=f"subset of {SUITE_NAMES}")
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--output-dir", default=None)

    p_block = sub.add_parser("blockdiag", help="canonical block form of an antisymmetric matrix")
    p_block.add_argument("matrix", help="JSON file with a row-major array of arrays")
    p_block.add_argument("--output", default=None, help="write the frame JSON here")
    p_block.add_argument("--tol", type=float, default=1e-12)

    p_evolve = sub.add_parser("evolve", help="evolve a state and write trajectory.csv")
    p_evolve.add_argument("--config", required=True, help="JSON run configuration")
    p_evolve.add_argument("--output-dir", default=None)
    p_evolve.add_argument("--sweep", action="store_true", help="run the field-strength sweep")

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "blockdiag":
            return cmd_blockdiag(args)
        if args.command == "evolve":
            return cmd_evolve(args)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NcqmError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    return 2


def _load_json(path):
    with open(path) as handle:
        return json.load(handle)


def cmd_verify(args):
    config = {}
    if args.config:
        config = _load_json(args.config)
        if not isinstance(config, dict):
            raise ValueError("config must be a JSON object")
    suites = config.get("suites")
    if args.suites is not None:
        suites = args.suites
    if args.all or suites in (None, [], "all"):
        suites = list(SUITE_NAMES)
    unknown = [s for s in suites if s not in SUITE_NAMES]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; choose from {SUITE_NAMES}")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    out_dir = args.output_dir or config.get("output_dir", ".")
    tol_scale = float(config.get("tolerance_scale", 1.0))
    if tol_scale <= 0 and config.get("tolerance_scale") is not None:
        # zero tolerance is allowed and necessarily fails on floating point
        tol_scale = 0.0

    report = VerificationReport(seed=seed)
    run_suites(suites, seed=seed, report=report)
    if tol_scale != 1.0:
        rescale = VerificationReport(seed=seed)
        for row in report.rows:
            rescale.add(row.check_id, row.anchor, row.residual, row.tolerance * tol_scale)
        report = rescale
    report.write(os.path.join(out_dir, "report.json"), os.path.join(out_dir, "report.csv"))
    for row in report.rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{status} {row.check_id}: residual {row.residual:.3e} <= {row.tolerance:.1e} [{row.anchor}]")
    print(
        f"{len(report.rows)} checks, {report.n_failed} failed; "
        f"reports in {os.path.abspath(out_dir)}"
    )
    return 0 if report.all_passed else 1


def cmd_blockdiag(args):
    data = _load_json(args.matrix)
    matrix = np.array(data, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("input must be a square matrix (array of arrays)")
    frame = blockframe.block_diagonalize(matrix, tol=args.tol)
    residual = float(
        np.max(np.abs(frame.rotation @ matrix @ frame.rotation.T - frame.theta_matrix()))
    )
    payload = dict(frame.to_json_dict(), residual=residual)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output:
        write_text_atomic(args.output, text)
    else:
        print(text, end="")
    return 0 if residual < 1e-9 else 1


def _frame_from_config(config):
    if "a_matrix" in config:
        return blockframe.block_diagonalize(np.array(config["a_matrix"], dtype=float))
    theta = float(config.get("theta", 1.0))
    return blockframe.block_diagonalize(np.array([[0.0, theta], [-theta, 0.0]]))


def _potential_from_config(config, dim):
    spec = config.get("potential", {"type": "harmonic", "omega": 1.0})
    mass = float(config.get("mass", 1.0))
    kind = spec.get("type", "harmonic")
    if kind == "free":
        return dynamics.PolynomialPotential.free(dim, mass), None
    if kind == "harmonic":
        omega = float(spec.get("omega", 1.0))
        return dynamics.PolynomialPotential.isotropic_harmonic(dim, mass, omega), omega
    if kind == "polynomial":
        coeffs = {tuple(term["idx"]): float(term["coeff"]) for term in spec["coeffs"]}
        return dynamics.PolynomialPotential(coeffs, mass), None
    raise ValueError(f"unknown potential type {kind!r}")


def cmd_evolve(args):
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise ValueError("config must be a JSON object")
    out_dir = args.output_dir or config.get("output_dir", ".")
    if args.sweep:
        return _run_sweep(config, out_dir)

    frame = _frame_from_config(config)
    hbar = float(config.get("hbar", 1.0))
    levels = int(config.get("levels", 32))
    trunc = fock.FockTruncation.classical(frame, levels)
    x0 = np.array(config.get("x0", [0.0] * frame.dim), dtype=float)
    width = config.get("width")
    if width is None:
        s0 = envrep.localized_state_image(x0, frame, trunc, hbar)
    else:
        s0 = envrep.gaussian_packet_image(
            x0, float(width), frame, trunc, hbar,
            tail_threshold=float(config.get("tail_threshold", 1e-6)),
        )
    potential, _ = _potential_from_config(config, frame.dim)
    vq = dynamics.hermitize(potential, frame, trunc)
    ham = dynamics.hamiltonian_superop(vq, frame, potential.mass, hbar)
    cfg = dynamics.EvolutionConfig(
        float(config.get("t_final", 1.0)),
        int(config.get("steps", 200)),
        config.get("integrator", "expm" if trunc.dim <= dynamics.EXPM_DIM_CAP else "chebyshev"),
        float(config.get("conservation_tol", 1e-8)),
    )
    traj = dynamics.evolve(s0, ham, cfg, sample_every=int(config.get("sample_every", 1)))
    xs = dynamics.position_expectations(traj)
    _write_trajectory(out_dir, traj, xs, frame)
    manifest = {
        "config": config,
        "frame": frame.to_json_dict(),
        "levels": levels,
        "norm_drift": float(np.max(np.abs(traj.norms - traj.norms[0]))),
        "energy_drift": float(np.max(np.abs(traj.energies - traj.energies[0]))),
    }
    write_text_atomic(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    print(f"trajectory written to {os.path.abspath(out_dir)}")
    return 0


def _write_trajectory(out_dir, traj, xs, frame):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t", "norm", "energy"]
    for alpha in range(frame.nsectors):
        for a in (1, 2):
            header += [f"x_{alpha + 1}_{a}_re", f"x_{alpha + 1}_{a}_im"]
    writer.writerow(header)
    for it, t in enumerate(traj.times):
        energy = traj.energies[it] / traj.norms[it]
        row = [repr(float(t)), repr(float(traj.norms[it])), repr(float(energy))]
        for k in range(xs.shape[1]):
            row += [repr(float(xs[it, k].real)), repr(float(xs[it, k].imag))]
        writer.writerow(row)
    write_text_atomic(os.path.join(out_dir, "trajectory.csv"), buf.getvalue())


def _run_sweep(config, out_dir):
    thetas = config.get("sweep_thetas", list(SWEEP_THETAS))
    levels = config.get("sweep_levels", list(SWEEP_LEVELS))
    omega = float(config.get("omega", SWEEP_OMEGA))
    mass = float(config.get("mass", 1.0))
    hbar = float(config.get("hbar", 1.0))
    width = float(config.get("width", 2.0 * hbar / (mass * omega)))
    x0 = np.array(config.get("x0", [1.0, 0.0]), dtype=float)
    t_final = float(config.get("t_final", 1.0))
    samples = int(config.get("steps", 10))

    rows = []
    devs = []
    for theta, k_levels in zip(thetas, levels):
        frame = blockframe.block_diagonalize(np.array([[0.0, theta], [-theta, 0.0]]))
        trunc = fock.FockTruncation.classical(frame, int(k_levels))
        s0 = envrep.gaussian_packet_image(
            x0, width, frame, trunc, hbar, tail_threshold=float(config.get("tail_threshold", 1e-3))
        )
        pot = dynamics.PolynomialPotential.isotropic_harmonic(2, mass, omega)
        vq = dynamics.hermitize(pot, frame, trunc)
        ham = dynamics.hamiltonian_superop(vq, frame, mass, hbar)
        cfg = dynamics.EvolutionConfig(t_final, samples, "chebyshev", 1e-8)
        traj = dynamics.evolve(s0, ham, cfg, sample_every=1)
        xs = np.real(dynamics.position_expectations(traj)) @ frame.rotation
        oracle = oscillator.evolve_isotropic(x0, np.zeros(2), mass, omega, hbar, traj.times)
        dev = float(
            np.max(np.linalg.norm(xs - oracle, axis=1))
            / np.max(np.linalg.norm(oracle, axis=1))
        )
        devs.append(dev)
        rows.append({"theta": theta, "levels": int(k_levels), "deviation": dev})
        print(f"theta={theta}: deviation from commutative oracle {dev:.4f}")
    monotone = all(a > b for a, b in zip(devs, devs[1:]))
    payload = {
        "omega": omega,
        "width": width,
        "rows": rows,
        "monotone_decreasing": monotone,
        "final_deviation": devs[-1],
    }
    write_text_atomic(
        os.path.join(out_dir, "sweep.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    ok = monotone and devs[-1] <= float(config.get("deviation_tol", 2e-2))
    print(f"sweep {'passed' if ok else 'FAILED'}; results in {os.path.abspath(out_dir)}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
