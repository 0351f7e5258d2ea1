"""Experiment orchestration: one function per CLI subcommand.

Every run writes its CSVs plus one `<experiment>_metadata.txt` whose config
section re-parses to the exact run (round-trip contract), with derived
quantities and wall time as comments.  Reruns with the same config produce
byte-identical CSVs at any worker count.
"""

from __future__ import annotations

import time

import numpy as np

from . import __version__
from .config import RunConfig, config_lines
from .lattice import LatticeModel
from . import meanfield as mf
from . import scar_kinetics as sk
from . import floquet as fl
from . import perturbed_scar as ps
from .output import StagedWriter, emit_svg, metadata_text
from .parallel import resolve_workers

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2

SOLVER_ERRORS = (
    mf.NonConvergenceError,
    mf.QuasiparticleDomainError,
    ps.DysonDivergenceError,
    ps.PairingDomainError,
    fl.IntegratorAccuracyError,
    RuntimeError,
)


def _lattice(cfg: RunConfig) -> LatticeModel:
    return LatticeModel(cfg.L, cfg.hopping, cfg.mu, cfg.resolved_eta())


def run(cfg: RunConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    writer = StagedWriter(cfg.output_dir)
    t_start = time.perf_counter()
    try:
        derived, csvs = _DISPATCH[cfg.experiment](cfg, writer)
    except SOLVER_ERRORS as exc:
        writer.abort()
        print(f"scarlab: solver failure: {exc}")
        return EXIT_SOLVER
    derived["tool_version"] = __version__
    derived["wall_time_s"] = round(time.perf_counter() - t_start, 3)
    writer.stage_text(f"{cfg.experiment}_metadata.txt",
                      metadata_text(config_lines(cfg), derived))
    written = writer.commit()
    if cfg.emit_svg:
        for path in written:
            if path.suffix == ".csv" and path.name in csvs:
                emit_svg(path)
    return EXIT_OK


def _run_meanfield(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    rows = []
    prev = None
    for T in cfg.temperature:
        params = mf.MeanFieldParams(lat, cfg.J, T)
        if cfg.J == 0.0:
            sol = mf.free_solution(params)
        else:
            sol = mf.solve_mf(params, init=prev, tol=cfg.tol, max_iter=cfg.max_iter)
        prev = sol
        rep = mf.thermo_report(sol, params)
        rows.append((T, sol.delta_a, sol.delta_b, sol.v_a, sol.v_b,
                     rep.free_energy_density, rep.energy_density,
                     rep.rho_b_occupation, rep.rho_b_relation, sol.residual_norm))
    writer.stage_csv("meanfield.csv",
                     ["T", "delta_a", "delta_b", "v_a", "v_b", "free_energy",
                      "energy", "rho_b_occ", "rho_b_rel", "residual"], rows)
    derived = {
        "min_rho_b_occ": min(r[7] for r in rows),
        "max_residual": max(r[9] for r in rows),
    }
    return derived, {"meanfield.csv"}


def _run_selfenergy(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    table = sk.im_sigma_tilde(lat, workers=resolve_workers(cfg.workers))
    ks = lat.grid.momenta
    writer.stage_csv("selfenergy.csv", ["k", "im_sigma_tilde"],
                     zip(ks, table.im_sigma_tilde))
    derived = {
        "min_im_sigma_tilde": float(table.im_sigma_tilde.min()),
        "max_im_sigma_tilde": float(table.im_sigma_tilde.max()),
        "L": cfg.L,
        "eta": cfg.resolved_eta(),
    }
    return derived, {"selfenergy.csv"}


def _run_bs_lyapunov(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    workers = resolve_workers(cfg.workers)
    table = sk.im_sigma_tilde(lat, workers=workers)
    kernel = sk.rung_kernel(lat, 0, workers=workers)
    spectrum = sk.lyapunov_bs(kernel, tol=cfg.tol, max_iter=cfg.max_iter)
    collision = sk.dominant_eigenpair(
        sk.bs_matrix(table, kernel), shift=8.0 * float(table.im_sigma_tilde.max()),
        tol=cfg.tol, max_iter=cfg.max_iter)
    ks = lat.grid.momenta
    writer.stage_csv("selfenergy.csv", ["k", "im_sigma_tilde"],
                     zip(ks, table.im_sigma_tilde))
    writer.stage_csv("bs_mode.csv", ["k", "f_k"], zip(ks, spectrum.eigenvector))
    derived = {
        "lambda_tilde": spectrum.lambda_tilde,
        "collision_lambda": collision.lambda_tilde,
        "L": cfg.L,
        "eta": cfg.resolved_eta(),
        "iterations": spectrum.iterations,
        "eig_residual": spectrum.residual,
        "min_im_sigma_tilde": float(table.im_sigma_tilde.min()),
    }
    return derived, {"bs_mode.csv", "selfenergy.csv"}


def _run_floquet_scan(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    re_max, im_first, defect = fl.lyapunov_scan(cfg.beta_sq, cfg.J, lat,
                                                cfg.steps_per_period)
    ks = lat.grid.momenta
    writer.stage_csv("floquet_scan.csv",
                     ["k", "re_lambda_max", "im_lambda_1", "defect"],
                     zip(ks, re_max, im_first, defect))
    derived = {
        "max_re_lambda": float(re_max.max()),
        "unstable": bool(re_max.max() > 1e-10),
        "max_defect": float(defect.max()),
        "period": np.pi / lat.gap(),
    }
    return derived, {"floquet_scan.csv"}


def _run_otoc_envelope(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    drive = fl.lattice_drive(lat, cfg.beta_sq, cfg.J)
    env = fl.otoc_envelope(drive, lat, cfg.t_max, cfg.steps_per_period)
    writer.stage_csv("otoc_envelope.csv", ["t", "C_aggregate"],
                     zip(env.times, env.aggregate))
    # log-slope over the final drive period as the growth diagnostic
    sel = env.times >= env.times[-1] - drive.period
    tw = env.times[sel]
    yw = np.log(env.aggregate[sel])
    tbar = tw - tw.mean()
    slope = float((tbar @ (yw - yw.mean())) / (tbar @ tbar))
    derived = {
        "final_period_log_slope": slope,
        "period": drive.period,
        "growing": bool(env.aggregate[-1] > env.aggregate[0] * (1 + 1e-9)),
    }
    return derived, {"otoc_envelope.csv"}


def _run_perturbed_otoc(cfg: RunConfig, writer: StagedWriter):
    lat = _lattice(cfg)
    params = ps.PerturbedParams(
        lat, cfg.epsilon, 8.0 * cfg.J * cfg.alpha_sq, dt=cfg.dt, t_max=cfg.t_max,
        fp_tol=cfg.tol, fp_damping=cfg.fp_damping, max_iter=cfg.max_iter)
    series = ps.otoc_perturbed(params, workers=resolve_workers(cfg.workers))
    writer.stage_csv("otoc_perturbed.csv", ["t", "c_tilde"],
                     zip(series.times, series.c_tilde))
    writer.stage_csv("otoc_k0.csv", ["t", "C_k0"], zip(series.times, series.c_k0))
    report = ps.subexp_diagnostic(series, window=cfg.t_max / 2.0)
    derived = {
        "epsilon": cfg.epsilon,
        "drive_strength_g": params.drive_strength,
        "dt": cfg.dt,
        "t_max": cfg.t_max,
        "fp_damping": cfg.fp_damping,
        "iterations_max": series.iterations_max,
        "iterations_mean": round(series.iterations_mean, 3),
        "otoc_component": ps.OTOC_COMPONENT_NOTE,
        "c_tilde_growth": float(series.c_tilde[-1] / series.c_tilde[0]),
        "window_slopes": ",".join(format(s, ".6g") for s in report.slopes),
        "slopes_non_increasing": report.non_increasing,
    }
    return derived, {"otoc_perturbed.csv", "otoc_k0.csv"}


def _run_ssb(cfg: RunConfig, writer: StagedWriter):
    gap_e = cfg.mu - 2.0 * cfg.hopping
    res = mf.ssb_solution(gap_e, cfg.J)
    writer.stage_csv("ssb.csv", ["gap_e", "J", "a_sq", "b_sq", "degenerate"],
                     [(gap_e, cfg.J, res.a_sq, res.b_sq, res.degenerate)])
    derived = {"symmetry_broken": bool(res.a_sq > 0.0), "degenerate": res.degenerate}
    return derived, {"ssb.csv"}


_DISPATCH = {
    "meanfield": _run_meanfield,
    "selfenergy": _run_selfenergy,
    "bs-lyapunov": _run_bs_lyapunov,
    "floquet-scan": _run_floquet_scan,
    "otoc-envelope": _run_otoc_envelope,
    "perturbed-otoc": _run_perturbed_otoc,
    "ssb": _run_ssb,
}
