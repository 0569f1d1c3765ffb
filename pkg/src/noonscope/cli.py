"""
Command-line interface.

    noonscope fringe       simulated N=1 and N=2 fringes with visibility fits
    noonscope scan         1D step scan or 2D height-map image
    noonscope analyze CSV  step fit and empirical SNR of a 1D scan file
    noonscope bias-sweep   empirical vs small-signal SNR over bias phase
    noonscope reproduce    full pipeline against the published numbers

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or fit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, io, reproduce
from .config import BUNDLED_Q_RELIEF, ExperimentConfig, load_config
from .errors import ConfigError, FitError, NoonscopeError, OutOfDomainError, SchemaError
from .interference import PhotonBudget, detection_probability, fit_visibility, sample_fringe
from .optics import overlap_xi
from .scan import HeightMap, ScanConfig, StepProfile, default_positions, derive_seed, scan_1d, scan_2d


def _workers(cfg: ExperimentConfig) -> int:
    return cfg.threads or os.cpu_count() or 1


def _header(cfg: ExperimentConfig, command: str) -> dict:
    return {"command": command, "seed": cfg.seed, "config_hash": cfg.config_hash()}


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_profile(cfg: ExperimentConfig):
    s, material = cfg.sample, cfg.material.build()
    if s.mode == "step1d":
        if s.step_phase_rad is not None:
            return StepProfile.from_phase(s.step_phase_rad, s.step_position_um, material)
        return StepProfile(s.step_height_nm, s.step_position_um, material)
    if s.heightmap == BUNDLED_Q_RELIEF:
        ref = resources.files("noonscope").joinpath("data/q_relief.txt")
        with resources.as_file(ref) as path:
            return HeightMap.from_file(path, s.pitch_um, material)
    path = Path(s.heightmap)
    if not path.is_file():
        raise ConfigError(f"height map file not found: {path}")
    try:
        return HeightMap.from_file(path, s.pitch_um, material)
    except ValueError as exc:
        raise ConfigError(f"cannot read height map {path}: {exc}") from None


def _scan_config(cfg: ExperimentConfig, probe, budget=None, seed=None) -> ScanConfig:
    s = cfg.sample
    positions = None
    if s.mode == "step1d":
        positions = default_positions(cfg.scan.start_um, cfg.scan.stop_um, cfg.scan.step_um)
    return ScanConfig(probe.model(), cfg.geometry.build(), budget or probe.budget(), positions,
                      cfg.seed if seed is None else seed, s.axis, s.stride)


def _write_config(path: Path, cfg: ExperimentConfig):
    path.write_text(json.dumps(cfg.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_fringe(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    status = 0
    for probe in (cfg.classical, cfg.quantum):
        N = probe.n_photons
        budget = PhotonBudget(cfg.fringe.k_per_point, N)
        grid = np.linspace(0.0, cfg.fringe.phase_max, cfg.fringe.points, endpoint=False)
        rng = np.random.default_rng(derive_seed(cfg.seed, 1, N))
        data = sample_fringe(probe.model(), budget, grid, rng)
        meta = _header(cfg, "fringe")
        meta.update({"n_photons": N, "visibility": probe.visibility, "bias_phase": probe.bias_phase,
                     "k_per_point": budget.k})
        try:
            fit = fit_visibility(data)
        except FitError as exc:
            meta["fit_status"] = f"failed: {exc}"
            print(f"warning: N={N} visibility fit failed: {exc}", file=sys.stderr)
            status = 2
        else:
            meta.update({"fit_status": "ok", "fit.visibility": fit.visibility,
                         "fit.visibility_err": fit.visibility_err, "fit.bias_phase": fit.bias_phase,
                         "fit.mean_counts": fit.amplitude, "fit.frequency": fit.frequency,
                         "fit.period": fit.period})
            print(f"N={N}: V = {fit.visibility:.4f} ± {fit.visibility_err:.4f}, "
                  f"period = {fit.period:.4f} rad")
        expected = budget.k * np.asarray(detection_probability(probe.model(), grid))
        io.write_csv(out / f"fringe_N{N}.csv",
                     {"phi": grid, "expected_counts": expected, "sampled_counts": data[:, 1]}, meta)
    return status


def cmd_scan(cfg: ExperimentConfig) -> int:
    profile = build_profile(cfg)  # fails before anything is written
    probe = cfg.selected_probe()
    sc = _scan_config(cfg, probe)
    workers = _workers(cfg)
    out = _out_dir(cfg)
    stem = f"scan_{cfg.probe}"
    meta = _header(cfg, "scan")
    meta["probe"] = cfg.probe
    meta["sample.mode"] = cfg.sample.mode
    if isinstance(profile, StepProfile):
        record = scan_1d(profile, sc, workers)
        meta.update({"sample.step_height_nm": profile.step_height, "sample.step_phase_rad": profile.phase,
                     "sample.step_position_um": profile.step_position})
    else:
        record = scan_2d(profile, sc, workers)
        meta.update({"sample.pitch_um": profile.pitch, "sample.heightmap": cfg.sample.heightmap})
        io.write_pgm(out / f"{stem}.pgm", record.image(),
                     comment=f"sampled counts, seed {cfg.seed}, config {cfg.config_hash()}")
    io.write_scan_csv(out / f"{stem}.csv", record, meta, profile.material)
    _write_config(out / f"{stem}.config.json", cfg)
    print(json.dumps({"probe": cfg.probe, "mode": cfg.sample.mode, "positions": len(record.sampled_counts),
                      "seed": cfg.seed, "config_hash": cfg.config_hash(), "out": str(out)}))
    return 0


def cmd_analyze(cfg: ExperimentConfig, scan_csv: str) -> int:
    path = Path(scan_csv)
    if not path.is_file():
        raise ConfigError(f"scan file not found: {path}")
    record, material, meta = io.read_scan_csv(path)
    if record.is_2d:
        raise SchemaError(f"{path}: analyze needs a 1D scan (dims=1)")
    material = material or cfg.material.build()
    rep = analysis.fit_step(record, record.config.geometry, cfg.analysis.background_threshold, material)
    out = _out_dir(cfg)
    xi = overlap_xi(record.config.geometry)
    eq1 = analysis.snr_analytic(replace(record.config.model, overlap=xi), record.config.budget, rep.step_phase)
    header = _header(cfg, "analyze")
    header.update({"source": path.name, "source_seed": meta.get("seed", ""),
                   "background_threshold": cfg.analysis.background_threshold,
                   "snr_small_signal_at_fitted_phase": eq1})
    d = rep.as_dict()
    io.write_csv(out / f"{path.stem}_snr.csv", {k: [v] for k, v in d.items()}, header)
    print(f"signal {rep.signal:.3f} ± {rep.signal_err:.3f}  noise {rep.noise:.3f}  "
          f"SNR {rep.snr:.3f} ± {rep.snr_err:.3f}")
    print(f"step at {rep.step_position:.2f} ± {rep.step_position_err:.2f} um, "
          f"phase {rep.step_phase:.4f} ± {rep.step_phase_err:.4f} rad, "
          f"height {rep.step_height:.2f} ± {rep.step_height_err:.2f} nm")
    print(f"background {rep.background:.2f} counts from {rep.n_background} positions; "
          f"small-signal SNR at the fitted phase {eq1:.3f}")
    return 0


def cmd_bias_sweep(cfg: ExperimentConfig) -> int:
    probe = cfg.selected_probe()
    total = cfg.sweep.quantum_total_photons if cfg.probe == "quantum" else cfg.sweep.classical_total_photons
    material = cfg.material.build()
    profile = StepProfile.from_phase(cfg.sweep.step_phase_rad, cfg.sample.step_position_um, material)
    sc = replace(_scan_config(cfg, probe, probe.budget(total)),
                 positions=default_positions(cfg.scan.start_um, cfg.scan.stop_um, cfg.scan.step_um))
    grid = analysis.default_bias_grid(probe.n_photons, cfg.sweep.points)
    pts = analysis.bias_sweep(profile, sc, grid, cfg.sweep.seeds_per_point,
                              cfg.analysis.background_threshold, _workers(cfg))
    out = _out_dir(cfg)
    meta = _header(cfg, "bias-sweep")
    meta.update({"probe": cfg.probe, "n_photons": probe.n_photons, "visibility": probe.visibility,
                 "total_photons": total, "k": total / probe.n_photons,
                 "step_phase_rad": cfg.sweep.step_phase_rad, "seeds_per_point": cfg.sweep.seeds_per_point})
    cols = {
        "bias_phase": [p.bias_phase for p in pts],
        "snr_empirical": [p.snr_empirical for p in pts],
        "snr_std": [p.snr_std for p in pts],
        "snr_sem": [p.snr_sem for p in pts],
        "snr_analytic": [p.snr_analytic for p in pts],
        "deviation_sd": [(p.snr_empirical - p.snr_analytic) / p.snr_std for p in pts],
        "n_ok": [p.n_ok for p in pts],
        "n_failed": [p.n_failed for p in pts],
    }
    io.write_csv(out / f"bias_sweep_{cfg.probe}.csv", cols, meta)
    for p in pts:
        print(f"bias {p.bias_phase:.4f}  SNR {p.snr_empirical:.3f} ± {p.snr_std:.3f}  "
              f"small-signal {p.snr_analytic:.3f}")
    return 0


def cmd_reproduce(cfg: ExperimentConfig) -> int:
    checks, details = reproduce.run(cfg, _workers(cfg))
    text = reproduce.render(checks, cfg, details)
    out = _out_dir(cfg)
    (out / "reproduce.md").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0 if all(c.passed for c in checks) else 2


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--set", metavar="K=V", action="append", default=[], dest="overrides",
                        help="override a config entry, e.g. --set quantum.visibility=0.8")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--threads", type=int, metavar="N", help="worker count (default: all cores)")

    parser = argparse.ArgumentParser(prog="noonscope", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fringe", parents=[common], help="simulated interference fringes")
    sub.add_parser("scan", parents=[common], help="simulate a 1D or 2D scan")
    p = sub.add_parser("analyze", parents=[common], help="fit a 1D scan CSV")
    p.add_argument("scan_csv")
    sub.add_parser("bias-sweep", parents=[common], help="SNR versus bias phase")
    sub.add_parser("reproduce", parents=[common], help="full reproduction report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        cfg = load_config(args.config, args.overrides, args.seed, args.out, args.threads)
        if args.command == "fringe":
            return cmd_fringe(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg, args.scan_csv)
        if args.command == "bias-sweep":
            return cmd_bias_sweep(cfg)
        return cmd_reproduce(cfg)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FitError, OutOfDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoonscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
