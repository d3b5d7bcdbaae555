"""Reproducible scenario runner.

Subcommands:

* ``simulate``     -- trajectory + synchronisation series + plateau per detuning
* ``sweep``        -- detuning sweep table with discord-vs-phase regression
* ``correlations`` -- mode-mode correlation dynamics per detuning
* ``validate``     -- built-in oracle suite (sinusoids, Liouvillian, stationarity)
* ``dump-preset``  -- print an embedded preset as JSON for provenance

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 validation
failure.  ``QSYNC_WORKERS`` bounds the process pool used for sweep points;
all file writes happen in the parent process.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import platform
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__, correlations, dynamics, hilbert, models, sync
from .config import PRESETS, RunConfig, config_from_dict, load_config, preset_config
from .errors import ConfigError, IntegrationError, QsyncError, TruncationError


def _worker_count() -> int:
    raw = os.environ.get("QSYNC_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"QSYNC_WORKERS must be an integer, got {raw!r}")
    return max(1, count)


def _git_revision() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        return out.stdout.strip() if out.returncode == 0 else None
    except OSError:
        return None


def _manifest(cfg: RunConfig, outputs: list[str], wall: float, extra: dict | None = None) -> dict:
    doc = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {
            "qsync": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "git_revision": _git_revision(),
        "wall_time_s": round(wall, 3),
        "outputs": outputs,
    }
    if extra:
        doc.update(extra)
    return doc


def _dw_tag(dw: float) -> str:
    return f"dw{dw:g}"


def _detuned_params(cfg: RunConfig, dw: float):
    if cfg.model == "dimer":
        return cfg.dimer.detuned(dw, fix=cfg.settings.fix_coupling)
    return cfg.militello.detuned(dw)


def _scenario_task(args):
    cfg, dw, store_states = args
    params = _detuned_params(cfg, dw)
    traj, series, result = sync.run_scenario(params, cfg.settings,
                                             store_states=store_states)
    return dw, traj, series, result


def _run_scenarios(cfg: RunConfig, store_states: bool):
    tasks = [(cfg, dw, store_states) for dw in cfg.detunings]
    workers = min(_worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scenario_task, tasks))
    return [_scenario_task(t) for t in tasks]


def _plateau_json(result: sync.PlateauResult) -> dict:
    return {
        "synchronised": result.synchronised,
        "c_stable": result.c_stable,
        "onset_ps": result.onset,
        "tail_std": result.tail_std,
        "tail_slope": result.tail_slope,
        "tail_range": result.tail_range,
    }


def cmd_simulate(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    plateaus = {}
    for dw, traj, series, result in _run_scenarios(cfg, store_states=False):
        tag = _dw_tag(dw)
        traj_csv = out / f"trajectory_{tag}.csv"
        traj.to_csv(traj_csv)
        sync_csv = out / f"sync_{tag}.csv"
        _write_sync_csv(series, sync_csv)
        plateau_json = out / f"plateau_{tag}.json"
        plateau_json.write_text(json.dumps(_plateau_json(result), indent=2) + "\n")
        outputs += [traj_csv.name, sync_csv.name, plateau_json.name]
        plateaus[tag] = result
        if cfg.figures:
            from . import plots
            fig = out / f"trajectory_{tag}.png"
            plots.trajectory_figure(traj, series, fig,
                                    title=f"{cfg.model}, detuning {dw:g}")
            outputs.append(fig.name)
        sync_str = "synchronised" if result.synchronised else "not synchronised"
        c_txt = f", C* = {result.c_stable:.4f}" if result.synchronised else ""
        print(f"detuning {dw:g}: {sync_str}{c_txt}")
    manifest = _manifest(cfg, outputs, time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def _write_sync_csv(series: sync.SyncSeries, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ps", "C"])
        for t, c in zip(series.times, series.values):
            writer.writerow([f"{t:.12g}", f"{c:.12g}" if np.isfinite(c) else "nan"])


def _regression(rows) -> dict | None:
    """Least-squares fit of zero-detuning-normalised discord against C*."""
    sync_rows = [r for r in rows if r.error is None and r.synchronised
                 and r.d_long is not None]
    if len(sync_rows) < 3:
        return None
    ref = next((r for r in sync_rows if abs(r.delta_omega - 1.0) < 1e-12), None)
    if ref is None:
        ref = min(sync_rows, key=lambda r: r.delta_omega)
    if ref.d_long == 0:
        return None
    cs = np.array([r.c_stable for r in sync_rows])
    dn = np.array([r.d_long / ref.d_long for r in sync_rows])
    slope, intercept = np.polyfit(cs, dn, 1)
    r = float(np.corrcoef(cs, dn)[0, 1]) if len(sync_rows) > 1 else float("nan")
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "pearson_r": r,
        "n_points": len(sync_rows),
        "normalisation_detuning": ref.delta_omega,
        "d_normalised": dn.tolist(),
    }


def _sweep_row_task(args):
    cfg, index, dw = args
    params = _detuned_params(cfg, dw)
    sampler = cfg.sampler.build().with_key(index)
    rows = sync.detuning_sweep(params, [dw], cfg.settings,
                               with_correlations=True, sampler=sampler)
    return dataclasses.replace(rows[0], delta_omega=dw)


def cmd_sweep(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, i, dw) for i, dw in enumerate(cfg.detunings)]
    workers = min(_worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row_task, tasks))
    else:
        rows = [_sweep_row_task(t) for t in tasks]
    for row in rows:
        if row.error:
            print(f"detuning {row.delta_omega:g}: failed ({row.error})", file=sys.stderr)

    sweep_csv = out / "sweep.csv"
    sync.write_sweep_csv(rows, sweep_csv)
    outputs = [sweep_csv.name]
    regression = _regression(rows)
    if regression is None:
        print("warning: fewer than 3 synchronised rows, regression omitted",
              file=sys.stderr)
    else:
        reg_json = out / "regression.json"
        reg_json.write_text(json.dumps(regression, indent=2) + "\n")
        outputs.append(reg_json.name)
        print(f"discord-vs-C* regression: slope {regression['slope']:.4f}, "
              f"Pearson r {regression['pearson_r']:.4f}")
    if cfg.figures:
        from . import plots
        fig = out / "sweep.png"
        plots.sweep_figure(rows, regression, fig)
        outputs.append(fig.name)
    manifest = _manifest(cfg, outputs, time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if all(r.error for r in rows):
        raise IntegrationError("every sweep row failed")
    return 0


def _correlation_task(args):
    cfg, index, dw = args
    params = _detuned_params(cfg, dw)
    traj, series, result = sync.run_scenario(params, cfg.settings, store_states=True)
    sampler = cfg.sampler.build().with_key(index)
    corr = correlations.correlation_dynamics(
        traj, sampler, stride=cfg.correlations.stride,
        measured_side=cfg.correlations.measured_side,
        mode_subspace=cfg.correlations.mode_subspace)
    return dw, corr


def cmd_correlations(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, i, dw) for i, dw in enumerate(cfg.detunings)]
    workers = min(_worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_correlation_task, tasks))
    else:
        results = [_correlation_task(t) for t in tasks]
    outputs = []
    for dw, corr in results:
        tag = _dw_tag(dw)
        csv_path = out / f"correlations_{tag}.csv"
        correlations.write_correlations_csv(corr, csv_path)
        outputs.append(csv_path.name)
        if cfg.figures:
            from . import plots
            fig = out / f"correlations_{tag}.png"
            plots.correlation_figure(corr, fig, title=f"{cfg.model}, detuning {dw:g}")
            outputs.append(fig.name)
        n_bad = sum(0 if t.converged else 1 for t in corr.triples)
        print(f"detuning {dw:g}: {len(corr.triples)} points"
              + (f", {n_bad} unconverged searches" if n_bad else ""))
    manifest = _manifest(cfg, outputs, time.perf_counter() - t0)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def _validation_checks(inject_failure: bool = False):
    """Built-in oracle suite; yields (name, max_error, tolerance, passed)."""
    # windowed Pearson against the analytic cos(phi) of shifted sinusoids
    a = 2.0 * math.pi
    times = np.linspace(0.0, 4.0, 2001)
    worst = 0.0
    for phi in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi):
        f1 = np.sin(a * times)
        f2 = np.sin(a * times + phi)
        got = sync.pearson_window(times, f1, f2, 0.7, 2.0 * math.pi / a)
        worst = max(worst, abs(got - math.cos(phi)))
    if inject_failure:  # test hook: a perturbed check must fail loudly
        worst += 0.1
    yield "sinusoid phase oracle", worst, 2e-3, worst < 2e-3

    # vectorised Liouvillian against the direct RHS on random states
    rng = np.random.default_rng(11)
    layout = hilbert.SpaceLayout.of((2, 2, 2))
    hmat = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    hop = hilbert.Operator(layout, 0.5 * (hmat + hmat.conj().T))
    chans = []
    for k in range(3):
        lmat = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        chans.append(models.LindbladChannel(hilbert.Operator(layout, lmat), 0.3 + 0.2 * k))
    liou = dynamics.build_liouvillian(hop, chans)
    worst = 0.0
    for _ in range(20):
        mat = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        mat = mat @ mat.conj().T
        mat /= np.trace(mat)
        rho = hilbert.DensityMatrix(layout, mat)
        direct = dynamics.lindblad_rhs(rho, hop, chans).matrix
        vec = (liou @ rho.matrix.ravel()).reshape(8, 8)
        worst = max(worst, float(np.abs(direct - vec).max()))
    yield "Liouvillian vs direct RHS", worst, 1e-10, worst < 1e-10

    # truncated thermal state is stationary under its thermal channels
    layout1 = hilbert.SpaceLayout.of((9,))
    th = hilbert.thermal_state(300.0, 207.1, 9)
    b = hilbert.annihilation(9)
    occ = 1.0 / math.expm1(300.0 / 207.1)
    chans = [models.LindbladChannel(b, 2.0 * (1 + occ)),
             models.LindbladChannel(b.dag(), 2.0 * occ)]
    hop = hilbert.Operator(layout1, 300.0 * np.diag(np.arange(9.0)))
    residual = float(np.abs(dynamics.lindblad_rhs(th, hop, chans).matrix).max())
    yield "thermal stationarity", residual, 1e-8, residual < 1e-8


def cmd_validate(inject_failure: bool = False) -> int:
    failed = False
    for name, err, tol, ok in _validation_checks(inject_failure):
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: max error {err:.3e} (tolerance {tol:g})")
        failed = failed or not ok
    return 4 if failed else 0


def cmd_dump_preset(name: str) -> int:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset (have: {sorted(PRESETS)})", "preset")
    print(json.dumps(PRESETS[name], indent=2))
    return 0


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(PRESETS), help="embedded scenario preset")
    parser.add_argument("--config", type=Path, help="JSON configuration or manifest file")
    parser.add_argument("--detuning", type=float, nargs="*", default=None,
                        help="detuning ratios omega2/omega1 (>= 1)")
    parser.add_argument("--phi1", type=float, default=None, help="interaction phase phi1")
    parser.add_argument("--phi2", type=float, default=None, help="interaction phase phi2")
    parser.add_argument("--t-end", type=float, default=None, help="trajectory length")
    parser.add_argument("--dt-out", type=float, default=None, help="output grid spacing")
    parser.add_argument("--levels", type=int, default=None, help="Fock levels per mode")
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _resolve_config(args) -> RunConfig:
    base: dict = {}
    if args.preset and args.config:
        raise ConfigError("pass either --preset or --config, not both")
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()

    updates: dict = {}
    if args.detuning is not None:
        updates["detunings"] = tuple(args.detuning)
    if args.seed is not None:
        updates["seed"] = args.seed
        updates["sampler"] = dataclasses.replace(cfg.sampler, seed=args.seed)
    if args.out is not None:
        updates["output_dir"] = str(args.out)
    if args.no_figures:
        updates["figures"] = False
    settings_updates = {}
    if args.t_end is not None:
        settings_updates["t_end"] = args.t_end
    if args.dt_out is not None:
        settings_updates["dt_out"] = args.dt_out
    if settings_updates:
        updates["settings"] = dataclasses.replace(cfg.settings, **settings_updates)
    params_updates = {}
    if args.phi1 is not None:
        params_updates["phi1"] = args.phi1
    if args.phi2 is not None:
        params_updates["phi2"] = args.phi2
    if params_updates:
        if cfg.model != "militello":
            raise ConfigError("phi overrides apply to the militello model only", "phi1")
        try:
            updates["militello"] = dataclasses.replace(cfg.militello, **params_updates)
        except ValueError as exc:
            raise ConfigError(str(exc), "militello") from exc
    if args.levels is not None:
        try:
            updates["dimer"] = dataclasses.replace(cfg.dimer, levels=args.levels)
            updates["militello"] = dataclasses.replace(
                updates.get("militello", cfg.militello), levels=args.levels)
        except ValueError as exc:
            raise ConfigError(str(exc), "levels") from exc
    try:
        return dataclasses.replace(cfg, **updates) if updates else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsync",
        description="Transient spontaneous synchronisation in open quantum systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "run trajectories and the synchronisation measure"),
            ("sweep", "detuning sweep with long-time correlation regression"),
            ("correlations", "mode-mode correlation dynamics")):
        p = sub.add_parser(name, help=help_text)
        _add_run_arguments(p)
    v = sub.add_parser("validate", help="run the built-in oracle suite")
    v.add_argument("--inject-failure", action="store_true", help=argparse.SUPPRESS)
    d = sub.add_parser("dump-preset", help="print an embedded preset as JSON")
    d.add_argument("name", choices=sorted(PRESETS))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.inject_failure)
        if args.command == "dump-preset":
            return cmd_dump_preset(args.name)
        cfg = _resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "correlations":
            return cmd_correlations(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, TruncationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except QsyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
