"""Command-line entry point: ``wavemap {eigen,verify,shoot,evolve,fit}``.

Exit status: 0 when everything requested converged or passed, 1 on
numerical non-convergence or a failed check, 2 on an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import re
import sys

import numpy as np

from . import __version__
from .config import OUTPUT_ENV, ConfigError, RunConfig, load_config

log = logging.getLogger("wavemap")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


# --- output ------------------------------------------------------------------


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def manifest(cfg: RunConfig, command: str, outputs, results) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": json.loads(cfg.to_json()),
        "outputs": sorted(outputs),
        "results": results,
    }


def _record_rows(records):
    rows = []
    for i, r in enumerate(records):
        lam = complex(r.lam)
        rows.append((i, lam.real, lam.imag, float(r.residual), r.method, float(np.real(r.bracket[0])),
                     float(np.real(r.bracket[-1])), r.iterations, r.tail_start if r.tail_start is not None else ""))
    return rows


RECORD_HEADER = ("n", "lambda_re", "lambda_im", "residual", "method", "bracket_lo", "bracket_hi", "iterations", "tail_start")


# --- commands ------------------------------------------------------------------


def run_eigen(cfg: RunConfig):
    from .contfrac import find_complex_eigenvalues, find_real_eigenvalues, refine_root

    scan = find_real_eigenvalues(cfg.lam_min, cfg.lam_max, cfg.scan_step, cfg.tol)
    extended = {}
    if cfg.precision == "extended":
        for r in scan:
            root = refine_root(float(r.lam), 40, 1e-8)
            extended[repr(float(r.lam))] = None if root is None else str(root)
    search = None
    if cfg.complex:
        re0, re1, im0, im1 = cfg.region
        search = find_complex_eigenvalues((re0, re1), (im0, im1), tuple(cfg.complex_grid), cfg.tol)
    return scan, search, extended


def cmd_eigen(cfg: RunConfig) -> int:
    scan, search, extended = run_eigen(cfg)
    write_csv(_out(cfg, "eigenvalues.csv"), RECORD_HEADER, _record_rows(scan))
    results = {
        "eigenvalues": [r.as_dict() for r in scan],
        "failures": scan.failures,
    }
    outputs = ["eigenvalues.csv", "eigenvalues.json"]
    if extended:
        results["extended"] = extended
    if search is not None:
        results["complex"] = {
            "roots": [r.as_dict() for r in search],
            "seeds": search.n_seeds,
            "real_roots_discarded": search.n_real,
            "diverged": search.n_diverged,
            "exited": search.n_exited,
        }
    write_json(_out(cfg, "eigenvalues.json"), manifest(cfg, "eigen", outputs, results))
    print(f"{'n':>3}  {'lambda_n':>14}  {'residual':>9}")
    for i, r in enumerate(scan):
        print(f"{i:>3}  {complex(r.lam).real:>14.7f}  {r.residual:>9.1e}")
    if not scan:
        print("  (no eigenvalues in range)")
    if search is not None:
        print(f"complex eigenvalues in region {cfg.region}: {len(search)}")
        for r in search:
            z = complex(r.lam)
            print(f"     {z.real:.7f} {z.imag:+.7f}i  {r.residual:.1e}")
    for f in scan.failures:
        print(f"non-converged bracket {f['bracket']}: {f['reason']}", file=sys.stderr)
    return EXIT_NUMERIC if scan.failures else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verification import run_checks

    rows = run_checks(cfg.checks, tuple(cfg.n_range), tuple(cfg.window), cfg.jobs)
    width = max(len(r.name) for r in rows)
    for r in rows:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag}  {r.name:<{width}}  {r.measured:.3e}  (threshold {r.threshold:.0e}) {r.detail}")
    ok = all(r.passed for r in rows)
    results = [r.__dict__ for r in rows]
    write_json(_out(cfg, "verify.json"), manifest(cfg, "verify", ["verify.json"], results))
    print(f"{sum(r.passed for r in rows)}/{len(rows)} checks passed")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_shoot(cfg: RunConfig) -> int:
    from .shooting import WINDOW, oracle_eigenvalues

    lo, hi = max(cfg.lam_min, WINDOW[0]), min(cfg.lam_max, WINDOW[1])
    if (lo, hi) != (cfg.lam_min, cfg.lam_max):
        log.warning("shooting range clipped to its reliable window [%g, %g]", lo, hi)
    scan = oracle_eigenvalues(lo, hi, cfg.scan_step, cfg.shoot_tol, cfg.midpoint)
    write_csv(_out(cfg, "shooting.csv"), RECORD_HEADER, _record_rows(scan))
    results = {"eigenvalues": [r.as_dict() for r in scan], "failures": scan.failures, "skipped": scan.skipped}
    write_json(_out(cfg, "shooting.json"), manifest(cfg, "shoot", ["shooting.csv", "shooting.json"], results))
    for i, r in enumerate(scan):
        print(f"{i:>3}  {float(r.lam):>14.7f}  |W_norm| {r.residual:.1e}")
    return EXIT_NUMERIC if scan.failures else EXIT_OK


def _write_frames(path, frames):
    rho = frames[0].rho if frames else np.array([])
    write_csv(path, ["tau", "t"] + [f"rho={x!r}" for x in map(float, rho)],
              ([float(f.tau), float(f.t)] + [float(v) for v in f.U] for f in frames))


def read_frames(path):
    from .blowup import Frame

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rho = np.array([float(h.split("=", 1)[1]) for h in rows[0][2:]])
    return [Frame(float(r[1]), float(r[0]), rho, np.array([float(v) for v in r[2:]])) for r in rows[1:]]


def _figure(cfg, frames, fit, lam1, T):
    from .blowup import figure_rows

    if not frames:
        return []
    pick = sorted({0, len(frames) // 2, len(frames) - 1})
    return figure_rows(frames, fit, T, lam1, pick)


SELF_SIMILAR = ("exact-self-similar", "truncated")


def cmd_evolve(cfg: RunConfig) -> int:
    from .blowup import FitError, analyze, evolve, make_initial_data, similarity_frame, thin_frames

    params = {"T": cfg.T, "amplitude": cfg.amplitude, "width": cfg.width}
    params.update(cfg.extra.get("initial", {}))
    try:
        s0 = make_initial_data(cfg.kind, cfg.R, cfg.n_cells, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    traj = evolve(s0, cfg.cfl, cfg.t_end, cfg.snapshot_every)
    outputs = ["slopes.csv", "energy.csv", "snapshots.csv", "evolve.json"]
    write_csv(_out(cfg, "slopes.csv"), ["t", "slope", "max_du_h"], zip(map(float, traj.times), map(float, traj.slopes),
                                                                      map(float, traj.gradient_h)))
    write_csv(_out(cfg, "energy.csv"), ["t", "energy"], zip(map(float, traj.energy_times), map(float, traj.energies)))
    snaps = traj.snapshots[:: max(1, len(traj.snapshots) // 50)]
    stride = max(1, (len(s0.r) - 1) // 1000)
    r = s0.r[::stride]
    write_csv(_out(cfg, "snapshots.csv"), ["t"] + [f"r={x!r}" for x in map(float, r)],
              ([float(s.t)] + [float(v) for v in s.u[::stride]] for s in snaps))
    results = {"status": traj.status, "t_stop": float(traj.times[-1]), "energy_drift": traj.energy_drift(), "h": traj.h}
    status = EXIT_OK
    try:
        an = analyze(traj, cfg.lam1, tau_min=cfg.tau_min, min_scale=cfg.min_scale, dtau=cfg.dtau)
    except FitError as exc:
        an = None
        results["analysis_error"] = str(exc)
        from .blowup import detect_blowup

        est = detect_blowup(traj)
        results["blowup"] = est.as_dict()
        if est.blowup:
            frames = thin_frames(similarity_frame(traj, est.T), cfg.dtau)
            _write_frames(_out(cfg, "frames.csv"), frames)
            outputs.append("frames.csv")
            print(f"blowup at T = {est.T:.8f} +- {est.uncertainty:.1e}")
            # self-similar data carries no decaying mode, so there is nothing to fit
            if cfg.kind not in SELF_SIMILAR:
                status = EXIT_NUMERIC
        elif cfg.expect_blowup:
            status = EXIT_NUMERIC
    if an is not None:
        results.update(an.as_dict())
        _write_frames(_out(cfg, "frames.csv"), an.frames)
        write_csv(_out(cfg, "mode_comparison.csv"), ["tau", "rho", "deviation", "mode_model"],
                  _figure(cfg, an.frames, an.fit, cfg.lam1, an.T))
        write_csv(_out(cfg, "deviation.csv"), ["tau", "sup_deviation"],
                  zip((float(f.tau) for f in an.frames), map(float, an.deviation)))
        outputs += ["frames.csv", "mode_comparison.csv", "deviation.csv"]
        print(f"blowup at T = {an.estimate.T:.8f} +- {an.estimate.uncertainty:.1e} (refined {an.T:.8f})")
        print(f"lambda_1 fit = {an.fit.lam_fit:.5f} +- {an.fit.lam_fit_err:.5f}, c1 = {an.fit.c1:.5f}, "
              f"window tau in [{an.fit.tau_window[0]:.2f}, {an.fit.tau_window[1]:.2f}]")
        print(f"lambda_1 fit with gauge direction projected out = {an.fit_gauge.lam_fit:.5f} "
              f"+- {an.fit_gauge.lam_fit_err:.5f}")
        print(f"deviation monotone: {an.monotone}")
    else:
        print(f"status: {traj.status}; {results.get('analysis_error', '')}")
    print(f"energy drift {results['energy_drift']:.2e}")
    write_json(_out(cfg, "evolve.json"), manifest(cfg, "evolve", outputs, results))
    return status


def cmd_fit(cfg: RunConfig) -> int:
    from .blowup import FitError, fit_mode, mode_profile

    if not cfg.frames:
        raise ConfigError("fit needs --frames (a frames.csv written by evolve)")
    try:
        frames = read_frames(cfg.frames)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read frames from {cfg.frames}: {exc}") from exc
    mode = mode_profile(cfg.lam1, frames[0].rho)
    try:
        fit = fit_mode(frames, mode, tau_min=cfg.tau_min)
        fit_gauge = fit_mode(frames, mode, tau_min=cfg.tau_min, gauge=True)
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        write_json(_out(cfg, "fit.json"), manifest(cfg, "fit", ["fit.json"], {"error": str(exc)}))
        return EXIT_NUMERIC
    sel = [f for f in frames if f.tau >= cfg.tau_min]
    write_csv(_out(cfg, "mode_comparison.csv"), ["tau", "rho", "deviation", "mode_model"], _figure(cfg, sel, fit, cfg.lam1, None))
    results = {"fit": fit.as_dict(), "fit_gauge": fit_gauge.as_dict()}
    write_json(_out(cfg, "fit.json"), manifest(cfg, "fit", ["fit.json", "mode_comparison.csv"], results))
    print(f"lambda_1 fit = {fit.lam_fit:.5f} +- {fit.lam_fit_err:.5f} (global {fit.lam_global:.5f}), c1 = {fit.c1:.5f}")
    print(f"with gauge direction projected out: {fit_gauge.lam_fit:.5f} +- {fit_gauge.lam_fit_err:.5f}")
    return EXIT_OK


COMMANDS = {"eigen": cmd_eigen, "verify": cmd_verify, "shoot": cmd_shoot, "evolve": cmd_evolve, "fit": cmd_fit}


# --- argument parsing ------------------------------------------------------------


def _floats(n):
    def parse(text):
        try:
            vals = tuple(float(x) for x in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} numbers separated by ':', got {text!r}")
        if len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} numbers separated by ':', got {text!r}")
        return vals

    return parse


def _ints(text):
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi integers, got {text!r}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavemap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (overrides defaults; flags override it)")
    common.add_argument("--output-dir", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV} or ./out)")
    common.add_argument("--precision", choices=("double", "extended"))
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eigen", parents=[common], help="real (and complex) eigenvalues by continued fraction")
    e.add_argument("--range", type=_floats(2), help="lam_min:lam_max")
    e.add_argument("--step", dest="scan_step", type=float)
    e.add_argument("--tol", type=float)
    e.add_argument("--complex", action="store_true", default=None)
    e.add_argument("--region", type=_floats(4), help="re_min:re_max:im_min:im_max")
    e.add_argument("--grid", dest="complex_grid", type=_ints, help="n_re:n_im seeds")

    v = sub.add_parser("verify", parents=[common], help="structural checks and cross-validation")
    v.add_argument("--check", action="append", choices=("all",) + tuple(RunConfig().checks))
    v.add_argument("--n", dest="n_range", type=_ints, help="resonance orders lo:hi (within 1:8)")
    v.add_argument("--window", type=_floats(2), help="oracle window lo:hi")

    s = sub.add_parser("shoot", parents=[common], help="shooting-to-a-midpoint oracle")
    s.add_argument("--range", type=_floats(2))
    s.add_argument("--step", dest="scan_step", type=float)
    s.add_argument("--midpoint", type=float)
    s.add_argument("--tol", dest="shoot_tol", type=float)

    ev = sub.add_parser("evolve", parents=[common], help="evolve to blowup and fit the least-damped mode")
    ev.add_argument("--kind", choices=("exact-self-similar", "truncated", "gaussian-lump", "zero"))
    ev.add_argument("--R", type=float)
    ev.add_argument("--n-cells", dest="n_cells", type=int)
    ev.add_argument("--cfl", type=float)
    ev.add_argument("--T", type=float)
    ev.add_argument("--amplitude", type=float)
    ev.add_argument("--width", type=float)
    ev.add_argument("--t-end", dest="t_end", type=float)
    ev.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    ev.add_argument("--expect-blowup", dest="expect_blowup", action="store_true", default=None)
    ev.add_argument("--lam1", type=float)
    ev.add_argument("--tau-min", dest="tau_min", type=float)
    ev.add_argument("--min-scale", dest="min_scale", type=float)

    f = sub.add_parser("fit", parents=[common], help="fit the least-damped mode to saved frames")
    f.add_argument("--frames", help="frames.csv written by evolve")
    f.add_argument("--lam1", type=float)
    f.add_argument("--tau-min", dest="tau_min", type=float)
    return p


def _overrides(args) -> dict:
    skip = {"command", "config", "verbose", "range", "check"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if getattr(args, "range", None) is not None:
        out["lam_min"], out["lam_max"] = args.range
    if getattr(args, "check", None):
        out["checks"] = RunConfig().checks if "all" in args.check else tuple(args.check)
    return out


_NEGATIVE = re.compile(r"^-\.?\d")


def _join_negative(argv):
    """Attach values such as ``-7.5:1.5`` to their flag, which argparse would read as an option."""
    out = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
