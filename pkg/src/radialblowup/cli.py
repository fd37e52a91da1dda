"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical/domain/fit failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import analysis, geodesic
from . import io as fio
from .errors import BlowupError, ConfigurationError, FitError, InsufficientDataError
from .fields import GridSpec, InitialProfile, ModelKind
from .integrator import SimulationConfig, TimeSeries, run

logger = logging.getLogger("radialblowup")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# simulation keys shared by flags and key=value config files
SIM_KEYS = ("model", "f0", "v0", "dr", "dt", "rmax", "boundary", "rho0", "tmax",
            "snapshots", "picard", "fstop", "stride")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value file; flags override its entries")
    p.add_argument("--model", choices=["charge1", "charge2", "ym"])
    p.add_argument("--f0", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--dr", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--boundary", choices=["flat", "parabola"])
    p.add_argument("--rho0", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--snapshots", type=str, help="comma-separated snapshot times")
    p.add_argument("--picard", type=int, help="corrector iterations per step (default 3)")
    p.add_argument("--fstop", type=float, help="stop level for f(0,t) (default dr)")
    p.add_argument("--stride", type=int, help="record every k-th step (default 10)")


def _sim_values(args: argparse.Namespace) -> dict:
    values: dict = {}
    if args.config is not None:
        try:
            values.update(fio.read_keyvalue(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    unknown = set(values) - set(SIM_KEYS) - {"out", "dr-list", "level"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in SIM_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def build_config(values: dict) -> SimulationConfig:
    """Turn merged flag/file values into a validated :class:`SimulationConfig`."""
    try:
        if "model" not in values:
            raise UsageError("--model is required")
        model = ModelKind.parse(values["model"])
        f0 = float(values.get("f0", 1.0))
        v0 = float(values.get("v0", 0.0))
        dr = float(values.get("dr", 0.05))
        dt = float(values.get("dt", 0.1 * dr))
        rmax = float(values.get("rmax", 100.0 if model is ModelKind.CHARGE_ONE else 150.0))
        rho0 = values.get("rho0")
        rho0 = None if rho0 in (None, "", "none") else float(rho0)
        if "tmax" in values:
            tmax = float(values["tmax"])
        else:
            tmax = 3.0 * f0 / abs(v0) if v0 < 0 else 100.0
        snaps = values.get("snapshots", "")
        snaps = fio.parse_float_list(snaps) if isinstance(snaps, str) else list(snaps)
        fstop = values.get("fstop")
        return SimulationConfig(
            model=model,
            grid=GridSpec(dr, rmax),
            dt=dt,
            initial=InitialProfile(f0, v0, rho0),
            t_max=tmax,
            boundary=values.get("boundary", "flat"),
            picard_iterations=int(values.get("picard", 3)),
            f_stop=None if fstop is None else float(fstop),
            sample_stride=int(values.get("stride", 10)),
            snapshot_times=snaps,
        )
    except (ConfigurationError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def config_echo(cfg: SimulationConfig) -> dict:
    return {
        "model": cfg.model.value,
        "f0": cfg.initial.f0,
        "v0": cfg.initial.v0,
        "rho0": cfg.initial.rho0,
        "dr": cfg.grid.dr,
        "rmax": cfg.grid.r_max,
        "dt": cfg.dt,
        "boundary": cfg.boundary.value,
        "tmax": cfg.t_max,
        "picard": cfg.picard_iterations,
        "fstop": cfg.f_stop,
        "stride": cfg.sample_stride,
        "snapshots": list(cfg.snapshot_times),
    }


def _out_dir(path: Path | None, default: Path) -> Path:
    out = Path(path) if path is not None else default
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    cfg = build_config(_sim_values(args))
    out = _out_dir(args.out, Path("."))
    started = time.perf_counter()
    error = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = run(cfg)
        except BlowupError as exc:
            result, error = None, f"{type(exc).__name__}: {exc}"
    for w in caught:
        logger.warning("%s", w.message)
    written = []
    if result is not None:
        written.append(fio.write_timeseries(out / "timeseries.csv", result.series))
        for snap in result.snapshots:
            written.append(fio.write_profile(out / fio.profile_filename(snap.T), snap))
    manifest = {
        "config": config_echo(cfg),
        "version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        "report": None if result is None else result.report.to_dict(),
        "error": error,
        "files": fio.file_entries(written, out),
    }
    fio.write_json(out / "manifest.json", manifest)
    if error:
        logger.error("%s", error)
        return EXIT_NUMERIC
    rep = result.report
    logger.info("stop=%s steps=%d t_star=%s t_zero=%s", rep.stop_reason.value, rep.steps_taken,
                rep.t_star, rep.t_zero)
    return EXIT_OK


# ---------------------------------------------------------------- predict

def cmd_predict(args) -> int:
    out = _out_dir(args.out, Path("."))
    if args.kind == "cutoff":
        params = geodesic.CutoffFitParams(args.c, args.R)
        traj = geodesic.cutoff_trajectory(args.f0, params, args.floor, args.samples)
        payload = {"kind": "cutoff", "f0": args.f0, "c": params.c, "R": params.R,
                   "floor": args.floor, "samples": args.samples,
                   "t_floor": float(traj.times[-1])}
    else:
        params = geodesic.parabola_prediction(args.f0, args.v0)
        t = np.linspace(0.0, params.t0, args.samples)
        traj = geodesic.GeodesicTrajectory(t, params.evaluate(t))
        payload = {"kind": "parabola", "f0": args.f0, "v0": args.v0, "p": params.p, "t0": params.t0}
    fio.write_columns(out / "prediction.csv", ("t", "f"), (traj.times, traj.f))
    fio.write_json(out / "params.json", payload)
    return EXIT_OK


# ---------------------------------------------------------------- fit

def _fit_failure(out: Path, kind: str, exc: Exception) -> int:
    fio.write_json(out / "fit.json", {"kind": kind, "ok": False, "error": type(exc).__name__,
                                      "reason": str(exc)})
    logger.error("%s fit failed: %s", kind, exc)
    return EXIT_NUMERIC


def cmd_fit(args) -> int:
    src = Path(args.input)
    out = _out_dir(args.out, src.parent)
    kind = args.kind
    try:
        if kind == "cutoff":
            series = fio.read_timeseries(src)
            lo, hi = analysis.default_cutoff_window(float(series.f_origin[0]), args.dr)
            window = (args.f_low if args.f_low is not None else lo,
                      args.f_high if args.f_high is not None else hi)
            params, fit = analysis.fit_cutoff_params(series, window, args.min_spacing)
            f, x, y = analysis.cutoff_scatter(series, args.min_spacing)
            fio.write_columns(out / "scatter.csv", ("ln_f", "inv_fdot2"), (x, y))
            payload = {"c": params.c, "R": params.R, "line": fit.to_dict(),
                       "window": list(window)}
        elif kind == "parabola":
            series = fio.read_timeseries(src)
            params = analysis.fit_trajectory_parabola(series, args.window_fraction)
            dev = analysis.compare_to_prediction(series, params)
            payload = {"p": params.p, "t0": params.t0, "window_fraction": args.window_fraction,
                       "max_abs_residual": dev.max_abs, "rms_residual": dev.rms}
        else:
            snap = fio.read_profile(src, args.T)
            if kind == "ellipse":
                e = analysis.fit_ellipse_bump(snap, args.v0, args.f0, args.noise_floor)
                payload = {"a": e.a, "b": e.b, "k": e.k, "T": snap.T}
            elif kind == "hyperbola":
                h = analysis.fit_hyperbola_bump(snap, args.f0, args.noise_floor)
                payload = {"a_h": h.a_h, "b_h": h.b_h, "k_h": h.k_h, "residual_rms": h.residual_rms,
                           "depth": h.depth, "plateau": h.plateau, "r_transition": h.r_transition,
                           "T": snap.T}
            else:
                pp = analysis.fit_parabolic_profile(snap, args.r_window)
                payload = {"rho": pp.rho, "h": pp.h, "r_window": args.r_window, "T": snap.T}
    except (FitError, InsufficientDataError, BlowupError, ValueError) as exc:
        return _fit_failure(out, kind, exc)
    payload.update({"kind": kind, "ok": True, "input": str(src)})
    fio.write_json(out / "fit.json", payload)
    return EXIT_OK


# ---------------------------------------------------------------- converge

def cmd_converge(args) -> int:
    values = _sim_values(args)
    dr_text = args.dr_list
    if dr_text is None and args.config is not None:
        dr_text = fio.read_keyvalue(args.config).get("dr-list")
    if not dr_text:
        raise UsageError("--dr-list is required")
    dr_list = fio.parse_float_list(dr_text)
    values.setdefault("dr", max(dr_list))
    cfg = build_config(values)
    out = _out_dir(args.out, Path("."))
    study = analysis.convergence_study(cfg, dr_list, level=args.level)
    drs = sorted(study.deviations)
    fio.write_columns(out / "convergence.csv", ["t"] + [f"dev_dr_{fio.fmt(d)}" for d in drs],
                      [study.common_times] + [study.deviations[d] for d in drs])
    summary = study.summary()
    summary["config"] = config_echo(cfg)
    fio.write_json(out / "summary.json", summary)
    return EXIT_NUMERIC if all(row.error for row in study.rows) else EXIT_OK


# ---------------------------------------------------------------- compare

def _load_prediction(path: Path):
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        if "p" in payload and "t0" in payload:
            return geodesic.ParabolaParams(float(payload["p"]), float(payload["t0"]))
        raise UsageError(f"{path}: JSON prediction needs p and t0")
    header, data = fio.read_columns(path)
    if header[:2] != ["t", "f"]:
        raise UsageError(f"{path}: expected header t,f")
    return geodesic.GeodesicTrajectory(data[:, 0], data[:, 1])


def cmd_compare(args) -> int:
    series = fio.read_timeseries(args.sim)
    pred = _load_prediction(args.pred)
    out = _out_dir(args.out, Path(args.sim).parent)
    rep = analysis.compare_to_prediction(series, pred)
    fio.write_columns(out / "deviation.csv", ("t", "f_sim", "f_pred", "deviation"),
                      (rep.times, rep.simulated, rep.predicted, rep.deviations))
    fio.write_json(out / "summary.json", rep.to_dict())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radialblowup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="evolve one configuration")
    _add_sim_flags(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="geodesic-approximation trajectories")
    psub = p.add_subparsers(dest="kind", parser_class=_Parser)
    pc = psub.add_parser("cutoff")
    pc.add_argument("--f0", type=float, default=1.0)
    pc.add_argument("--c", type=float, required=True)
    pc.add_argument("--R", type=float, required=True)
    pc.add_argument("--floor", type=float, default=1e-3)
    pc.add_argument("--samples", type=int, default=400)
    pc.add_argument("--out", type=Path)
    pp = psub.add_parser("parabola")
    pp.add_argument("--f0", type=float, default=1.0)
    pp.add_argument("--v0", type=float, required=True)
    pp.add_argument("--samples", type=int, default=2001)
    pp.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fit", help="regressions on simulation output")
    fsub = p.add_subparsers(dest="kind", parser_class=_Parser)
    for kind in ("cutoff", "parabola", "ellipse", "hyperbola", "parabolic-profile"):
        fp = fsub.add_parser(kind)
        fp.add_argument("--in", dest="input", type=Path, required=True)
        fp.add_argument("--out", type=Path)
        if kind == "cutoff":
            fp.add_argument("--f-low", type=float)
            fp.add_argument("--f-high", type=float)
            fp.add_argument("--min-spacing", type=float)
            fp.add_argument("--dr", type=float, help="grid spacing; raises the default lower window edge to 5*dr")
        elif kind == "parabola":
            fp.add_argument("--window-fraction", type=float, default=0.5)
        else:
            fp.add_argument("--T", type=float, help="snapshot time (default: from file name)")
            if kind == "parabolic-profile":
                fp.add_argument("--r-window", type=float, required=True)
            else:
                fp.add_argument("--f0", type=float, default=1.0)
                fp.add_argument("--noise-floor", type=float)
                if kind == "ellipse":
                    fp.add_argument("--v0", type=float, default=0.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("converge", help="grid-convergence study")
    _add_sim_flags(p)
    p.add_argument("--dr-list", type=str)
    p.add_argument("--level", type=float, default=0.1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("compare", help="deviation of a simulated series from a prediction")
    p.add_argument("--sim", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        if getattr(args, "func", None) is None or (args.command in ("predict", "fit") and not args.kind):
            raise UsageError("missing subcommand")
        return args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        print(f"radialblowup: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BlowupError, ValueError, OSError) as exc:
        print(f"radialblowup: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
