"""Command-line front end.

Exit codes: 0 success, 2 usage/config error, 3 model/numerical error.
"""
from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__, noise, sensitivity as sens, spectrum
from .config import RunConfig
from .csvio import parse_trace, render_csv, render_trace
from .errors import ConfigError, ModelError, ParameterError

SENSE_COLUMNS = ["nv_ppb", "p_in_w", "omega_mhz", "eta_t_per_rthz", "finesse", "p_cav_w",
                 "p_detected_w", "r1"]


def _sense_row(p: sens.SensitivityPoint):
    return [p.nv_ppb, p.p_in, p.omega, p.eta, p.finesse, p.p_cav, p.p_detected, p.r1_matched]


def _failing_operation(exc) -> str:
    """Innermost function of this package on the traceback."""
    names = [f.name for f in traceback.extract_tb(exc.__traceback__)
             if Path(f.filename).parent == Path(__file__).parent]
    return names[-1] if names else "?"


def _header(cmd: str, cfg: RunConfig, extra=()):
    return [f"admr_sim {__version__} {cmd}"] + cfg.echo_lines() + list(extra)


def cmd_spectrum(cfg: RunConfig):
    res = spectrum.lockin_spectrum(cfg["spectrum.delta"], cfg.cavity(), cfg.rates(),
                                   cfg["drive.omega"], cfg["drive.p_in"], cfg.lockin())
    meta = [f"result.delta_mod_mhz = {res.metadata['delta_mod_mhz']!r}",
            f"result.gamma_p_mhz = {res.metadata['gamma_p_mhz']!r}"]
    return render_csv(_header("spectrum", cfg, meta), ["delta_mhz", "signal_v"],
                      zip(res.detunings, res.signal)), None


def cmd_slope_map(cfg: RunConfig):
    p_in, omega = cfg["slope_map.p_in"], cfg["slope_map.omega"]
    m = spectrum.slope_map(p_in, omega, cfg.cavity(), cfg.rates(), cfg.lockin(), cfg.threads())
    rows = [(p, o, m[i, j]) for i, p in enumerate(p_in) for j, o in enumerate(omega)]
    return render_csv(_header("slope-map", cfg), ["p_in_w", "omega_mhz", "slope_v_per_hz"],
                      rows), None


def _errors_as_comments(points):
    return [f"error row {i}: {p.error}" for i, p in enumerate(points) if p.error]


def cmd_sense_map(cfg: RunConfig):
    res = sens.sweep(cfg.sweep_grid(), cfg["sweep.channel"], cfg.design(), cfg.threads())
    head = _header("sense-map", cfg, _errors_as_comments(res.points))
    return render_csv(head, SENSE_COLUMNS, [_sense_row(p) for p in res.points]), None


def cmd_optimize(cfg: RunConfig):
    grid = cfg.sweep_grid()
    if not np.any(grid.omega_values > 0):
        raise ConfigError("sweep.omega contains no positive Rabi frequency (zero slope everywhere)")
    res = sens.optimize(grid, cfg["sweep.channel"], cfg.design(), cfg["optimize.rounds"],
                        cfg["optimize.factor"], cfg.threads())
    b = res.best
    text = render_csv(_header("optimize", cfg), SENSE_COLUMNS + ["p_r_on_w"],
                      [_sense_row(b) + [b.p_r_on]])
    summary = (
        f"optimum ({b.channel}): eta = {b.eta * 1e12:.4g} pT/sqrt(Hz)\n"
        f"  Omega = {b.omega:.4g} MHz, [NV-] = {b.nv_ppb:.4g} ppb, P_in = {b.p_in:.4g} W\n"
        f"  finesse = {b.finesse:.4g}, P_cav = {b.p_cav:.4g} W, R1 = {b.r1_matched:.6f}\n"
        f"  P_r(Delta=0) = {b.p_r_on * 1e6:.4g} uW\n"
        f"  coarse optimum eta = {res.coarse_best.eta * 1e12:.4g} pT/sqrt(Hz)\n")
    return text, summary


def _load_trace(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"trace file not found: {path}")
    trace = parse_trace(p.read_text(), str(p))
    return trace


def _calibrated(trace, cfg):
    slope = cfg["noise.slope"]
    if slope is not None and trace.unit == "volts":
        return noise.volts_to_tesla(trace, slope, cfg["constants.gamma_e"])
    return trace


def cmd_psd(cfg: RunConfig, trace_file):
    trace = _calibrated(_load_trace(trace_file), cfg)
    spec = noise.asd(trace, cfg["noise.resolution"])
    rows = [(f, a, spec.n_segments) for f, a in zip(spec.frequencies, spec.asd)]
    head = _header("psd", cfg, [f"trace = {Path(trace_file).name}", f"unit = {trace.unit}"])
    return render_csv(head, ["frequency_hz", "asd", "count"], rows), None


def cmd_allan(cfg: RunConfig, trace_file):
    trace = _calibrated(_load_trace(trace_file), cfg)
    taus = cfg["noise.taus"]
    if isinstance(taus, str):
        taus = noise.octave_taus(trace)
    res = noise.allan_overlapping(trace, taus)
    head = _header("allan", cfg, [f"trace = {Path(trace_file).name}", f"unit = {trace.unit}"])
    return render_csv(head, ["tau_s", "adev", "count"],
                      zip(res.taus, res.deviations, res.counts)), None


def cmd_synth(cfg: RunConfig):
    params = {
        "asd": cfg["synth.asd"], "cutoff": cfg["synth.cutoff"], "rate": cfg["synth.rate"],
        "offset": cfg["synth.offset"], "amplitude": cfg["synth.amplitude"],
        "frequency": cfg["synth.frequency"], "phase": cfg["synth.phase"],
    }
    try:
        trace = noise.synth_trace(cfg["synth.kind"], params, cfg["run.seed"],
                                  cfg["synth.sample_rate"], cfg["synth.length"],
                                  cfg["synth.unit"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    return render_trace(trace, _header("synth", cfg)), None


COMMANDS = {
    "spectrum": cmd_spectrum,
    "slope-map": cmd_slope_map,
    "sense-map": cmd_sense_map,
    "optimize": cmd_optimize,
    "psd": cmd_psd,
    "allan": cmd_allan,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="admr-sim", description="Cavity-enhanced NV pump-absorption magnetometry model.")
    parser.add_argument("--version", action="version", version=f"admr_sim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name in ("psd", "allan"):
            p.add_argument("trace_file", help="two-column CSV trace (time_s,value)")
        p.add_argument("--config", help="config file path or shipped name (fig3a, fig5d, ...)")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int, help="random seed (run.seed)")
        p.add_argument("--threads", type=int, help="worker threads (run.threads)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sets = list(args.set)
        if args.seed is not None:
            sets.append(f"run.seed={args.seed}")
        if args.threads is not None:
            sets.append(f"run.threads={args.threads}")
        cfg = RunConfig.load(args.config, sets)
        func = COMMANDS[args.command]
        if args.command in ("psd", "allan"):
            text, summary = func(cfg, args.trace_file)
        else:
            text, summary = func(cfg)
    except ParameterError as exc:
        print(f"admr-sim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"admr-sim {args.command}: model error in {_failing_operation(exc)} "
              f"({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if summary:
        sys.stderr.write(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
