"""Command-line entry point.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
Summary lines go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import io
from .extend import make_extender
from .numerics import NumericalError
from .pipeline import PipelineConfig, bound_eff_red, stream_init, timing_budget
from .tfr import Conceft, Rs, Sst, Stft, WindowSpec, transform
from .verify import BenchConfig, McConfig, bench_extenders, logspace_points, mc_moments, two_tone_spec

SLOPE_TOL = {"sigma": 0.15, "K": 0.25}


def _add_extender_flags(p, method_flag="--method", required=True):
    p.add_argument(method_flag, choices=["sigext", "symmetric", "dmd"],
                   required=required, default=None)
    p.add_argument("--M", type=int, help="lag-vector length (default floor(1.5 L))")
    p.add_argument("--K", type=int, help="number of lag vectors (default floor(2.5 M))")
    p.add_argument("--rank", type=int, help="DMD rank (default min(M, 20))")
    p.add_argument("--solver", choices=["normal", "svd"], default="normal")


def _add_tfr_flags(p):
    p.add_argument("--kind", choices=["stft", "sst", "rs", "conceft"], default="stft")
    p.add_argument("--window-halflen", type=int, default=64)
    p.add_argument("--nfft", type=int, default=256)
    p.add_argument("--hop", type=int, default=1)
    p.add_argument("--gamma", type=float, default=1e-4, help="relative threshold (sst/rs/conceft)")
    p.add_argument("--causal", action="store_true", help="causal reassignment (rs)")
    p.add_argument("--tapers", type=int, default=2, help="ConceFT Hermite windows")
    p.add_argument("--projections", type=int, default=30, help="ConceFT random projections")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="tfextend", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("extend", help="append a forecast to a signal")
    p.add_argument("--input", required=True)
    p.add_argument("--fs", type=float, help="sampling rate if the file has none")
    p.add_argument("--L", type=int, required=True)
    _add_extender_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--print-config", action="store_true")

    p = sub.add_parser("tfr", help="time-frequency representation, optionally boundary-free")
    p.add_argument("--input", required=True)
    p.add_argument("--fs", type=float)
    _add_tfr_flags(p)
    _add_extender_flags(p, "--extend", required=False)
    p.add_argument("--L", type=int, help="extension length (default: window half-length)")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-pgm")
    p.add_argument("--log-floor-db", type=float, default=io.LOG_FLOOR_DB)
    p.add_argument("--print-config", action="store_true")

    d = BenchConfig()
    p = sub.add_parser("bench-table1", help="extension benchmark on the AM-FM signal")
    p.add_argument("--realizations", type=int, default=d.realizations)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--hop", type=int, default=d.hop)
    p.add_argument("--out", required=True)
    p.add_argument("--print-config", action="store_true")

    p = sub.add_parser("verify-theorem", help="Monte Carlo scaling of the forecast variance")
    p.add_argument("--sweep", choices=["sigma", "K"], required=True)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--points", type=int, default=None,
                   help="sweep points (default 15 for sigma, 12 for K)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--print-config", action="store_true")

    p = sub.add_parser("stream", help="replay a file through the streaming pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--fs", type=float)
    p.add_argument("--chunk", type=int, default=None, help="samples per push (default: hop)")
    _add_tfr_flags(p)
    _add_extender_flags(p, "--extend", required=False)
    p.add_argument("--L", type=int)
    p.add_argument("--timing-out")
    p.add_argument("--print-config", action="store_true")
    return ap


# --- helpers -------------------------------------------------------------------------


def _tfr_kind(a):
    if a.kind == "stft":
        return Stft()
    if a.kind == "sst":
        return Sst(a.gamma)
    if a.kind == "rs":
        return Rs(a.gamma, a.causal)
    return Conceft(a.tapers, a.projections, a.gamma, a.seed)


def _pipeline(a):
    window = WindowSpec.gaussian(a.window_halflen)
    if a.extend is None:
        return PipelineConfig(None, _tfr_kind(a), window, a.nfft, a.hop, 0)
    L = a.window_halflen if a.L is None else a.L
    ext = make_extender(a.extend, L, a.M, a.K, a.solver, a.rank)
    return PipelineConfig(ext, _tfr_kind(a), window, a.nfft, a.hop, L)


def _print_config(obj):
    def default(o):
        if hasattr(o, "__dataclass_fields__"):
            return {k: getattr(o, k) for k in o.__dataclass_fields__
                    if not isinstance(getattr(o, k), np.ndarray)}
        return repr(o)
    print(json.dumps(obj, default=default, indent=2, sort_keys=True))


def _mc_config(a):
    spec = two_tone_spec()
    if a.sweep == "sigma":
        n = 15 if a.points is None else a.points
        values = logspace_points(math.sqrt(1e-7), math.sqrt(1e-2), n)
    else:
        n = 12 if a.points is None else a.points
        values = logspace_points(800, 2000, n, integer=True)
    return McConfig(spec, 150, 450, 10_000, a.sweep, values,
                    realizations=a.realizations, seed=a.seed, sigma=1e-2)


# --- commands -----------------------------------------------------------------------


def cmd_extend(a):
    ext = make_extender(a.method, a.L, a.M, a.K, a.solver, a.rank)
    if a.print_config:
        _print_config({"extender": ext, "L": a.L})
        return 0
    x = io.read_signal(a.input, a.fs)
    io.write_signal_csv(ext.extend(x, a.L) if a.L else x, a.output)
    return 0


def cmd_tfr(a):
    cfg = _pipeline(a)
    if a.print_config:
        _print_config(cfg)
        return 0
    x = io.read_signal(a.input, a.fs)
    if cfg.extender is None:
        out = transform(cfg.tfr, x, cfg.window, cfg.n_fft, cfg.hop)
    else:
        out = bound_eff_red(x, cfg)
    io.write_tfr_csv(out, a.out_csv)
    if a.out_pgm:
        io.write_tfr_pgm(out, a.out_pgm, a.log_floor_db)
    return 0


def cmd_bench(a):
    cfg = BenchConfig(sigma=a.sigma, realizations=a.realizations, seed=a.seed, hop=a.hop)
    if a.print_config:
        _print_config(cfg)
        return 0
    rows = bench_extenders(cfg)
    io.write_rows_csv(
        a.out,
        ["method", "mse_mean", "mse_sd", "d_stft_mean", "d_stft_sd", "seconds_per_extension",
         "diverged"],
        [(r.method, r.mse_mean, r.mse_sd, r.d_mean, r.d_sd, r.seconds, r.diverged)
         for r in rows],
    )
    for r in rows:
        print(f"{r.method}: mse={r.mse_mean:.4g}+-{r.mse_sd:.2g} D={r.d_mean:.4g}+-{r.d_sd:.2g}")
    return 0


def cmd_verify(a):
    cfg = _mc_config(a)
    if a.print_config:
        _print_config(cfg)
        return 0
    report = mc_moments(cfg)
    io.write_mc_report_csv(report, a.out)
    expected = 1 if a.sweep == "sigma" else -1
    for ell in cfg.horizons:
        s = report.slopes.get(ell)
        slope = s["slope"] if s else math.nan
        ok = bool(abs(slope - expected) <= SLOPE_TOL[a.sweep])
        print(f"slope={slope:.4f} expected={expected} pass={ok} ell={ell}")
    return 0


def cmd_stream(a):
    cfg = _pipeline(a)
    chunk = a.hop if a.chunk is None else a.chunk
    if chunk < 1:
        raise ValueError("--chunk must be positive")
    if a.print_config:
        _print_config({"pipeline": cfg, "chunk": chunk})
        return 0
    x = io.read_signal(a.input, a.fs)
    s = x.samples
    n0 = cfg.extender.history(cfg.L) if cfg.extender is not None else 1
    n0 = min(s.size, max(n0, chunk))
    state = stream_init(x.with_samples(s[:n0]), cfg)
    timings = []
    for i in range(n0, s.size, chunk):
        state.push(s[i:i + chunk])
        timings.append(dict(state.last_timing))
    batch = bound_eff_red(x, cfg) if cfg.extender is not None else transform(
        cfg.tfr, x, cfg.window, cfg.n_fft, cfg.hop)
    err = float(np.max(np.abs(state.matrix.values - batch.values), initial=0.0))
    if not err <= 1e-12:
        raise NumericalError(f"streamed result differs from batch by {err:.3g}")
    if a.timing_out:
        io.write_rows_csv(a.timing_out, ["push", "forecast_s", "columns", "per_column_s"],
                          [(k, t["forecast"], t["columns"], t["per_column"])
                           for k, t in enumerate(timings)])
    print(f"stream_vs_batch_max_abs_diff={err:.3g}")
    if timings:
        t_f = float(np.median([t["forecast"] for t in timings]))
        t_c = float(np.median([t["per_column"] for t in timings]))
        # each push recomputes about half/hop trailing columns
        rep = timing_budget(t_f, t_c, cfg.window.half, cfg.hop, x.fs)
        print(f"t_forecast={t_f * 1e3:.3f}ms t_column={t_c * 1e3:.3f}ms "
              f"hop={cfg.hop} feasible={rep.feasible} min_H={rep.min_H}")
    return 0


COMMANDS = {
    "extend": cmd_extend,
    "tfr": cmd_tfr,
    "bench-table1": cmd_bench,
    "verify-theorem": cmd_verify,
    "stream": cmd_stream,
}


def main(argv=None):
    a = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[a.cmd](a)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
