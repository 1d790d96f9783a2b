"""Batch command-line front end.

Subcommands: eval, sample, smallball, tails, moments. Tabular results go to
CSV (stdout or ``--out``); with ``--out`` a JSON mirror carrying the resolved
configuration and run metadata is written next to it. CSV output is
byte-identical for identical flags and seed, whatever ``--workers`` is; in
the JSON only the ``run`` block (wall-clock, worker count) can change.

Exit codes: 0 ok, 2 usage or domain error, 3 numerical failure,
4 insufficient data.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import estimators as est
from . import specfun
from .errors import DomainError, GgbmError
from .norms import parse_norm
from .pathgen import PathGrid, ProcessParams, RngStream, fbm_sample, ggbm_sample

DEFAULT_SEED = 0xC0FFEE
DEFAULT_N_STEPS = 1024
DEFAULT_N_PATHS = 100_000

EXIT_USAGE = 2


def _seed_arg(text: str) -> int:
    return int(text, 0)


def _default_seed() -> int:
    env = os.environ.get("GGBM_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise DomainError(f"GGBM_SEED is not an integer: {env!r}") from None
    return DEFAULT_SEED


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header, rows, footer: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if footer:
        buf.write(footer + "\n")
    return buf.getvalue()


def _json_path(out: Path) -> Path:
    return out.with_suffix(".json") if out.suffix == ".csv" else Path(str(out) + ".json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _emit(args, text: str | None, meta: dict, data: bytes | None = None):
    """Write the primary output and, when it goes to a file, its JSON mirror."""
    meta = {
        "tool": "ggbm",
        "version": __version__,
        "command": args.command,
        **meta,
        # the only fields that may differ between identical invocations
        "run": {
            "wall_clock_s": round(time.perf_counter() - args._t0, 3),
            "workers": getattr(args, "workers", 1),
        },
    }
    if args.out is None:
        if data is not None:
            raise DomainError("binary output needs --out")
        sys.stdout.write(text)
        return
    out = Path(args.out)
    if data is not None:
        out.write_bytes(data)
    else:
        out.write_text(text, newline="")
    _json_path(out).write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def _config(args) -> dict:
    skip = {"func", "command", "_t0", "out", "workers"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# ---------------------------------------------------------------------------


def cmd_eval(args):
    fn = args.function
    if fn == "mwright":
        xs = _require(args.x, "--x")
        ev = specfun.MWrightEval.for_beta(_require(args.beta, "--beta"))
        rows = [(x, specfun.mwright(ev, x)) for x in xs]
        header = ["x", "value"]
    elif fn == "mlf":
        zs = _require(args.z, "--z")
        p = specfun.MittagLefflerParams(_require(args.u, "--u"), _require(args.v, "--v"))
        rows = [(z, specfun.mittag_leffler(p, z)) for z in zs]
        header = ["z", "value"]
    elif fn == "recip_gamma":
        rows = [(x, specfun.recip_gamma(x)) for x in _require(args.x, "--x")]
        header = ["x", "value"]
    else:
        rows = [
            (e, est.bm_supnorm_cdf_exact(e, args.n_terms)) for e in _require(args.eps, "--eps")
        ]
        header = ["eps", "value"]
    text = _csv_text(header, rows)
    _emit(args, text, {"config": _config(args), "rows": [list(r) for r in rows]})


def _require(value, flag):
    if value is None:
        raise DomainError(f"{flag} is required for this function")
    return value


def cmd_sample(args):
    rng = RngStream(args.seed)
    if args.process == "fbm":
        hurst = _require(args.hurst, "--hurst")
        grid = fbm_sample(hurst, args.n_steps, args.n_paths, rng, workers=args.workers)
    else:
        alpha = _require(args.alpha, "--alpha")
        beta = _require(args.beta, "--beta")
        if beta >= 1.0:
            raise DomainError("ggbm needs beta < 1; for beta = 1 use 'sample fbm --hurst alpha/2'")
        grid = ggbm_sample(ProcessParams(alpha, beta), args.n_steps, args.n_paths, rng,
                           workers=args.workers)
    meta = {"config": _config(args), "seed": args.seed, "n_paths": grid.n_paths,
            "n_steps": grid.n_steps, "format": args.format}
    if args.format == "binary":
        _emit(args, None, meta, data=grid.to_bytes())
    else:
        _emit(args, grid.to_csv(), meta)


def _process(alpha, beta):
    if beta == 1.0:
        return est.FBm(alpha / 2.0)
    return est.Ggbm(alpha, beta)


def cmd_smallball(args):
    norm = parse_norm(args.norm)
    proc = est.Ggbm(args.alpha, args.beta)
    if proc.beta >= 1.0:
        raise DomainError("smallball needs beta < 1")
    norm.check_process(proc.hurst)
    if any(e < 0 for e in args.eps):
        raise DomainError("eps values must be nonnegative")
    if args.N < 0:
        raise DomainError("N must be nonnegative")
    seed = args.seed
    g_set = est.norm_samples(proc, norm, args.n_paths, args.n_steps, RngStream(seed, 0),
                             workers=args.workers)
    f_set = est.norm_samples(est.FBm(proc.hurst), norm, args.n_paths, args.n_steps,
                             RngStream(seed, 1), workers=args.workers)
    moments = est.neg_moments(f_set, 2 * args.N + 2)
    expansion = est.series_coefficients(proc.beta, moments, args.N)
    valid = expansion.validity is est.Validity.SERIES_VALID
    n_mix = args.n_mix or args.n_paths
    rows, records = [], []
    for eps in args.eps:
        flags = []
        mc = est.small_ball_mc(g_set, eps)
        if mc.unreliable:
            flags.append("unreliable_mc")
        mixed = est.small_ball_mixed(f_set, proc.beta, eps, n_mix, RngStream(seed, 2))
        lead = est.leading_order(moments.entries[2], proc.beta, eps)
        p_series = None
        if valid or args.force_series:
            sv = est.small_ball_series(expansion, eps, force=args.force_series)
            p_series = sv.value
            if sv.remainder_flag and eps > 0:
                flags.append("series_truncated")
            if not valid:
                flags.append("exploratory")
        rows.append((eps, mc.value, mc.stderr, mixed.value, mixed.stderr, p_series,
                     lead.value, expansion.validity.value, ";".join(flags)))
        records.append({"eps": eps, "mc": mc.to_record(), "mixed": mixed.to_record(),
                        "series": p_series, "leading": lead.to_record(), "flags": flags})
    header = ["eps", "p_mc", "stderr_mc", "p_mixed", "stderr_mixed", "p_series",
              "p_leading", "validity", "flags"]
    meta = {
        "config": _config(args),
        "seed": seed,
        "theta": expansion.theta,
        "theta_provenance": norm.theta_provenance.value,
        "validity": expansion.validity.value,
        "coefficients": expansion.coefficients.tolist(),
        "eta": {str(k): e.to_record() for k, e in moments.entries.items()},
        "rows": records,
    }
    _emit(args, _csv_text(header, rows), meta)


def cmd_tails(args):
    if not 0.0 < args.p_lo < args.p_hi < 1.0:
        raise DomainError(f"need 0 < p_lo < p_hi < 1, got {args.p_lo}, {args.p_hi}")
    norm = parse_norm(args.norm)
    proc = _process(args.alpha, args.beta)
    ss = est.norm_samples(proc, norm, args.n_paths, args.n_steps, RngStream(args.seed, 0),
                          workers=args.workers)
    fit = est.tail_exponent_fit(ss, args.beta, args.p_lo, args.p_hi, n_grid=args.n_grid)
    rows = []
    for y in fit.y_grid:
        t = est.tail_mc(ss, y)
        rows.append((y, t.value, t.stderr))
    footer = "# fit: " + json.dumps(_jsonable(fit.to_record()), sort_keys=True)
    meta = {
        "config": _config(args),
        "seed": args.seed,
        "theta_provenance": norm.theta_provenance.value,
        "fit": fit.to_record(),
        "rows": [list(r) for r in rows],
    }
    _emit(args, _csv_text(["y", "p_hat", "stderr"], rows, footer), meta)


def _theta_or_none(norm, hurst):
    try:
        return norm.theta(hurst)
    except DomainError:
        return None


def cmd_moments(args):
    if args.k_max < 2 or args.k_max % 2:
        raise DomainError(f"--k-max must be even and >= 2 (got {args.k_max})")
    norm = parse_norm(args.norm)
    proc = est.FBm(args.hurst)
    if args.from_samples:
        values = np.loadtxt(args.from_samples, ndmin=1)
        ss = est.NormSampleSet(proc, norm, values)
    else:
        norm.check_process(proc.hurst)
        ss = est.norm_samples(proc, norm, args.n_paths, args.n_steps, RngStream(args.seed, 0),
                              workers=args.workers)
    table = est.neg_moments(ss, args.k_max)
    growth = est.moment_growth(table)
    rows = [(k, e.value, e.stderr, table.excluded_count, growth[k])
            for k, e in sorted(table.entries.items())]
    meta = {
        "config": _config(args),
        "seed": args.seed,
        "theta": _theta_or_none(norm, proc.hurst),
        "theta_provenance": norm.theta_provenance.value,
        "note": "entries share one sample set and are correlated across k",
        "rows": [list(r) for r in rows],
    }
    _emit(args, _csv_text(["k", "eta_hat", "stderr", "excluded_count", "growth"], rows), meta)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggbm", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"ggbm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        if sim:
            sp.add_argument("--seed", type=_seed_arg, default=None,
                            help=f"RNG seed (default: $GGBM_SEED or {DEFAULT_SEED:#x})")
            sp.add_argument("--n-steps", type=int, default=DEFAULT_N_STEPS)
            sp.add_argument("--n-paths", type=int, default=DEFAULT_N_PATHS)
            sp.add_argument("--workers", type=int, default=1)

    e = sub.add_parser("eval", help="evaluate special functions")
    e.add_argument("function", choices=["mwright", "mlf", "recip_gamma", "bm_cdf"])
    e.add_argument("--beta", type=float)
    e.add_argument("--x", type=float, nargs="+")
    e.add_argument("--u", type=float)
    e.add_argument("--v", type=float)
    e.add_argument("--z", type=float, nargs="+")
    e.add_argument("--eps", type=float, nargs="+")
    e.add_argument("--n-terms", type=int, default=None)
    common(e, sim=False)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="sample fBm or ggBm paths")
    s.add_argument("process", choices=["fbm", "ggbm"])
    s.add_argument("--hurst", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--format", choices=["csv", "binary"], default="csv")
    common(s)
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("smallball", help="small-ball probabilities of ggBm")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--beta", type=float, required=True)
    b.add_argument("--norm", default="sup")
    b.add_argument("--eps", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2, 0.3])
    b.add_argument("--N", type=int, default=4, help="series truncation order")
    b.add_argument("--n-mix", type=int, default=None,
                   help="number of L draws for the mixed estimator (default: n-paths)")
    b.add_argument("--force-series", action="store_true",
                   help="evaluate the series outside its validity region (exploratory)")
    common(b)
    b.set_defaults(func=cmd_smallball)

    t = sub.add_parser("tails", help="tail exponent of ggBm norms")
    t.add_argument("--alpha", type=float, required=True)
    t.add_argument("--beta", type=float, required=True)
    t.add_argument("--norm", default="sup")
    t.add_argument("--p-lo", type=float, default=1e-4)
    t.add_argument("--p-hi", type=float, default=1e-1)
    t.add_argument("--n-grid", type=int, default=40)
    common(t)
    t.set_defaults(func=cmd_tails)

    m = sub.add_parser("moments", help="negative moments of fBm norms")
    m.add_argument("--hurst", type=float, required=True)
    m.add_argument("--norm", default="sup")
    m.add_argument("--k-max", type=int, default=10)
    m.add_argument("--from-samples", help="read norm samples (one per line) instead of simulating")
    common(m)
    m.set_defaults(func=cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.perf_counter()
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        if getattr(args, "workers", 1) < 1:
            raise DomainError("--workers must be >= 1")
        args.func(args)
    except GgbmError as exc:
        print(f"ggbm: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
