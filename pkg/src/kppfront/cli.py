"""Command-line entry point: ``kppfront <subcommand> [flags]``.

Parameters come from an optional key=value file (``--config``) and from
flags; flags win.  Output goes to ``--out``, else ``$KPP_OUT_DIR``, else the
current directory, as CSV files with a header row plus a ``meta.txt`` that
collects key=value provenance for every CSV in that directory.

Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 I/O.
"""
from __future__ import annotations

import argparse
import csv
import glob
import math
import os
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .errors import KPPError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class VerifyFailed(KPPError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        vals = tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return vals


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------- output

def _pkg_version():
    try:
        return version("kppfront")
    except PackageNotFoundError:
        return "unknown"


def write_csv(out_dir, name, header, rows):
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def update_meta(out_dir, section, items):
    """Merge ``section.key=value`` lines into out_dir/meta.txt (sorted, no timestamps)."""
    path = os.path.join(out_dir, "meta.txt")
    meta = {}
    if os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                if "=" in line:
                    k, v = line.rstrip("\n").split("=", 1)
                    meta[k] = v
    meta["version"] = _pkg_version()
    for k, v in items.items():
        meta[f"{section}.{k}"] = _fmt(v)
    with open(path, "w") as fh:
        for k in sorted(meta):
            fh.write(f"{k}={meta[k]}\n")
    return path


def read_config(path):
    """key=value lines; '#' starts a comment; keys use '-' or '_' interchangeably."""
    cfg = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


def read_trace(path):
    from .solver import FrontTrace

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise UsageError(f"{path}: not a trace file (header must start with 't')")
    data = np.array(rows[1:], dtype=float)
    sig = {float(h.split("_", 1)[1]): data[:, i + 1] for i, h in enumerate(rows[0][1:])}
    return FrontTrace(data[:, 0], sig)


def read_snapshot(path):
    from .solver import PdeState

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    if head[:2] != ["t", "x"]:
        raise UsageError(f"{path}: not a snapshot file")
    data = np.array(rows[1:], dtype=float)
    return PdeState(float(data[0, 0]), data[:, 1], data[:, head.index("v")])


# ------------------------------------------------------------ subcommands

def cmd_constants(a, out):
    from .constants import compute_mu

    rep = compute_mu(a.terms)
    path = write_csv(out, "constants.csv", ["name", "value", "route", "tolerance", "pass"], rep.rows())
    update_meta(out, "constants", {"terms": a.terms, "tail_estimate": rep.tail_estimate})
    return [path]


def cmd_wave(a, out):
    from .wave import solve_wave

    w = solve_wave(a.x_lo, a.x_hi, a.h)
    sl = slice(None, None, a.stride)
    rows = zip(w.x[sl], w.phi[sl], w.dphi[sl], w.x[sl] + w.k, w.v[sl])
    path = write_csv(out, "wave.csv", ["X", "phi", "dphi", "x_match", "V0_minus"], rows)
    update_meta(out, "wave", {"h": a.h, "x_lo": a.x_lo, "x_hi": a.x_hi, "k": w.k, "A": w.A, "omega": w.omega,
                              "ode_residual": w.ode_residual()})
    return [path]


def cmd_inner(a, out):
    from .inner import psi_profile, solve_inner
    from .wave import solve_wave

    inner = solve_inner(solve_wave(), x_hi=a.x_hi, h=a.h)
    sl = slice(None, None, a.stride)
    X, p, dp = psi_profile(inner)
    rows = zip(inner.x[sl], inner.v[sl], inner.dv[sl], X[sl], p[sl], dp[sl])
    path = write_csv(out, "inner.csv", ["x_match", "V1_minus", "dV1_minus", "X", "psi", "dpsi"], rows)
    update_meta(out, "inner", {"h": a.h, "x_hi": a.x_hi, "C1_minus": inner.C1_minus,
                               "tail_p3": inner.tail[0], "tail_p2": inner.tail[1]})
    return [path]


def cmd_outer(a, out):
    from .constants import MU_STAR
    from .outer import build_v0_plus, build_v1_plus, build_v2_plus, build_v3_plus, v3bar_prime_at_zero

    mu = MU_STAR if a.mu is None else a.mu
    v1 = build_v1_plus()
    terms = [build_v0_plus(), v1, build_v2_plus(mu), build_v3_plus(mu, a.alpha1, a.q3, None, v1)]
    eta = np.linspace(0.0, a.eta_max, a.points)
    cols = [f(eta) for f in terms]
    path = write_csv(out, "outer.csv", ["eta", "V0_plus", "V1_plus", "V2_plus", "V3_plus"], zip(eta, *cols))
    meta = {"mu": mu, "alpha1": a.alpha1, "q3": a.q3, "V3bar_prime0": v3bar_prime_at_zero(mu, None, v1)}
    for f in terms:
        meta[f"{f.label}_d1_at_0"] = f.derivative_at_zero(1)
    update_meta(out, "outer", meta)
    return [path]


def cmd_simulate(a, out):
    from .solver import SimulationConfig, run

    cfg = SimulationConfig(t_final=a.t_final, levels=a.levels, h=a.h, dt=a.dt, kappa=a.kappa, growth=a.growth,
                           snapshots=a.snapshots, scheme=a.scheme, x_left=a.x_left)
    res = run(cfg)
    tr = res.trace
    paths = [write_csv(out, "trace.csv", ["t"] + [f"sigma_{s:g}" for s in cfg.levels],
                       zip(tr.t, *(tr.sigma[s] for s in cfg.levels)))]
    for t, st in sorted(res.snapshots.items()):
        rows = ((st.t, x, x + st.frame_offset, u, v) for x, u, v in zip(st.x, st.u, st.v))
        paths.append(write_csv(out, f"snapshot_{t:g}.csv", ["t", "x", "x_lab", "u", "v"], rows))
    meta = {k: getattr(cfg, k) for k in ("t_final", "h", "dt", "kappa", "growth", "scheme", "x_left")}
    meta.update(levels=",".join(f"{s:g}" for s in cfg.levels), steps=res.steps, monotone=res.monotone,
                snapshots=",".join(f"{s:g}" for s in sorted(res.snapshots)))
    update_meta(out, "simulate", meta)
    return paths


def _trace_path(a, out):
    return a.trace or os.path.join(out, "trace.csv")


def cmd_fit(a, out):
    from .front import fit_constants, fit_shift
    from .inner import solve_inner
    from .wave import solve_wave

    trace = read_trace(_trace_path(a, out))
    rep = fit_shift(trace, a.level, a.stages, a.mode == "freeze", a.t_min, a.t_max, a.mu)
    path = write_csv(out, "fit_report.csv", ["stage", "coefficient", "value", "rms", "cond"], rep.rows())
    sf = fit_constants(trace, solve_inner(solve_wave()), a.level, a.mu, min(a.t_min, 30.0), a.t_max)
    update_meta(out, "fit", {"level": a.level, "mode": a.mode, "stages": a.stages, "window": f"{rep.window[0]:g}:{rep.window[1]:g}",
                             "alpha0": sf.alpha0, "alpha1": sf.alpha1})
    return [path]


def _snapshots(a, out):
    d = a.snapshots or os.path.dirname(os.path.abspath(_trace_path(a, out)))
    files = sorted(glob.glob(os.path.join(d, "snapshot_*.csv")))
    if not files:
        raise FileNotFoundError(f"no snapshot_*.csv files in {d}")
    return [read_snapshot(f) for f in files]


def cmd_compare(a, out):
    from .front import build_uapp, compare_profiles, decay_slope, fit_constants, matched_outer
    from .inner import solve_inner
    from .wave import solve_wave

    inner = solve_inner(solve_wave())
    trace = read_trace(_trace_path(a, out))
    fit = fit_constants(trace, inner, a.level, a.mu, a.t_min)
    led = fit.ledger(inner)
    outer = matched_outer(led)
    rows, reps = [], []
    for st in sorted(_snapshots(a, out), key=lambda s: s.t):
        g = build_uapp(led, inner, outer, a.eps, st.t, a.match)
        r = compare_profiles(st, g, float(fit(st.t)), inner)
        reps.append(r)
        rows.append((r.t, r.sigma, r.weighted_error, r.local_error, g.match, g.zeta, g.K))
    path = write_csv(out, "compare.csv", ["t", "sigma", "weighted_error", "local_error", "match_point", "zeta", "K"],
                     rows)
    meta = {"level": a.level, "mu": fit.mu, "alpha0": fit.alpha0, "alpha1": fit.alpha1, "q3": led.q3,
            "eps": a.eps, "match": a.match}
    if len(reps) >= 2:
        meta["weighted_error_slope"] = decay_slope(reps)
    update_meta(out, "compare", meta)
    return [path]


def cmd_uapp(a, out):
    from .constants import MU_STAR
    from .front import build_uapp, fit_constants, matched_outer
    from .inner import psi_profile, solve_inner
    from .outer import ExpansionLedger, balance_q3, v3bar_prime_at_zero
    from .wave import solve_wave

    inner = solve_inner(solve_wave())
    if a.trace:
        led = fit_constants(read_trace(a.trace), inner, a.level, a.mu).ledger(inner)
    else:
        led = ExpansionLedger(MU_STAR if a.mu is None else a.mu, alpha0=a.alpha0, alpha1=a.alpha1,
                              C1_minus=inner.C1_minus, v3bar_prime0=v3bar_prime_at_zero(MU_STAR))
        led.set(q3=balance_q3(led, inner.C1_minus, a.alpha1))
    outer = matched_outer(led)
    X = np.linspace(a.x_min, a.x_max, a.points)
    prof = inner.profile
    inside = (X >= prof.x_lo) & (X <= prof.x_hi)
    rows = []
    for t in a.times:
        g = build_uapp(led, inner, outer, a.eps, t, a.match)
        u = g.u_app(X)
        ref = np.full_like(X, np.nan)
        _, p, _ = psi_profile(inner, X[inside])
        ref[inside] = prof(X[inside]) + p / t
        rows += list(zip([t] * X.size, X, u, ref))
    path = write_csv(out, "uapp.csv", ["t", "X", "u_app", "phi_plus_psi_over_t"], rows)
    update_meta(out, "uapp", {"mu": led.mu, "alpha0": led.alpha0, "alpha1": led.alpha1, "q3": led.q3,
                              "eps": a.eps, "match": a.match, "times": ",".join(f"{t:g}" for t in a.times)})
    return [path]


def cmd_verify(a, out):
    from .checks import run_tiers

    checks = run_tiers(a.tier, a.tamper_mu, a.seed, a.terms)
    header = ["tier", "criterion", "check", "value", "target", "tolerance", "status"]
    path = write_csv(out, "verify.csv", header, (c.row() for c in checks))
    update_meta(out, "verify", {"tier": a.tier, "seed": a.seed, "terms": a.terms,
                                "tamper_mu": "none" if a.tamper_mu is None else a.tamper_mu,
                                "passed": sum(c.passed for c in checks), "total": len(checks)})
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"T{c.tier} C{c.criterion:<2d} {c.name:<{width}s} {c.value: .6e}  {'pass' if c.passed else 'FAIL'}")
    failed = [c for c in checks if not c.passed]
    if failed:
        f = failed[0]
        raise VerifyFailed(f"criterion {f.criterion} failed first: {f.name} (value {f.value:.6g})")
    return [path]


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="kppfront", description="Front shift of u_t = u_xx + u(1-u): expansions, solver, fits.")
    p.add_argument("--config", help="key=value parameter file (flags override it)")
    p.add_argument("--out", help="output directory (default $KPP_OUT_DIR or .)")
    # the same two options after the subcommand; SUPPRESS keeps an earlier value
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, hlp):
        return sub.add_parser(name, help=hlp, parents=[common])

    s = command("constants", "mu* by three routes and the supporting constants")
    s.add_argument("--terms", type=int, default=10**6)
    s.set_defaults(func=cmd_constants)

    s = command("wave", "normalised minimal-speed travelling wave")
    s.add_argument("--h", type=float, default=0.005)
    s.add_argument("--x-lo", type=float, default=-40.0)
    s.add_argument("--x-hi", type=float, default=60.0)
    s.add_argument("--stride", type=int, default=1)
    s.set_defaults(func=cmd_wave)

    s = command("inner", "first inner correction V1- and psi")
    s.add_argument("--h", type=float, default=0.01)
    s.add_argument("--x-hi", type=float, default=55.0)
    s.add_argument("--stride", type=int, default=1)
    s.set_defaults(func=cmd_inner)

    s = command("outer", "outer terms V0+..V3+ on an eta grid")
    s.add_argument("--mu", type=float, default=None)
    s.add_argument("--alpha1", type=float, default=0.0)
    s.add_argument("--q3", type=float, default=0.0)
    s.add_argument("--eta-max", type=float, default=10.0)
    s.add_argument("--points", type=int, default=201)
    s.set_defaults(func=cmd_outer)

    s = command("simulate", "integrate the PDE from a step and track level sets")
    s.add_argument("--t-final", type=float, default=1000.0)
    s.add_argument("--levels", type=_floats, default=(0.5,))
    s.add_argument("--snapshots", type=_floats, default=())
    s.add_argument("--h", type=float, default=0.05)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--kappa", type=float, default=0.002)
    s.add_argument("--growth", type=float, default=1.1)
    s.add_argument("--x-left", type=float, default=-60.0)
    s.add_argument("--scheme", choices=("implicit", "strang"), default="implicit")
    s.set_defaults(func=cmd_simulate)

    s = command("fit", "staged least-squares fit of a level-set trace")
    s.add_argument("--trace")
    s.add_argument("--level", type=float, default=0.5)
    s.add_argument("--stages", type=int, default=5)
    s.add_argument("--mode", choices=("freeze", "refit"), default="freeze")
    s.add_argument("--t-min", type=float, default=100.0)
    s.add_argument("--t-max", type=float, default=None)
    s.add_argument("--mu", type=float, default=None)
    s.set_defaults(func=cmd_fit)

    for name, func, hlp in (("compare", cmd_compare, "weighted and local errors of snapshots against u_app"),
                            ("uapp", cmd_uapp, "glued approximate solution profiles")):
        s = command(name, hlp)
        s.add_argument("--trace")
        s.add_argument("--level", type=float, default=0.5)
        s.add_argument("--mu", type=float, default=None)
        s.add_argument("--t-min", type=float, default=30.0)
        s.add_argument("--eps", type=float, default=0.05)
        s.add_argument("--match", choices=("overlap", "power"), default="overlap")
        if name == "compare":
            s.add_argument("--snapshots", help="directory with snapshot_*.csv (default: the trace's directory)")
        else:
            s.add_argument("--alpha0", type=float, default=0.0)
            s.add_argument("--alpha1", type=float, default=0.0)
            s.add_argument("--times", type=_floats, default=(100.0, 1000.0, 10000.0))
            s.add_argument("--x-min", type=float, default=-10.0)
            s.add_argument("--x-max", type=float, default=30.0)
            s.add_argument("--points", type=int, default=401)
        s.set_defaults(func=func)

    s = command("verify", "run the acceptance checks up to a tier")
    s.add_argument("--tier", type=int, choices=range(5), default=1,
                   help="0 constants, 1 +expansions, 2 +t=1e3 run, 3 +t=1e4 run, 4 +t=1e5 mu fit")
    s.add_argument("--tamper-mu", type=float, default=None, help="replace mu* (negative test)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--terms", type=int, default=10**6)
    s.set_defaults(func=cmd_verify)
    return p


def parse(argv):
    """Parse flags over an optional config file; unknown config keys are usage errors."""
    p = build_parser()
    args = p.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = p._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known - {"help"})
        if bad:
            raise UsageError(f"{args.config}: unknown key(s) for {args.command}: {', '.join(bad)}")
        sub.set_defaults(**cfg)
        args = p.parse_args(argv)
    for name in ("t_final", "h", "dt", "kappa", "eps", "terms", "stride", "points"):
        v = getattr(args, name, None)
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise UsageError(f"--{name.replace('_', '-')} must be positive, got {v}")
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kppfront: {exc}", file=sys.stderr)
        return EXIT_IO
    out = args.out or os.environ.get("KPP_OUT_DIR") or "."
    try:
        os.makedirs(out, exist_ok=True)
        paths = args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except KPPError as exc:
        print(f"kppfront {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TypeError, ValueError) as exc:
        print(f"kppfront {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kppfront {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    for pth in paths:
        print(pth)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
