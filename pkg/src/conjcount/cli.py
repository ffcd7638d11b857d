"""
Command-line frontend.

Every subcommand prints one table. ``--out`` selects the format: ``text``
(key=value pairs, one row per line), ``csv`` (RFC 4180 with a header row) or
``json`` (a list of objects with snake_case keys). Column names and order per
subcommand are listed in ``COLUMNS`` and in each subcommand's ``--help``.

Exit codes: 0 success, 2 invalid form or discriminant, 3 cache corrupt or
horizon exceeded, 4 numerical non-convergence. Errors go to stderr as one
line: ``error code=<n> kind=<kind> msg=<text>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import _accel, cache as cache_mod
from .counting import (CertificationError, HorizonExceeded, OracleNotStabilized, PSL2, SL2,
                       count, count_fq, main_term, radius_list, sl2z_spectral_datum)
from .exactnum import HPoint, QuadRat, as_fraction
from .experiments import (convention_audit, exponent_fit, fq_constant, hecke_table, log_grid,
                          mean_square, sandwich_audit, sigma)
from .forms import (InvalidForm, build_frame, parse_form, pell_fundamental, reduce_form,
                    reduction_cycle)
from .huber import (HuberWindow, NonConvergence, coeff_A, huber_asymptotic, huber_closed,
                    huber_quadrature)

COLUMNS = {
    "pell": ["d", "t0", "u0", "eps", "mu"],
    "class": ["form", "d", "automorph", "t0", "u0", "eps", "mu", "theta1", "theta2", "reduced", "cycle_length"],
    "count": ["form", "n", "mode", "x", "count"],
    "count-fq": ["form", "n", "mode", "x", "count", "ratio", "constant"],
    "hecke": ["n", "sigma", "count", "ratio", "error", "scaled_error"],
    "mainterm": ["form", "nu", "x", "main_term"],
    "error": ["form", "x", "count", "main_term", "error"],
    "fit": ["x", "sup_error", "jumps", "slope", "intercept"],
    "meansquare": ["x", "integral", "ratio", "riemann_rel"],
    "sandwich": ["x", "y", "lower", "count", "upper", "holds", "gap"],
    "huber-eval": ["t", "x", "y", "kind", "closed_re", "closed_im", "quadrature_re", "quadrature_im", "asymptotic_re", "asymptotic_im"],
    "huber-check": ["check", "max_deviation", "tolerance", "passed"],
    "audit": ["x", "psl2", "sl2", "ratio", "psl2_normalized", "sl2_normalized", "factor"],
    "cache": ["action", "path", "rows", "x_max", "status"],
}

EXIT_OK, EXIT_INVALID, EXIT_CACHE, EXIT_NUMERIC = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, kind, msg):
        super().__init__(msg)
        self.code, self.kind, self.msg = code, kind, msg


# ------------------------------------------------------------ parsing helpers


def _disc(text):
    text = text.strip()
    if text.startswith("d="):
        text = text[2:]
    return int(text)


def _xval(text):
    return as_fraction(text)


def _parse_z(text, d):
    """'x,y' rationals or 'xp,xq,yp,yq' for x = xp + xq sqrt d, y = yp + yq sqrt d."""
    if text is None:
        return HPoint.i(d)
    parts = [Fraction(p.strip()) for p in text.split(",")]
    if len(parts) == 2:
        return HPoint(QuadRat(d, parts[0]), QuadRat(d, parts[1]))
    if len(parts) == 4:
        return HPoint(QuadRat(d, parts[0], parts[1]), QuadRat(d, parts[2], parts[3]))
    raise ValueError(f"--z expects 2 or 4 comma-separated rationals, got {text!r}")


def _grid(text):
    """'lo:hi:Nlog' (log-spaced) or a comma list."""
    if ":" in text:
        lo, hi, num = text.split(":")
        num = num.lower().removesuffix("log")
        return log_grid(float(lo), float(hi), int(num))
    return [float(v) for v in text.split(",")]


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _emit(rows, columns, fmt, out):
    if fmt == "json":
        json.dump([{k: (str(r[k]) if isinstance(r[k], Fraction) else r[k]) for k in columns} for r in rows],
                  out, indent=None)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in columns])
    else:
        for r in rows:
            out.write(" ".join(f"{k}={_fmt(r[k])}" for k in columns) + "\n")


# ------------------------------------------------------------ commands


def _frame(args):
    return build_frame(parse_form(args.form), getattr(args, "nu", 1))


def _load_cached(args, frame, z, n, mode):
    """Seed the in-process cache from --cache if it matches the request."""
    if not args.cache:
        return
    rl = cache_mod.read(args.cache)
    if rl.frame.form != frame.form or rl.z != z or rl.n != n or rl.mode != mode:
        raise cache_mod.CacheCorrupt("cache file does not match the requested form, z, n or mode")
    from .counting import _CACHE
    _CACHE[(frame.form, z, n, mode)] = rl


def cmd_pell(args):
    p = pell_fundamental(_disc(args.disc))
    return [{"d": p.d, "t0": p.t0, "u0": p.u0, "eps": str(p.eps), "mu": 2 * p.log_eps}]


def cmd_class(args):
    f = _frame(args)
    red, _ = reduce_form(f.form)
    return [{"form": str(f.form), "d": f.d, "automorph": str(f.M), "t0": f.pell.t0, "u0": f.pell.u0,
             "eps": str(f.eps), "mu": f.mu, "theta1": str(f.theta1), "theta2": str(f.theta2),
             "reduced": str(red), "cycle_length": len(reduction_cycle(f.form))}]


def cmd_count(args):
    f = _frame(args)
    z = _parse_z(args.z, f.d)
    _load_cached(args, f, z, args.n, args.mode)
    X = _xval(args.X)
    return [{"form": str(f.form), "n": args.n, "mode": args.mode, "x": float(X),
             "count": count(f, z, X, args.n, args.mode)}]


def cmd_count_fq(args):
    f = _frame(args)
    X = _xval(args.X)
    P = count_fq(f, X, args.n, args.mode)
    dens = sigma(args.n) / args.n
    return [{"form": str(f.form), "n": args.n, "mode": args.mode, "x": float(X), "count": P,
             "ratio": P / (dens * float(X)), "constant": fq_constant(f)}]


def cmd_hecke(args):
    f = _frame(args)
    ns = [int(v) for v in args.ns.split(",")]
    return [{"n": r.n, "sigma": sigma(r.n), "count": r.count, "ratio": r.ratio, "error": r.error,
             "scaled_error": r.scaled_error} for r in hecke_table(f, ns, _xval(args.X))]


def cmd_mainterm(args):
    f = _frame(args)
    X = float(_xval(args.X))
    return [{"form": str(f.form), "nu": f.nu, "x": X, "main_term": main_term(sl2z_spectral_datum(f), X)}]


def cmd_error(args):
    f = _frame(args)
    z = _parse_z(args.z, f.d)
    _load_cached(args, f, z, 1, PSL2)
    X = _xval(args.X)
    N = count(f, z, X)
    M = main_term(sl2z_spectral_datum(f), float(X))
    return [{"form": str(f.form), "x": float(X), "count": N, "main_term": M, "error": N - M}]


def cmd_fit(args):
    f = _frame(args)
    rep = exponent_fit(f, _parse_z(args.z, f.d), _grid(args.grid))
    return [{"x": x, "sup_error": e, "jumps": j, "slope": rep.slope, "intercept": rep.intercept}
            for x, e, j in zip(rep.X_grid, rep.sup_error, rep.jumps)]


def cmd_meansquare(args):
    f = _frame(args)
    z = _parse_z(args.z, f.d)
    rows = []
    for X in _grid(args.X):
        r = mean_square(f, z, X)
        rows.append({"x": r.X, "integral": r.integral, "ratio": r.ratio, "riemann_rel": r.riemann_rel})
    return rows


def cmd_sandwich(args):
    f = _frame(args)
    X = _xval(args.X)
    Y = None if args.Y == "auto" else float(args.Y)
    r = sandwich_audit(f, _parse_z(args.z, f.d), X, Y)
    return [{"x": r.X, "y": r.Y, "lower": r.lower, "count": r.count, "upper": r.upper, "holds": r.holds, "gap": r.gap}]


def cmd_huber_eval(args):
    X, t = float(args.X), float(args.t)
    Y = X ** (2 / 3) if args.Y == "auto" else float(args.Y)
    w = HuberWindow.plus(Fraction(X), Y) if args.kind == "plus" else HuberWindow.minus(Fraction(X), Y)
    s = 0.5 + 1j * t if t != 0 else 0.5
    c = complex(huber_closed(w, s))
    q = complex(huber_quadrature(w, s))
    a = complex(huber_asymptotic(w, t)[2]) if t != 0 else complex("nan")
    return [{"t": t, "x": X, "y": Y, "kind": args.kind, "closed_re": c.real, "closed_im": c.imag,
             "quadrature_re": q.real, "quadrature_im": q.imag, "asymptotic_re": a.real, "asymptotic_im": a.imag}]


def huber_checks(ts=range(1, 21), Xs=(10.0, 100.0)):
    """Rows of (check, max deviation, tolerance): the standing Huber consistency grid."""
    from .huber import I_function, J_function, legendre_p
    worst_q, worst_even = 0.0, 0.0
    for X in Xs:
        w = HuberWindow.plus(Fraction(X), X ** (2 / 3))
        for t in ts:
            s = 0.5 + 1j * t
            c = complex(huber_closed(w, s))
            q = complex(huber_quadrature(w, s))
            worst_q = max(worst_q, abs(q - c) / abs(c))
            worst_even = max(worst_even, abs(complex(huber_closed(w, 0.5 - 1j * t)) - c) / abs(c))
    s = 0.5 + 2j
    worst_identity = max(abs(complex(I_function(s, A)) - (J_function(s, A) - 2 * legendre_p(-2, s - 1, 0)))
                      / abs(complex(I_function(s, A))) for A in (2.0, 10.0))
    worst_trap = 0.0
    for X in Xs:
        Y = X ** (2 / 3)
        for w in (HuberWindow.plus(Fraction(X), Y), HuberWindow.minus(Fraction(X), Y)):
            exact = w.U + w.Y / 2 if w.kind == "plus" else w.U - w.Y / 2
            worst_trap = max(worst_trap, abs(complex(huber_quadrature(w, 1.0)) - exact) / exact)
    return [
        ("quadrature_vs_closed", worst_q, 1e-6),
        ("integral_identity", worst_identity, 1e-8),
        ("a_at_one", abs(coeff_A(1.0) - 2), 1e-12),
        ("trapezoid_s1", worst_trap, 1e-8),
        ("evenness", worst_even, 1e-10),
    ]


def cmd_huber_check(args):
    rows = [{"check": name, "max_deviation": dev, "tolerance": tol, "passed": dev <= tol}
            for name, dev, tol in huber_checks()]
    if not all(r["passed"] for r in rows):
        args._exit = EXIT_NUMERIC
    return rows


def cmd_audit(args):
    r = convention_audit(parse_form(args.form), _xval(args.X))
    return [{"x": r.X, "psl2": r.psl2, "sl2": r.sl2, "ratio": r.ratio, "psl2_normalized": r.psl2_normalized,
             "sl2_normalized": r.sl2_normalized, "factor": r.factor}]


def cmd_cache(args):
    if args.action == "build":
        if not args.form or args.X is None:
            raise CliError(EXIT_INVALID, "usage", "cache build needs --form and --X")
        f = _frame(args)
        z = _parse_z(args.z, f.d)
        rl = radius_list(f, z, _xval(args.X), args.n, args.mode)
        if rl.X_max != _xval(args.X):
            from .counting import enumerate_orbit
            rl = enumerate_orbit(f, z, _xval(args.X), args.n, args.mode)
        cache_mod.save(rl, args.path, f.nu)
        return [{"action": "build", "path": args.path, "rows": len(rl), "x_max": str(rl.X_max), "status": "ok"}]
    path = args.path or args.cache
    if not path:
        raise CliError(EXIT_INVALID, "usage", "cache verify needs --out PATH")
    rl = cache_mod.verify(path)
    return [{"action": "verify", "path": path, "rows": len(rl), "x_max": str(rl.X_max), "status": "ok"}]


# ------------------------------------------------------------ parser


def _common(*, out=True):
    p = argparse.ArgumentParser(add_help=False)
    if out:
        p.add_argument("--out", choices=["text", "csv", "json"], default=argparse.SUPPRESS,
                       help="output format (default text)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for enumeration")
    p.add_argument("--cache", default=argparse.SUPPRESS, help="radius cache file to reuse")
    return p


def _form_args(p, *, X=True, z=False, n=False, mode=False, nu=False):
    p.add_argument("--form", required=True, help="quadratic form a,b,c")
    if X:
        p.add_argument("--X", required=True, help="level X (int, decimal, 1e4 or p/q)")
    if z:
        p.add_argument("--z", default=None, help="base point x,y or xp,xq,yp,yq (coordinates in Q(sqrt d))")
    if n:
        p.add_argument("--n", type=int, default=1, help="determinant (Hecke level)")
    if mode:
        p.add_argument("--mode", choices=[PSL2, SL2], default=PSL2)
    if nu:
        p.add_argument("--nu", type=int, default=1, help="class power")


def build_parser():
    parser = argparse.ArgumentParser(prog="conjcount", description=__doc__.split("\n\n")[0],
                                     parents=[_common()], formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog="Exit codes: 0 ok, 2 invalid input, 3 cache/horizon, 4 non-convergence.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text,
                           description=f"{help_text}\nColumns: {','.join(COLUMNS[name])}",
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=fn)
        return p

    p = add("pell", cmd_pell, "fundamental solution of t^2 - d u^2 = 4")
    p.add_argument("--disc", required=True, help="discriminant, e.g. 12 or d=12")
    p = add("class", cmd_class, "automorph, unit, frame and reduction cycle of a form")
    _form_args(p, X=False, nu=True)
    p = add("count", cmd_count, "N(X): cosets whose orbit point lies within X of the axis")
    _form_args(p, z=True, n=True, mode=True, nu=True)
    p = add("count-fq", cmd_count_fq, "classes with |F| <= X and determinant n")
    _form_args(p, n=True, mode=True, nu=True)
    p = add("hecke", cmd_hecke, "normalized counts for several determinants")
    _form_args(p)
    p.add_argument("--ns", default="1,2,3,4,6", help="comma-separated determinants")
    p = add("mainterm", cmd_mainterm, "spectral main term for SL2(Z)")
    _form_args(p, nu=True)
    p = add("error", cmd_error, "E(X) = N(X) - M(X)")
    _form_args(p, z=True, nu=True)
    p = add("fit", cmd_fit, "error exponent fit over dyadic windows")
    _form_args(p, X=False, z=True)
    p.add_argument("--grid", default="1e2:1e5:20log", help="lo:hi:Nlog or a comma list")
    p = add("meansquare", cmd_meansquare, "(1/X) * integral of E^2 over [X, 2X]")
    _form_args(p, z=True)
    p = add("sandwich", cmd_sandwich, "weighted counts A(f-) <= N <= A(f+)")
    _form_args(p, z=True)
    p.add_argument("--Y", default="auto", help="ramp width, or auto for X^(2/3)")
    p = add("huber-eval", cmd_huber_eval, "Huber transform by closed form, quadrature and asymptotics")
    p.add_argument("--t", required=True)
    p.add_argument("--X", required=True)
    p.add_argument("--Y", default="auto")
    p.add_argument("--kind", choices=["plus", "minus"], default="plus")
    add("huber-check", cmd_huber_check, "standing consistency checks of the Huber transform")
    p = add("audit", cmd_audit, "PSL2 versus SL2 counting convention")
    _form_args(p)
    p = sub.add_parser("cache", parents=[_common(out=False)], help="build or verify a radius cache file",
                       description=f"Columns: {','.join(COLUMNS['cache'])}")
    p.set_defaults(func=cmd_cache)
    p.add_argument("action", choices=["build", "verify"])
    p.add_argument("--out", dest="path", help="cache file path")
    p.add_argument("--format", dest="fmt", choices=["text", "csv", "json"], default=None)
    p.add_argument("--form")
    p.add_argument("--X")
    p.add_argument("--z", default=None)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--mode", choices=[PSL2, SL2], default=PSL2)
    p.add_argument("--nu", type=int, default=1)
    return parser


def _fail(err, code, kind, msg):
    msg = " ".join(str(msg).split())
    err.write(f"error code={code} kind={kind} msg={msg}\n")
    return code


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fmt = getattr(args, "fmt", None) or getattr(args, "out", "text")
    if not hasattr(args, "cache"):
        args.cache = None
    if getattr(args, "threads", None):
        _accel.set_threads(args.threads)
    args._exit = EXIT_OK
    try:
        rows = args.func(args)
    except CliError as exc:
        return _fail(err, exc.code, exc.kind, exc.msg)
    except InvalidForm as exc:
        return _fail(err, EXIT_INVALID, "invalid_form", exc)
    except cache_mod.CacheCorrupt as exc:
        return _fail(err, EXIT_CACHE, "cache_corrupt", exc)
    except HorizonExceeded as exc:
        return _fail(err, EXIT_CACHE, "horizon_exceeded", exc)
    except (NonConvergence, OracleNotStabilized, CertificationError) as exc:
        return _fail(err, EXIT_NUMERIC, "non_convergence", exc)
    except (ValueError, ZeroDivisionError) as exc:
        return _fail(err, EXIT_INVALID, "invalid_input", exc)
    buf = io.StringIO()
    _emit(rows, COLUMNS[args.command], fmt, buf)
    out.write(buf.getvalue())
    return args._exit


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
