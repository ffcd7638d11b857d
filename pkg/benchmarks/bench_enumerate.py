"""Compare the numba and numpy enumeration kernels.

Times the raw candidate scan and the full certified enumeration for each
backend, checks that both produce identical output, and prints a table.

    python benchmarks/bench_enumerate.py --X 1e3 1e4 1e5 --repeat 3
"""
import argparse
import statistics
import time
from fractions import Fraction

import numpy as np

from conjcount import _accel, _kernels
from conjcount.counting import _compiled, enumerate_orbit
from conjcount.exactnum import HPoint
from conjcount.forms import build_frame, parse_form


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--form", default="1,0,-3")
    ap.add_argument("--X", nargs="+", type=float, default=[1e3, 1e4, 1e5])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    frame = build_frame(parse_form(args.form))
    z = HPoint.i(frame.d)
    comp = _compiled(frame, z)
    backends = _kernels.available_backends()
    if args.threads:
        _accel.set_threads(args.threads)
    if "numba" in backends:
        # compile outside the timed region
        _kernels.scan(comp.scan_params(1, 2.0), "numba")
    else:
        print("numba unavailable: timing the numpy kernel only")

    print(f"form {args.form}, backends {backends}, best/median of {args.repeat}")
    print(f"{'X':>8} {'backend':>7} {'scan best':>10} {'scan med':>10} {'enum best':>10} {'points':>8} {'speedup':>8}")
    for X in args.X:
        params = comp.scan_params(1, X)
        ref_scan = ref_enum = None
        base = None
        for backend in backends[::-1]:  # numpy first, as the reference
            sb, sm, cands = best_of(lambda: _kernels.scan(params, backend), args.repeat)
            eb, _, rl = best_of(lambda: enumerate_orbit(frame, z, Fraction(X), backend=backend), args.repeat)
            if ref_scan is None:
                ref_scan, ref_enum, base = cands, rl, eb
            else:
                assert np.array_equal(cands, ref_scan), "scan outputs differ between backends"
                assert np.array_equal(rl.reps, ref_enum.reps), "enumerations differ between backends"
            print(f"{X:>8g} {backend:>7} {sb:>10.4f} {sm:>10.4f} {eb:>10.4f} {len(rl):>8} {base / eb:>7.2f}x")


if __name__ == "__main__":
    main()
