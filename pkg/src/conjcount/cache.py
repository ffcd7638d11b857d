"""
On-disk radius cache.

A JSON document with a header describing the enumeration and one row per
canonical representative. Every decision-bearing value is an exact integer
or a "num/den" string; the float radius is for people reading the file.
"""
from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .counting import RadiusList, _compiled, enumerate_orbit
from .exactnum import HPoint, QuadRat, rat_from_str, rat_to_str
from .forms import QForm, build_frame

__all__ = ["CacheCorrupt", "FORMAT", "VERSION", "dump", "load", "save", "read", "verify"]

FORMAT = "conjcount-radius-cache"
VERSION = 1


class CacheCorrupt(ValueError):
    """The cache file is malformed or disagrees with a recomputation."""


def _fvalues(rl):
    """Exact F = 2(AC + BD) for every row, as Fractions."""
    comp = _compiled(rl.frame, HPoint.i(rl.d))
    reps = rl.reps if rl.reps.dtype == object else rl.reps.astype(object)
    monos = [reps[:, i] * reps[:, j] for i in range(4) for j in range(i, 4)]
    U, _ = comp.qn.evaluate(monos)
    return [Fraction(2 * int(u), comp.qn.L) for u in U]


def dump(rl, nu=1):
    z = rl.z
    header = {
        "format": FORMAT,
        "version": VERSION,
        "form": [rl.frame.form.a, rl.frame.form.b, rl.frame.form.c],
        "d": rl.d,
        "nu": int(nu),
        "n": rl.n,
        "z": [rat_to_str(z.x.p), rat_to_str(z.x.q), rat_to_str(z.y.p), rat_to_str(z.y.q)],
        "sign_mode": rl.mode,
        "X_max": rat_to_str(rl.X_max),
        "count": len(rl),
    }
    radii = rl.radii()
    rows = []
    for i, F in enumerate(_fvalues(rl)):
        a, b, c, d = (int(v) for v in rl.reps[i])
        rows.append([a, b, c, d, rl.r2(i).to_str(), rat_to_str(F), float(radii[i])])
    return {"header": header, "rows": rows}


def save(rl, path, nu=1):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dump(rl, nu), fh, separators=(",", ":"))
        fh.write("\n")


def _parse(doc):
    try:
        h = doc["header"]
        if h["format"] != FORMAT or h["version"] != VERSION:
            raise CacheCorrupt(f"unsupported cache format {h.get('format')!r} v{h.get('version')!r}")
        form = QForm(*h["form"])
        if form.disc != h["d"]:
            raise CacheCorrupt("discriminant does not match the form")
        d = form.disc
        xp, xq, yp, yq = (rat_from_str(s) for s in h["z"])
        z = HPoint(QuadRat(d, xp, xq), QuadRat(d, yp, yq))
        rows = doc["rows"]
        if len(rows) != h["count"]:
            raise CacheCorrupt(f"header count {h['count']} but {len(rows)} rows")
        return h, form, z, rows
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CacheCorrupt):
            raise
        raise CacheCorrupt(f"malformed cache: {exc}") from exc


def _rebuild(h, form, z, rows):
    frame = build_frame(form, h["nu"])
    comp = _compiled(frame, z)
    reps = np.array([r[:4] for r in rows], dtype=np.int64).reshape(-1, 4)
    arr = reps.astype(object)
    monos = [arr[:, i] * arr[:, j] for i in range(4) for j in range(i, 4)]
    U, W = comp.qn.evaluate(monos)
    rl = RadiusList(frame, z, h["n"], h["sign_mode"], rat_from_str(h["X_max"]), reps,
                    np.asarray(U), np.asarray(W), comp.qn.L)
    return frame, rl


def load(doc):
    """RadiusList from a parsed document; checks row order and stored exact values."""
    h, form, z, rows = _parse(doc)
    frame, rl = _rebuild(h, form, z, rows)
    stored = [tuple(r[:4]) for r in rows]
    if stored != [tuple(int(v) for v in row) for row in rl.reps]:
        raise CacheCorrupt("rows are not in exact radius order")
    fvals = _fvalues(rl)
    for i, row in enumerate(rows):
        if rl.r2(i).to_str() != row[4]:
            raise CacheCorrupt(f"row {i}: stored r2 {row[4]} disagrees with recomputation")
        if rat_to_str(fvals[i]) != row[5]:
            raise CacheCorrupt(f"row {i}: stored F {row[5]} disagrees with recomputation")
    return rl


def read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheCorrupt(f"cannot read cache {path}: {exc}") from exc
    return load(doc)


def verify(path, backend=None):
    """Reload and compare against a fresh certified enumeration at the same horizon."""
    rl = read(path)
    fresh = enumerate_orbit(rl.frame, rl.z, rl.X_max, rl.n, rl.mode, backend=backend)
    a = [tuple(int(v) for v in row) for row in rl.reps]
    b = [tuple(int(v) for v in row) for row in fresh.reps]
    if a != b:
        raise CacheCorrupt(f"cache has {len(a)} rows, recomputation gives {len(b)} (or a different order)")
    return rl
