"""
Candidate enumeration for orbit representatives.

Given box bounds on p1 = a - th2*c, q1 = th1*c - a (first column (a, c)) and
p2, q2 (same for the second column (b, d)), walk every integer matrix of
determinant n inside the box and keep those passing a float prefilter on
the radius and on the canonical window. The prefilter is deliberately loose;
every survivor is re-decided exactly by the caller.

Two interchangeable implementations: ``_scan_numba`` (parallel over rows of
the lower-left entry, two passes so the output order is deterministic) and
``_scan_numpy`` (chunked, ragged-vectorized). They return identical arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel

__all__ = ["ScanParams", "scan", "available_backends"]


@dataclass(frozen=True)
class ScanParams:
    th1: float
    th2: float
    P1: float
    Q1: float
    P2: float
    Q2: float
    n: int
    lin: np.ndarray  # 4x4: rows A, B, C, D as linear forms in (a, b, c, d)
    zx: float
    zabs2: float
    qmax: float  # keep |Q_N| <= qmax
    eps4: float
    tol: float = 1e-9

    def packed(self):
        return np.array([self.th1, self.th2, self.P1, self.Q1, self.P2, self.Q2,
                         self.zx, self.zabs2, self.qmax, self.eps4, self.tol], dtype=np.float64)


def _row_range(P1, Q1, th1, th2):
    delta = abs(th1 - th2)
    gmax = int(math.floor((P1 + Q1) / delta))
    return gmax


# ---------------------------------------------------------------- numba


if _accel.HAVE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, inline="always")
    def _egcd(a, b):
        old_r, r = a, b
        old_s, s = 1, 0
        old_t, t = 0, 1
        while r != 0:
            q = old_r // r
            old_r, r = r, old_r - q * r
            old_s, s = s, old_s - q * s
            old_t, t = t, old_t - q * t
        if old_r < 0:
            return -old_r, -old_s, -old_t
        return old_r, old_s, old_t

    @njit(cache=True)
    def _scan_row(gam, pk, lin, n, write, out, pos):
        th1, th2, P1, Q1, P2, Q2 = pk[0], pk[1], pk[2], pk[3], pk[4], pk[5]
        zx, zabs2, qmax, eps4, tol = pk[6], pk[7], pk[8], pk[9], pk[10]
        lo = max(th2 * gam - P1, th1 * gam - Q1)
        hi = min(th2 * gam + P1, th1 * gam + Q1)
        a_lo = int(math.ceil(lo))
        a_hi = int(math.floor(hi))
        found = 0
        for al in range(a_lo, a_hi + 1):
            if al == 0 and gam == 0:
                continue
            g, x, y = _egcd(al, gam)
            if n % g != 0:
                continue
            ng = n // g
            b0 = -y * ng
            d0 = x * ng
            ag = al // g
            cg = gam // g
            p1 = al - th2 * gam
            q1 = th1 * gam - al
            sp = p1 / g
            sq = q1 / g
            p20 = b0 - th2 * d0
            q20 = th1 * d0 - b0
            k1 = (-P2 - p20) / sp
            k2 = (P2 - p20) / sp
            k3 = (-Q2 - q20) / sq
            k4 = (Q2 - q20) / sq
            klo = max(min(k1, k2), min(k3, k4))
            khi = min(max(k1, k2), max(k3, k4))
            if klo > khi:
                continue
            for k in range(int(math.ceil(klo)), int(math.floor(khi)) + 1):
                be = b0 + k * ag
                de = d0 + k * cg
                fa = float(al)
                fb = float(be)
                fc = float(gam)
                fd = float(de)
                A = lin[0, 0] * fa + lin[0, 1] * fb + lin[0, 2] * fc + lin[0, 3] * fd
                B = lin[1, 0] * fa + lin[1, 1] * fb + lin[1, 2] * fc + lin[1, 3] * fd
                C = lin[2, 0] * fa + lin[2, 1] * fb + lin[2, 2] * fc + lin[2, 3] * fd
                D = lin[3, 0] * fa + lin[3, 1] * fb + lin[3, 2] * fc + lin[3, 3] * fd
                mA = abs(lin[0, 0] * fa) + abs(lin[0, 1] * fb) + abs(lin[0, 2] * fc) + abs(lin[0, 3] * fd)
                mB = abs(lin[1, 0] * fa) + abs(lin[1, 1] * fb) + abs(lin[1, 2] * fc) + abs(lin[1, 3] * fd)
                mC = abs(lin[2, 0] * fa) + abs(lin[2, 1] * fb) + abs(lin[2, 2] * fc) + abs(lin[2, 3] * fd)
                mD = abs(lin[3, 0] * fa) + abs(lin[3, 1] * fb) + abs(lin[3, 2] * fc) + abs(lin[3, 3] * fd)
                qn = zabs2 * A * C + B * D + zx * (A * D + B * C)
                qs = zabs2 * mA * mC + mB * mD + abs(zx) * (mA * mD + mB * mC)
                if abs(qn) > qmax + tol * (qs + 1.0):
                    continue
                pa = zabs2 * A * A + 2.0 * zx * A * B + B * B
                pc = zabs2 * C * C + 2.0 * zx * C * D + D * D
                sa = zabs2 * mA * mA + 2.0 * abs(zx) * mA * mB + mB * mB
                sc = zabs2 * mC * mC + 2.0 * abs(zx) * mC * mD + mD * mD
                if pa - pc < -tol * (sa + sc + 1.0):
                    continue
                if eps4 * pc - pa < -tol * (eps4 * sc + sa + 1.0):
                    continue
                if write:
                    out[pos + found, 0] = al
                    out[pos + found, 1] = be
                    out[pos + found, 2] = gam
                    out[pos + found, 3] = de
                found += 1
        return found

    @njit(cache=True, parallel=True)
    def _scan_numba_impl(gmax, pk, lin, n):
        rows = 2 * gmax + 1
        counts = np.zeros(rows, dtype=np.int64)
        dummy = np.zeros((0, 4), dtype=np.int64)
        for i in prange(rows):
            counts[i] = _scan_row(i - gmax, pk, lin, n, False, dummy, 0)
        offsets = np.zeros(rows + 1, dtype=np.int64)
        for i in range(rows):
            offsets[i + 1] = offsets[i] + counts[i]
        out = np.empty((offsets[rows], 4), dtype=np.int64)
        for i in prange(rows):
            _scan_row(i - gmax, pk, lin, n, True, out, offsets[i])
        return out


def _scan_numba(p):
    gmax = _row_range(p.P1, p.Q1, p.th1, p.th2)
    return _scan_numba_impl(gmax, p.packed(), np.ascontiguousarray(p.lin, dtype=np.float64), int(p.n))


# ---------------------------------------------------------------- numpy


def _ragged(starts, counts):
    """Concatenate ranges starts[i] .. starts[i]+counts[i]-1; also return the owning row."""
    total = int(counts.sum())
    owner = np.repeat(np.arange(len(counts)), counts)
    first = np.cumsum(counts) - counts
    within = np.arange(total, dtype=np.int64) - np.repeat(first, counts)
    return np.repeat(starts, counts) + within, owner


def _egcd_vec(a, b):
    old_r, r = a.copy(), b.copy()
    old_s, s = np.ones_like(a), np.zeros_like(a)
    old_t, t = np.zeros_like(a), np.ones_like(a)
    live = r != 0
    while live.any():
        q = np.zeros_like(a)
        q[live] = old_r[live] // r[live]
        old_r, r = np.where(live, r, old_r), np.where(live, old_r - q * r, r)
        old_s, s = np.where(live, s, old_s), np.where(live, old_s - q * s, s)
        old_t, t = np.where(live, t, old_t), np.where(live, old_t - q * t, t)
        live = r != 0
    neg = old_r < 0
    return np.where(neg, -old_r, old_r), np.where(neg, -old_s, old_s), np.where(neg, -old_t, old_t)


def _scan_numpy_rows(gams, p):
    th1, th2 = p.th1, p.th2
    lo = np.maximum(th2 * gams - p.P1, th1 * gams - p.Q1)
    hi = np.minimum(th2 * gams + p.P1, th1 * gams + p.Q1)
    a_lo = np.ceil(lo).astype(np.int64)
    cnt = np.maximum(np.floor(hi).astype(np.int64) - a_lo + 1, 0)
    al, owner = _ragged(a_lo, cnt)
    gam = gams[owner]
    keep = (al != 0) | (gam != 0)
    al, gam = al[keep], gam[keep]
    g, x, y = _egcd_vec(al, gam)
    keep = (p.n % g) == 0
    al, gam, g, x, y = al[keep], gam[keep], g[keep], x[keep], y[keep]
    ng = p.n // g
    b0, d0 = -y * ng, x * ng
    ag, cg = al // g, gam // g
    fal, fgam = al.astype(np.float64), gam.astype(np.float64)
    sp = (fal - th2 * fgam) / g
    sq = (th1 * fgam - fal) / g
    p20 = b0 - th2 * d0
    q20 = th1 * d0 - b0
    k1, k2 = (-p.P2 - p20) / sp, (p.P2 - p20) / sp
    k3, k4 = (-p.Q2 - q20) / sq, (p.Q2 - q20) / sq
    klo = np.ceil(np.maximum(np.minimum(k1, k2), np.minimum(k3, k4)))
    khi = np.floor(np.minimum(np.maximum(k1, k2), np.maximum(k3, k4)))
    kcnt = np.maximum(khi - klo + 1, 0).astype(np.int64)
    k, owner = _ragged(klo.astype(np.int64), kcnt)
    al, gam = al[owner], gam[owner]
    be = b0[owner] + k * ag[owner]
    de = d0[owner] + k * cg[owner]
    v = np.stack([al, be, gam, de]).astype(np.float64)
    lin = p.lin
    A, B, C, D = lin @ v
    mA, mB, mC, mD = np.abs(lin[:, :, None] * v[None, :, :]).sum(axis=1)
    zx, z2, tol = p.zx, p.zabs2, p.tol
    qn = z2 * A * C + B * D + zx * (A * D + B * C)
    qs = z2 * mA * mC + mB * mD + abs(zx) * (mA * mD + mB * mC)
    pa = z2 * A * A + 2.0 * zx * A * B + B * B
    pc = z2 * C * C + 2.0 * zx * C * D + D * D
    sa = z2 * mA * mA + 2.0 * abs(zx) * mA * mB + mB * mB
    sc = z2 * mC * mC + 2.0 * abs(zx) * mC * mD + mD * mD
    ok = np.abs(qn) <= p.qmax + tol * (qs + 1.0)
    ok &= pa - pc >= -tol * (sa + sc + 1.0)
    ok &= p.eps4 * pc - pa >= -tol * (p.eps4 * sc + sa + 1.0)
    return np.stack([al[ok], be[ok], gam[ok], de[ok]], axis=1)


def _scan_numpy(p, chunk_rows=256):
    gmax = _row_range(p.P1, p.Q1, p.th1, p.th2)
    gams = np.arange(-gmax, gmax + 1, dtype=np.int64)
    parts = [_scan_numpy_rows(gams[i:i + chunk_rows], p) for i in range(0, len(gams), chunk_rows)]
    if not parts:
        return np.empty((0, 4), dtype=np.int64)
    return np.concatenate(parts, axis=0)


def available_backends():
    return ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]


def scan(p, backend=None):
    """All prefiltered candidate matrices as an (m, 4) int64 array of (a, b, c, d) rows."""
    backend = backend or _accel.default_backend()
    if backend == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return _scan_numba(p)
    if backend == "numpy":
        return _scan_numpy(p)
    raise ValueError(f"unknown backend {backend!r}")
