"""Numba kernels for the density recurrences in double-double arithmetic.

The recurrence engines are O(N^2) in the truncation order, which rules out
pure-Python scalars for N ~ 1e5.  Each kernel carries the sequence as a pair
of float64 arrays (hi, lo) and re-implements the error-free transformations
inline; fastmath stays off so the compiler cannot re-associate them.

The incremental coefficient tables (2^{-(n-j)} binom(n-j, j) and
a^{n-2m} (1-a)^m binom(n-m, m)) are born astronomically small (2^-j at
n = 2j) and regrow to O(1) contributions near their peak, which exceeds the
binary64 exponent range for j beyond ~1000.  Each table entry therefore
carries an explicit power-of-two scale exponent that is renormalized into a
representable band and retired to zero once the value matures.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_SPLIT = 134217729.0

_BAND_LO = 2.0 ** -500
_BAND_HI = 2.0 ** 500
_RETIRE_LO = 1e-120
_RETIRE_HI = 1e120
_DEAD_FLOOR = 1e-280  # past-peak entries below this never matter again
_SKIP_FLOOR = 1e-200  # dot-product terms below this cannot move the sum


@njit(inline="always", cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(inline="always", cache=True)
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(inline="always", cache=True)
def _two_prod(a, b):
    p = a * b
    c = _SPLIT * a
    ahi = c - (c - a)
    alo = a - ahi
    d = _SPLIT * b
    bhi = d - (d - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


@njit(inline="always", cache=True)
def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e += t
    s, e = _quick_two_sum(s, e)
    e += f
    return _quick_two_sum(s, e)


@njit(inline="always", cache=True)
def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e += ah * bl + al * bh
    return _quick_two_sum(p, e)


@njit(inline="always", cache=True)
def _dd_mul_d(ah, al, b):
    p, e = _two_prod(ah, b)
    e += al * b
    return _quick_two_sum(p, e)


@njit(inline="always", cache=True)
def _dd_div(ah, al, bh, bl):
    q1 = ah / bh
    th, tl = _dd_mul_d(bh, bl, q1)
    rh, rl = _dd_add(ah, al, -th, -tl)
    q2 = rh / bh
    th, tl = _dd_mul_d(bh, bl, q2)
    rh, rl = _dd_add(rh, rl, -th, -tl)
    q3 = rh / bh
    s, e = _quick_two_sum(q1, q2)
    return _two_sum(s, q3 + e)


@njit(inline="always", cache=True)
def _dd_div_d(ah, al, b):
    q1 = ah / b
    ph, pl = _two_prod(q1, b)
    rh, rl = _dd_add(ah, al, -ph, -pl)
    q2 = (rh + rl) / b
    return _quick_two_sum(q1, q2)


@njit(inline="always", cache=True)
def _renorm(h, l, e):
    """Keep h inside the representable band; drop the scale exponent once
    the true value h * 2^e fits comfortably in a plain double-double."""
    if h == 0.0:
        return 0.0, 0.0, 0
    if e != 0:
        cand = math.ldexp(h, e)
        a = abs(cand)
        if _RETIRE_LO < a < _RETIRE_HI:
            return cand, math.ldexp(l, e), 0
    a = abs(h)
    if a < _BAND_LO:
        return math.ldexp(h, 500), math.ldexp(l, 500), e - 500
    if a > _BAND_HI:
        return math.ldexp(h, -500), math.ldexp(l, -500), e + 500
    return h, l, e


@njit(cache=True)
def example1_densities(n_max):
    """Densities for the quadratic family with mean parameter uniform on
    (1/2, 1): incremental coefficient table c[n][j] plus a length-n/2 dot
    product per step.

    Returns (phi_hi, phi_lo) indexed 1..n_max (index 0 unused).
    """
    phih = np.zeros(n_max + 1)
    phil = np.zeros(n_max + 1)
    # u[k] = phi_k / (2(k+1)) reused by every later dot product
    uh = np.zeros(n_max + 1)
    ul = np.zeros(n_max + 1)
    jcap = n_max // 2 + 1
    ch = np.zeros(jcap)
    cl = np.zeros(jcap)
    th = np.zeros(jcap)
    tl = np.zeros(jcap)
    te = np.zeros(jcap, dtype=np.int64)

    phih[1] = 1.0
    uh[1] = 0.25
    for n in range(2, n_max + 1):
        jmax = n // 2
        if n == 2 * jmax:
            # fresh diagonal entry: t = 2^-j held as (1.0, scale -j)
            h, l, e = _renorm(1.0, 0.0, -jmax)
            th[jmax] = h
            tl[jmax] = l
            te[jmax] = e
            ch[jmax] = 0.0
            cl[jmax] = 0.0
            upto = jmax - 1
        else:
            upto = jmax
        for j in range(1, upto + 1):
            h = th[j]
            if h != 0.0:
                h, l = _dd_mul_d(h, tl[j], float(n - j))
                h, l = _dd_div_d(h, l, float(2 * (n - 2 * j)))
                e = te[j]
                if n > 3 * j + 4 and (e < 0 or h < _DEAD_FLOOR):
                    # past the peak at n = 3j the entry only decays
                    h, l, e = 0.0, 0.0, 0
                else:
                    h, l, e = _renorm(h, l, e)
                th[j] = h
                tl[j] = l
                te[j] = e
        for j in range(1, jmax + 1):
            h = th[j]
            if h != 0.0:
                e = te[j]
                if e == 0:
                    ch[j], cl[j] = _dd_add(ch[j], cl[j], h, tl[j])
                elif e > -1060:
                    ch[j], cl[j] = _dd_add(
                        ch[j], cl[j], math.ldexp(h, e), math.ldexp(tl[j], e)
                    )
        sh = 0.0
        sl = 0.0
        for j in range(1, jmax + 1):
            if ch[j] > _SKIP_FLOOR:
                ph, pl = _dd_mul(uh[n - j], ul[n - j], ch[j], cl[j])
                sh, sl = _dd_add(sh, sl, ph, pl)
        # denominator 3/8 - (1 - 2^{-n-1})/(n+1); the subtraction from 1 is
        # exact in the (hi, lo) pair
        g = 2.0 ** (-float(n + 1))
        ah, al = _two_sum(1.0, -g)
        ah, al = _dd_div_d(ah, al, float(n + 1))
        dh, dl = _dd_add(0.375, 0.0, -ah, -al)
        h, l = _dd_div(sh, sl, dh, dl)
        phih[n] = h
        phil[n] = l
        uh[n], ul[n] = _dd_div_d(h, l, float(2 * (n + 1)))
    return phih, phil


@njit(cache=True)
def example2_densities(n_max):
    """Densities for the quadratic family with mean parameter uniform on
    (0, 1): even steps scale by (n+1)/(n-1), odd steps subtract the halved
    index term.
    """
    phih = np.zeros(n_max + 1)
    phil = np.zeros(n_max + 1)
    phih[1] = 1.0
    for n in range(2, n_max + 1):
        h, l = _dd_mul_d(phih[n - 1], phil[n - 1], float(n + 1))
        if n % 2 == 1:
            m = (n - 1) // 2
            gh, gl = _dd_mul_d(phih[m], phil[m], 4.0)
            h, l = _dd_add(h, l, -gh, -gl)
        phih[n], phil[n] = _dd_div_d(h, l, float(n - 1))
    return phih, phil


@njit(cache=True)
def two_poly_densities(n_max, ah, al, bh, bl):
    """Densities for the equal-weight pair of quadratic offspring laws with
    linear coefficients a = ah+al and b = bh+bl (double-double, so decimal
    parameters that are not binary-representable stay exact to ~1e-32).

    Weights w[m] = a^{n-2m} (1-a)^m binom(n-m, m) are updated incrementally
    (never forming the huge binomial alone), same for b.
    """
    phih = np.zeros(n_max + 1)
    phil = np.zeros(n_max + 1)
    mcap = n_max // 2 + 1
    wah = np.zeros(mcap)
    wal = np.zeros(mcap)
    wae = np.zeros(mcap, dtype=np.int64)
    wbh = np.zeros(mcap)
    wbl = np.zeros(mcap)
    wbe = np.zeros(mcap, dtype=np.int64)

    omah, omal = _dd_add(1.0, 0.0, -ah, -al)  # 1 - a
    ombh, ombl = _dd_add(1.0, 0.0, -bh, -bl)  # 1 - b
    dah, dal, dae = 1.0, 0.0, 0  # (1-a)^m for the newest diagonal m
    dbh, dbl, dbe = 1.0, 0.0, 0
    panh, panl = ah, al  # a^n, advanced at the top of each step
    pbnh, pbnl = bh, bl
    abh, abl = _dd_add(ah, al, bh, bl)
    # past-peak test n (1-a) > m (2-a) is a float heuristic, padded by 4
    fa = ah
    fb = bh

    phih[1] = 1.0
    for n in range(2, n_max + 1):
        mmax = n // 2
        if n == 2 * mmax:
            # fresh diagonal entry: w[m] = (1-a)^m, kept as a running power
            dah, dal = _dd_mul(dah, dal, omah, omal)
            dah, dal, dae = _renorm(dah, dal, dae)
            dbh, dbl = _dd_mul(dbh, dbl, ombh, ombl)
            dbh, dbl, dbe = _renorm(dbh, dbl, dbe)
            wah[mmax] = dah
            wal[mmax] = dal
            wae[mmax] = dae
            wbh[mmax] = dbh
            wbl[mmax] = dbl
            wbe[mmax] = dbe
            upto = mmax - 1
        else:
            upto = mmax
        for m in range(1, upto + 1):
            num = float(n - m)
            den = float(n - 2 * m)
            h = wah[m]
            if h != 0.0:
                h, l = _dd_mul(h, wal[m], ah, al)
                h, l = _dd_mul_d(h, l, num)
                h, l = _dd_div_d(h, l, den)
                e = wae[m]
                if n * (1.0 - fa) > m * (2.0 - fa) + 4.0 and (
                    e < 0 or h < _DEAD_FLOOR
                ):
                    h, l, e = 0.0, 0.0, 0
                else:
                    h, l, e = _renorm(h, l, e)
                wah[m] = h
                wal[m] = l
                wae[m] = e
            h = wbh[m]
            if h != 0.0:
                h, l = _dd_mul(h, wbl[m], bh, bl)
                h, l = _dd_mul_d(h, l, num)
                h, l = _dd_div_d(h, l, den)
                e = wbe[m]
                if n * (1.0 - fb) > m * (2.0 - fb) + 4.0 and (
                    e < 0 or h < _DEAD_FLOOR
                ):
                    h, l, e = 0.0, 0.0, 0
                else:
                    h, l, e = _renorm(h, l, e)
                wbh[m] = h
                wbl[m] = l
                wbe[m] = e
        sh = 0.0
        sl = 0.0
        for m in range(1, mmax + 1):
            h = wah[m]
            if h != 0.0:
                e = wae[m]
                if e == 0:
                    if h > _SKIP_FLOOR:
                        ph, pl = _dd_mul(phih[n - m], phil[n - m], h, wal[m])
                        sh, sl = _dd_add(sh, sl, ph, pl)
                elif e > -700:
                    ph, pl = _dd_mul(
                        phih[n - m],
                        phil[n - m],
                        math.ldexp(h, e),
                        math.ldexp(wal[m], e),
                    )
                    sh, sl = _dd_add(sh, sl, ph, pl)
            h = wbh[m]
            if h != 0.0:
                e = wbe[m]
                if e == 0:
                    if h > _SKIP_FLOOR:
                        ph, pl = _dd_mul(phih[n - m], phil[n - m], h, wbl[m])
                        sh, sl = _dd_add(sh, sl, ph, pl)
                elif e > -700:
                    ph, pl = _dd_mul(
                        phih[n - m],
                        phil[n - m],
                        math.ldexp(h, e),
                        math.ldexp(wbl[m], e),
                    )
                    sh, sl = _dd_add(sh, sl, ph, pl)
        panh, panl = _dd_mul(panh, panl, ah, al)  # now a^n
        pbnh, pbnl = _dd_mul(pbnh, pbnl, bh, bl)
        dh, dl = _dd_add(abh, abl, -panh, -panl)
        dh, dl = _dd_add(dh, dl, -pbnh, -pbnl)
        phih[n], phil[n] = _dd_div(sh, sl, dh, dl)
    return phih, phil
