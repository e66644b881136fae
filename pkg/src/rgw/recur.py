"""Recurrence engines for the relative limit densities.

Every engine produces the same sequence phi_1..phi_N for its measure; the
general engine implements the coefficient-matching recurrence built from
partial Bell polynomials, and the specialized engines implement the fast
per-family forms.  Rational mode is exact; xfloat mode runs double-double
numba kernels and is the only practical route past a few thousand terms.

The published form of the general recurrence omits the k!/n! factor that the
composition rule produces; coefficient matching at order two (and the
operator oracle) confirm the corrected form, and the uncorrected variant is
kept behind a flag for comparison.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import _ddkernels
from .model import (
    EnvMeasure,
    FiniteAtoms,
    QuadUniform,
    require_admissible,
)
from .xprec import DD

RATIONAL_DEFAULT_LIMIT = 2000  # auto mode switches to xfloat above this
RATIONAL_MEMORY_LIMIT = 200_000  # hard cap for exact mode


class DensitySeq:
    """phi_1..phi_N with arithmetic mode and producing-engine tag.

    Values are Fractions in rational mode or (hi, lo) double-double arrays in
    xfloat mode; phi(n) / psi(n) use 1-based indexing.
    """

    __slots__ = ("mode", "provenance", "meta", "_fractions", "_hi", "_lo")

    def __init__(self):
        raise TypeError("use DensitySeq.from_values or an engine function")

    @classmethod
    def from_values(cls, values, mode, provenance, meta=None):
        self = object.__new__(cls)
        self.mode = mode
        self.provenance = provenance
        self.meta = dict(meta or {})
        if mode == "rational":
            self._fractions = [Fraction(v) for v in values]
            self._hi = None
            self._lo = None
        elif mode == "xfloat":
            vals = list(values)
            self._fractions = None
            self._hi = np.empty(len(vals))
            self._lo = np.empty(len(vals))
            for i, v in enumerate(vals):
                d = DD(v)
                self._hi[i] = d.hi
                self._lo[i] = d.lo
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return self

    @classmethod
    def from_dd_arrays(cls, hi, lo, provenance, meta=None):
        """Adopt kernel output arrays indexed 0..N with slot 0 unused."""
        self = object.__new__(cls)
        self.mode = "xfloat"
        self.provenance = provenance
        self.meta = dict(meta or {})
        self._fractions = None
        self._hi = hi[1:]
        self._lo = lo[1:]
        return self

    def __len__(self) -> int:
        if self._fractions is not None:
            return len(self._fractions)
        return len(self._hi)

    def phi(self, n: int):
        """phi_n (1-based); Fraction in rational mode, DD in xfloat mode."""
        if not 1 <= n <= len(self):
            raise IndexError(f"index {n} outside 1..{len(self)}")
        if self._fractions is not None:
            return self._fractions[n - 1]
        return DD(self._hi[n - 1], self._lo[n - 1])

    def psi(self, n: int):
        """phi_n / n, the per-size density view."""
        return self.phi(n) / n

    def phi_values(self) -> Iterable:
        return [self.phi(n) for n in range(1, len(self) + 1)]

    def phi_float(self, n: int) -> float:
        if self._fractions is not None:
            return float(self._fractions[n - 1])
        return self._hi[n - 1] + self._lo[n - 1]

    def check_invariants(self) -> None:
        """phi_1 == 1 and nonnegativity, on any engine and measure."""
        if self.phi_float(1) != 1.0:
            raise AssertionError("phi_1 must be 1")
        if self._fractions is not None:
            if any(v < 0 for v in self._fractions):
                raise AssertionError("densities must be nonnegative")
        elif np.any(self._hi < 0):
            raise AssertionError("densities must be nonnegative")

    def __repr__(self):
        head = ", ".join(
            str(self.phi_float(n)) for n in range(1, min(len(self), 5) + 1)
        )
        return (
            f"DensitySeq[{self.mode}/{self.provenance}](N={len(self)}: {head}...)"
        )


def _resolve_mode(n_max: int, mode: str) -> str:
    if mode == "auto":
        return "rational" if n_max <= RATIONAL_DEFAULT_LIMIT else "xfloat"
    if mode not in ("rational", "xfloat"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "rational" and n_max > RATIONAL_MEMORY_LIMIT:
        raise ValueError(
            f"rational mode capped at N={RATIONAL_MEMORY_LIMIT} "
            "(denominators grow without bound)"
        )
    return mode


# ---------------------------------------------------------------------------
# coefficient table for the half-interval family
# ---------------------------------------------------------------------------

class CnjTable:
    """Triangular table c[n][j] = sum_{m=j}^{n-j} 2^-m binom(m, j), built
    incrementally: c[n][j] = c[n-1][j] + 2^-(n-j) binom(n-j, j).

    Exact rationals; row n covers 1 <= j <= n//2.
    """

    __slots__ = ("n_max", "_rows")

    def __init__(self, n_max: int):
        self.n_max = n_max
        self._rows = [None, None]  # rows 0 and 1 unused
        prev: dict = {}
        t: dict = {}
        for n in range(2, n_max + 1):
            jmax = n // 2
            row = {}
            for j in range(1, jmax + 1):
                if 2 * j == n:
                    t[j] = Fraction(1, 2 ** j)
                    row[j] = t[j]
                else:
                    t[j] = t[j] * (n - j) / (2 * (n - 2 * j))
                    row[j] = prev[j] + t[j]
            self._rows.append(row)
            prev = row

    def entry(self, n: int, j: int) -> Fraction:
        if not (2 <= n <= self.n_max and 1 <= j and 2 * j <= n):
            raise IndexError(f"c[{n}][{j}] outside the table")
        return self._rows[n][j]

    def direct_entry(self, n: int, j: int) -> Fraction:
        """Reference evaluation straight from the defining sum."""
        return sum(
            Fraction(math.comb(m, j), 2 ** m) for m in range(j, n - j + 1)
        )


# ---------------------------------------------------------------------------
# specialized engines
# ---------------------------------------------------------------------------

def densities_example1(n_max: int, mode: str = "auto") -> DensitySeq:
    """Quadratic family, parameter uniform on (1/2, 1).

    (3/8 - (1 - 2^{-n-1})/(n+1)) phi_n
        = sum_j phi_{n-j} / (2(n-j+1)) * c[n][j],  j up to n//2.
    """
    mode = _resolve_mode(n_max, mode)
    if mode == "xfloat":
        hi, lo = _ddkernels.example1_densities(n_max)
        return DensitySeq.from_dd_arrays(hi, lo, "example1-recurrence")
    phi = [None] * (n_max + 1)
    u = [None] * (n_max + 1)
    phi[1] = Fraction(1)
    u[1] = Fraction(1, 4)
    c: dict = {}
    t: dict = {}
    for n in range(2, n_max + 1):
        jmax = n // 2
        for j in range(1, jmax + 1):
            if 2 * j == n:
                t[j] = Fraction(1, 2 ** j)
                c[j] = t[j]
            else:
                t[j] = t[j] * (n - j) / (2 * (n - 2 * j))
                c[j] = c[j] + t[j]
        rhs = sum((u[n - j] * c[j] for j in range(1, jmax + 1)), Fraction(0))
        lhs = Fraction(3, 8) - (1 - Fraction(1, 2 ** (n + 1))) / (n + 1)
        phi[n] = rhs / lhs
        u[n] = phi[n] / (2 * (n + 1))
    return DensitySeq.from_values(phi[1:], "rational", "example1-recurrence")


def densities_example2(n_max: int, mode: str = "auto") -> DensitySeq:
    """Quadratic family, parameter uniform on (0, 1).

    Even n: phi_n = (n+1)/(n-1) phi_{n-1};
    odd n:  phi_n = (n+1)/(n-1) phi_{n-1} - 4/(n-1) phi_{(n-1)/2}.
    """
    mode = _resolve_mode(n_max, mode)
    if mode == "xfloat":
        hi, lo = _ddkernels.example2_densities(n_max)
        return DensitySeq.from_dd_arrays(hi, lo, "example2-recurrence")
    phi = [None] * (n_max + 1)
    phi[1] = Fraction(1)
    for n in range(2, n_max + 1):
        val = Fraction(n + 1, n - 1) * phi[n - 1]
        if n % 2 == 1:
            val -= Fraction(4, n - 1) * phi[(n - 1) // 2]
        phi[n] = val
    return DensitySeq.from_values(phi[1:], "rational", "example2-recurrence")


def densities_two_poly(a, b, n_max: int, mode: str = "auto") -> DensitySeq:
    """Equal-weight pair of quadratic laws with linear coefficients a, b.

    (a + b - a^n - b^n) phi_n
        = sum_m (a^{n-2m}(1-a)^m + b^{n-2m}(1-b)^m) binom(n-m, m) phi_{n-m}.
    """
    a = Fraction(a)
    b = Fraction(b)
    if not (0 < a < 1 and 0 < b < 1):
        raise ValueError("parameters must lie in (0, 1)")
    mode = _resolve_mode(n_max, mode)
    if mode == "xfloat":
        da = DD(a)
        db = DD(b)
        hi, lo = _ddkernels.two_poly_densities(n_max, da.hi, da.lo, db.hi, db.lo)
        return DensitySeq.from_dd_arrays(
            hi, lo, "two-poly-recurrence", meta={"a": a, "b": b}
        )
    phi = [None] * (n_max + 1)
    phi[1] = Fraction(1)
    # incremental weights w[m] = a^{n-2m} (1-a)^m binom(n-m, m)
    wa: dict = {}
    wb: dict = {}
    pan, pbn = a, b
    for n in range(2, n_max + 1):
        mmax = n // 2
        for m in range(1, mmax + 1):
            if 2 * m == n:
                wa[m] = (1 - a) ** m
                wb[m] = (1 - b) ** m
            else:
                wa[m] = wa[m] * a * (n - m) / (n - 2 * m)
                wb[m] = wb[m] * b * (n - m) / (n - 2 * m)
        rhs = sum(
            ((wa[m] + wb[m]) * phi[n - m] for m in range(1, mmax + 1)),
            Fraction(0),
        )
        pan *= a
        pbn *= b
        phi[n] = rhs / (a + b - pan - pbn)
    return DensitySeq.from_values(
        phi[1:], "rational", "two-poly-recurrence", meta={"a": a, "b": b}
    )


def densities_linfrac(n_max: int) -> DensitySeq:
    """Mixed linear-fractional family: the densities are identically 1."""
    return DensitySeq.from_values(
        [Fraction(1)] * n_max, "rational", "linfrac-closed-form"
    )


# ---------------------------------------------------------------------------
# general engine (partial Bell polynomials)
# ---------------------------------------------------------------------------

def bell_partial_table(x, n_max: int):
    """Partial Bell polynomial values B[n][k] for arguments x_1..x_d (zero
    beyond), via B_{n,k} = sum_i binom(n-1, i-1) x_i B_{n-i, k-1}.

    Works for Fraction or DD arguments alike.
    """
    x = list(x)
    d = len(x)
    zero = x[0] - x[0]
    one = zero + 1
    B = [[zero] * (n_max + 1) for _ in range(n_max + 1)]
    B[0][0] = one
    for n in range(1, n_max + 1):
        for k in range(1, n + 1):
            acc = zero
            for i in range(1, min(d, n - k + 1) + 1):
                if x[i - 1] != 0:
                    prev = B[n - i][k - 1]
                    if prev != 0:
                        acc = acc + math.comb(n - 1, i - 1) * x[i - 1] * prev
            B[n][k] = acc
    return B


def _bell_integrals_atoms(mu: FiniteAtoms, n_max: int, lift):
    """IB[n][k] = integral of B_{n,k}(p1, 2 p2, ..., (n-k+1)! p_{n-k+1})."""
    total = None
    for w, P in mu.atoms:
        args = [lift(math.factorial(j + 1) * c) for j, c in enumerate(P.coeffs)]
        B = bell_partial_table(args, n_max)
        wl = lift(w)
        if total is None:
            total = [[v * wl for v in row] for row in B]
        else:
            for n in range(n_max + 1):
                row = B[n]
                trow = total[n]
                for k in range(n_max + 1):
                    if row[k] != 0:
                        trow[k] = trow[k] + row[k] * wl
    return total


def _bell_integrals_quad(mu: QuadUniform, n_max: int, lift):
    """For the quadratic parametric family only x1 = r and x2 = 2(1-r)
    survive, so B_{n,k} = n!/((2k-n)!(n-k)!) r^{2k-n} (1-r)^{n-k}."""
    IB = [[lift(0)] * (n_max + 1) for _ in range(n_max + 1)]
    for n in range(1, n_max + 1):
        for k in range((n + 1) // 2, n + 1):
            coeff = Fraction(
                math.factorial(n),
                math.factorial(2 * k - n) * math.factorial(n - k),
            )
            IB[n][k] = lift(coeff * mu.r_poly_moment(2 * k - n, n - k))
    return IB


def densities_general(
    mu: EnvMeasure,
    n_max: int,
    mode: str = "rational",
    printed_form: bool = False,
) -> DensitySeq:
    """General recurrence from coefficient matching of the averaged
    composition (partial Bell polynomials):

        phi_n = [int (p1 - p1^n)]^{-1}
                sum_{k=1}^{n-1} (k!/n!) phi_k * int B_{n,k}(p1, 2 p2, ...).

    printed_form=True drops the k!/n! factor; that variant does not match
    the operator oracle (order-two coefficient matching already disagrees)
    and exists for documentation of the discrepancy.
    """
    require_admissible(mu)
    mode = _resolve_mode(n_max, mode)
    lift = (lambda v: Fraction(v)) if mode == "rational" else (lambda v: DD(v))
    if isinstance(mu, FiniteAtoms):
        IB = _bell_integrals_atoms(mu, n_max, lift)

        def denom(n):
            return lift(
                sum(w * (P.p1 - P.p1 ** n) for w, P in mu.atoms)
            )
    elif isinstance(mu, QuadUniform):
        IB = _bell_integrals_quad(mu, n_max, lift)

        def denom(n):
            return lift(mu.r_moment(1) - mu.r_moment(n))
    else:
        raise TypeError(f"unknown measure type {type(mu).__name__}")

    phi = [None] * (n_max + 1)
    phi[1] = lift(1)
    for n in range(2, n_max + 1):
        den = denom(n)
        if den == 0:
            raise ZeroDivisionError(
                f"vanishing denominator int(p1 - p1^{n}) at n={n}"
            )
        acc = lift(0)
        # ratio = k!/n!, built downward from k = n-1
        ratio = Fraction(1, n)
        for k in range(n - 1, 0, -1):
            ib = IB[n][k]
            if ib != 0:
                term = phi[k] * ib
                if not printed_form:
                    term = term * lift(ratio)
                acc = acc + term
            ratio = ratio / k
        phi[n] = acc / den
    return DensitySeq.from_values(
        phi[1:],
        mode,
        "general-bell" + ("-printed" if printed_form else ""),
    )


def densities_operator(mu: EnvMeasure, n_max: int, mode: str = "rational") -> DensitySeq:
    """Fixed-point oracle route (averaging operator iteration)."""
    from .series import schroder_fixpoint

    return schroder_fixpoint(mu, n_max, mode=mode)
