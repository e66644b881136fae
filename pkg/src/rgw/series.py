"""Truncated power series and the averaging contraction operator.

The operator H(S) = integral of S(P_r(z)) over the environment, divided by
the averaged single-birth weight, is a contraction whose fixed point carries
the relative limit densities as Taylor coefficients.  Iterating it from the
identity series is the slow-but-independent oracle the recurrence engines are
validated against: in rational mode every step is exact, and coefficient k
stops changing once the iteration depth passes k.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

from .model import (
    EnvMeasure,
    FiniteAtoms,
    GenFunc,
    QuadUniform,
    require_admissible,
)
from .xprec import DD

Coeff = Union[Fraction, DD]


class FixpointError(RuntimeError):
    """Iteration budget exhausted; carries the last iterate and the largest
    remaining coefficient change."""

    def __init__(self, last, residual, iterations):
        super().__init__(
            f"no fixed point after {iterations} iterations "
            f"(residual {float(residual):.3e})"
        )
        self.last = last
        self.residual = residual
        self.iterations = iterations


class TruncSeries:
    """Power series c1 z + c2 z^2 + ... + cN z^N (no constant term).

    Coefficients are either all Fraction (mode 'rational') or all DD
    (mode 'xfloat'); the truncation order is fixed per instance.
    """

    __slots__ = ("coeffs", "mode")

    def __init__(self, coeffs, mode=None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("series needs at least order 1")
        if mode is None:
            mode = "xfloat" if isinstance(coeffs[0], DD) else "rational"
        if mode == "rational":
            self.coeffs = [Fraction(c) for c in coeffs]
        elif mode == "xfloat":
            self.coeffs = [DD(c) for c in coeffs]
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode

    @classmethod
    def identity(cls, order: int, mode: str = "rational") -> "TruncSeries":
        one = Fraction(1) if mode == "rational" else DD(1.0)
        zero = Fraction(0) if mode == "rational" else DD(0.0)
        return cls([one] + [zero] * (order - 1), mode=mode)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def coefficient(self, n: int) -> Coeff:
        """c_n for 1 <= n <= order."""
        if not 1 <= n <= self.order:
            raise IndexError(f"coefficient index {n} outside 1..{self.order}")
        return self.coeffs[n - 1]

    def __eq__(self, other):
        return (
            isinstance(other, TruncSeries)
            and self.mode == other.mode
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:4])
        tail = ", ..." if self.order > 4 else ""
        return f"TruncSeries[{self.mode}]({head}{tail})"


def _zero(mode):
    return Fraction(0) if mode == "rational" else DD(0.0)


def _lift(value, mode):
    return Fraction(value) if mode == "rational" else DD(value)


def compose_poly(P: GenFunc, S: TruncSeries) -> TruncSeries:
    """Coefficients of S(P(z)) up to the truncation order of S.

    P(0) = 0, so coefficient n of the composition involves only c_1..c_n;
    exact for exact inputs.  Horner in P with dense truncated multiplies.
    """
    n = S.order
    mode = S.mode
    pcs = [_lift(c, mode) for c in P.coeffs]
    zero = _zero(mode)
    # acc holds a polynomial with constant term, degrees 0..n
    acc = [zero] * (n + 1)
    acc[0] = S.coeffs[-1]
    for k in range(S.order - 1, 0, -1):
        acc = _mul_trunc(acc, pcs, n)
        acc[0] = acc[0] + S.coeffs[k - 1]
    acc = _mul_trunc(acc, pcs, n)
    return TruncSeries(acc[1:], mode=mode)


def _mul_trunc(acc, pcs, n):
    """acc(z) * (p1 z + p2 z^2 + ...) keeping degrees <= n."""
    zero = acc[0] - acc[0]
    out = [zero] * (n + 1)
    for j, p in enumerate(pcs, start=1):
        if p == 0:
            continue
        for i in range(0, n - j + 1):
            a = acc[i]
            if a != 0:
                out[i + j] = out[i + j] + a * p
    return out


# cache of exact r^p (1-r)^m moments per parametric measure
_QUAD_MOMENTS: dict = {}


def _quad_moment_table(mu: QuadUniform, order: int):
    key = (mu.lo, mu.hi, mu.scale, order)
    tab = _QUAD_MOMENTS.get(key)
    if tab is None:
        tab = {}
        for m in range(order // 2 + 1):
            for p in range(order - 2 * m + 1):
                tab[(p, m)] = mu.r_poly_moment(p, m)
        _QUAD_MOMENTS[key] = tab
    return tab


def averaged_compose(mu: EnvMeasure, S: TruncSeries) -> TruncSeries:
    """Coefficients of the environment average of S(P_r(z)), without any
    normalization (used both by the contraction operator and by the exact
    finite-horizon distribution)."""
    mode = S.mode
    n = S.order
    if isinstance(mu, FiniteAtoms):
        total = [_zero(mode)] * n
        for w, P in mu.atoms:
            wl = _lift(w, mode)
            comp = compose_poly(P, S)
            for i in range(n):
                total[i] = total[i] + comp.coeffs[i] * wl
        return TruncSeries(total, mode=mode)
    if isinstance(mu, QuadUniform):
        tab = _quad_moment_table(mu, n)
        out = []
        for idx in range(1, n + 1):
            acc = _zero(mode)
            for m in range(0, idx // 2 + 1):
                k = idx - m  # degree of the inner power
                if k < 1:
                    continue
                c = S.coeffs[k - 1]
                if c == 0:
                    continue
                weight = math.comb(k, m) * tab[(k - m, m)]
                acc = acc + c * _lift(weight, mode)
            out.append(acc)
        return TruncSeries(out, mode=mode)
    raise TypeError(f"unknown measure type {type(mu).__name__}")


def schroder_apply(mu: EnvMeasure, S: TruncSeries) -> TruncSeries:
    """One application of the contraction operator: averaged composition
    divided by the averaged single-birth weight."""
    avg = averaged_compose(mu, S)
    den = _lift(mu.p1_moment(), S.mode)
    return TruncSeries([c / den for c in avg.coeffs], mode=S.mode)


def schroder_fixpoint(
    mu: EnvMeasure,
    order: int,
    tol=None,
    max_iter: int | None = None,
    mode: str = "rational",
):
    """Solve for the operator fixed point by accelerated Banach sweeps,
    returning the densities as a DensitySeq.

    Coefficient n of the operator output is affine in the input coefficient
    n: A_n(lower coefficients) + lambda_n c_n with lambda_n the ratio of the
    n-th to the first single-birth power moment.  Plain iteration therefore
    contracts each coefficient only geometrically; solving the scalar affine
    fixed point at each sweep instead makes coefficient k exact (in rational
    mode) once the sweep depth reaches k, and the run stops when a sweep
    changes nothing (within tol, default 1e-30, for xfloat mode).
    """
    require_admissible(mu)
    if max_iter is None:
        max_iter = order + 16
    p1m = mu.p1_moment()
    S = TruncSeries.identity(order, mode=mode)
    iterations = 0
    residual = None
    for iterations in range(1, max_iter + 1):
        applied = schroder_apply(mu, S)
        # solve the affine fixed point per coefficient:
        # c* = (applied_n - lambda_n c_n) / (1 - lambda_n)
        # coefficient 1 is operator-invariant (lambda_1 = 1) and pinned by
        # the normalization condition
        out = [applied.coeffs[0]]
        for n in range(2, order + 1):
            lam = _lift(mu.p1_power_moment(n) / p1m, mode)
            c_in = S.coeffs[n - 1]
            c_ap = applied.coeffs[n - 1]
            out.append((c_ap - lam * c_in) / (_lift(1, mode) - lam))
        nxt = TruncSeries(out, mode=mode)
        if mode == "rational":
            if nxt.coeffs == S.coeffs:
                S = nxt
                break
            residual = max(
                abs(a - b) for a, b in zip(nxt.coeffs, S.coeffs)
            )
        else:
            tv = DD(tol if tol is not None else 1e-30)
            residual = DD(0.0)
            for a, b in zip(nxt.coeffs, S.coeffs):
                scale = abs(a) if abs(a) > DD(1e-300) else DD(1.0)
                change = abs(a - b) / scale
                if change > residual:
                    residual = change
            if residual <= tv:
                S = nxt
                break
        S = nxt
    else:
        raise FixpointError(S, residual, max_iter)

    from .recur import DensitySeq

    return DensitySeq.from_values(
        S.coeffs,
        mode=mode,
        provenance="operator",
        meta={"iterations": iterations},
    )
