"""Asymptotic models for the densities and fitting of their constants.

A model is a finite sum of power terms C n^{-alpha-j} (complex exponents
enter as conjugate pairs, so evaluation is real) plus short-period
correction tables (periods 2, 4, 8) attenuated by 1/n^j.  Leading constants
are fitted from exact tails by period-averaged Richardson extrapolation;
the gamma function needed by the binomial asymptotics runs in double-double
via a shifted Stirling series with exact Bernoulli numbers.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .charroots import CharRoot, FExample1, find_real_primary
from .xprec import DD, DDC, LN2, TWO_PI, dd_exp, dd_ln, dd_pow


# ---------------------------------------------------------------------------
# gamma in double-double
# ---------------------------------------------------------------------------

def _bernoulli_numbers(count: int):
    """B_0..B_count, exact."""
    out = [Fraction(1)]
    for m in range(1, count + 1):
        acc = Fraction(0)
        binom = 1  # binom(m+1, j)
        for j in range(m):
            acc += binom * out[j]
            binom = binom * (m + 1 - j) // (j + 1)
        out.append(-acc / (m + 1))
    return out

_BERN = _bernoulli_numbers(28)
_STIRLING_SHIFT = 32.0
_HALF_LN_TWO_PI = dd_ln(TWO_PI) / 2


def gamma_dd(z) -> DDC:
    """Gamma(z) for double-double real or complex z, relative error well
    below 1e-25: argument shifted until Re >= 32, then the Stirling series
    with 14 Bernoulli terms.

    Poles (z a non-positive integer) are rejected.
    """
    z = DDC._coerce(z)
    if z is None:
        raise TypeError("gamma_dd needs a real or complex value")
    zre = float(z.re)
    zim = float(z.im)
    if abs(zim) < 1e-25 and zre <= 0.5:
        nearest = round(zre)
        if nearest <= 0 and abs(zre - nearest) < 1e-25:
            raise ValueError(f"gamma pole at {nearest}")
    shift = max(0, int(math.ceil(_STIRLING_SHIFT - zre)))
    w = z + DDC(float(shift))
    lng = _ln_gamma_stirling(w)
    out = lng.exp()
    for j in range(shift):
        out = out / (z + DDC(float(j)))
    return out


def _ln_gamma_stirling(w: DDC) -> DDC:
    lnw = w.log()
    acc = (w - DDC(0.5)) * lnw - w + DDC(_HALF_LN_TWO_PI)
    winv = DDC(1.0) / w
    w2inv = winv * winv
    term = winv
    for k in range(1, 15):
        b = _BERN[2 * k]
        acc = acc + term * DD(b / (2 * k * (2 * k - 1)))
        term = term * w2inv
    return acc


# ---------------------------------------------------------------------------
# generalized binomial asymptotics
# ---------------------------------------------------------------------------

def binom_exact(alpha, n: int) -> DDC:
    """Generalized binomial coefficient by the direct product
    prod_{k=1..n} (alpha - k + 1)/k (the reference the asymptotics are
    checked against)."""
    alpha = DDC._coerce(alpha)
    acc = DDC(1.0)
    for k in range(1, n + 1):
        acc = acc * (alpha - DDC(float(k - 1))) / DDC(float(k))
    return acc


def binom_asympt(alpha, n: int, terms: int = 1) -> DDC:
    """Asymptotic generalized binomial coefficient:

        (-1)^n [ 1/(Gamma(-alpha) n^{alpha+1})
                 + alpha(alpha+1) / (2 Gamma(-alpha) n^{alpha+2}) ]

    truncated after `terms` (1 or 2) terms."""
    if terms not in (1, 2):
        raise ValueError("terms must be 1 or 2")
    if n < 1:
        raise ValueError("n must be positive")
    alpha = DDC._coerce(alpha)
    g = gamma_dd(-alpha)
    ln_n = dd_ln(DD(n))
    lead = (DDC(1.0) / g) * (-(alpha + DDC(1.0)) * ln_n).exp()
    total = lead
    if terms == 2:
        total = total + lead * alpha * (alpha + DDC(1.0)) / DDC(2.0 * n)
    if n % 2 == 1:
        total = -total
    return total


# ---------------------------------------------------------------------------
# asymptotic models
# ---------------------------------------------------------------------------

class PowerTerm:
    """coeff * n^{-(alpha + j)}; paired terms add their conjugate."""

    __slots__ = ("alpha", "j", "coeff", "paired")

    def __init__(self, alpha, j: int, coeff, paired: bool = False):
        self.alpha = DDC._coerce(alpha)
        self.j = int(j)
        self.coeff = DDC._coerce(coeff)
        self.paired = paired

    @property
    def order(self) -> float:
        return float(self.alpha.re) + self.j

    def __repr__(self):
        return (
            f"PowerTerm(alpha={complex(self.alpha)}, j={self.j}, "
            f"coeff={complex(self.coeff)}, paired={self.paired})"
        )


class PeriodicTerm:
    """values[n mod period] / n^attenuation."""

    __slots__ = ("period", "attenuation", "values")

    def __init__(self, period: int, attenuation: int, values):
        values = tuple(DD(v) for v in values)
        if len(values) != period:
            raise ValueError("need exactly `period` values")
        self.period = period
        self.attenuation = attenuation
        self.values = values

    def __repr__(self):
        return (
            f"PeriodicTerm(period={self.period}, attenuation={self.attenuation})"
        )


class AsymptoticModel:
    """Finite power-law model with short-period corrections; evaluation at
    any n >= 1 is real."""

    def __init__(self, power_terms, periodic_terms=(), label=""):
        self.power_terms = sorted(power_terms, key=lambda t: t.order)
        self.periodic_terms = list(periodic_terms)
        self.label = label

    def evaluate(self, n: int) -> DD:
        if n < 1:
            raise ValueError("n must be positive")
        ln_n = dd_ln(DD(n))
        total = DD(0.0)
        for t in self.power_terms:
            w = t.coeff * (-(t.alpha + DDC(float(t.j))) * ln_n).exp()
            if t.paired:
                total = total + w.re * 2.0
            else:
                total = total + w.re
        for p in self.periodic_terms:
            v = p.values[n % p.period]
            if p.attenuation:
                v = v / DD(n) ** p.attenuation
            total = total + v
        return total

    def evaluate_float(self, ns) -> np.ndarray:
        return np.array([float(self.evaluate(int(n))) for n in ns])

    def __repr__(self):
        return (
            f"AsymptoticModel({self.label or 'custom'}: "
            f"{len(self.power_terms)} power terms, "
            f"{len(self.periodic_terms)} periodic terms)"
        )


def model_example1(C, alpha=None) -> AsymptoticModel:
    """Two-term model C (n^{-a} - a(3a^2+11a+2)/(2(6+9a)) n^{-a-1}) for the
    half-interval family, a the antiderivative-convention primary."""
    if alpha is None:
        alpha = find_real_primary(FExample1()).alpha.re
    elif isinstance(alpha, CharRoot):
        alpha = alpha.alpha.re
    a = DD(alpha)
    C = DD(C)
    if C <= DD(0.0):
        raise ValueError("leading constant must be positive")
    second = a * (a * a * 3.0 + a * 11.0 + 2.0) / ((a * 9.0 + 6.0) * 2.0)
    return AsymptoticModel(
        [
            PowerTerm(a, 0, C),
            PowerTerm(a, 1, -C * second),
        ],
        label="example1-two-term",
    )


def example2_constants():
    """(A, B, C) = (1/(2-2 ln2), A/(4 ln2 - 2), A/2)."""
    A = DD(1.0) / (DD(2.0) - LN2 * 2.0)
    B = A / (LN2 * 4.0 - DD(2.0))
    C = A / 2.0
    return A, B, C


def rho_values():
    """The eight period-8 second-order residual levels (zero mean)."""
    ln2 = LN2
    den = ln2 * 4.0 - DD(2.0)
    return [
        (ln2 * 11.0 - DD(9.0)) / den,
        (DD(19.0) - ln2 * 31.0) / den,
        (DD(27.0) - ln2 * 45.0) / den,
        (ln2 - DD(5.0)) / den,
        (ln2 * 11.0 - DD(9.0)) / den,
        (ln2 * 33.0 - DD(13.0)) / den,
        (ln2 * 19.0 - DD(5.0)) / den,
        (ln2 - DD(5.0)) / den,
    ]


def model_example2(level: int = 1) -> AsymptoticModel:
    """Full-interval family models.

    level 1: A(n+1) - B + C(-1)^n.
    level 2: adds the (-1)^n/n and period-4 (cos-sin)/n corrections.
    level 3: adds the period-8 table over n^2.
    """
    if level not in (1, 2, 3):
        raise ValueError("level must be 1, 2 or 3")
    A, B, C = example2_constants()
    power = [
        PowerTerm(DD(-2.0), 1, A),      # A n
        PowerTerm(DD(-2.0), 2, A - B),  # constant A - B
    ]
    periodic = [PeriodicTerm(2, 0, (C, -C))]
    if level >= 2:
        gamma = (DD(1.0) - LN2) / (LN2 * 2.0 - DD(1.0))
        periodic.append(PeriodicTerm(2, 1, (-A * gamma, A * gamma)))
        # cos(pi n/2) - sin(pi n/2) cycles 1, -1, -1, 1
        periodic.append(PeriodicTerm(4, 1, (A, -A, -A, A)))
    if level >= 3:
        periodic.append(PeriodicTerm(8, 2, [A * r for r in rho_values()]))
    return AsymptoticModel(power, periodic, label=f"example2-level{level}")


def model_two_poly(a, b, alpha, C) -> AsymptoticModel:
    """Two-term model for the equal-weight pair of quadratic laws:

        C ( n^{-alpha-1} + ratio * alpha (alpha+1) / 2 * n^{-alpha-2} )

    with ratio = [(2-a)^{alpha-1}(a-a^2) + (2-b)^{alpha-1}(b-b^2)]
               / [(2-a)^alpha (a-1) + (2-b)^alpha (b-1)];
    alpha is the direct-convention primary root."""
    if isinstance(alpha, CharRoot):
        alpha = alpha.alpha.re
    al = DD(alpha)
    a = Fraction(a)
    b = Fraction(b)
    C = DD(C)
    ea = DD(2 - a)
    eb = DD(2 - b)
    num = dd_pow(ea, al - 1.0) * DD(a - a * a) + dd_pow(eb, al - 1.0) * DD(b - b * b)
    den = dd_pow(ea, al) * DD(a - 1) + dd_pow(eb, al) * DD(b - 1)
    ratio = num / den
    return AsymptoticModel(
        [
            PowerTerm(al, 1, C),
            PowerTerm(al, 2, C * ratio * al * (al + 1.0) / 2.0),
        ],
        label="two-poly-two-term",
    )


# ---------------------------------------------------------------------------
# constant fitting
# ---------------------------------------------------------------------------

class FitResult:
    """Extrapolated limit with a window-halving error gauge."""

    __slots__ = ("value", "gauge", "nodes", "converged")

    def __init__(self, value, gauge, nodes, converged):
        self.value = value
        self.gauge = gauge
        self.nodes = nodes
        self.converged = converged

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        g = "n/a" if self.gauge is None else f"{float(self.gauge):.2e}"
        return (
            f"FitResult({float(self.value)!r}, gauge={g}, "
            f"converged={self.converged})"
        )


def fit_leading_constant(seq, alpha_lead, window=None, block: int = 8) -> FitResult:
    """Limit of phi_n n^{-alpha_lead} by period-averaged Richardson
    extrapolation.

    Averaging g over `block` consecutive indices (8 buries the period-2, -4
    and -8 oscillations, whose tables all have zero mean) leaves a smooth
    1/n expansion; two Richardson levels on nodes (n, 2n, 4n) then remove
    1/n and 1/n^2.  The gauge is the change when the whole node set is
    halved; a growing gauge across scales flags non-convergence.
    """
    n_len = len(seq)
    if window is None:
        window = (max(1, n_len // 10), n_len)
    w0, w1 = window
    if not 1 <= w0 < w1 <= n_len:
        raise ValueError(f"window {window} outside sequence 1..{n_len}")
    alpha_lead = DD(alpha_lead)

    def g(n: int) -> DD:
        phi = seq.phi(n)
        if isinstance(phi, Fraction):
            phi = DD(phi)
        return phi * dd_exp(-alpha_lead * dd_ln(DD(n)))

    def block_mean(n: int) -> DD:
        acc = DD(0.0)
        for i in range(block):
            acc = acc + g(n + i)
        return acc / float(block)

    def richardson(n1: int) -> DD:
        m1 = block_mean(n1)
        m2 = block_mean(2 * n1)
        m4 = block_mean(4 * n1)
        r1a = m2 * 2.0 - m1
        r1b = m4 * 2.0 - m2
        return (r1b * 4.0 - r1a) / 3.0

    n1 = (w1 - (block - 1)) // 4
    if n1 < w0:
        raise ValueError(
            f"window {window} too narrow: need top >= 4x bottom plus the block"
        )
    value = richardson(n1)
    nodes = [n1, 2 * n1, 4 * n1]
    gauge = None
    converged = True
    scales = []
    half = n1 // 2
    if half >= w0:
        scales.append(richardson(half))
    quarter = n1 // 4
    if quarter >= w0:
        scales.append(richardson(quarter))
    if scales:
        gauge = abs(value - scales[0])
        if len(scales) == 2:
            prev_gauge = abs(scales[0] - scales[1])
            # the gauge should shrink as the nodes move out
            converged = float(gauge) <= float(prev_gauge) * 4.0 + 1e-300
    return FitResult(value, gauge, nodes, converged)


def fit_log_oscillation(seq, model: AsymptoticModel, alpha, window, samples: int = 512):
    """Least-squares amplitudes of the log-periodic pair
    n^{-Re(alpha)-1} {cos, sin}(Im(alpha) ln n) on the model residual.

    The constants have no closed form here, so the result is reported with
    an rms gauge rather than asserted: (c_cos, c_sin, rms_before, rms_after).
    """
    alpha = DDC._coerce(alpha)
    w0, w1 = window
    ns = np.unique(np.linspace(w0, w1, samples).astype(np.int64))
    resid = np.array(
        [seq.phi_float(int(n)) - float(model.evaluate(int(n))) for n in ns]
    )
    sigma = float(alpha.re)
    tau = float(alpha.im)
    amp = ns.astype(float) ** (-sigma - 1.0)
    phase = tau * np.log(ns.astype(float))
    basis = np.column_stack([amp * np.cos(phase), amp * np.sin(phase)])
    coef, *_ = np.linalg.lstsq(basis, resid, rcond=None)
    rms_before = float(np.sqrt(np.mean(resid ** 2)))
    rms_after = float(np.sqrt(np.mean((resid - basis @ coef) ** 2)))
    return float(coef[0]), float(coef[1]), rms_before, rms_after
