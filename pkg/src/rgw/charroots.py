"""Characteristic equations of the density power laws and their zeros.

The equation matches the averaged offspring-mean power against the averaged
single-birth weight; its zeros are the exponents of the asymptotic power
terms.  Two exponent conventions coexist: the antiderivative ("F") forms the
worked families reduce to, and the direct ("Phi") form, shifted by exactly
one.  Zeros of a specialized F-form that do not survive re-evaluation in the
direct form are spurious.

Real primaries come from bracketing plus bisection plus double-double
Newton; complex zeros come from argument-principle winding counts on
adaptively subdivided rectangles followed by Newton polish.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

from .model import (
    EnvMeasure,
    FiniteAtoms,
    QuadUniform,
    pgf_mean,
    two_poly_measure,
)
from .xprec import DD, DDC, cpow, dd_ln, dd_pow

DEFAULT_TOL = 1e-20


class SolverError(RuntimeError):
    """Root finding failed; carries diagnostic payload (scan trace or the
    offending cell)."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class CharRoot:
    """A zero of a characteristic equation."""

    __slots__ = ("alpha", "residual", "classification", "convention", "multiplicity")

    def __init__(self, alpha: DDC, residual: DD, classification: str,
                 convention: str, multiplicity: int = 1):
        self.alpha = alpha
        self.residual = residual
        self.classification = classification
        self.convention = convention
        self.multiplicity = multiplicity

    @property
    def re(self) -> float:
        return float(self.alpha.re)

    @property
    def im(self) -> float:
        return float(self.alpha.im)

    def __repr__(self):
        return (
            f"CharRoot({complex(self.alpha)!r}, residual={float(self.residual):.2e}, "
            f"{self.classification})"
        )


class RootBox:
    """Search rectangle: re in [re_min, re_max], im in [0, im_max] (the
    lower half follows by conjugation)."""

    __slots__ = ("re_min", "re_max", "im_max")

    def __init__(self, re_min, re_max, im_max):
        self.re_min = float(re_min)
        self.re_max = float(re_max)
        self.im_max = float(im_max)
        if not self.re_min < self.re_max:
            raise ValueError("need re_min < re_max")
        if not self.im_max > 0:
            raise ValueError("need im_max > 0")

    def __repr__(self):
        return f"RootBox([{self.re_min}, {self.re_max}] x [0, {self.im_max}])"


# ---------------------------------------------------------------------------
# equation forms
# ---------------------------------------------------------------------------

class CharEquation:
    """Base: evaluation in double-double and in complex128 (winding path)."""

    convention = "Phi"

    def eval_dd(self, alpha):
        raise NotImplementedError

    def deriv_dd(self, alpha):
        raise NotImplementedError

    def eval_c128(self, alpha: complex) -> complex:
        raise NotImplementedError

    def real_bracket(self):
        """(lo, hi) interval guaranteed to contain the minimal real zero."""
        raise NotImplementedError

    def real_part_lower_bound(self):
        """Provable lower bound for Re(zero), or None if degenerate."""
        return None

    def default_box(self, primary=None) -> RootBox:
        if primary is None:
            primary = find_real_primary(self)
        re0 = float(primary.alpha.re)
        return RootBox(re0 - 0.5, re0 + 6.0, 40.0)


class FExample1(CharEquation):
    """1 - (3/2)^alpha + (3/8) alpha  (antiderivative convention for the
    half-interval uniform family)."""

    convention = "F"

    def eval_dd(self, alpha):
        if isinstance(alpha, DDC):
            return DDC(1.0) - cpow(DD(Fraction(3, 2)), alpha) + alpha * DD(0.375)
        return DD(1.0) - dd_pow(DD(Fraction(3, 2)), DD(alpha)) + DD(alpha) * DD(0.375)

    def deriv_dd(self, alpha):
        ln32 = dd_ln(DD(Fraction(3, 2)))
        if isinstance(alpha, DDC):
            return DDC(DD(0.375)) - cpow(DD(Fraction(3, 2)), alpha) * ln32
        return DD(0.375) - dd_pow(DD(Fraction(3, 2)), DD(alpha)) * ln32

    def eval_c128(self, alpha: complex) -> complex:
        return 1.0 - cmath.exp(alpha * math.log(1.5)) + 0.375 * alpha

    def real_bracket(self):
        # roots need (3/2)^a = 1 + 3a/8 > 0, so a > -8/3
        return (-8.0 / 3.0 - 0.5, -1e-6)

    def __repr__(self):
        return "FExample1()"


class FExample2(CharEquation):
    """1 - 2^alpha + alpha/2  (antiderivative convention for the full-interval
    uniform family)."""

    convention = "F"

    def eval_dd(self, alpha):
        if isinstance(alpha, DDC):
            return DDC(1.0) - cpow(DD(2), alpha) + alpha * DD(0.5)
        return DD(1.0) - dd_pow(DD(2), DD(alpha)) + DD(alpha) * DD(0.5)

    def deriv_dd(self, alpha):
        ln2 = dd_ln(DD(2))
        if isinstance(alpha, DDC):
            return DDC(DD(0.5)) - cpow(DD(2), alpha) * ln2
        return DD(0.5) - dd_pow(DD(2), DD(alpha)) * ln2

    def eval_c128(self, alpha: complex) -> complex:
        return 1.0 - cmath.exp(alpha * math.log(2.0)) + 0.5 * alpha

    def real_bracket(self):
        return (-2.5, -1e-6)

    def __repr__(self):
        return "FExample2()"


class TwoPolyEq(CharEquation):
    """(2-a)^alpha + (2-b)^alpha - (a+b) for the equal-weight pair of
    quadratic laws (direct convention)."""

    convention = "Phi"

    def __init__(self, a, b):
        self.a = Fraction(a)
        self.b = Fraction(b)
        if not (0 < self.a < 1 and 0 < self.b < 1):
            raise ValueError("parameters must lie in (0, 1)")
        self.ea = DD(2 - self.a)
        self.eb = DD(2 - self.b)
        self.rhs = DD(self.a + self.b)
        self._lna = dd_ln(self.ea)
        self._lnb = dd_ln(self.eb)

    def eval_dd(self, alpha):
        if isinstance(alpha, DDC):
            return cpow(self.ea, alpha) + cpow(self.eb, alpha) - DDC(self.rhs)
        return dd_pow(self.ea, DD(alpha)) + dd_pow(self.eb, DD(alpha)) - self.rhs

    def deriv_dd(self, alpha):
        if isinstance(alpha, DDC):
            return cpow(self.ea, alpha) * self._lna + cpow(self.eb, alpha) * self._lnb
        return (
            dd_pow(self.ea, DD(alpha)) * self._lna
            + dd_pow(self.eb, DD(alpha)) * self._lnb
        )

    def eval_c128(self, alpha: complex) -> complex:
        return (
            cmath.exp(alpha * math.log(float(self.ea)))
            + cmath.exp(alpha * math.log(float(self.eb)))
            - float(self.rhs)
        )

    def real_part_lower_bound(self):
        # |chi| = 0 forces E_min^{Re a} >= avg p1 (means are >= E_min > 1)
        avg_p1 = float((self.a + self.b) / 2)
        e_min = min(float(self.ea), float(self.eb))
        return math.log(avg_p1) / math.log(e_min)

    def real_bracket(self):
        return (self.real_part_lower_bound() - 0.5, 1.0)

    def __repr__(self):
        return f"TwoPolyEq({self.a}, {self.b})"


class GeneralEq(CharEquation):
    """Averaged-mean-power form for an arbitrary admissible measure
    (direct convention)."""

    convention = "Phi"

    def __init__(self, mu: EnvMeasure):
        self.mu = mu
        self.p1m = DD(mu.p1_moment())
        if isinstance(mu, FiniteAtoms):
            self._means = [(DD(w), DD(pgf_mean(P))) for w, P in mu.atoms]
            self._lnmeans = [dd_ln(m) for _, m in self._means]

    def eval_dd(self, alpha):
        if isinstance(self.mu, QuadUniform):
            v = self.mu.mean_power_moment(alpha)
            return v - (DDC(self.p1m) if isinstance(v, DDC) else self.p1m)
        if isinstance(alpha, DDC):
            acc = DDC(0.0)
            for w, m in self._means:
                acc = acc + cpow(m, alpha) * w
            return acc - DDC(self.p1m)
        acc = DD(0.0)
        for w, m in self._means:
            acc = acc + dd_pow(m, DD(alpha)) * w
        return acc - self.p1m

    def deriv_dd(self, alpha):
        if isinstance(self.mu, QuadUniform):
            return self.mu.mean_power_log_moment(alpha)
        if isinstance(alpha, DDC):
            acc = DDC(0.0)
            for (w, m), lnm in zip(self._means, self._lnmeans):
                acc = acc + cpow(m, alpha) * w * lnm
            return acc
        acc = DD(0.0)
        for (w, m), lnm in zip(self._means, self._lnmeans):
            acc = acc + dd_pow(m, DD(alpha)) * w * lnm
        return acc

    def eval_c128(self, alpha: complex) -> complex:
        if isinstance(self.mu, QuadUniform):
            a_end = 2.0 - float(self.mu.lo)
            b_end = 2.0 - float(self.mu.hi)
            u = alpha + 1.0
            scale = float(self.mu.scale)
            if abs(u) < 1e-6:
                la = math.log(a_end)
                lb = math.log(b_end) if b_end > 0 else 0.0
                val = (la - lb) + u * (la * la - lb * lb) / 2.0 + u * u * (
                    la ** 3 - lb ** 3
                ) / 6.0
                return scale * val - float(self.p1m)
            au = cmath.exp(u * math.log(a_end))
            bu = cmath.exp(u * math.log(b_end)) if b_end > 0 else 0.0
            return scale * (au - bu) / u - float(self.p1m)
        acc = 0.0 + 0.0j
        for w, m in self._means:
            acc += float(w) * cmath.exp(alpha * math.log(float(m)))
        return acc - float(self.p1m)

    def real_part_lower_bound(self):
        if isinstance(self.mu, QuadUniform):
            e_min = 2.0 - float(self.mu.hi)
        else:
            e_min = min(float(m) for _, m in self._means)
        if e_min <= 1.0 + 1e-12:
            return None
        avg_p1 = float(self.mu.p1_moment() / self.mu.mass())
        return math.log(avg_p1) / math.log(e_min)

    def real_bracket(self):
        # chi is strictly increasing in the real argument, so expand down
        # from 1 until the sign goes negative
        hi = 1.0
        lo = -2.0
        for _ in range(60):
            if self.eval_c128(complex(lo, 0.0)).real < 0:
                return (lo, hi)
            lo *= 2.0
        raise SolverError("no sign change while expanding the real bracket",
                          detail={"lo": lo})

    def __repr__(self):
        return f"GeneralEq({self.mu!r})"


def two_poly_general_eq(a, b) -> GeneralEq:
    return GeneralEq(two_poly_measure(a, b))


def char_eval(eq: CharEquation, alpha):
    """chi(alpha) in double-double; alpha may be DD-real or DDC-complex."""
    return eq.eval_dd(alpha)


# ---------------------------------------------------------------------------
# real primary
# ---------------------------------------------------------------------------

def find_real_primary(eq: CharEquation, tol=1e-25, scan_step=0.01) -> CharRoot:
    """Minimal real zero: scan the bracket for the first sign change from
    below, bisect, then polish with double-double Newton."""
    lo, hi = eq.real_bracket()
    f = lambda x: eq.eval_c128(complex(x, 0.0)).real
    trace = []
    x_prev = lo
    f_prev = f(lo)
    trace.append((x_prev, f_prev))
    bracket = None
    steps = max(8, int(math.ceil((hi - lo) / scan_step)))
    for i in range(1, steps + 1):
        x = lo + (hi - lo) * i / steps
        fx = f(x)
        trace.append((x, fx))
        if fx == 0.0:
            bracket = (x - (hi - lo) / steps, min(x + (hi - lo) / steps, hi))
            break
        if f_prev < 0 < fx or f_prev > 0 > fx:
            bracket = (x_prev, x)
            break
        x_prev, f_prev = x, fx
    if bracket is None:
        raise SolverError(
            f"no sign change in scan range [{lo}, {hi}]",
            detail={"trace": trace},
        )
    a, b = bracket
    fa = f(a)
    for _ in range(80):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            a = b = m
            break
        if (fa < 0) == (fm < 0):
            a, fa = m, fm
        else:
            b = m
    x = DD(0.5 * (a + b))
    for _ in range(4):
        x = x - eq.eval_dd(x) / eq.deriv_dd(x)
    residual = abs(eq.eval_dd(x))
    if residual > DD(tol):
        raise SolverError(
            f"Newton polish stalled at residual {float(residual):.3e}",
            detail={"alpha": float(x)},
        )
    root = CharRoot(DDC(x, DD(0.0)), residual, "primary-real", eq.convention)
    _assert_above_bound(eq, [root])
    return root


def _assert_above_bound(eq, roots):
    bound = eq.real_part_lower_bound()
    if bound is None:
        return
    for r in roots:
        if r.re < bound - 0.5:
            raise SolverError(
                f"root {complex(r.alpha)} below the provable real-part bound "
                f"{bound:.6f}",
                detail={"bound": bound},
            )


# ---------------------------------------------------------------------------
# argument-principle box search
# ---------------------------------------------------------------------------

def _edge_winding(eq, z0: complex, z1: complex, min_abs_ref: list,
                  max_depth: int = 44):
    """Total argument change of chi along [z0, z1]: the edge starts with
    length-proportional samples (the phase turn rate of these exponential
    sums is bounded by the largest mean logarithm), then adaptive bisection
    refines every segment that still turns more than pi/2."""
    seed = max(8, int(math.ceil(abs(z1 - z0) * 4.0)))
    pts = [z0 + (z1 - z0) * i / seed for i in range(seed + 1)]
    vals = [eq.eval_c128(p) for p in pts]
    total = 0.0
    stack = [
        (pts[i], vals[i], pts[i + 1], vals[i + 1], 0) for i in range(seed)
    ]
    while stack:
        a, fa, b, fb, depth = stack.pop()
        for v in (fa, fb):
            m = abs(v)
            if m < min_abs_ref[0]:
                min_abs_ref[0] = m
        if abs(fa) == 0.0 or abs(fb) == 0.0:
            raise _EdgeThroughZero()
        dphi = cmath.phase(fb / fa)
        if abs(dphi) > math.pi / 2 and depth < max_depth:
            m = 0.5 * (a + b)
            fm = eq.eval_c128(m)
            stack.append((a, fa, m, fm, depth + 1))
            stack.append((m, fm, b, fb, depth + 1))
        elif abs(dphi) > math.pi / 2:
            raise _EdgeThroughZero()
        else:
            total += dphi
    return total


class _EdgeThroughZero(Exception):
    pass


def _rect_winding(eq, re0, re1, im0, im1, nudge_threshold):
    corners = [
        complex(re0, im0),
        complex(re1, im0),
        complex(re1, im1),
        complex(re0, im1),
        complex(re0, im0),
    ]
    min_abs = [math.inf]
    total = 0.0
    for a, b in zip(corners, corners[1:]):
        total += _edge_winding(eq, a, b, min_abs)
    if min_abs[0] < nudge_threshold:
        raise _EdgeThroughZero()
    w = total / (2.0 * math.pi)
    wi = int(round(w))
    if abs(w - wi) > 0.25:
        raise SolverError(
            f"non-integer winding {w:.3f} on cell "
            f"[{re0},{re1}]x[{im0},{im1}]",
            detail={"cell": (re0, re1, im0, im1)},
        )
    return wi


def _polish_complex(eq, seed: complex, tol):
    z = seed
    for _ in range(60):
        fz = eq.eval_c128(z)
        dz = _deriv_c128(eq, z)
        if dz == 0:
            break
        step = fz / dz
        z = z - step
        if abs(step) < 1e-13 * max(1.0, abs(z)):
            break
    zd = DDC(DD(z.real), DD(z.imag))
    for _ in range(4):
        zd = zd - eq.eval_dd(zd) / eq.deriv_dd(zd)
    residual = eq.eval_dd(zd).abs()
    if residual > DD(tol):
        raise SolverError(
            f"Newton polish stalled at residual {float(residual):.3e}",
            detail={"seed": seed},
        )
    return zd, residual


def _deriv_c128(eq, z: complex) -> complex:
    d = eq.deriv_dd(DDC(DD(z.real), DD(z.imag)))
    return complex(d)


def find_roots_in_box(eq: CharEquation, box: RootBox, tol=DEFAULT_TOL):
    """All zeros inside the box via argument-principle subdivision.

    Each rectangle's winding number is computed from adaptively sampled edge
    phases; cells with one zero get Newton polish, cells with more split
    along their longer side.  Edges running into a zero are nudged.  The
    polished count is audited against the winding count per cell.
    """
    nudged = 0
    re0, re1 = box.re_min, box.re_max
    # drop the lower edge slightly below the axis so real zeros sit inside
    im0, im1 = -min(0.05, box.im_max / 100.0), box.im_max
    nudge_threshold = max(tol * 1e3, 1e-13)
    while True:
        try:
            total = _rect_winding(eq, re0, re1, im0, im1, nudge_threshold)
            break
        except _EdgeThroughZero:
            nudged += 1
            if nudged > 6:
                raise SolverError("edges keep running into zeros despite nudging")
            pad = 1e-4 * (1.0 + nudged) * max(re1 - re0, im1 - im0)
            re0 -= pad
            re1 += pad
            im0 -= pad
            im1 += pad

    roots: list[CharRoot] = []
    stack = [(re0, re1, im0, im1, total, 0)]
    while stack:
        a, b, c, d, w, depth = stack.pop()
        if w == 0:
            continue
        diag = math.hypot(b - a, d - c)
        if (w == 1 and diag <= 1.0) or diag < 1e-8:
            # cells this small put the center inside the Newton basin;
            # an escape means the cell is still too coarse
            zd, residual = _polish_complex(
                eq, complex(0.5 * (a + b), 0.5 * (c + d)), tol
            )
            zr, zi = float(zd.re), float(zd.im)
            slack = 1e-9 + 1e-6 * diag
            if a - slack <= zr <= b + slack and c - slack <= zi <= d + slack:
                roots.append(
                    CharRoot(zd, residual, "pending", eq.convention,
                             multiplicity=w)
                )
                continue
            if diag < 1e-8:
                raise SolverError(
                    f"polished root {complex(zd)} escaped its cell "
                    f"[{a},{b}]x[{c},{d}]",
                    detail={"cell": (a, b, c, d)},
                )
        if depth > 60:
            raise SolverError(
                f"subdivision depth exhausted on cell [{a},{b}]x[{c},{d}]",
                detail={"cell": (a, b, c, d)},
            )
        # split the longer side, nudging the cut if it lands on a zero
        horizontal = (b - a) >= (d - c)
        frac = 0.5
        for attempt in range(8):
            try:
                if horizontal:
                    m = a + (b - a) * frac
                    w1 = _rect_winding(eq, a, m, c, d, nudge_threshold)
                    w2 = _rect_winding(eq, m, b, c, d, nudge_threshold)
                else:
                    m = c + (d - c) * frac
                    w1 = _rect_winding(eq, a, b, c, m, nudge_threshold)
                    w2 = _rect_winding(eq, a, b, m, d, nudge_threshold)
                break
            except _EdgeThroughZero:
                frac = 0.5 + (attempt + 1) * 0.013
        else:
            raise SolverError(
                f"could not split cell [{a},{b}]x[{c},{d}] without hitting a zero"
            )
        if w1 + w2 != w:
            raise SolverError(
                f"winding miscount: {w} != {w1} + {w2} on cell "
                f"[{a},{b}]x[{c},{d}]",
                detail={"cell": (a, b, c, d)},
            )
        if horizontal:
            stack.append((a, m, c, d, w1, depth + 1))
            stack.append((m, b, c, d, w2, depth + 1))
        else:
            stack.append((a, b, c, m, w1, depth + 1))
            stack.append((a, b, m, d, w2, depth + 1))

    # classify, fold tiny imaginary parts onto the axis, deduplicate
    out: list[CharRoot] = []
    for r in roots:
        if abs(float(r.alpha.im)) < 1e-18:
            r = CharRoot(
                DDC(r.alpha.re, DD(0.0)), r.residual, "real",
                r.convention, r.multiplicity,
            )
        else:
            im = r.alpha.im
            if float(im) < 0:
                r = CharRoot(
                    DDC(r.alpha.re, -im), r.residual, "complex-pair",
                    r.convention, r.multiplicity,
                )
            else:
                r = CharRoot(r.alpha, r.residual, "complex-pair",
                             r.convention, r.multiplicity)
        if not any(
            abs(complex(r.alpha) - complex(s.alpha)) < 1e-12 for s in out
        ):
            out.append(r)
    out.sort(key=lambda r: (r.re, r.im))
    _assert_above_bound(eq, out)
    return out


# ---------------------------------------------------------------------------
# spurious filtering
# ---------------------------------------------------------------------------

def filter_spurious(roots, reference_eq: CharEquation, threshold=1e-10):
    """Re-evaluate each root in the reference (direct-convention) equation,
    shifting antiderivative-convention roots down by one; zeros that fail to
    vanish there are relabeled spurious."""
    out = []
    for r in roots:
        alpha_ref = r.alpha
        if r.convention == "F" and reference_eq.convention == "Phi":
            alpha_ref = r.alpha - DDC(1.0)
        elif r.convention == "Phi" and reference_eq.convention == "F":
            alpha_ref = r.alpha + DDC(1.0)
        resid = reference_eq.eval_dd(alpha_ref).abs()
        if resid > DD(threshold):
            out.append(
                CharRoot(r.alpha, r.residual, "spurious", r.convention,
                         r.multiplicity)
            )
        else:
            out.append(r)
    return out
