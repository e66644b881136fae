"""Offspring generating functions and environment measures.

A GenFunc is a polynomial probability generating function with no constant
term (every individual leaves at least one descendant).  An environment
measure is either a finite list of weighted GenFuncs or the parametric
quadratic family r z + (1-r) z^2 with r uniform on an interval.  Measures are
deliberately stored unnormalized: the fixed-point equation is homogeneous in
the measure, so total mass is a free scale (tested, not forced).
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Callable, Sequence, Union

from .xprec import DD, DDC, cpow, dd_ln

DEFAULT_DEGREE_CAP = 64

Scalar = Union[Fraction, DD, DDC, float, int]


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the target; carries the best value
    and the achieved error estimate."""

    def __init__(self, value, error_estimate, message="quadrature did not converge"):
        super().__init__(f"{message} (achieved error ~ {float(error_estimate):.3e})")
        self.value = value
        self.error_estimate = error_estimate


class InadmissibleMeasureError(ValueError):
    """Raised when an operation requires an admissible measure and the
    validation report fails; the report rides along."""

    def __init__(self, report):
        super().__init__("; ".join(report.failures) or "inadmissible measure")
        self.report = report


# ---------------------------------------------------------------------------
# generating functions
# ---------------------------------------------------------------------------

class GenFunc:
    """Polynomial PGF p1 z + p2 z^2 + ... + pd z^d (no constant term).

    Coefficients are exact rationals; nonnegative and summing to one.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence, degree_cap: int = DEFAULT_DEGREE_CAP):
        cs = tuple(Fraction(c) for c in coeffs)
        while cs and cs[-1] == 0:
            cs = cs[:-1]
        if not cs:
            raise ValueError("generating function needs at least one coefficient")
        if len(cs) > degree_cap:
            raise ValueError(f"degree {len(cs)} exceeds cap {degree_cap}")
        if any(c < 0 for c in cs):
            raise ValueError("coefficients must be nonnegative")
        if sum(cs) != 1:
            raise ValueError(f"coefficients sum to {sum(cs)}, expected 1")
        self.coeffs = cs

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def p1(self) -> Fraction:
        return self.coeffs[0]

    def __eq__(self, other):
        return isinstance(other, GenFunc) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"GenFunc({[str(c) for c in self.coeffs]})"


def quadratic_pgf(r) -> GenFunc:
    """The one-or-two offspring law r z + (1-r) z^2."""
    r = Fraction(r)
    return GenFunc([r, 1 - r])


def linear_fractional_pgf(r, degree_cap: int = DEFAULT_DEGREE_CAP) -> GenFunc:
    """Truncation of the power-law PGF (1-r) z / (1 - r z).

    Coefficients p_j = (1-r) r^{j-1}; the tail mass beyond the cap is folded
    into the top coefficient, which leaves every density below the cap order
    unchanged while keeping the coefficients an exact probability vector.
    """
    r = Fraction(r)
    if not 0 < r < 1:
        raise ValueError("linear-fractional parameter must lie in (0, 1)")
    coeffs = [(1 - r) * r ** (j - 1) for j in range(1, degree_cap)]
    coeffs.append(1 - sum(coeffs))
    return GenFunc(coeffs, degree_cap=degree_cap)


def pgf_eval(P: GenFunc, z: Scalar):
    """Evaluate P(z) by Horner; result type follows the argument type."""
    if isinstance(z, (int, float)):
        z = Fraction(z) if isinstance(z, int) else DD(z)
    acc = None
    for c in reversed(P.coeffs):
        if isinstance(z, Fraction):
            cv = c
        elif isinstance(z, DDC):
            cv = DDC(DD(c), 0.0)
        else:
            cv = DD(c)
        acc = cv if acc is None else acc * z + cv
    return acc * z


def pgf_mean(P: GenFunc) -> Fraction:
    """Expected offspring count P'(1) = sum j p_j, exact."""
    return sum(Fraction(j + 1) * c for j, c in enumerate(P.coeffs))


# ---------------------------------------------------------------------------
# environment measures
# ---------------------------------------------------------------------------

class EnvMeasure:
    """Base class; see FiniteAtoms and QuadUniform."""

    def mass(self) -> Fraction:
        raise NotImplementedError

    def p1_moment(self) -> Fraction:
        """integral of p1 over the measure."""
        raise NotImplementedError

    def p1_sq_moment(self) -> Fraction:
        raise NotImplementedError

    def p1_power_moment(self, n: int) -> Fraction:
        """integral of p1^n over the measure."""
        raise NotImplementedError

    def mean_moment(self) -> Fraction:
        """integral of the offspring mean P'(1) over the measure."""
        raise NotImplementedError

    def scaled(self, c) -> "EnvMeasure":
        """Same measure with all weights multiplied by c > 0."""
        raise NotImplementedError


class FiniteAtoms(EnvMeasure):
    """Weighted finite list of generating functions."""

    __slots__ = ("atoms",)

    def __init__(self, atoms: Sequence):
        out = []
        for weight, pgf in atoms:
            w = Fraction(weight)
            if w <= 0:
                raise ValueError("atom weights must be positive")
            if not isinstance(pgf, GenFunc):
                pgf = GenFunc(pgf)
            out.append((w, pgf))
        if not out:
            raise ValueError("need at least one atom")
        self.atoms = tuple(out)

    def mass(self) -> Fraction:
        return sum(w for w, _ in self.atoms)

    def p1_moment(self) -> Fraction:
        return sum(w * P.p1 for w, P in self.atoms)

    def p1_sq_moment(self) -> Fraction:
        return sum(w * P.p1 ** 2 for w, P in self.atoms)

    def p1_power_moment(self, n: int) -> Fraction:
        return sum(w * P.p1 ** n for w, P in self.atoms)

    def mean_moment(self) -> Fraction:
        return sum(w * pgf_mean(P) for w, P in self.atoms)

    def scaled(self, c) -> "FiniteAtoms":
        c = Fraction(c)
        if c <= 0:
            raise ValueError("scale must be positive")
        return FiniteAtoms([(w * c, P) for w, P in self.atoms])

    def __repr__(self):
        return f"FiniteAtoms({len(self.atoms)} atoms, mass {self.mass()})"


class QuadUniform(EnvMeasure):
    """Quadratic family r z + (1-r) z^2 with r uniform on (lo, hi).

    The density is `scale` (not 1/(hi-lo)): mass = scale * (hi - lo), and the
    unnormalized Lebesgue measure (scale = 1) is the default.
    """

    __slots__ = ("lo", "hi", "scale")

    def __init__(self, lo, hi, scale=1):
        self.lo = Fraction(lo)
        self.hi = Fraction(hi)
        self.scale = Fraction(scale)
        if not 0 <= self.lo < self.hi <= 1:
            raise ValueError("need 0 <= lo < hi <= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def mass(self) -> Fraction:
        return self.scale * (self.hi - self.lo)

    def r_moment(self, q: int) -> Fraction:
        """integral of r^q dr over (lo, hi), times the density scale."""
        return self.scale * (self.hi ** (q + 1) - self.lo ** (q + 1)) / (q + 1)

    def r_poly_moment(self, p: int, m: int) -> Fraction:
        """integral of r^p (1-r)^m, expanded exactly."""
        total = Fraction(0)
        binom = 1
        for i in range(m + 1):
            total += (-1) ** i * binom * self.r_moment(p + i)
            binom = binom * (m - i) // (i + 1)
        return total

    def p1_moment(self) -> Fraction:
        return self.r_moment(1)

    def p1_sq_moment(self) -> Fraction:
        return self.r_moment(2)

    def p1_power_moment(self, n: int) -> Fraction:
        return self.r_moment(n)

    def mean_moment(self) -> Fraction:
        # offspring mean is 2 - r
        return 2 * self.r_moment(0) - self.r_moment(1)

    def scaled(self, c) -> "QuadUniform":
        return QuadUniform(self.lo, self.hi, self.scale * Fraction(c))

    def mean_power_moment(self, alpha):
        """integral of (2-r)^alpha dr, closed form; alpha real DD or DDC.

        (A^{u} - B^{u})/u with u = alpha+1, A = 2-lo, B = 2-hi; the removable
        point u = 0 and its neighborhood go through the series in u.
        """
        return self._power_moment(alpha, with_log=False)

    def mean_power_log_moment(self, alpha):
        """integral of (2-r)^alpha ln(2-r) dr (the alpha-derivative)."""
        return self._power_moment(alpha, with_log=True)

    def _power_moment(self, alpha, with_log: bool):
        complex_mode = isinstance(alpha, (DDC, complex))
        if not complex_mode:
            alpha = DD(alpha)
        else:
            alpha = DDC._coerce(alpha)
        a_end = DD(2 - self.lo)
        b_end = DD(2 - self.hi)
        la = dd_ln(a_end)
        lb = dd_ln(b_end)
        u = alpha + 1
        mag = u.abs() if complex_mode else abs(u)
        if mag < DD(1e-4):
            if with_log:
                # d/du (A^u - B^u)/u = sum_{k>=2} (k-1) u^{k-2} (ln^k A - ln^k B)/k!
                dval = DDC(0.0) if complex_mode else DD(0.0)
                pa, pb = la * la, lb * lb
                fact = 2
                upow = DDC(1.0) if complex_mode else DD(1.0)
                for k in range(2, 13):
                    dval = dval + upow * ((pa - pb) * (k - 1) / fact)
                    pa = pa * la
                    pb = pb * lb
                    fact *= k + 1
                    upow = upow * u
                return dval * DD(self.scale)
            # (A^u - B^u)/u = sum_{k>=1} u^{k-1} (ln^k A - ln^k B)/k!
            val = DDC(0.0) if complex_mode else DD(0.0)
            pa, pb = la, lb
            fact = 1
            upow = DDC(1.0) if complex_mode else DD(1.0)
            for k in range(1, 12):
                val = val + upow * ((pa - pb) / fact)
                pa = pa * la
                pb = pb * lb
                fact *= k + 1
                upow = upow * u
            return val * DD(self.scale)
        if complex_mode:
            au = cpow(a_end, u)
            bu = cpow(b_end, u)
        else:
            from .xprec import dd_pow
            au = dd_pow(a_end, u)
            bu = dd_pow(b_end, u)
        if with_log:
            # (A^u ln A - B^u ln B)/u - (A^u - B^u)/u^2
            return (au * la - bu * lb) / u * DD(self.scale) - (au - bu) / (u * u) * DD(self.scale)
        return (au - bu) / u * DD(self.scale)

    def __repr__(self):
        return f"QuadUniform({self.lo}, {self.hi}, scale={self.scale})"


# ---------------------------------------------------------------------------
# integration against a measure
# ---------------------------------------------------------------------------

class PolyInR:
    """Integrand that is a polynomial in the environment parameter r:
    c0 + c1 r + c2 r^2 + ...; integrated in closed form for QuadUniform."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        self.coeffs = tuple(Fraction(c) for c in coeffs)


class PowerOfMean:
    """Integrand (2-r)^alpha (the offspring-mean power used by the
    characteristic function); closed form for QuadUniform."""

    __slots__ = ("alpha",)

    def __init__(self, alpha):
        self.alpha = alpha


def measure_integrate(mu: EnvMeasure, f, rel_tol=1e-25, max_doublings=8):
    """Integrate f against the measure.

    FiniteAtoms: f is called with each GenFunc and the weighted sum is exact
    given exact f.  QuadUniform: PolyInR and PowerOfMean integrate in closed
    form; a plain callable f(r) falls back to panel Gauss-Legendre doubling
    until the relative change drops below rel_tol.
    """
    if isinstance(mu, FiniteAtoms):
        if isinstance(f, PolyInR):
            raise TypeError("PolyInR integrand needs a parametric measure")
        if isinstance(f, PowerOfMean):
            total = DDC(0.0) if isinstance(f.alpha, (DDC, complex)) else DD(0.0)
            for w, P in mu.atoms:
                total = total + cpow_mean(P, f.alpha) * DD(w)
            return total
        total = None
        for w, P in mu.atoms:
            v = f(P)
            term = v * w if isinstance(v, Fraction) else v * DD(w)
            total = term if total is None else total + term
        return total
    if isinstance(mu, QuadUniform):
        if isinstance(f, PolyInR):
            return sum(
                (c * mu.r_moment(q) for q, c in enumerate(f.coeffs)),
                Fraction(0),
            )
        if isinstance(f, PowerOfMean):
            return mu.mean_power_moment(f.alpha)
        return _gauss_legendre_adaptive(mu, f, rel_tol, max_doublings)
    raise TypeError(f"unknown measure type {type(mu).__name__}")


def cpow_mean(P: GenFunc, alpha):
    """(P'(1))^alpha for one atom."""
    mean = DD(pgf_mean(P))
    if isinstance(alpha, (DDC, complex)):
        return cpow(mean, alpha)
    from .xprec import dd_pow
    return dd_pow(mean, DD(alpha))


_GL_CACHE: dict = {}


def _gauss_legendre_nodes(n: int):
    """Double-double Gauss-Legendre nodes/weights on [-1, 1]: float64 seeds
    polished by two Newton steps on the Legendre recurrence."""
    import math

    if n in _GL_CACHE:
        return _GL_CACHE[n]
    nodes = []
    weights = []
    for i in range(1, n // 2 + n % 2 + 1):
        x = DD(math.cos(math.pi * (i - 0.25) / (n + 0.5)))
        for _ in range(5):
            p0, p1 = DD(1.0), DD(x)
            for k in range(2, n + 1):
                p0, p1 = p1, (x * p1 * (2 * k - 1) - p0 * (k - 1)) / k
            dp = (x * p1 - p0) * n / (x * x - 1)
            x = x - p1 / dp
        p0, p1 = DD(1.0), DD(x)
        for k in range(2, n + 1):
            p0, p1 = p1, (x * p1 * (2 * k - 1) - p0 * (k - 1)) / k
        dp = (x * p1 - p0) * n / (x * x - 1)
        w = DD(2.0) / ((DD(1.0) - x * x) * dp * dp)
        nodes.append(x)
        weights.append(w)
    full_nodes = []
    full_weights = []
    for x, w in zip(nodes, weights):
        full_nodes.append(x)
        full_weights.append(w)
        if x.hi != 0.0 or x.lo != 0.0:
            full_nodes.append(-x)
            full_weights.append(w)
    _GL_CACHE[n] = (full_nodes, full_weights)
    return _GL_CACHE[n]


def _gauss_legendre_adaptive(mu: QuadUniform, f: Callable, rel_tol, max_doublings):
    lo = DD(mu.lo)
    hi = DD(mu.hi)
    scale = DD(mu.scale)
    nodes, weights = _gauss_legendre_nodes(64)
    prev = None
    panels = 1
    for _ in range(max_doublings + 1):
        total = DD(0.0)
        width = (hi - lo) / panels
        for p in range(panels):
            a = lo + width * p
            half = width / 2
            mid = a + half
            for x, w in zip(nodes, weights):
                total = total + f(mid + half * x) * w
        total = total * (hi - lo) / (2 * panels) * scale
        if prev is not None:
            err = abs(total - prev)
            bound = abs(total) * DD(rel_tol)
            if err <= bound or err == DD(0.0):
                return total
        prev = total
        panels *= 2
    raise QuadratureError(prev, float(err / max(abs(total), DD(1e-300))))


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

class MeasureReport:
    """Outcome of validate_measure: both integrals plus which condition (if
    any) failed."""

    __slots__ = ("p1_integral", "p1_sq_integral", "passed", "failures")

    def __init__(self, p1_integral, p1_sq_integral):
        self.p1_integral = p1_integral
        self.p1_sq_integral = p1_sq_integral
        self.failures = []
        if p1_integral <= 0:
            self.failures.append("integral of p1 must be positive")
        elif p1_sq_integral / p1_integral >= 1:
            self.failures.append(
                "contraction ratio (integral of p1^2) / (integral of p1) "
                f"= {p1_sq_integral}/{p1_integral} is not below 1"
            )
        self.passed = not self.failures

    def __bool__(self):
        return self.passed

    def __repr__(self):
        status = "pass" if self.passed else "fail"
        return (
            f"MeasureReport({status}, p1={self.p1_integral}, "
            f"p1_sq={self.p1_sq_integral})"
        )


def validate_measure(mu: EnvMeasure) -> MeasureReport:
    """Check the two admissibility conditions (positive mean-offspring mass
    of single births and contraction ratio below one)."""
    return MeasureReport(mu.p1_moment(), mu.p1_sq_moment())


def require_admissible(mu: EnvMeasure) -> None:
    report = validate_measure(mu)
    if not report.passed:
        raise InadmissibleMeasureError(report)


# ---------------------------------------------------------------------------
# bundled example measures
# ---------------------------------------------------------------------------

# single-law parameter whose power law emulates the half-interval family's
# leading exponent
EMU1_P = Fraction("0.6791281732038788538781")


def example1_measure() -> QuadUniform:
    """Quadratic family, parameter uniform on (1/2, 1), unnormalized."""
    return QuadUniform(Fraction(1, 2), 1)


def example2_measure() -> QuadUniform:
    """Quadratic family, parameter uniform on (0, 1)."""
    return QuadUniform(0, 1)


def two_poly_measure(a, b) -> FiniteAtoms:
    """Two equally-weighted quadratic laws with linear coefficients a, b."""
    return FiniteAtoms([(1, quadratic_pgf(a)), (1, quadratic_pgf(b))])


def linfrac_measure(params, degree_cap: int = DEFAULT_DEGREE_CAP) -> FiniteAtoms:
    """Finite mixture of truncated linear-fractional laws; params is a list
    of (weight, r)."""
    return FiniteAtoms(
        [(w, linear_fractional_pgf(r, degree_cap)) for w, r in params]
    )


# ---------------------------------------------------------------------------
# measure-spec files
# ---------------------------------------------------------------------------

def measure_from_dict(spec: dict) -> EnvMeasure:
    kind = spec.get("type")
    if kind == "finite":
        atoms = []
        for item in spec["atoms"]:
            atoms.append((_exact(item["weight"]), GenFunc([_exact(c) for c in item["coeffs"]])))
        return FiniteAtoms(atoms)
    if kind == "quad-uniform":
        scale = _exact(spec.get("scale", 1))
        return QuadUniform(_exact(spec["lo"]), _exact(spec["hi"]), scale)
    raise ValueError(f"unknown measure type {kind!r}")


def _exact(x) -> Fraction:
    # JSON floats are re-parsed from their decimal text, so 0.4375 means
    # exactly 4375/10000
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(repr(x))


def load_measure(path) -> EnvMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh, parse_float=Fraction, parse_int=Fraction)
    return measure_from_dict(spec)


def measure_to_dict(mu: EnvMeasure) -> dict:
    if isinstance(mu, FiniteAtoms):
        return {
            "type": "finite",
            "atoms": [
                {"weight": str(w), "coeffs": [str(c) for c in P.coeffs]}
                for w, P in mu.atoms
            ],
        }
    if isinstance(mu, QuadUniform):
        d = {"type": "quad-uniform", "lo": str(mu.lo), "hi": str(mu.hi)}
        if mu.scale != 1:
            d["scale"] = str(mu.scale)
        return d
    raise TypeError(f"unknown measure type {type(mu).__name__}")


def save_measure(mu: EnvMeasure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(mu), fh, indent=2)
        fh.write("\n")
