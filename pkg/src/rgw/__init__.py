"""Relative limit densities of Galton-Watson processes in random
environments: exact and extended-precision density engines, characteristic
exponents, asymptotic models, an integral-equation fixed point, and a
Monte Carlo validator."""

__version__ = "0.1.0"

from .xprec import DD, DDC, Rational, cpow, ext_arith, ext_elem, rat_arith
from .model import (
    EnvMeasure,
    FiniteAtoms,
    GenFunc,
    QuadUniform,
    example1_measure,
    example2_measure,
    linfrac_measure,
    load_measure,
    measure_integrate,
    pgf_eval,
    pgf_mean,
    save_measure,
    two_poly_measure,
    validate_measure,
)
from .series import TruncSeries, compose_poly, schroder_apply, schroder_fixpoint
from .recur import (
    CnjTable,
    DensitySeq,
    densities_example1,
    densities_example2,
    densities_general,
    densities_linfrac,
    densities_operator,
    densities_two_poly,
)
from .charroots import (
    CharRoot,
    FExample1,
    FExample2,
    GeneralEq,
    RootBox,
    TwoPolyEq,
    char_eval,
    filter_spurious,
    find_real_primary,
    find_roots_in_box,
)
from .asympt import (
    AsymptoticModel,
    binom_asympt,
    fit_leading_constant,
    gamma_dd,
    model_example1,
    model_example2,
    model_two_poly,
)
from .picard import (
    GridFunction,
    check_quarter_integral,
    h1_estimate,
    h_from_densities,
    picard_backward,
    picard_forward,
    verify_parts_identity,
)
from .mcsim import EmpiricalDist, SimConfig, exact_distribution, simulate
