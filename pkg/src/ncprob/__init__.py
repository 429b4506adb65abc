"""Exact free-cumulant calculus on non-crossing partitions, free products of
*-probability spaces, and executable freeness/positivity verification."""

from .errors import (
    DimensionMismatchError,
    FactorMismatchError,
    NCProbError,
    OrderViolationError,
    SizeOutOfRangeError,
    SpecFormatError,
    TruncationError,
    ValidationError,
)
from .scalar import ComplexRational, parse_scalar
from .nc_lattice import (
    LatticePair,
    Partition,
    catalan,
    enumerate_nc,
    is_noncrossing,
    join_nc,
    leq,
    moebius,
    parse_partition,
)
from .moment_space import (
    FactorState,
    GeneratorSymbol,
    Letter,
    Polynomial,
    Word,
    factor_state_from_json,
    parse_word,
    star,
)
from .cumulant_calculus import (
    CumulantTable,
    MomentSequence,
    cumulants_from_moment_sequence,
    free_convolve_additive,
    kappa_n,
    kappa_pi,
    kappa_pi_via_moebius,
    kappa_words,
    moment_sequence_from_cumulants,
    moments_from_cumulants,
)
from .free_product import (
    FreeElement,
    GroupedWord,
    ProductSpace,
    TensorWord,
    product_space_from_json,
    star_element,
)
from .verification import (
    ExplicitJointState,
    FreenessReport,
    GramMatrix,
    JointState,
    PositivityResult,
    check_equivalence,
    check_freeness_cumulants,
    check_freeness_moments,
    check_positivity,
    joint_kappa,
    ldlt_psd,
    variance_factorization,
)

__version__ = "0.1.0"
