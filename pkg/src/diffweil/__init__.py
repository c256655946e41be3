"""Exact differential algebra: Weil descent, Ritt-Kolchin reduction,
prolongations, and differential-kernel bounds over Q(t_1..t_k)."""

from .errors import (
    BadBound,
    BadIndex,
    BudgetExceeded,
    DiffWeilError,
    DivisionByZero,
    NotApplicable,
    ParseError,
)
from .field import BaseFieldSpec, RatFunc, derive_base, field_arith, validate_field
from .diffpoly import (
    AlgPoly,
    DerIndet,
    DiffPoly,
    KRing,
    RankedSet,
    compare_autoreduced,
    compare_indets,
    h_of_set,
    leader_data,
    polify,
    rank_of,
    reduction_status,
    theta_set,
    unpolify,
)
from .reduction import (
    DivisionCertificate,
    Inconsistent,
    MembershipVerdict,
    autoreduce,
    divide,
    membership_test,
)
from .weil import (
    BRing,
    DescentOutput,
    DiffPresentation,
    FreeExtension,
    check_thm33,
    check_unit_map_identity,
    counit_map,
    descend_presentation,
    lambda_extract,
    monogenic_extension,
    standardize_descent,
    transfer_point,
    unit_map,
    validate_extension,
)
from .prolong import (
    ProlongationSystem,
    TruncatedSeries,
    UCmInstance,
    exp_embed,
    gamma_set,
    jet_system_off_H,
    nabla_symbolic,
    nabla_values,
    prolongation_equations,
    section_identity_defect,
    tau1_explicit,
    theta_partition,
    ucm_instance,
)
from .kernels import (
    BoundTable,
    IndexMaps,
    KernelPresentation,
    ackermann,
    alpha_beta,
    bound_C,
    check_diamond,
    index_maps,
    leaders,
    validate_kernel,
)

__version__ = "0.1.0"
