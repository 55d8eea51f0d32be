"""Riesz φ-variation, Luxemburg norms and BV restoration for generalized Orlicz functions in 1D."""
from ._accel import backend
from .bvfunc import BVFunction, Partition, PiecewisePoly
from .conditions import ConditionReport, check_condition, jensen_gap, witness_violates
from .errors import (
    GridMismatch,
    NoModulus,
    NonFiniteEnergy,
    OutOfDomain,
    PreconditionViolated,
    RieszVarError,
    SpecError,
    Unsupported,
)
from .phi import (
    ChenLevineRao,
    DoublePhase,
    Orlicz,
    OrliczTerm,
    PhiFamily,
    Power,
    Side,
    VariableExponent,
    phi_from_dict,
)
from .profiles import Analytic, Constant, PiecewiseLinear, profile_from_dict
from .restore import RestoreConfig, Signal, energy, minimize, quadratic_oracle
from .variation import (
    NormResult,
    VariationEstimate,
    essential_variation_grid,
    limsup_variation,
    lphi_modular,
    lphi_norm,
    luxemburg_norm,
    rbv_norm,
    representation_functional,
    sup_variation,
    variation_on_partition,
)

__version__ = "0.1.0"
