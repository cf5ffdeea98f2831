"""Characteristics, design and filterbank tables for Gammatone-family auditory filters."""

from .characteristics import (Characteristics, Ratio, RatioKind, closed_form,
                              extract_numeric, numeric_characteristics, ratio_value,
                              relative_error)
from .design import (BuConstraint, DesignSpec, UnattainableError, bu_constraints,
                     estimate_bp, run_design, solve_ap, solve_ap_from_ratio, solve_bu)
from .errmap import ErrorGrid, sweep
from .filterbank import CfGrid, build_table, q_forw, q_sim
from .response import FilterClass, FilterConstants, FrequencyResponse, sample_response

__version__ = "0.1.0"

__all__ = [
    "Characteristics", "Ratio", "RatioKind", "closed_form", "extract_numeric",
    "numeric_characteristics", "ratio_value", "relative_error",
    "BuConstraint", "DesignSpec", "UnattainableError", "bu_constraints", "estimate_bp",
    "run_design", "solve_ap", "solve_ap_from_ratio", "solve_bu",
    "ErrorGrid", "sweep", "CfGrid", "build_table", "q_forw", "q_sim",
    "FilterClass", "FilterConstants", "FrequencyResponse", "sample_response",
]
