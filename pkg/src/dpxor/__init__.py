"""Exact, desk-scale reductions between k-wise direct products and k-wise XORs."""

from .boolfn import (
    DEFAULT_CAP,
    ArityError,
    EnumerationCapError,
    KTuple,
    Mask,
    TruthTable,
    direct_product_eval,
    empirical_xor_zero_rate,
    restrict,
    xor_eval,
    xor_zero_advantage,
)
from .oracles import AdversaryModel, RandomizedAlgorithm, SuccessEstimate, exact_success, mc_success

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CAP",
    "AdversaryModel",
    "ArityError",
    "EnumerationCapError",
    "KTuple",
    "Mask",
    "RandomizedAlgorithm",
    "SuccessEstimate",
    "TruthTable",
    "direct_product_eval",
    "empirical_xor_zero_rate",
    "exact_success",
    "mc_success",
    "restrict",
    "xor_eval",
    "xor_zero_advantage",
]
