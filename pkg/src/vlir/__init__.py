"""Variable-length intrinsic randomness at desk scale.

Finite distributions and their spectra, the cross-entropy supremum and
restricted-entropy infimum that govern the optimal rate, variable-length
maps with their distance-to-uniform metrics, the slice-and-pack
construction, and brute-force oracles that check all of it.
"""
from .core import (CapacityError, FiniteDistribution, InvalidInputError, PreconditionError,
                   Spectrum, SubDistribution, VlirError, check_feasible, compact, entropy,
                   self_information, shrink_q, spectrum_of, variational_distance)
from .quantities import (QuantityReport, cross_entropy, max_cross_entropy,
                         min_restricted_entropy, rate_sequence, second_order_curve,
                         spectral_sup_quantile)
from .mappings import (LengthClass, VariableLengthMap, avg_distance_by_mixture,
                       avg_variational_distance, class_conditional, evaluate, length_classes,
                       mean_length, per_class_sup_distance)
from .constructions import (Guarantees, PackingConfig, PackingResult, SliceDecomposition,
                            capped_reduction, default_q_tilde, direct_construct, greedy_pack,
                            quantile_witness, slice_decompose)
from .sources import SourceModel, block_distribution, block_spectrum

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "FiniteDistribution", "InvalidInputError", "PreconditionError",
    "Spectrum", "SubDistribution", "VlirError", "check_feasible", "compact", "entropy",
    "self_information", "shrink_q", "spectrum_of", "variational_distance",
    "QuantityReport", "cross_entropy", "max_cross_entropy", "min_restricted_entropy",
    "rate_sequence", "second_order_curve", "spectral_sup_quantile",
    "LengthClass", "VariableLengthMap", "avg_distance_by_mixture", "avg_variational_distance",
    "class_conditional", "evaluate", "length_classes", "mean_length", "per_class_sup_distance",
    "Guarantees", "PackingConfig", "PackingResult", "SliceDecomposition", "capped_reduction",
    "default_q_tilde", "direct_construct", "greedy_pack", "quantile_witness", "slice_decompose",
    "SourceModel", "block_distribution", "block_spectrum",
]
