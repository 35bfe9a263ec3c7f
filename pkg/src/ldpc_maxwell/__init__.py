"""Maxwell list decoding, EXIT/GEXIT analysis and ML-threshold bounds for LDPC ensembles."""

__version__ = "0.1.0"

from .channels import BEC, BSC, BiAWGN, parse_channel
from .degree import DegreePolynomial, EnsembleSpec, design_rate, parse_ensemble, regular
from .tanner import ParityCheckMatrix, TannerGraph, sample_graph, to_parity_check

__all__ = [
    "BEC",
    "BSC",
    "BiAWGN",
    "DegreePolynomial",
    "EnsembleSpec",
    "ParityCheckMatrix",
    "TannerGraph",
    "design_rate",
    "parse_channel",
    "parse_ensemble",
    "regular",
    "sample_graph",
    "to_parity_check",
]
