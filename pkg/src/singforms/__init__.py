"""Numerical laboratory for multilinear singular integral forms.

Subpackages cover sampled fields, Littlewood-Paley machinery, kernel norm
scales with their dyadic decompositions, form/commutator evaluation by
quadrature, the adjoint change-of-variable transforms, and empirical probes
(growth, Schur suite, Carleson, mixing flows).
"""

from .field import (
    ExponentTuple,
    Grid,
    SampledField,
    bump_field,
    convolve,
    dilate,
    indicator_field,
    lp_norm,
    segment_mean,
    translate,
)

__all__ = [
    "ExponentTuple",
    "Grid",
    "SampledField",
    "bump_field",
    "convolve",
    "dilate",
    "indicator_field",
    "lp_norm",
    "segment_mean",
    "translate",
]

__version__ = "0.1.0"
