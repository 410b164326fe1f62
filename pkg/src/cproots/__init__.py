"""cproots: construct and certify roots of unital completely positive maps."""

__version__ = "0.1.0"

from . import commutative, cpmap, discrete_roots, fixtures, numerics, semigroups
from .cpmap import CMap, Projection, StateSpec, make_state
from .discrete_roots import (
    Inconclusive,
    RootCertificate,
    construct_state_root,
    search_root_numeric,
    verify_proper_root,
)
from .numerics import Tolerance
from .semigroups import GeneratorSpec, GridShiftSpec, Refuted

__all__ = [
    "CMap",
    "GeneratorSpec",
    "GridShiftSpec",
    "Inconclusive",
    "Projection",
    "Refuted",
    "RootCertificate",
    "StateSpec",
    "Tolerance",
    "commutative",
    "construct_state_root",
    "cpmap",
    "discrete_roots",
    "fixtures",
    "make_state",
    "numerics",
    "search_root_numeric",
    "semigroups",
    "verify_proper_root",
]
