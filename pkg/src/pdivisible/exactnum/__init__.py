"""Exact p-local scalars, matrices and lattices."""

from .lattice import (
    Chart,
    EchelonLattice,
    apply_map,
    contains,
    coordinates,
    dual,
    hnf_basis,
    is_sublattice,
    join,
    join_all,
    meet,
    min_power,
    preimage,
    rel_divisors,
    restrict,
    saturation,
    scaled,
    span_of,
    stable_chain,
    standard,
)
from .matrices import LinearMap, RationalEchelon
from .scalars import INF, PLocalScalar, Q, check_prime, format_rational, parse_rational, val_p

__all__ = [
    "Chart",
    "EchelonLattice",
    "INF",
    "LinearMap",
    "PLocalScalar",
    "Q",
    "RationalEchelon",
    "apply_map",
    "check_prime",
    "contains",
    "coordinates",
    "dual",
    "format_rational",
    "hnf_basis",
    "is_sublattice",
    "join",
    "join_all",
    "meet",
    "min_power",
    "parse_rational",
    "preimage",
    "rel_divisors",
    "restrict",
    "saturation",
    "scaled",
    "span_of",
    "stable_chain",
    "standard",
    "val_p",
]
