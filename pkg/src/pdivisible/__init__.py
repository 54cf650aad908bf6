"""Exact invariants of Dieudonné modules: level modules, level torsion and F-cyclic combinatorics."""

from .isocrystal import CrystalError, FIsocrystal, classify, new_isocrystal, thm53_extension
from .levelmod import level_module, level_torsion
from .permcrystal import DatumError, PermutationDatum, new_datum, perm_level_torsion, to_isocrystal

__all__ = [
    "CrystalError",
    "DatumError",
    "FIsocrystal",
    "PermutationDatum",
    "classify",
    "level_module",
    "level_torsion",
    "new_datum",
    "new_isocrystal",
    "perm_level_torsion",
    "thm53_extension",
    "to_isocrystal",
]
