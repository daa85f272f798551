"""Entanglement and separability of thermal states: lattice spins, quasifree systems
and mean-field fluctuation algebras."""

from .separability import Tag, Verdict
from .spin import LocalTerm, ModelSpec, Operator, build_hamiltonian, preset
from .thermal import DensityMatrix, RegionPair, Spectrum, gibbs_state, kms_defect

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "LocalTerm",
    "ModelSpec",
    "Operator",
    "RegionPair",
    "Spectrum",
    "Tag",
    "Verdict",
    "build_hamiltonian",
    "gibbs_state",
    "kms_defect",
    "preset",
]
