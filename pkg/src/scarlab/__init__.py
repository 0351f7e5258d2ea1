"""Desk-scale numerics for a driven N-flavor bosonic lattice: mean-field
thermodynamics, quasiparticle kinetics with the ladder eigenvalue, Floquet
stability of periodic orbits, and OTOC dynamics under a pairing perturbation.
"""

__version__ = "0.1.0"
