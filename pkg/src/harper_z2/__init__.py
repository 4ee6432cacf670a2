"""Generalized Harper chains from a driven cavity-optomechanical array.

Two decoupled spin components (on-site phase +phi and -phi) realise a
one-dimensional Z2 topological insulator.  The package builds the chain
and coupled-array Hamiltonians, sweeps spectra in phi, tracks pumped edge
states and computes band Chern numbers and the Z2 index.
"""

from .errors import (DegeneracyError, GridRefinementError, HarperZ2Error, InconsistencyError,
                     NoGapError, NumericError, ParameterError, ShapeError, SolverError)
from .model import (HoppingDisorder, LatticeParams, OptomechParams, apply_mode_transform,
                    build_bloch_hamiltonian, build_chain, build_coupled_pair,
                    build_harper_chain, build_twisted_ring, mode_transform_matrix)
from .spectra import (diagonalize, edge_weight, find_dirac_points, find_gaps, gap_state,
                      sweep_phi, track_pump)
from .topology import (berry_field, chern_numbers, dissipative_chern, twisted_chern,
                       z2_index)
from .validation import decoupling_residual, rwa_validity, spectral_equivalence

__version__ = "0.1.0"
