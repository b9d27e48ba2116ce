"""Sum-product messages for proper q-colorings of b-ary trees.

The package computes the tree recursion exactly or in floating point, checks
it against exhaustive counting, and numerically probes the contraction
bounds behind strong spatial mixing on the Bethe lattice.
"""
from .contraction import contraction_table, g, kappa, kappa_q4b2, solve_c, threshold_q
from .decay import run_decay
from .lemmas import LEMMAS, VerificationReport, verify_lemma
from .messages import Message, SetSpec, SetVariant, in_set, pinned_message, uniform_message, update
from .trees import (
    BoundaryCondition,
    BoundaryPair,
    CompleteTree,
    TreeInstance,
    brute_force_marginal,
    brute_force_message,
    propagate,
    root_marginal,
)

__version__ = "0.1.0"
