"""First-passage percolation laboratory for configuration-model random graphs.

Computes the analytic constants governing weighted diameter and flooding
time under i.i.d. rate-one exponential edge weights, and verifies them at
desk scale: exact distance computations on sampled graphs, exploration-
process statistics, 2-core analysis, and branching-process simulation.
"""

__version__ = "0.1.0"

from .degree_model import (
    CoreTheory,
    DegreeLaw,
    DegreeSequence,
    SizeBiasedLaw,
    TheoryConstants,
    core_theory,
    gamma_of,
    size_biased,
    solve_lambda,
    theory_constants,
    thinned_law,
    truncated_size_biased,
)
from .seeding import Seed

__all__ = [
    "CoreTheory",
    "DegreeLaw",
    "DegreeSequence",
    "Seed",
    "SizeBiasedLaw",
    "TheoryConstants",
    "core_theory",
    "gamma_of",
    "size_biased",
    "solve_lambda",
    "theory_constants",
    "thinned_law",
    "truncated_size_biased",
]
