"""Planted random subgraph workbench.

Hypergraph ensembles with vertex leakage, exact low-degree advantage
oracles, the matching concrete distinguishers, and the forbidden
hypergraph secret-sharing and single-round private evaluation
constructions built on the same hardness source.
"""

from .errors import (DegenerateNullVariance, GuardExceeded, PlantedSubError,
                     ValidationError)
from .hypercore import (Embedding, Hypergraph, binom, bit_to_spin, induced,
                        rank_subset, relabel, spin_to_bit, unrank_subset)
from .models import (ModelParams, Pmf, chi_square, exact_pmf, make_rng,
                     sample_H, sample_embedding, sample_null, sample_planted,
                     trial_rng, tv_distance)

__version__ = "0.1.0"

__all__ = [
    "DegenerateNullVariance", "GuardExceeded", "PlantedSubError",
    "ValidationError", "Embedding", "Hypergraph", "binom", "bit_to_spin",
    "induced", "rank_subset", "relabel", "spin_to_bit", "unrank_subset",
    "ModelParams", "Pmf", "chi_square", "exact_pmf", "make_rng", "sample_H",
    "sample_embedding", "sample_null", "sample_planted", "trial_rng",
    "tv_distance", "__version__",
]
