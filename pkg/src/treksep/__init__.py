"""Trek separation, entailed rank constraints and latent-cluster experiments."""

from .cluster import (ClusterResult, find_pure_clusters, fraction_size,
                      largest_pure_subcluster, purity)
from .data import CovMatrix, Dataset, DegenerateDataError
from .entailment import (RankConstraint, brute_force_min_choke, enumerate_constraints,
                         entailed_rank_bound, min_choke, min_choke_size)
from .experiment import ExperimentConfig, ExperimentRow, run_experiment
from .graph import (ChokePair, GraphError, PathDiagram, Trek, directed_region,
                    emit_path_diagram, parse_path_diagram, simple_treks, t_separates)
from .rng import derive_seed, make_rng
from .sem import (EquationSpec, PolyTerm, SemModel, draw_model, five_latent_model,
                  linear_model, load_model, population_cov, reduce_below_choke,
                  simulate, validate_LA_below)
from .stats import (determinant_rank_test, numerical_rank, pairwise_white_pvalues,
                    sample_corr, sample_cov, screen_correlations, white_pair_test,
                    wishart_tetrad_test)
from .verify import verify_choke_pair

__version__ = "0.1.0"
