"""Strategic network formation with grouped sender/receiver heterogeneity."""

from .bvn import bvn_cdf, bvn_partials
from .grouped import GroupedFit, bic, fit_grouped, select_group_counts
from .likelihood import hessian, log_likelihood, profile_rho, score
from .model import (
    CommonParams,
    Dataset,
    DatasetError,
    DirectedNetwork,
    DyadCovariates,
    DyadOutcome,
    GroupModel,
    HeterogeneityVector,
    linear_index,
    oneway_prob,
    solve_dyad,
)
from .io import emit_report, load_dataset, write_dataset
from .segmentation import (
    bs_detect,
    bs_segment,
    classification_ratio,
    repartition,
    split_score,
    within_variation,
)
from .simulation import DgpConfig, McSummary, generate_network, run_monte_carlo
from .step1 import FitOptions, Step1Fit, fit_fixed_effects

__version__ = "0.1.0"
