"""Bayesian ranking and selection under a normal-inverse-Wishart belief.

Single-alternative approximate conjugate updates (KL, moment matching and
their hybrid), a knowledge-gradient sampling policy, test problems and an
experiment harness.
"""

__version__ = "0.1.0"

from .belief import (
    BeliefState,
    estimate_prior,
    new_belief,
    partition,
    posterior_sigma_mean,
    update_full,
)
from .errors import NiwError
from .harness import ExperimentConfig, ProblemSpec, ResultTable, opportunity_cost, run_experiment, run_replication
from .kg import expected_max_affine, kg_coefficients, select_alternative, value_of_information
from .problems import (
    BoreholeConfig,
    borehole_computer,
    borehole_physical,
    calibration_problem,
    empirical_problem,
    lhs_design,
    load_empirical_csv,
    mvn_problem,
)
from .tdist import expected_positive_part, t_cdf, t_pdf
from .updates import (
    SingleObservation,
    UpdateRule,
    apply,
    tilde_q,
    update_kl,
    update_moment,
    update_moment_kl,
)
