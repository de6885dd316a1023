"""
*gisdesign* estimates ratios of normalizing constants and expectations over a family of unnormalized
densities with multi-proposal generalized importance sampling, and chooses the proposal set itself.
=====================================================================
Proposal normalizers are estimated by reverse logistic regression from Markov chain or iid samples.

Main features:

- Two-stage estimation of normalizer ratios and means for every density of a parameter grid
- Spectral variance standard errors with Tukey-Hanning or Bartlett lag windows
- Joint covariance matrices of the estimates over the grid
- Symmetric KL divergences by Monte Carlo or by a second order Laplace approximation
- Proposal (skeleton) selection: space filling, sequential, minimax and maximum entropy designs
- Optimal split of a sampling budget between the two stages
- Centered autologistic lattice model with Gibbs sampler and exact enumeration for small lattices
- Gaussian family with analytic normalizers for checks
- Command line runner: select, estimate, compare

"""

from gisdesign.family import UnnormalizedDensity, ChainSample, FamilyGrid, SkeletonSet, SampleBank, log_mixture_denominator
from gisdesign.sampling import SampleCache
from gisdesign.rlogistic import RLFit, membership_probs, quasi_loglik, zeta_to_d, fit_reverse_logistic
from gisdesign.gis import ISWeights, is_weights, u_hat, v_hat, eta_hat
from gisdesign.mcse import (
    LagWindow,
    RLCovariance,
    sv_matrix,
    rl_covariance,
    c_hat,
    e_hat,
    tau2_hat,
    gamma_hat,
    sigma2_u_hat,
    sigma2_eta_hat,
    t_hat,
    joint_sigma22,
    joint_sigma21,
    lambda_hat,
    rho_vec_hat,
    delta22_hat,
    delta21_hat,
    Upsilon,
    upsilon,
    relative_se,
    rel_se,
)
from gisdesign.estimator import TwoStageEstimator
from gisdesign.divergence import skld_mc, skld_mc_se, skld_laplace, find_mode, pairwise_divergence_matrix
from gisdesign.models import (
    AutologisticModel,
    AutologisticFamily,
    GaussianFamily,
    autologistic_conditional_p,
    autologistic_log_pmf_unnormalized,
    autologistic_gibbs,
    autologistic_exact_logZ,
    gaussian_density,
    gaussian_sampler,
    torus_neighbours,
)
from gisdesign.design import (
    DesignCriterion,
    CoverageCriterion,
    MinimaxCriterion,
    EntropyCriterion,
    SelectionResult,
    coverage_criterion,
    point_swap,
    annealing_temperature,
    simulated_annealing,
    select,
    select_nis,
    select_sfe,
    select_sfs,
    select_seq,
    select_mnx,
    select_ent,
    optimal_split,
)
from gisdesign.exceptions import (
    GisDesignError,
    InputError,
    EvaluationError,
    SupportError,
    DegenerateEstimatorError,
    NumericalError,
    OptimizationError,
    ConfigError,
)
from gisdesign.settings import SamplerConfig, Split
import gisdesign.settings

__version__ = "0.3.0"
