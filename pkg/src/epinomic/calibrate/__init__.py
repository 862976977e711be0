"""Priors, likelihoods, simplex optimisation and ensemble MCMC."""
from .likelihood import (gaussian_loglik, log_likelihood, negative_binomial_loglik, poisson_loglik,
                         weekly_sums)
from .mcmc import PosteriorChain, ensemble_mcmc, gelman_rubin, initial_ensemble, integrated_autocorr_time
from .observations import ObservationSeries, load_observations, simulated_for, write_observations
from .optim import laplace_sd, maximize, nelder_mead
from .posterior import Posterior, iterative_initial_condition, log_posterior, reduce_dataset
from .priors import PARAMETER_TABLE, ParameterSpace, ParameterSpec, log_prior

__all__ = [
    "PARAMETER_TABLE", "ObservationSeries", "ParameterSpace", "ParameterSpec", "Posterior",
    "PosteriorChain", "ensemble_mcmc", "gaussian_loglik", "gelman_rubin", "initial_ensemble",
    "integrated_autocorr_time", "iterative_initial_condition", "laplace_sd", "load_observations", "log_likelihood",
    "log_posterior", "log_prior", "maximize", "negative_binomial_loglik", "nelder_mead",
    "poisson_loglik", "reduce_dataset", "simulated_for", "weekly_sums", "write_observations",
]
