//! Multi-class GP classification with a softmax likelihood under the
//! Laplace approximation.
//!
//! Every class has its own latent function with the same zero-mean GP prior
//! (one shared Gram matrix `K`). Training finds the posterior mode `f̂` by
//! Newton's method; prediction propagates the Gaussian approximation to test
//! points and integrates the softmax against it.

mod hyper;
mod likelihood;
mod mode;
mod model;
mod predict;

pub use hyper::{fit_hyperparameters, partition_log_marginal, GridPoint, HyperGrid, HyperSearch};
pub use likelihood::{
    class_probabilities, likelihood_gradient, log_likelihood, log_sum_exp, negative_hessian, softmax,
    targets,
};
pub use mode::{find_mode, find_mode_with, stationarity_residual, LaplaceFactors, LaplaceMode, NewtonOptions};
pub use model::{log_marginal_likelihood, ExpertModel, MODEL_MAGIC, MODEL_VERSION};
pub use predict::{
    latent_predict, predictive_density, ClassPosterior, LatentPrediction, DEFAULT_SAMPLES, VARIANCE_FLOOR,
};
