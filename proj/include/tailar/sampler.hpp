#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tailar/model.hpp"
#include "tailar/rng.hpp"

namespace tailar {

/// One draw from Gamma(shape, rate), density proportional to
/// x^(shape-1) exp(-rate x). Marsaglia-Tsang squeeze for shape >= 1;
/// shape < 1 is boosted through Gamma(shape + 1) * U^(1/shape).
double sample_gamma(double shape, double rate, Rng& rng);

/// Draws every mixture weight from its full conditional
/// tau_t | y ~ Gamma((nu+1)/2, ((y_t - phi0 - phi1 y_{t-1})^2 / sigma2 + nu) / 2).
/// `y_full` must be completely filled. For nu = +inf all weights are 1.
std::vector<double> sample_tau(std::span<const double> y_full, const Params& params, Rng& rng);

/// Gaussian law of one missing block given its two observed anchors and the
/// mixture weights.
struct BlockConditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;  ///< lower-triangular, chol * chol^T == cov (+ jitter)
    double jitter = 0.0;   ///< diagonal jitter that was needed to factorize
};

/// Builds the block conditional by forming the joint law of the block and its
/// right anchor given the left anchor, then conditioning on the right anchor.
/// Only nonnegative powers of phi1 appear, so phi1 = 0 is handled directly.
/// `tau` is the full weight vector (T-1 entries).
BlockConditional block_conditional(const MissingBlock& block, std::span<const double> tau,
                                   const Params& params, double y_left, double y_right);

/// Draws all missing samples given tau, one independent Gaussian per block.
/// Returns fills in index order (same order as series.missing_indices()).
std::vector<double> sample_missing(const ObservedSeries& series, std::span<const double> tau,
                                   const Params& params, Rng& rng);

/// One sweep of the two-block Gibbs sampler: tau from the current fills,
/// then the fills from the new tau.
LatentState gibbs_step(const LatentState& state, const ObservedSeries& series,
                       const Params& params, Rng& rng);

}  // namespace tailar
