#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailar/model.hpp"
#include "tailar/special.hpp"

namespace tailar {

/// Which parameters the M-step estimates.
enum class Variant {
    full,         ///< phi0, phi1, sigma2, nu
    zero_mean,    ///< phi0 fixed at 0
    random_walk,  ///< phi1 fixed at 1
};

std::string_view to_string(Variant v) noexcept;
/// Parses "full", "zero-mean" or "random-walk"; throws ConfigError otherwise.
Variant parse_variant(std::string_view name);

/**
 * @brief Run configuration of the SAEM-MCMC estimator.
 *
 * Step sizes are 1 for the first `warmup` iterations and
 * (k - warmup)^(-step_exponent) afterwards. Any exponent in (1/2, 1] keeps
 * sum(gamma) divergent and sum(gamma^2) finite.
 */
struct SaemConfig {
    std::size_t chains = 10;       ///< L
    std::size_t warmup = 30;       ///< K
    std::size_t max_iter = 150;
    double step_exponent = 1.0;
    double nu_lo = 2.001;
    double nu_hi = 300.0;
    double eps = 1e-5;             ///< relative-change threshold for stopping
    std::size_t patience = 10;     ///< consecutive iterations below eps
    Variant variant = Variant::full;
    std::uint64_t seed = 0;
    double nu0 = 5.0;
    bool randomize_nu0 = false;    ///< draw nu0 uniformly in [2.1, 10] from the seed
    double sigma2_floor = 1e-12;
    std::size_t gaussian_max_iter = 500;
    double gaussian_tol = 1e-8;
};

/// Throws ConfigError when the configuration is unusable.
void validate(const SaemConfig& config);

/// Output of fit().
struct FitResult {
    Params params;
    std::vector<Params> trace;    ///< theta after each iteration (post-clamp)
    std::vector<double> q_trace;  ///< surrogate objective after each iteration
    SuffStats s_hat;
    std::size_t iterations = 0;
    bool converged = false;

    Params initial;               ///< theta^(0)
    Params gaussian;              ///< Gaussian-EM estimate, nu = +inf
    std::size_t blocks = 0;
    std::size_t missing = 0;
    std::size_t clamped_iterations = 0;  ///< iterations where sigma2 hit its floor
    std::size_t nu_at_bound = 0;         ///< iterations where nu sat on a bracket end
};

/// gamma^(k) for iteration k >= 1.
double step_size(std::size_t k, const SaemConfig& config);

/// s_prev + gamma * (mean(batch) - s_prev), reduced in batch order.
SuffStats sa_update(const SuffStats& s_prev, std::span<const SuffStats> batch, double gamma);

/// dQ/dnu up to the factor (T-1):
/// (log(nu/2) - psi(nu/2) + 1 + s1/(T-1)) / 2.
double nu_gradient(double nu, double s1, std::size_t T);

/// Unique maximizer of the nu part of the surrogate on [nu_lo, nu_hi] by
/// bisection; returns the bracket end when the root lies outside.
double nu_solve(double s1, std::size_t T, double nu_lo, double nu_hi);

/// Closed-form maximizer of the surrogate for the given statistics.
/// sigma2 may come out as 0 for noiseless data; fit() applies the floor.
Params m_step(const SuffStats& stats, std::size_t T, Variant variant, const SaemConfig& config);

/// Expected sufficient statistics under the Gaussian AR(1) model
/// (all tau = 1), with the missing samples integrated out exactly.
SuffStats gaussian_expected_stats(const ObservedSeries& series, const Params& params);

struct GaussianFit {
    Params params;               ///< nu = +inf
    std::vector<Params> trace;   ///< starting point followed by every EM iterate
    std::size_t iterations = 0;
    bool converged = false;
};

/// Deterministic EM for the Gaussian AR(1) model with missing samples.
/// Starts from least squares on the linearly interpolated series.
GaussianFit gaussian_em_fit(const ObservedSeries& series, std::size_t max_iter = 500,
                            double tol = 1e-8, Variant variant = Variant::full);

/// Conditional means of the missing samples under the Gaussian model
/// (tau = 1), in index order.
std::vector<double> gaussian_fill_means(const ObservedSeries& series, const Params& params);

struct Initialization {
    Params theta;
    Params gaussian;
    std::vector<LatentState> chains;
    SuffStats s_hat;  ///< zero vector
};

Initialization initialize(const ObservedSeries& series, const SaemConfig& config);

/// Largest relative change |b - a| / max(|a|, 1e-8) across the four parameters.
double max_relative_change(const Params& a, const Params& b);

/// SAEM-MCMC estimation.
FitResult fit(const ObservedSeries& series, const SaemConfig& config);

struct ImputeResult {
    std::vector<std::size_t> indices;  ///< 0-based missing indices
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<std::vector<double>> draws;  ///< one row per kept sweep, when requested
};

/// Posterior summaries of the missing samples under fixed parameters.
ImputeResult impute(const ObservedSeries& series, const Params& params, std::size_t n_draws,
                    std::uint64_t seed, std::size_t burn_in = 100, bool keep_draws = false);

}  // namespace tailar
