#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tailar/model.hpp"
#include "tailar/saem.hpp"

namespace tailar {

/// One Monte-Carlo replicate.
struct McRun {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  ///< set when the fit failed
    Params estimate;
    std::size_t iterations = 0;
};

/// Mean squared error of the estimates over the successful runs.
struct McReport {
    Params theta_true;
    std::size_t T = 0;
    double rho = 0.0;
    std::size_t n_runs = 0;
    std::uint64_t seed = 0;
    SaemConfig config;

    std::vector<McRun> runs;
    std::size_t failures = 0;
    Params mse;  ///< componentwise mean of (estimate - truth)^2; fields reuse Params slots
};

/// Componentwise MSE over the successful runs of `runs`.
Params mse_of(std::span<const McRun> runs, const Params& truth);

/// Simulates, masks and fits `n_runs` independent series. Run r uses seeds
/// derived from (seed, r) only, so reports are reproducible for any thread
/// count.
McReport mc_mse(const Params& theta_true, std::size_t T, double rho, std::size_t n_runs,
                const SaemConfig& config, std::uint64_t seed, std::size_t threads = 1);

/// Adds `magnitudes[i]` to the innovation at `positions[i]` (0-based, >= 1)
/// and propagates it: y_{t+j} += m * phi1^j for j >= 0.
std::vector<double> inject_innovation_outliers(std::span<const double> y, double phi1,
                                               std::span<const std::size_t> positions,
                                               std::span<const double> magnitudes);

/// `count` distinct positions drawn uniformly from 1..T-1 (0-based), sorted.
std::vector<std::size_t> draw_outlier_positions(std::size_t T, std::size_t count,
                                                std::uint64_t seed);

struct Prediction {
    std::vector<std::size_t> t;  ///< 0-based indices with y_t and y_{t-1} observed
    std::vector<double> y;
    std::vector<double> yhat;
    double averaged_error = 0.0;  ///< mean squared error over non-excluded t
    std::size_t n_used = 0;
};

/// One-step-ahead predictions yhat_t = phi0 + phi1 y_{t-1} wherever both
/// samples are observed. Indices in `exclude` are predicted but left out of
/// the averaged error.
Prediction predict_one_step(const ObservedSeries& series, const Params& params,
                            std::span<const std::size_t> exclude = {});

struct RobustnessConfig {
    std::size_t n_seeds = 20;
    std::uint64_t seed = 1;
    std::size_t T = 100;
    double rho = 0.1;
    double phi1 = 0.5;
    double sigma2 = 0.01;
    std::vector<double> magnitudes{5.0, -5.0, 5.0, -5.0};
    SaemConfig saem;  ///< variant is forced to zero-mean
};

struct RobustnessRow {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<std::size_t> outliers;
    double phi1_t = 0.0;
    double phi1_gauss = 0.0;
    double nu_t = 0.0;
    double pred_error_t = 0.0;
    double pred_error_gauss = 0.0;
};

struct RobustnessReport {
    RobustnessConfig config;
    std::vector<RobustnessRow> rows;
    double t_closer_fraction = 0.0;  ///< share of ok rows with |phi1_t - phi1| <= |phi1_g - phi1|
    double mean_pred_error_t = 0.0;
    double mean_pred_error_gauss = 0.0;
    std::size_t failures = 0;
};

/// Gaussian-innovation AR(1) series contaminated by innovation outliers,
/// masked, then fitted by the zero-mean t model and the zero-mean Gaussian
/// model.
RobustnessReport robustness_experiment(const RobustnessConfig& config, std::size_t threads = 1);

}  // namespace tailar
