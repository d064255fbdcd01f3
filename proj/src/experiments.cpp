#include "tailar/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "tailar/errors.hpp"
#include "tailar/rng.hpp"

namespace tailar {

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers. Jobs write to
// disjoint slots, so the result does not depend on scheduling.
template <typename Job>
void parallel_for(std::size_t n, std::size_t threads, Job job) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) job(i);
        });
    }
}

}  // namespace

Params mse_of(std::span<const McRun> runs, const Params& truth) {
    Params mse{0.0, 0.0, 0.0, 0.0};
    std::size_t n = 0;
    for (const auto& r : runs) {
        if (!r.ok) continue;
        ++n;
        mse.phi0 += (r.estimate.phi0 - truth.phi0) * (r.estimate.phi0 - truth.phi0);
        mse.phi1 += (r.estimate.phi1 - truth.phi1) * (r.estimate.phi1 - truth.phi1);
        mse.sigma2 += (r.estimate.sigma2 - truth.sigma2) * (r.estimate.sigma2 - truth.sigma2);
        mse.nu += (r.estimate.nu - truth.nu) * (r.estimate.nu - truth.nu);
    }
    if (n == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan};
    }
    const auto dn = static_cast<double>(n);
    return {mse.phi0 / dn, mse.phi1 / dn, mse.sigma2 / dn, mse.nu / dn};
}

McReport mc_mse(const Params& theta_true, std::size_t T, double rho, std::size_t n_runs,
                const SaemConfig& config, std::uint64_t seed, std::size_t threads) {
    if (n_runs < 1) throw ConfigError("mc_mse needs at least one run");
    validate(theta_true);
    validate(config);
    McReport report;
    report.theta_true = theta_true;
    report.T = T;
    report.rho = rho;
    report.n_runs = n_runs;
    report.seed = seed;
    report.config = config;
    report.runs.resize(n_runs);

    parallel_for(n_runs, threads, [&](std::size_t r) {
        McRun& run = report.runs[r];
        run.index = r;
        run.seed = derive_seed(seed, r);
        try {
            const auto y = simulate_ar1(theta_true, T, derive_seed(run.seed, 1));
            const ObservedSeries series = apply_missing(y, rho, derive_seed(run.seed, 2));
            SaemConfig cfg = config;
            cfg.seed = derive_seed(run.seed, 3);
            const FitResult result = fit(series, cfg);
            run.estimate = result.params;
            run.iterations = result.iterations;
            run.ok = true;
        } catch (const Error& e) {
            run.ok = false;
            run.error = e.what();
        }
    });

    report.failures = static_cast<std::size_t>(
        std::count_if(report.runs.begin(), report.runs.end(), [](const McRun& r) { return !r.ok; }));
    report.mse = mse_of(report.runs, theta_true);
    return report;
}

std::vector<double> inject_innovation_outliers(std::span<const double> y, double phi1,
                                               std::span<const std::size_t> positions,
                                               std::span<const double> magnitudes) {
    if (positions.size() != magnitudes.size()) {
        throw ConfigError("need one magnitude per outlier position");
    }
    std::vector<double> out(y.begin(), y.end());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t t = positions[i];
        if (t < 1 || t >= out.size()) {
            throw ConfigError("outlier position " + std::to_string(t + 1) +
                              " outside 2..T");
        }
        double effect = magnitudes[i];
        for (std::size_t s = t; s < out.size(); ++s) {
            out[s] += effect;
            effect *= phi1;
        }
    }
    return out;
}

std::vector<std::size_t> draw_outlier_positions(std::size_t T, std::size_t count,
                                                std::uint64_t seed) {
    if (T < 2 || count > T - 1) {
        throw ConfigError("cannot place " + std::to_string(count) + " outliers in 2..T");
    }
    std::vector<std::size_t> pool(T - 1);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i + 1;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(i, pool.size() - 1));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

Prediction predict_one_step(const ObservedSeries& series, const Params& params,
                            std::span<const std::size_t> exclude) {
    Prediction out;
    const auto& y = series.values();
    double total = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        if (!series.observed(t) || !series.observed(t - 1)) continue;
        const double yhat = params.phi0 + params.phi1 * y[t - 1];
        out.t.push_back(t);
        out.y.push_back(y[t]);
        out.yhat.push_back(yhat);
        if (std::find(exclude.begin(), exclude.end(), t) != exclude.end()) continue;
        total += (yhat - y[t]) * (yhat - y[t]);
        ++out.n_used;
    }
    if (out.n_used == 0) {
        throw DataError("no index t has both y_t and y_{t-1} observed (after exclusions)");
    }
    out.averaged_error = total / static_cast<double>(out.n_used);
    return out;
}

RobustnessReport robustness_experiment(const RobustnessConfig& config, std::size_t threads) {
    if (config.n_seeds < 1) throw ConfigError("robustness experiment needs at least one seed");
    RobustnessReport report;
    report.config = config;
    report.config.saem.variant = Variant::zero_mean;
    validate(report.config.saem);
    report.rows.resize(config.n_seeds);
    const Params truth{0.0, config.phi1, config.sigma2, std::numeric_limits<double>::infinity()};

    parallel_for(config.n_seeds, threads, [&](std::size_t i) {
        RobustnessRow& row = report.rows[i];
        row.seed = derive_seed(config.seed, i);
        try {
            const auto clean = simulate_ar1(truth, config.T, 0.0, derive_seed(row.seed, 1));
            row.outliers =
                draw_outlier_positions(config.T, config.magnitudes.size(), derive_seed(row.seed, 2));
            const auto dirty =
                inject_innovation_outliers(clean, config.phi1, row.outliers, config.magnitudes);
            const ObservedSeries series = apply_missing(dirty, config.rho, derive_seed(row.seed, 3));

            SaemConfig cfg = report.config.saem;
            cfg.seed = derive_seed(row.seed, 4);
            const FitResult t_fit = fit(series, cfg);
            const GaussianFit g_fit = gaussian_em_fit(series, cfg.gaussian_max_iter,
                                                      cfg.gaussian_tol, Variant::zero_mean);
            row.phi1_t = t_fit.params.phi1;
            row.nu_t = t_fit.params.nu;
            row.phi1_gauss = g_fit.params.phi1;
            row.pred_error_t = predict_one_step(series, t_fit.params, row.outliers).averaged_error;
            row.pred_error_gauss =
                predict_one_step(series, g_fit.params, row.outliers).averaged_error;
            row.ok = true;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
    });

    std::size_t ok = 0;
    std::size_t closer = 0;
    for (const auto& row : report.rows) {
        if (!row.ok) {
            ++report.failures;
            continue;
        }
        ++ok;
        if (std::abs(row.phi1_t - config.phi1) <= std::abs(row.phi1_gauss - config.phi1)) ++closer;
        report.mean_pred_error_t += row.pred_error_t;
        report.mean_pred_error_gauss += row.pred_error_gauss;
    }
    if (ok > 0) {
        report.t_closer_fraction = static_cast<double>(closer) / static_cast<double>(ok);
        report.mean_pred_error_t /= static_cast<double>(ok);
        report.mean_pred_error_gauss /= static_cast<double>(ok);
    }
    return report;
}

}  // namespace tailar
