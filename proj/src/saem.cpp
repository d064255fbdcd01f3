#include "tailar/saem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailar/errors.hpp"
#include "tailar/rng.hpp"
#include "tailar/sampler.hpp"

namespace tailar {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::full:
            return "full";
        case Variant::zero_mean:
            return "zero-mean";
        case Variant::random_walk:
            return "random-walk";
    }
    return "full";
}

Variant parse_variant(std::string_view name) {
    if (name == "full") return Variant::full;
    if (name == "zero-mean") return Variant::zero_mean;
    if (name == "random-walk") return Variant::random_walk;
    throw ConfigError("unknown variant '" + std::string(name) +
                      "' (expected full, zero-mean or random-walk)");
}

void validate(const SaemConfig& c) {
    if (c.chains < 1) throw ConfigError("at least one chain is required");
    if (c.max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (!(c.step_exponent > 0.5 && c.step_exponent <= 1.0)) {
        throw ConfigError("step exponent must lie in (0.5, 1] for the step sizes to sum to "
                          "infinity while their squares stay summable");
    }
    if (!(c.nu_lo > 2.0)) throw ConfigError("nu_lo must exceed 2");
    if (!(c.nu_hi > c.nu_lo) || !std::isfinite(c.nu_hi)) {
        throw ConfigError("nu_hi must be finite and larger than nu_lo");
    }
    if (!(c.eps > 0.0)) throw ConfigError("eps must be positive");
    if (c.patience < 1) throw ConfigError("patience must be at least 1");
    if (!(c.nu0 > 0.0) || !std::isfinite(c.nu0)) throw ConfigError("nu0 must be positive");
    if (!(c.sigma2_floor > 0.0)) throw ConfigError("sigma2 floor must be positive");
}

double step_size(std::size_t k, const SaemConfig& config) {
    if (k <= config.warmup) {
        return 1.0;
    }
    const auto past = static_cast<double>(k - config.warmup);
    return config.step_exponent == 1.0 ? 1.0 / past : std::pow(past, -config.step_exponent);
}

SuffStats sa_update(const SuffStats& s_prev, std::span<const SuffStats> batch, double gamma) {
    if (batch.empty()) {
        throw ConfigError("stochastic approximation needs at least one chain");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("step size must lie in [0, 1]");
    }
    SuffStats mean;
    for (const auto& s : batch) {
        for (std::size_t i = 0; i < 7; ++i) {
            mean[i] += s[i];
        }
    }
    SuffStats out;
    const auto n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < 7; ++i) {
        out[i] = s_prev[i] + gamma * (mean[i] / n - s_prev[i]);
    }
    return out;
}

double nu_gradient(double nu, double s1, std::size_t T) {
    const double half = 0.5 * nu;
    return 0.5 * (std::log(half) - digamma(half) + 1.0 + s1 / static_cast<double>(T - 1));
}

double nu_solve(double s1, std::size_t T, double nu_lo, double nu_hi) {
    if (T < 2) throw ConfigError("nu_solve needs T >= 2");
    if (!(nu_lo > 0.0) || !(nu_hi > nu_lo)) throw ConfigError("invalid nu bracket");
    // g is strictly decreasing in nu because log(x) - psi(x) is.
    if (nu_gradient(nu_lo, s1, T) <= 0.0) return nu_lo;
    if (nu_gradient(nu_hi, s1, T) >= 0.0) return nu_hi;
    double lo = nu_lo;
    double hi = nu_hi;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const double g = nu_gradient(mid, s1, T);
        if (std::abs(g) < 1e-12) return mid;
        (g > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// phi0, phi1, sigma2 part of the M-step.
Params location_scale_step(const SuffStats& s, std::size_t T, Variant variant) {
    Params p;
    switch (variant) {
        case Variant::full: {
            const double det = s.s3() * s.s4() - s.s7() * s.s7();
            if (!(s.s3() > 0.0) || !(det > 1e-12 * s.s3() * s.s4())) {
                throw NumericalError(
                    "degenerate Gram matrix (s3*s4 - s7^2 ~ 0: lagged values are nearly "
                    "constant); the zero-mean or random-walk variant avoids the full 2x2 solve");
            }
            p.phi1 = (s.s3() * s.s6() - s.s5() * s.s7()) / det;
            p.phi0 = (s.s5() - p.phi1 * s.s7()) / s.s3();
            break;
        }
        case Variant::zero_mean:
            if (!(s.s4() > 0.0)) {
                throw NumericalError("zero-mean M-step needs s4 > 0 (all lagged values are zero); "
                                     "use the full or random-walk variant");
            }
            p.phi0 = 0.0;
            p.phi1 = s.s6() / s.s4();
            break;
        case Variant::random_walk:
            if (!(s.s3() > 0.0)) {
                throw NumericalError("random-walk M-step needs s3 > 0");
            }
            p.phi1 = 1.0;
            p.phi0 = (s.s5() - s.s7()) / s.s3();
            break;
    }
    const double rss = s.s2() + p.phi0 * p.phi0 * s.s3() + p.phi1 * p.phi1 * s.s4() -
                       2.0 * p.phi0 * s.s5() - 2.0 * p.phi1 * s.s6() +
                       2.0 * p.phi0 * p.phi1 * s.s7();
    p.sigma2 = std::max(0.0, rss / static_cast<double>(T - 1));
    return p;
}

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace

Params m_step(const SuffStats& stats, std::size_t T, Variant variant, const SaemConfig& config) {
    if (T < 2) throw ConfigError("m_step needs T >= 2");
    Params p = location_scale_step(stats, T, variant);
    p.nu = nu_solve(stats.s1(), T, config.nu_lo, config.nu_hi);
    return p;
}

SuffStats gaussian_expected_stats(const ObservedSeries& series, const Params& params) {
    const std::size_t T = series.size();
    std::vector<double> mean = series.values();
    std::vector<double> var(T, 0.0);
    std::vector<double> cov_lag(T, 0.0);  // Cov(y_t, y_{t-1})
    const std::vector<double> tau = ones(T - 1);
    for (const auto& block : series.blocks()) {
        const BlockConditional cond = block_conditional(
            block, tau, params, mean[block.t_d], mean[block.right_anchor()]);
        for (std::size_t i = 0; i < block.n_d; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const std::size_t t = block.first() + i;
            mean[t] = cond.mean(ii);
            var[t] = cond.cov(ii, ii);
            if (i > 0) {
                cov_lag[t] = cond.cov(ii, ii - 1);
            }
        }
    }
    SuffStats s;
    for (std::size_t t = 1; t < T; ++t) {
        s[1] += mean[t] * mean[t] + var[t];
        s[3] += mean[t - 1] * mean[t - 1] + var[t - 1];
        s[4] += mean[t];
        s[5] += mean[t] * mean[t - 1] + cov_lag[t];
        s[6] += mean[t - 1];
    }
    s[0] = -static_cast<double>(T - 1);
    s[2] = static_cast<double>(T - 1);
    return s;
}

GaussianFit gaussian_em_fit(const ObservedSeries& series, std::size_t max_iter, double tol,
                            Variant variant) {
    constexpr double kSigma2Floor = 1e-12;
    const std::size_t T = series.size();
    const double inf = std::numeric_limits<double>::infinity();

    // Start: least squares on the linearly interpolated series.
    std::vector<double> y = series.values();
    for (const auto& block : series.blocks()) {
        const double left = y[block.t_d];
        const double right = y[block.right_anchor()];
        for (std::size_t i = 1; i <= block.n_d; ++i) {
            const double w = static_cast<double>(i) / static_cast<double>(block.n_d + 1);
            y[block.t_d + i] = left + w * (right - left);
        }
    }
    GaussianFit out;
    Params theta = location_scale_step(sufficient_statistics(y, ones(T - 1)), T, variant);
    theta.sigma2 = std::max(theta.sigma2, kSigma2Floor);
    theta.nu = inf;
    out.trace.push_back(theta);

    for (std::size_t it = 1; it <= max_iter; ++it) {
        Params next = location_scale_step(gaussian_expected_stats(series, theta), T, variant);
        next.sigma2 = std::max(next.sigma2, kSigma2Floor);
        next.nu = inf;
        out.trace.push_back(next);
        out.iterations = it;
        const double change = max_relative_change(theta, next);
        theta = next;
        if (change < tol) {
            out.converged = true;
            break;
        }
    }
    out.params = theta;
    return out;
}

std::vector<double> gaussian_fill_means(const ObservedSeries& series, const Params& params) {
    const std::vector<double> tau = ones(series.size() - 1);
    const auto& y = series.values();
    std::vector<double> fills;
    fills.reserve(series.missing_count());
    for (const auto& block : series.blocks()) {
        const BlockConditional cond =
            block_conditional(block, tau, params, y[block.t_d], y[block.right_anchor()]);
        fills.insert(fills.end(), cond.mean.data(), cond.mean.data() + cond.mean.size());
    }
    return fills;
}

Initialization initialize(const ObservedSeries& series, const SaemConfig& config) {
    validate(config);
    Initialization init;
    init.gaussian =
        gaussian_em_fit(series, config.gaussian_max_iter, config.gaussian_tol, config.variant)
            .params;
    init.theta = init.gaussian;
    if (config.randomize_nu0) {
        Rng rng(derive_seed(config.seed, 0xA0A0));
        init.theta.nu = 2.1 + 7.9 * rng.uniform();
    } else {
        init.theta.nu = config.nu0;
    }
    LatentState start;
    start.tau = ones(series.size() - 1);
    start.fills = gaussian_fill_means(series, init.gaussian);
    init.chains.assign(config.chains, start);
    return init;
}

double max_relative_change(const Params& a, const Params& b) {
    auto rel = [](double from, double to) {
        if (from == to) return 0.0;  // also covers matching infinities
        return std::abs(to - from) / std::max(std::abs(from), 1e-8);
    };
    return std::max({rel(a.phi0, b.phi0), rel(a.phi1, b.phi1), rel(a.sigma2, b.sigma2),
                     rel(a.nu, b.nu)});
}

FitResult fit(const ObservedSeries& series, const SaemConfig& config) {
    Initialization init = initialize(series, config);
    const std::size_t T = series.size();

    std::vector<Rng> streams;
    streams.reserve(config.chains);
    for (std::size_t l = 0; l < config.chains; ++l) {
        streams.emplace_back(derive_seed(config.seed, l));
    }

    FitResult result;
    result.initial = init.theta;
    result.gaussian = init.gaussian;
    result.blocks = series.blocks().size();
    result.missing = series.missing_count();
    result.trace.reserve(config.max_iter);
    result.q_trace.reserve(config.max_iter);

    Params theta = init.theta;
    SuffStats s_hat = init.s_hat;
    std::vector<LatentState>& chains = init.chains;
    std::vector<SuffStats> batch(config.chains);
    std::size_t stable = 0;

    for (std::size_t k = 1; k <= config.max_iter; ++k) {
        for (std::size_t l = 0; l < config.chains; ++l) {
            chains[l] = gibbs_step(chains[l], series, theta, streams[l]);
            batch[l] = sufficient_statistics(series.completed(chains[l].fills), chains[l].tau);
        }
        s_hat = sa_update(s_hat, batch, step_size(k, config));

        Params next = m_step(s_hat, T, config.variant, config);
        if (next.sigma2 < config.sigma2_floor) {
            next.sigma2 = config.sigma2_floor;
            ++result.clamped_iterations;
        }
        if (next.nu <= config.nu_lo || next.nu >= config.nu_hi) {
            ++result.nu_at_bound;
        }
        const double change = max_relative_change(theta, next);
        theta = next;
        result.trace.push_back(theta);
        result.q_trace.push_back(q_value(theta, s_hat, T));
        result.iterations = k;

        stable = change < config.eps ? stable + 1 : 0;
        if (stable >= config.patience) {
            result.converged = true;
            break;
        }
    }
    result.params = theta;
    result.s_hat = s_hat;
    return result;
}

ImputeResult impute(const ObservedSeries& series, const Params& params, std::size_t n_draws,
                    std::uint64_t seed, std::size_t burn_in, bool keep_draws) {
    validate(params);
    if (n_draws < 1) throw ConfigError("impute needs at least one kept draw");
    const std::size_t m = series.missing_count();
    ImputeResult out;
    out.indices = series.missing_indices();
    out.mean.assign(m, 0.0);
    std::vector<double> m2(m, 0.0);

    LatentState state;
    state.tau = ones(series.size() - 1);
    state.fills = gaussian_fill_means(series, params);
    Rng rng(seed);
    for (std::size_t i = 0; i < burn_in; ++i) {
        state = gibbs_step(state, series, params, rng);
    }
    for (std::size_t n = 1; n <= n_draws; ++n) {
        state = gibbs_step(state, series, params, rng);
        for (std::size_t j = 0; j < m; ++j) {
            const double delta = state.fills[j] - out.mean[j];
            out.mean[j] += delta / static_cast<double>(n);
            m2[j] += delta * (state.fills[j] - out.mean[j]);
        }
        if (keep_draws) {
            out.draws.push_back(state.fills);
        }
    }
    out.sd.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        out.sd[j] = n_draws > 1 ? std::sqrt(m2[j] / static_cast<double>(n_draws - 1)) : 0.0;
    }
    return out;
}

}  // namespace tailar
