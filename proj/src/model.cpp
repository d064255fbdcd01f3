#include "tailar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tailar/errors.hpp"
#include "tailar/rng.hpp"
#include "tailar/sampler.hpp"

namespace tailar {

void validate(const Params& params) {
    if (!std::isfinite(params.phi0) || !std::isfinite(params.phi1)) {
        throw ConfigError("phi0 and phi1 must be finite");
    }
    if (!(params.sigma2 > 0.0) || !std::isfinite(params.sigma2)) {
        throw ConfigError("sigma2 must be positive and finite, got " +
                          std::to_string(params.sigma2));
    }
    if (!(params.nu > 0.0)) {
        throw ConfigError("nu must be positive, got " + std::to_string(params.nu));
    }
}

std::vector<MissingBlock> find_missing_blocks(const std::vector<bool>& mask) {
    std::vector<MissingBlock> blocks;
    if (mask.empty()) {
        return blocks;
    }
    if (!mask.front() || !mask.back()) {
        throw DataError(
            "series starts or ends with missing values; every missing run needs an "
            "observed sample on both sides (use --trim-edges to drop edge runs)");
    }
    std::size_t t = 0;
    while (t < mask.size()) {
        if (mask[t]) {
            ++t;
            continue;
        }
        const std::size_t start = t;
        while (!mask[t]) {
            ++t;
        }
        blocks.push_back({start - 1, t - start});
    }
    return blocks;
}

ObservedSeries::ObservedSeries(std::vector<double> values, std::vector<bool> mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
    if (values_.size() != mask_.size()) {
        throw DataError("values and mask differ in length");
    }
    if (values_.size() < 3) {
        throw DataError("series needs at least 3 samples, got " +
                        std::to_string(values_.size()));
    }
    for (std::size_t t = 0; t < values_.size(); ++t) {
        if (mask_[t]) {
            if (!std::isfinite(values_[t])) {
                throw DataError("observed value at index " + std::to_string(t + 1) +
                                " is not finite");
            }
        } else {
            values_[t] = std::nan("");
            missing_.push_back(t);
        }
    }
    blocks_ = find_missing_blocks(mask_);
}

ObservedSeries::ObservedSeries(std::vector<double> values)
    : ObservedSeries(values, std::vector<bool>(values.size(), true)) {}

std::vector<double> ObservedSeries::completed(std::span<const double> fills) const {
    if (fills.size() != missing_.size()) {
        throw ConfigError("expected " + std::to_string(missing_.size()) + " fills, got " +
                          std::to_string(fills.size()));
    }
    std::vector<double> y = values_;
    for (std::size_t i = 0; i < missing_.size(); ++i) {
        y[missing_[i]] = fills[i];
    }
    return y;
}

ObservedSeries trim_edges(std::vector<double> values, std::vector<bool> mask,
                          std::size_t* offset) {
    std::size_t lo = 0;
    std::size_t hi = mask.size();
    while (lo < hi && !mask[lo]) {
        ++lo;
    }
    while (hi > lo && !mask[hi - 1]) {
        --hi;
    }
    if (offset != nullptr) {
        *offset = lo;
    }
    return ObservedSeries(std::vector<double>(values.begin() + lo, values.begin() + hi),
                          std::vector<bool>(mask.begin() + lo, mask.begin() + hi));
}

double student_t_logpdf(double y, double mu, double sigma2, double nu) {
    if (!(sigma2 > 0.0) || !(nu > 0.0)) {
        throw ConfigError("student_t_logpdf requires sigma2 > 0 and nu > 0");
    }
    const double z2 = (y - mu) * (y - mu) / (nu * sigma2);
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * std::numbers::pi * sigma2) - 0.5 * (nu + 1.0) * std::log1p(z2);
}

double default_initial_value(const Params& params) {
    return std::abs(params.phi1) < 1.0 ? params.phi0 / (1.0 - params.phi1) : 0.0;
}

std::vector<double> simulate_ar1(const Params& params, std::size_t T, double y1,
                                 std::uint64_t seed) {
    if (T < 2) {
        throw ConfigError("simulate_ar1 needs T >= 2");
    }
    if (!std::isfinite(params.phi0) || !std::isfinite(params.phi1) ||
        !(params.sigma2 >= 0.0) || !(params.nu > 0.0)) {
        throw ConfigError("invalid simulation parameters");
    }
    Rng rng(seed);
    const bool gaussian = std::isinf(params.nu);
    std::vector<double> y(T);
    y[0] = y1;
    for (std::size_t t = 1; t < T; ++t) {
        const double tau = gaussian ? 1.0 : sample_gamma(0.5 * params.nu, 0.5 * params.nu, rng);
        const double eps = rng.normal() * std::sqrt(params.sigma2 / tau);
        y[t] = params.phi0 + params.phi1 * y[t - 1] + eps;
    }
    return y;
}

std::vector<double> simulate_ar1(const Params& params, std::size_t T, std::uint64_t seed) {
    return simulate_ar1(params, T, default_initial_value(params), seed);
}

ObservedSeries apply_missing(std::span<const double> y, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0) || !(rho < 1.0)) {
        throw ConfigError("missing fraction must lie in [0, 1)");
    }
    const std::size_t T = y.size();
    const auto n_missing = static_cast<std::size_t>(std::llround(rho * static_cast<double>(T)));
    if (T < 3 || n_missing > T - 2) {
        throw ConfigError("cannot delete " + std::to_string(n_missing) +
                          " interior samples from a series of length " + std::to_string(T));
    }
    std::vector<std::size_t> interior(T - 2);
    for (std::size_t i = 0; i < interior.size(); ++i) {
        interior[i] = i + 1;
    }
    // Partial Fisher-Yates: the first n_missing slots end up a uniform sample.
    Rng rng(seed);
    for (std::size_t i = 0; i < n_missing; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(i, interior.size() - 1));
        std::swap(interior[i], interior[j]);
    }
    std::vector<bool> mask(T, true);
    for (std::size_t i = 0; i < n_missing; ++i) {
        mask[interior[i]] = false;
    }
    return ObservedSeries(std::vector<double>(y.begin(), y.end()), std::move(mask));
}

SuffStats sufficient_statistics(std::span<const double> y, std::span<const double> tau) {
    if (y.size() < 2 || tau.size() + 1 != y.size()) {
        throw ConfigError("tau must have exactly T-1 entries");
    }
    SuffStats out;
    auto& s = out.s;
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double w = tau[t - 1];
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ConfigError("mixture weights must be positive and finite");
        }
        const double cur = y[t];
        const double lag = y[t - 1];
        s[0] += std::log(w) - w;
        s[1] += w * cur * cur;
        s[2] += w;
        s[3] += w * lag * lag;
        s[4] += w * cur;
        s[5] += w * cur * lag;
        s[6] += w * lag;
    }
    return out;
}

double q_value(const Params& p, const SuffStats& st, std::size_t T) {
    validate(p);
    const double n = static_cast<double>(T - 1);
    const double half_nu = 0.5 * p.nu;
    const double inv = 1.0 / p.sigma2;
    return n * (half_nu * std::log(half_nu) - std::lgamma(half_nu) - 0.5 * std::log(p.sigma2)) +
           half_nu * st.s1() - 0.5 * inv * st.s2() - 0.5 * inv * p.phi0 * p.phi0 * st.s3() -
           0.5 * inv * p.phi1 * p.phi1 * st.s4() + inv * p.phi0 * st.s5() +
           inv * p.phi1 * st.s6() - inv * p.phi0 * p.phi1 * st.s7();
}

}  // namespace tailar
