#include "tailar/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailar/errors.hpp"

namespace tailar {

double sample_gamma(double shape, double rate, Rng& rng) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
        throw ConfigError("sample_gamma requires finite shape > 0 and rate > 0");
    }
    if (shape < 1.0) {
        const double boosted = sample_gamma(shape + 1.0, 1.0, rng);
        const double log_x = std::log(boosted) + std::log(rng.uniform()) / shape - std::log(rate);
        // Draws below the smallest normal double are returned as that value.
        return std::max(std::exp(log_x), std::numeric_limits<double>::min());
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) {
            return d * v / rate;
        }
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return d * v / rate;
        }
    }
}

std::vector<double> sample_tau(std::span<const double> y_full, const Params& params, Rng& rng) {
    validate(params);
    if (y_full.size() < 2) {
        throw ConfigError("sample_tau needs at least two samples");
    }
    std::vector<double> tau(y_full.size() - 1, 1.0);
    if (std::isinf(params.nu)) {
        return tau;
    }
    const double shape = 0.5 * (params.nu + 1.0);
    for (std::size_t t = 1; t < y_full.size(); ++t) {
        const double res = y_full[t] - params.phi0 - params.phi1 * y_full[t - 1];
        const double rate = 0.5 * (res * res / params.sigma2 + params.nu);
        tau[t - 1] = sample_gamma(shape, rate, rng);
    }
    return tau;
}

namespace {

void factorize(BlockConditional& out) {
    const auto n = out.cov.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(out.cov);
    if (llt.info() == Eigen::Success) {
        out.chol = llt.matrixL();
        return;
    }
    double jitter = 1e-12 * out.cov.trace() / static_cast<double>(n);
    for (int attempt = 0; attempt < 4; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd repaired = out.cov;
        repaired.diagonal().array() += jitter;
        llt.compute(repaired);
        if (llt.info() == Eigen::Success) {
            out.chol = llt.matrixL();
            out.jitter = jitter;
            return;
        }
    }
    throw NumericalError("missing-block covariance is not positive definite (block of " +
                         std::to_string(n) + " samples); mixture weights are degenerate");
}

}  // namespace

BlockConditional block_conditional(const MissingBlock& block, std::span<const double> tau,
                                   const Params& params, double y_left, double y_right) {
    const std::size_t n = block.n_d;
    const std::size_t m = n + 1;
    if (n == 0) {
        throw ConfigError("missing block must contain at least one sample");
    }
    if (block.t_d + m > tau.size()) {
        throw ConfigError("missing block extends past the weight vector");
    }
    const double phi0 = params.phi0;
    const double phi1 = params.phi1;

    // Joint law of (y_{t_d+1}, ..., y_{t_d+n+1}) given y_{t_d}.
    Eigen::VectorXd mu(m);
    Eigen::VectorXd var(m);
    double prev_mean = y_left;
    double prev_var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = tau[block.t_d + i];
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ConfigError("mixture weights must be positive and finite");
        }
        prev_mean = phi0 + phi1 * prev_mean;
        prev_var = phi1 * phi1 * prev_var + params.sigma2 / w;
        mu(i) = prev_mean;
        var(i) = prev_var;
    }
    Eigen::MatrixXd joint(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        double power = 1.0;
        for (std::size_t j = i; j < m; ++j) {
            joint(i, j) = power * var(i);
            joint(j, i) = joint(i, j);
            power *= phi1;
        }
    }

    // Condition on the right anchor.
    const auto ni = static_cast<Eigen::Index>(n);
    const double anchor_var = joint(ni, ni);
    const Eigen::VectorXd cross = joint.col(ni).head(ni);
    BlockConditional out;
    out.mean = mu.head(ni) + cross * ((y_right - mu(ni)) / anchor_var);
    out.cov = joint.topLeftCorner(ni, ni) - cross * cross.transpose() / anchor_var;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    factorize(out);
    return out;
}

std::vector<double> sample_missing(const ObservedSeries& series, std::span<const double> tau,
                                   const Params& params, Rng& rng) {
    validate(params);
    if (tau.size() + 1 != series.size()) {
        throw ConfigError("tau must have exactly T-1 entries");
    }
    std::vector<double> fills;
    fills.reserve(series.missing_count());
    const auto& y = series.values();
    Eigen::VectorXd z;
    for (const auto& block : series.blocks()) {
        const BlockConditional cond =
            block_conditional(block, tau, params, y[block.t_d], y[block.right_anchor()]);
        z.resize(static_cast<Eigen::Index>(block.n_d));
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z(i) = rng.normal();
        }
        const Eigen::VectorXd draw = cond.mean + cond.chol * z;
        fills.insert(fills.end(), draw.data(), draw.data() + draw.size());
    }
    return fills;
}

LatentState gibbs_step(const LatentState& state, const ObservedSeries& series,
                       const Params& params, Rng& rng) {
    const std::vector<double> y = series.completed(state.fills);
    LatentState next;
    next.tau = sample_tau(y, params, rng);
    next.fills = sample_missing(series, next.tau, params, rng);
    return next;
}

}  // namespace tailar
