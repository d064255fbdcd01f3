#pragma once

// Reference implementations used only by the tests. Each one is written from
// the defining formula and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "tailar/model.hpp"
#include "tailar/rng.hpp"

namespace oracle {

// Sufficient statistics by explicit per-component loops in long double.
inline tailar::SuffStats naive_stats(std::span<const double> y, std::span<const double> tau) {
    tailar::SuffStats out;
    for (int c = 0; c < 7; ++c) {
        long double acc = 0.0L;
        for (std::size_t i = 1; i < y.size(); ++i) {
            const long double w = tau[i - 1];
            const long double cur = y[i];
            const long double lag = y[i - 1];
            switch (c) {
                case 0: acc += std::log(w) - w; break;
                case 1: acc += w * cur * cur; break;
                case 2: acc += w; break;
                case 3: acc += w * lag * lag; break;
                case 4: acc += w * cur; break;
                case 5: acc += w * cur * lag; break;
                default: acc += w * lag; break;
            }
        }
        out[static_cast<std::size_t>(c)] = static_cast<double>(acc);
    }
    return out;
}

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Closed-form block moments with explicit (possibly negative) powers of phi1.
// `w[q-1]` is the weight tau_{t_d+q}, q = 1..n+1. Requires phi1 != 0.
inline Moments negative_power_block_moments(std::size_t n, std::span<const double> w, double phi0,
                                  double phi1, double sigma2, double y_left, double y_right) {
    auto geo = [&](std::size_t i) {
        return phi1 == 1.0 ? static_cast<double>(i) * phi0
                           : phi0 * (std::pow(phi1, static_cast<double>(i)) - 1.0) / (phi1 - 1.0);
    };
    auto p = [&](long e) { return std::pow(phi1, static_cast<double>(e)); };
    auto partial = [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t q = 1; q <= i; ++q) s += p(static_cast<long>(i) - 2 * static_cast<long>(q)) / w[q - 1];
        return s;
    };
    double den_mean = 0.0;
    double den_cov = 0.0;
    for (std::size_t q = 1; q <= n + 1; ++q) {
        den_mean += p(static_cast<long>(n + 1) - 2 * static_cast<long>(q)) / w[q - 1];
        den_cov += p(-2 * static_cast<long>(q)) / w[q - 1];
    }
    const double gap = y_right - geo(n + 1) - p(static_cast<long>(n + 1)) * y_left;
    Moments m{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (std::size_t i = 1; i <= n; ++i) {
        m.mean(i - 1) = geo(i) + p(static_cast<long>(i)) * y_left + partial(i) / den_mean * gap;
        for (std::size_t j = 1; j <= n; ++j) {
            double joint = 0.0;
            for (std::size_t q = 1; q <= std::min(i, j); ++q) {
                joint += p(static_cast<long>(i + j) - 2 * static_cast<long>(q)) / w[q - 1];
            }
            m.cov(i - 1, j - 1) = (joint - partial(i) * partial(j) / den_cov) * sigma2;
        }
    }
    return m;
}

struct MonteCarloMoments {
    Moments est;
    Eigen::VectorXd mean_se;
    Eigen::MatrixXd cov_se;
};

// Forward-simulates the block recursion from y_left with Gaussian innovations
// of variance sigma2 / w[q-1], then estimates the law of the interior given
// the endpoint by linear regression on the simulated endpoint (exact for a
// jointly Gaussian vector).
inline MonteCarloMoments forward_simulation_moments(std::size_t n, std::span<const double> w,
                                                    double phi0, double phi1, double sigma2,
                                                    double y_left, double y_right,
                                                    std::size_t paths, std::uint64_t seed) {
    tailar::Rng rng(seed);
    Eigen::MatrixXd x(paths, n);
    Eigen::VectorXd e(paths);
    for (std::size_t r = 0; r < paths; ++r) {
        double prev = y_left;
        for (std::size_t q = 1; q <= n + 1; ++q) {
            const double cur = phi0 + phi1 * prev + std::sqrt(sigma2 / w[q - 1]) * rng.normal();
            if (q <= n) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q - 1)) = cur;
            prev = cur;
        }
        e(static_cast<Eigen::Index>(r)) = prev;
    }
    const double N = static_cast<double>(paths);
    const double e_bar = e.mean();
    const Eigen::VectorXd ec = e.array() - e_bar;
    const double sxx = ec.squaredNorm();
    Eigen::MatrixXd resid(paths, n);
    MonteCarloMoments out;
    out.est.mean.resize(n);
    out.mean_se.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = x.col(static_cast<Eigen::Index>(i));
        const double x_bar = col.mean();
        const double slope = ec.dot(col) / sxx;
        resid.col(static_cast<Eigen::Index>(i)) =
            col.array() - x_bar - slope * ec.array();
        out.est.mean(static_cast<Eigen::Index>(i)) = x_bar + slope * (y_right - e_bar);
    }
    out.est.cov = resid.transpose() * resid / (N - 2.0);
    out.cov_se.resize(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = out.est.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        out.mean_se(static_cast<Eigen::Index>(i)) =
            std::sqrt(v * (1.0 / N + (y_right - e_bar) * (y_right - e_bar) / sxx));
        for (std::size_t j = 0; j < n; ++j) {
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(j);
            out.cov_se(a, b) = std::sqrt(
                (out.est.cov(a, a) * out.est.cov(b, b) + out.est.cov(a, b) * out.est.cov(a, b)) / N);
        }
    }
    return out;
}

// Observed-data log-likelihood of the Gaussian AR(1) model conditional on
// y_1: each gap of m steps between consecutive observed samples contributes
// the m-step transition density.
inline double gaussian_observed_loglik(const tailar::ObservedSeries& s, const tailar::Params& p) {
    const auto& y = s.values();
    double ll = 0.0;
    std::size_t last = 0;
    for (std::size_t t = 1; t < s.size(); ++t) {
        if (!s.observed(t)) continue;
        const std::size_t m = t - last;
        double mean = y[last];
        double var = 0.0;
        for (std::size_t q = 0; q < m; ++q) {
            mean = p.phi0 + p.phi1 * mean;
            var = p.phi1 * p.phi1 * var + p.sigma2;
        }
        const double r = y[t] - mean;
        ll += -0.5 * std::log(2.0 * M_PI * var) - 0.5 * r * r / var;
        last = t;
    }
    return ll;
}

// Ordinary least squares of y_t on (1, y_{t-1}) for a complete series.
inline tailar::Params ols_ar1(std::span<const double> y) {
    const std::size_t n = y.size() - 1;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        X(static_cast<Eigen::Index>(i), 1) = y[i];
        z(static_cast<Eigen::Index>(i)) = y[i + 1];
    }
    const Eigen::Vector2d b = X.colPivHouseholderQr().solve(z);
    const double rss = (z - X * b).squaredNorm();
    return {b(0), b(1), rss / static_cast<double>(n), std::numeric_limits<double>::infinity()};
}

// Richardson-extrapolated central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h) {
    auto central = [&](double step) { return (f(x + step) - f(x - step)) / (2.0 * step); };
    return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

// Maximizes f over R^3 by a coarse grid search followed by damped Newton
// steps with finite-difference derivatives.
inline Eigen::Vector3d maximize3(const std::function<double(const Eigen::Vector3d&)>& f,
                                 const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                                 int grid = 21) {
    Eigen::Vector3d best = lo;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid; ++a) {
        for (int b = 0; b < grid; ++b) {
            for (int c = 0; c < grid; ++c) {
                Eigen::Vector3d x;
                x << lo(0) + (hi(0) - lo(0)) * a / (grid - 1),
                    lo(1) + (hi(1) - lo(1)) * b / (grid - 1),
                    lo(2) + (hi(2) - lo(2)) * c / (grid - 1);
                const double v = f(x);
                if (v > best_val) {
                    best_val = v;
                    best = x;
                }
            }
        }
    }
    Eigen::Vector3d x = best;
    for (int it = 0; it < 200; ++it) {
        const double h = 1e-4;
        Eigen::Vector3d g;
        Eigen::Matrix3d H;
        for (int i = 0; i < 3; ++i) {
            g(i) = derivative(
                [&](double v) {
                    Eigen::Vector3d z = x;
                    z(i) = v;
                    return f(z);
                },
                x(i), h);
            for (int j = 0; j < 3; ++j) {
                Eigen::Vector3d pp = x, pm = x, mp = x, mm = x;
                pp(i) += h; pp(j) += h;
                pm(i) += h; pm(j) -= h;
                mp(i) -= h; mp(j) += h;
                mm(i) -= h; mm(j) -= h;
                H(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
            }
        }
        Eigen::Vector3d step = -H.ldlt().solve(g);
        if (!step.allFinite()) break;
        double t = 1.0;
        const double base = f(x);
        while (t > 1e-8 && !(f(x + t * step) >= base)) t *= 0.5;
        x += t * step;
        if ((t * step).norm() < 1e-13 * (1.0 + x.norm())) break;
    }
    return x;
}

// Kolmogorov-Smirnov statistic of `u` (already mapped through the
// hypothesised CDF) against Uniform(0, 1).
inline double ks_statistic(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double k = static_cast<double>(i);
        d = std::max({d, (k + 1.0) / n - u[i], u[i] - k / n});
    }
    return d;
}

// Critical value at level alpha, asymptotic distribution with Stephens'
// finite-sample correction.
inline double ks_critical(std::size_t n, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    const double rn = std::sqrt(static_cast<double>(n));
    return c / (rn + 0.12 + 0.11 / rn);
}

inline double gamma_cdf(double x, double shape, double rate) {
    return boost::math::gamma_p(shape, rate * x);
}

}  // namespace oracle
