#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "oracles.hpp"
#include "tailar/errors.hpp"
#include "tailar/sampler.hpp"

using namespace tailar;

namespace {

struct Summary {
    double mean = 0.0;
    double var = 0.0;
};

Summary summarize(const std::vector<double>& x) {
    Summary s;
    for (double v : x) s.mean += v;
    s.mean /= static_cast<double>(x.size());
    for (double v : x) s.var += (v - s.mean) * (v - s.mean);
    s.var /= static_cast<double>(x.size() - 1);
    return s;
}

std::vector<double> gamma_draws(double shape, double rate, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = sample_gamma(shape, rate, rng);
    return out;
}

bool ks_accepts(const std::vector<double>& draws, double shape, double rate) {
    std::vector<double> u;
    u.reserve(draws.size());
    for (double x : draws) u.push_back(oracle::gamma_cdf(x, shape, rate));
    return oracle::ks_statistic(u) < oracle::ks_critical(u.size(), 0.001);
}

}  // namespace

TEST_CASE("sample_gamma: moments of Gamma(2, 2)") {
    const auto x = gamma_draws(2.0, 2.0, 1'000'000, 1);
    const auto s = summarize(x);
    const double n = 1e6;
    CHECK(std::abs(s.mean - 1.0) < 5.0 * std::sqrt(0.5 / n));
    // Var(sample variance) ~ (mu4 - sigma^4) / n; for Gamma(a, b) the central
    // fourth moment is 3a(a+2)/b^4 = 1.5.
    CHECK(std::abs(s.var - 0.5) < 5.0 * std::sqrt((1.5 - 0.25) / n));
}

TEST_CASE("sample_gamma: KS against the analytic CDF") {
    CHECK(ks_accepts(gamma_draws(0.5, 0.5, 50'000, 2), 0.5, 0.5));
    CHECK(ks_accepts(gamma_draws(0.05, 3.0, 50'000, 3), 0.05, 3.0));
    CHECK(ks_accepts(gamma_draws(1.0, 1.0, 50'000, 4), 1.0, 1.0));
    CHECK(ks_accepts(gamma_draws(37.5, 0.2, 50'000, 5), 37.5, 0.2));
    // Rate scaling: Gamma(a, c b) ~ Gamma(a, b) / c.
    auto scaled = gamma_draws(3.0, 1.0, 50'000, 6);
    for (auto& v : scaled) v /= 4.0;
    CHECK(ks_accepts(scaled, 3.0, 4.0));
    // The KS test does detect a wrong rate.
    CHECK_FALSE(ks_accepts(gamma_draws(3.0, 1.1, 50'000, 7), 3.0, 1.0));
}

TEST_CASE("sample_gamma: positivity, determinism and validation") {
    const auto a = gamma_draws(0.01, 1.0, 10'000, 8);
    for (double v : a) CHECK(v > 0.0);
    CHECK(a == gamma_draws(0.01, 1.0, 10'000, 8));
    Rng rng(1);
    CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_gamma(1.0, -1.0, rng), ConfigError);
}

TEST_CASE("sample_tau: conditional laws under direct substitution") {
    Rng rng(9);
    const std::size_t n = 100'000;
    // Zero residual, nu = 3: Gamma(2, 1.5), mean 4/3.
    // y_t = 1 with y_{t-1} = 0 and phi = 0, sigma2 = 1, nu = 3: Gamma(2, 2), mean 1.
    const Params p{0.0, 0.0, 1.0, 3.0};
    const std::vector<double> y{0.0, 0.0, 1.0};
    std::vector<double> t0(n), t1(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto tau = sample_tau(y, p, rng);
        REQUIRE(tau.size() == 2);
        t0[i] = tau[0];
        t1[i] = tau[1];
    }
    const auto s0 = summarize(t0);
    const auto s1 = summarize(t1);
    CHECK(std::abs(s0.mean - 4.0 / 3.0) < 5.0 * std::sqrt(2.0 / (1.5 * 1.5) / n));
    CHECK(std::abs(s1.mean - 1.0) < 5.0 * std::sqrt(0.5 / n));
    CHECK(ks_accepts(t0, 2.0, 1.5));
    CHECK(ks_accepts(t1, 2.0, 2.0));
}

TEST_CASE("sample_tau: Gaussian limit and validation") {
    Rng rng(1);
    const auto tau = sample_tau(std::vector<double>{0, 1, 2, 3},
                                {0, 0, 1, std::numeric_limits<double>::infinity()}, rng);
    CHECK(tau == std::vector<double>(3, 1.0));
    CHECK_THROWS_AS(sample_tau(std::vector<double>{1.0}, {0, 0, 1, 3}, rng), ConfigError);
    CHECK_THROWS_AS(sample_tau(std::vector<double>{1.0, 2.0}, {0, 0, 0, 3}, rng), ConfigError);
}

TEST_CASE("block_conditional: random-walk bridge midpoint") {
    const std::vector<double> tau{1.0, 1.0};
    const auto bc = block_conditional({0, 1}, tau, {0.0, 1.0, 0.7, 3.0}, 2.0, 5.0);
    CHECK(std::abs(bc.mean(0) - 3.5) < 1e-10);
    CHECK(std::abs(bc.cov(0, 0) - 0.35) < 1e-10);
    CHECK(bc.jitter == 0.0);
}

TEST_CASE("block_conditional: independence when phi1 = 0") {
    const std::vector<double> tau{0.4, 2.5};
    const auto bc = block_conditional({0, 1}, tau, {0.0, 0.0, 0.3, 3.0}, -1.0, 4.0);
    CHECK(std::abs(bc.mean(0)) < 1e-10);
    CHECK(std::abs(bc.cov(0, 0) - 0.3 / 0.4) < 1e-10);

    const std::vector<double> tau3{0.5, 2.0, 1.5, 0.9};
    const auto b3 = block_conditional({0, 3}, tau3, {0.7, 0.0, 2.0, 3.0}, 9.0, -9.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(b3.mean(i) - 0.7) < 1e-10);
        for (int j = 0; j < 3; ++j) {
            const double expected = i == j ? 2.0 / tau3[static_cast<std::size_t>(i)] : 0.0;
            CHECK(std::abs(b3.cov(i, j) - expected) < 1e-10);
        }
    }
}

TEST_CASE("block_conditional agrees with the negative-power closed forms") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> ud(0.2, 3.0);
    for (double phi1 : {-0.9, -0.5, 0.5, 0.9, 1.0}) {
        for (std::size_t n : {1u, 2u, 3u, 5u, 8u}) {
            const std::size_t offset = 2;
            std::vector<double> tau(offset + n + 3);
            for (auto& v : tau) v = ud(gen);
            const Params p{0.4, phi1, 0.05, 3.0};
            const MissingBlock b{offset, n};
            const double yl = 1.3, yr = -0.4;
            const auto bc = block_conditional(b, tau, p, yl, yr);
            // tau index for block coordinate q (1-based) is t_d + q - 1.
            const std::span<const double> w(tau.data() + offset, n + 1);
            const auto ref = oracle::negative_power_block_moments(n, w, p.phi0, phi1, p.sigma2, yl, yr);
            const double mscale = std::max(1.0, ref.mean.cwiseAbs().maxCoeff());
            const double cscale = ref.cov.cwiseAbs().maxCoeff();
            CHECK((bc.mean - ref.mean).cwiseAbs().maxCoeff() <= 1e-9 * mscale);
            CHECK((bc.cov - ref.cov).cwiseAbs().maxCoeff() <= 1e-9 * cscale);
        }
    }
}

TEST_CASE("block_conditional: factor, symmetry and padding invariants") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ud(0.05, 4.0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + gen() % 12;
        std::vector<double> tau(n + 1);
        for (auto& v : tau) v = ud(gen);
        const Params p{0.1, -1.2 + 2.4 * (gen() % 1000) / 1000.0, 0.02, 4.0};
        const auto bc = block_conditional({0, n}, tau, p, 0.5, 0.2);
        CHECK((bc.cov - bc.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::MatrixXd rebuilt = bc.chol * bc.chol.transpose();
        CHECK((rebuilt - bc.cov).cwiseAbs().maxCoeff() <=
              1e-10 * bc.cov.cwiseAbs().maxCoeff() + bc.jitter);
        CHECK(bc.chol.isLowerTriangular());
    }
    const std::vector<double> tau{1.0, 1.0};
    CHECK_THROWS_AS(block_conditional({0, 0}, tau, {0, 0.5, 1, 3}, 0, 0), ConfigError);
    CHECK_THROWS_AS(block_conditional({1, 1}, tau, {0, 0.5, 1, 3}, 0, 0), ConfigError);
}

TEST_CASE("block_conditional matches forward-simulation conditioning") {
    // Conditioning oracle on 10^6 forward paths; every moment within 3 MC SEs.
    const Params p{1.0, 0.5, 0.01, 3.0};
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> ud(0.3, 2.5);
    for (std::size_t n : {1u, 2u, 3u}) {
        std::vector<double> tau(n + 1);
        for (auto& v : tau) v = ud(gen);
        const double yl = 2.1, yr = 1.9;
        const auto bc = block_conditional({0, n}, tau, p, yl, yr);
        const auto mc = oracle::forward_simulation_moments(n, tau, p.phi0, p.phi1, p.sigma2, yl, yr,
                                                           1'000'000, 100 + n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<Eigen::Index>(i);
            CHECK(std::abs(bc.mean(a) - mc.est.mean(a)) < 3.0 * mc.mean_se(a));
            for (std::size_t j = 0; j < n; ++j) {
                const auto b = static_cast<Eigen::Index>(j);
                CHECK(std::abs(bc.cov(a, b) - mc.est.cov(a, b)) < 3.0 * mc.cov_se(a, b));
            }
        }
    }
}

TEST_CASE("sample_missing: single-point moments and independence") {
    // phi = 0: y_2 | tau ~ N(0, sigma2 / tau_2); two separated blocks are
    // independent and uncorrelated.
    const ObservedSeries s({0.0, 0.0, 5.0, 0.0, 0.0, -3.0}, {true, false, true, true, false, true});
    const std::vector<double> tau{0.5, 2.0, 1.0, 4.0, 1.0};
    const Params p{0.0, 0.0, 0.2, 3.0};
    Rng rng(12);
    const std::size_t n = 100'000;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = sample_missing(s, tau, p, rng);
        REQUIRE(f.size() == 2);
        a[i] = f[0];
        b[i] = f[1];
    }
    const auto sa = summarize(a);
    const auto sb = summarize(b);
    const double va = 0.2 / 0.5, vb = 0.2 / 4.0;
    CHECK(std::abs(sa.mean) < 5.0 * std::sqrt(va / n));
    CHECK(std::abs(sb.mean) < 5.0 * std::sqrt(vb / n));
    CHECK(std::abs(sa.var - va) < 5.0 * va * std::sqrt(2.0 / n));
    CHECK(std::abs(sb.var - vb) < 5.0 * vb * std::sqrt(2.0 / n));
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (a[i] - sa.mean) * (b[i] - sb.mean);
    cov /= static_cast<double>(n - 1);
    CHECK(std::abs(cov / std::sqrt(sa.var * sb.var)) < 0.02);
}

TEST_CASE("sample_missing: diagonal block gives uncorrelated components") {
    const ObservedSeries s({1.0, 0.0, 0.0, 0.0, 1.0}, {true, false, false, false, true});
    const std::vector<double> tau{1.0, 0.5, 2.0, 1.0};
    const Params p{0.0, 0.0, 1.0, 3.0};
    Rng rng(2);
    const std::size_t n = 100'000;
    std::vector<double> x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = sample_missing(s, tau, p, rng);
        x[i] = f[0];
        z[i] = f[2];
    }
    const auto sx = summarize(x), sz = summarize(z);
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (x[i] - sx.mean) * (z[i] - sz.mean);
    cov /= static_cast<double>(n - 1);
    CHECK(std::abs(cov / std::sqrt(sx.var * sz.var)) < 0.02);
}

TEST_CASE("sample_missing and gibbs_step: determinism and observed values untouched") {
    const auto y = simulate_ar1({1.0, 0.5, 0.01, 2.5}, 200, 4);
    const auto s = apply_missing(y, 0.2, 5);
    const Params p{1.0, 0.5, 0.01, 2.5};
    LatentState st{std::vector<double>(199, 1.0), std::vector<double>(s.missing_count(), 2.0)};
    Rng r1(3), r2(3);
    LatentState a = st, b = st;
    for (int i = 0; i < 20; ++i) {
        a = gibbs_step(a, s, p, r1);
        b = gibbs_step(b, s, p, r2);
        CHECK(a == b);
    }
    CHECK(a.fills.size() == s.missing_count());
    CHECK(a.tau.size() == 199);
    for (double t : a.tau) CHECK(t > 0.0);
    const auto completed = s.completed(a.fills);
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (s.observed(t)) CHECK(completed[t] == y[t]);
    }
}

TEST_CASE("gibbs_step: no missing values refreshes tau only") {
    const auto y = simulate_ar1({1.0, 0.5, 0.01, 2.5}, 50, 4);
    const ObservedSeries s(y);
    Rng rng(1);
    const LatentState st{std::vector<double>(49, 1.0), {}};
    const auto next = gibbs_step(st, s, {1.0, 0.5, 0.01, 2.5}, rng);
    CHECK(next.fills.empty());
    CHECK(next.tau != st.tau);
}

TEST_CASE("gibbs_step: stationary expectation of log tau") {
    // Chain started from the model at the true parameters. The chain
    // average of log tau_t must match the average of its conditional
    // expectation psi((nu+1)/2) - log(res^2/(2 sigma2) + nu/2).
    const Params p{1.0, 0.5, 0.01, 2.5};
    const auto y = simulate_ar1(p, 120, 31);
    const auto s = apply_missing(y, 0.15, 32);
    LatentState st;
    for (std::size_t t : s.missing_indices()) st.fills.push_back(y[t]);
    Rng rng(33);
    st.tau = sample_tau(y, p, rng);
    const std::size_t steps = 10'000;
    double sum_log = 0.0, sum_expect = 0.0;
    std::vector<double> per_step;
    per_step.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        // tau is drawn from the fills held before the sweep.
        const auto before = s.completed(st.fills);
        st = gibbs_step(st, s, p, rng);
        double lg = 0.0, ex = 0.0;
        for (std::size_t t = 1; t < before.size(); ++t) {
            const double r = before[t] - p.phi0 - p.phi1 * before[t - 1];
            lg += std::log(st.tau[t - 1]);
            ex += boost::math::digamma((p.nu + 1.0) / 2.0) -
                  std::log(r * r / (2.0 * p.sigma2) + p.nu / 2.0);
        }
        sum_log += lg;
        sum_expect += ex;
        per_step.push_back(lg - ex);
    }
    // Batch-means standard error of the per-step difference.
    const std::size_t batches = 50, len = steps / batches;
    std::vector<double> bm(batches, 0.0);
    for (std::size_t i = 0; i < steps; ++i) bm[i / len] += per_step[i] / static_cast<double>(len);
    const auto sb = summarize(bm);
    const double se = std::sqrt(sb.var / static_cast<double>(batches));
    CHECK(std::abs(sum_log - sum_expect) / static_cast<double>(steps) < 4.0 * se);
}
