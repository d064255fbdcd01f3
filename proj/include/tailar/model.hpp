#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tailar {

/// Parameters of the Student's-t AR(1) model
/// y_t = phi0 + phi1 * y_{t-1} + eps_t,  eps_t ~ t(0, sigma2, nu).
struct Params {
    double phi0 = 0.0;
    double phi1 = 0.0;
    double sigma2 = 1.0;
    double nu = 5.0;  ///< +inf denotes Gaussian innovations

    bool operator==(const Params&) const = default;
};

/// Throws ConfigError unless sigma2 > 0, nu > 0 and phi0/phi1 are finite.
void validate(const Params& params);

/// A maximal run of consecutive missing samples. `t_d` is the (0-based)
/// index of the last observed sample before the run; the run covers
/// t_d+1 .. t_d+n_d and t_d+n_d+1 is observed again.
struct MissingBlock {
    std::size_t t_d = 0;
    std::size_t n_d = 0;

    std::size_t first() const noexcept { return t_d + 1; }
    std::size_t right_anchor() const noexcept { return t_d + n_d + 1; }

    bool operator==(const MissingBlock&) const = default;
};

/// Maximal runs of `false` in `mask`. Throws DataError when the first or
/// last sample is missing.
std::vector<MissingBlock> find_missing_blocks(const std::vector<bool>& mask);

/**
 * @brief Time series with a missing-value mask.
 *
 * Invariants (checked at construction): T >= 3, observed values finite,
 * first and last samples observed. Unobserved entries of `values()` are NaN.
 */
class ObservedSeries {
public:
    ObservedSeries(std::vector<double> values, std::vector<bool> mask);

    /// Fully observed series.
    explicit ObservedSeries(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<bool>& mask() const noexcept { return mask_; }
    bool observed(std::size_t t) const { return mask_[t]; }
    const std::vector<MissingBlock>& blocks() const noexcept { return blocks_; }
    const std::vector<std::size_t>& missing_indices() const noexcept { return missing_; }
    std::size_t missing_count() const noexcept { return missing_.size(); }

    /// Observed values with `fills` (one per missing index, in index order)
    /// written into the gaps.
    std::vector<double> completed(std::span<const double> fills) const;

private:
    std::vector<double> values_;
    std::vector<bool> mask_;
    std::vector<MissingBlock> blocks_;
    std::vector<std::size_t> missing_;
};

/// Drops leading and trailing missing runs. Returns the number of samples
/// removed from the front via `offset` when non-null.
ObservedSeries trim_edges(std::vector<double> values, std::vector<bool> mask,
                          std::size_t* offset = nullptr);

/// The seven sufficient statistics of the complete-data likelihood:
/// s1 = sum(log tau - tau), s2 = sum tau y_t^2, s3 = sum tau,
/// s4 = sum tau y_{t-1}^2, s5 = sum tau y_t, s6 = sum tau y_t y_{t-1},
/// s7 = sum tau y_{t-1}; all sums over t = 2..T.
struct SuffStats {
    std::array<double, 7> s{};

    double operator[](std::size_t i) const { return s[i]; }
    double& operator[](std::size_t i) { return s[i]; }
    double s1() const { return s[0]; }
    double s2() const { return s[1]; }
    double s3() const { return s[2]; }
    double s4() const { return s[3]; }
    double s5() const { return s[4]; }
    double s6() const { return s[5]; }
    double s7() const { return s[6]; }

    bool operator==(const SuffStats&) const = default;
};

/// State of one Gibbs chain: mixture weights for t = 2..T (T-1 entries) and
/// the current fills of the missing samples.
struct LatentState {
    std::vector<double> tau;
    std::vector<double> fills;

    bool operator==(const LatentState&) const = default;
};

/// log density of t(mu, sigma2, nu) at y.
double student_t_logpdf(double y, double mu, double sigma2, double nu);

/// Stationary mean phi0 / (1 - phi1) when |phi1| < 1, else 0.
double default_initial_value(const Params& params);

/// Simulates T samples starting from y1. Innovations are drawn through the
/// Gaussian scale mixture (z * sqrt(sigma2 / tau), tau ~ Gamma(nu/2, nu/2));
/// nu = +inf gives Gaussian innovations. sigma2 = 0 is accepted here and
/// yields the deterministic recursion.
std::vector<double> simulate_ar1(const Params& params, std::size_t T, double y1,
                                 std::uint64_t seed);

/// Same, starting from default_initial_value(params).
std::vector<double> simulate_ar1(const Params& params, std::size_t T, std::uint64_t seed);

/// Deletes round(rho * T) interior samples chosen uniformly without
/// replacement; the first and last samples stay observed.
ObservedSeries apply_missing(std::span<const double> y, double rho, std::uint64_t seed);

/// Evaluates the sufficient statistics for a completed series y (length T)
/// and weights tau (length T-1, tau[i] pairs with y[i+1]).
SuffStats sufficient_statistics(std::span<const double> y, std::span<const double> tau);

/// Surrogate objective -psi(theta) + <s, phi(theta)> for a series of length
/// T, omitting the theta-free terms -(T-1)/2 log(2 pi) and log h(y, tau).
double q_value(const Params& params, const SuffStats& stats, std::size_t T);

}  // namespace tailar
