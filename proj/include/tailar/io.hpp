#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tailar/experiments.hpp"
#include "tailar/model.hpp"
#include "tailar/saem.hpp"

namespace tailar::io {

using Json = nlohmann::ordered_json;

struct CsvOptions {
    bool trim_edges = false;
};

/// Parsed CSV plus the number of leading rows dropped by trim_edges.
struct CsvSeries {
    ObservedSeries series;
    std::size_t offset = 0;
};

/// Reads a `value` (or `t,value`) CSV. Cells "NA", "na", "NaN" or empty are
/// missing. Throws DataError with the offending line number.
CsvSeries parse_csv_text(std::string_view text, const CsvOptions& options = {});
CsvSeries parse_csv(const std::string& path, const CsvOptions& options = {});

/// Writes "t,value" rows, NA for missing samples; t is 1-based plus `offset`.
void write_csv(std::ostream& out, const ObservedSeries& series, std::size_t offset = 0);
void write_values_csv(std::ostream& out, std::span<const double> values);

/// Decimal text for a double with 17 significant digits.
std::string format_double(double x);

/// Serializes with 17-significant-digit floats; output is byte-stable.
std::string dump(const Json& j, int indent = 2);

Json params_json(const Params& p);
Json to_json(const FitResult& r, Variant variant, std::size_t T);
Json gaussian_json(const GaussianFit& g, std::size_t T);
Json to_json(const McReport& r);
Json to_json(const RobustnessReport& r);
Json to_json(const Prediction& p, std::size_t offset = 0);
Json to_json(const ImputeResult& r, std::size_t offset = 0);

/// Reads phi0, phi1, sigma2 and nu (a number or "inf") from a fit JSON
/// document.
Params params_from_json(const Json& j);
Params read_params(const std::string& path);

void write_runs_csv(std::ostream& out, const McReport& r);
void write_robustness_csv(std::ostream& out, const RobustnessReport& r);
void write_prediction_csv(std::ostream& out, const Prediction& p, std::size_t offset = 0);
void write_impute_csv(std::ostream& out, const ImputeResult& r, std::size_t offset = 0);

}  // namespace tailar::io
