#include "tailar/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "tailar/errors.hpp"

namespace tailar::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// Splits one CSV record; double-quoted cells may contain commas and "".
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    if (quoted) {
        throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    cells.push_back(cell);
    for (auto& c : cells) c = std::string(trim(c));
    return cells;
}

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN";
}

}  // namespace

CsvSeries parse_csv_text(std::string_view text, const CsvOptions& options) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (lines.empty()) throw DataError("CSV input is empty (a header row is required)");

    const auto header = split_record(lines[0], 1);
    std::size_t value_col = 0;
    if (header.size() == 1 && header[0] == "value") {
        value_col = 0;
    } else if (header.size() == 2 && header[0] == "t" && header[1] == "value") {
        value_col = 1;
    } else {
        throw DataError("line 1: header must be 'value' or 't,value'");
    }

    std::vector<double> values;
    std::vector<bool> mask;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto cells = split_record(lines[i], line_no);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()));
        }
        const std::string_view cell = cells[value_col];
        if (is_missing_token(cell)) {
            values.push_back(std::numeric_limits<double>::quiet_NaN());
            mask.push_back(false);
            continue;
        }
        double x = 0.0;
        const char* first = cell.data();
        const char* last = cell.data() + cell.size();
        if (*first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, last, x);
        if (ec != std::errc() || ptr != last || !std::isfinite(x)) {
            throw DataError("line " + std::to_string(line_no) + ": '" + std::string(cell) +
                            "' is not a number");
        }
        values.push_back(x);
        mask.push_back(true);
    }
    if (values.empty()) throw DataError("CSV has a header but no data rows");

    if (options.trim_edges) {
        std::size_t offset = 0;
        ObservedSeries series = trim_edges(std::move(values), std::move(mask), &offset);
        return {std::move(series), offset};
    }
    if (!mask.front() || !mask.back()) {
        const std::size_t row = mask.front() ? mask.size() - 1 : 0;
        throw DataError("line " + std::to_string(row + 2) +
                        ": series must start and end with observed values (pass --trim-edges "
                        "to drop leading/trailing missing runs)");
    }
    return {ObservedSeries(std::move(values), std::move(mask)), 0};
}

CsvSeries parse_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_text(buf.str(), options);
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& out, const ObservedSeries& series, std::size_t offset) {
    out << "t,value\n";
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << (t + 1 + offset) << ',';
        if (series.observed(t)) {
            out << format_double(series.values()[t]);
        } else {
            out << "NA";
        }
        out << '\n';
    }
}

void write_values_csv(std::ostream& out, std::span<const double> values) {
    out << "t,value\n";
    for (std::size_t t = 0; t < values.size(); ++t) {
        out << (t + 1) << ',' << format_double(values[t]) << '\n';
    }
}

namespace {

void dump_into(std::string& out, const Json& j, int indent, int depth) {
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out.push_back('\n');
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out.push_back('{');
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                out += Json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                dump_into(out, it.value(), indent, depth + 1);
            }
            newline(depth);
            out.push_back('}');
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out.push_back('[');
            bool first = true;
            for (const auto& v : j) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                dump_into(out, v, indent, depth + 1);
            }
            newline(depth);
            out.push_back(']');
            return;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

Json number_or_inf(double x) {
    if (std::isinf(x) && x > 0) return "inf";
    return x;
}

}  // namespace

std::string dump(const Json& j, int indent) {
    std::string out;
    dump_into(out, j, indent, 0);
    out.push_back('\n');
    return out;
}

Json params_json(const Params& p) {
    Json j;
    j["phi0"] = p.phi0;
    j["phi1"] = p.phi1;
    j["sigma2"] = p.sigma2;
    j["nu"] = number_or_inf(p.nu);
    return j;
}

Json to_json(const FitResult& r, Variant variant, std::size_t T) {
    Json j;
    j["phi0"] = r.params.phi0;
    j["phi1"] = r.params.phi1;
    j["sigma2"] = r.params.sigma2;
    j["nu"] = r.params.nu;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["model"] = "student-t";
    j["variant"] = std::string(to_string(variant));
    j["s_hat"] = Json::array();
    for (double s : r.s_hat.s) j["s_hat"].push_back(s);
    j["initial"] = params_json(r.initial);
    j["gaussian_init"] = params_json(r.gaussian);
    Json diag;
    diag["T"] = T;
    diag["blocks"] = r.blocks;
    diag["missing"] = r.missing;
    diag["clamped_iterations"] = r.clamped_iterations;
    diag["nu_at_bound"] = r.nu_at_bound;
    diag["q_value"] = r.q_trace;
    j["diagnostics"] = diag;
    Json trace = Json::array();
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
        Json e;
        e["k"] = k + 1;
        e["phi0"] = r.trace[k].phi0;
        e["phi1"] = r.trace[k].phi1;
        e["sigma2"] = r.trace[k].sigma2;
        e["nu"] = r.trace[k].nu;
        trace.push_back(e);
    }
    j["trace"] = trace;
    return j;
}

Json gaussian_json(const GaussianFit& g, std::size_t T) {
    Json j = params_json(g.params);
    j["iterations"] = g.iterations;
    j["converged"] = g.converged;
    j["model"] = "gaussian";
    Json diag;
    diag["T"] = T;
    j["diagnostics"] = diag;
    Json trace = Json::array();
    for (std::size_t k = 0; k < g.trace.size(); ++k) {
        Json e = params_json(g.trace[k]);
        e["k"] = k;
        trace.push_back(e);
    }
    j["trace"] = trace;
    return j;
}

Json to_json(const McReport& r) {
    Json j;
    j["T"] = r.T;
    j["rho"] = r.rho;
    j["n_runs"] = r.n_runs;
    j["seed"] = r.seed;
    j["theta_true"] = params_json(r.theta_true);
    Json cfg;
    cfg["L"] = r.config.chains;
    cfg["K"] = r.config.warmup;
    cfg["max_iter"] = r.config.max_iter;
    cfg["variant"] = std::string(to_string(r.config.variant));
    cfg["nu_lo"] = r.config.nu_lo;
    cfg["nu_hi"] = r.config.nu_hi;
    j["config"] = cfg;
    Json mse;
    mse["phi0"] = r.mse.phi0;
    mse["phi1"] = r.mse.phi1;
    mse["sigma2"] = r.mse.sigma2;
    mse["nu"] = r.mse.nu;
    j["mse"] = mse;
    j["failures"] = r.failures;
    Json runs = Json::array();
    for (const auto& run : r.runs) {
        Json e;
        e["run"] = run.index;
        e["seed"] = run.seed;
        e["ok"] = run.ok;
        if (run.ok) {
            e["phi0"] = run.estimate.phi0;
            e["phi1"] = run.estimate.phi1;
            e["sigma2"] = run.estimate.sigma2;
            e["nu"] = run.estimate.nu;
            e["iterations"] = run.iterations;
        } else {
            e["error"] = run.error;
        }
        runs.push_back(e);
    }
    j["runs"] = runs;
    return j;
}

Json to_json(const RobustnessReport& r) {
    Json j;
    j["T"] = r.config.T;
    j["rho"] = r.config.rho;
    j["phi1_true"] = r.config.phi1;
    j["sigma2_true"] = r.config.sigma2;
    j["magnitudes"] = r.config.magnitudes;
    j["n_seeds"] = r.config.n_seeds;
    j["seed"] = r.config.seed;
    j["t_closer_fraction"] = r.t_closer_fraction;
    j["mean_pred_error_t"] = r.mean_pred_error_t;
    j["mean_pred_error_gaussian"] = r.mean_pred_error_gauss;
    j["failures"] = r.failures;
    Json rows = Json::array();
    for (const auto& row : r.rows) {
        Json e;
        e["seed"] = row.seed;
        e["ok"] = row.ok;
        if (row.ok) {
            Json pos = Json::array();
            for (auto t : row.outliers) pos.push_back(t + 1);
            e["outliers"] = pos;
            e["phi1_t"] = row.phi1_t;
            e["phi1_gaussian"] = row.phi1_gauss;
            e["nu_t"] = row.nu_t;
            e["pred_error_t"] = row.pred_error_t;
            e["pred_error_gaussian"] = row.pred_error_gauss;
        } else {
            e["error"] = row.error;
        }
        rows.push_back(e);
    }
    j["rows"] = rows;
    return j;
}

Json to_json(const Prediction& p, std::size_t offset) {
    Json j;
    j["averaged_error"] = p.averaged_error;
    j["n_used"] = p.n_used;
    Json preds = Json::array();
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        Json e;
        e["t"] = p.t[i] + 1 + offset;
        e["y"] = p.y[i];
        e["yhat"] = p.yhat[i];
        preds.push_back(e);
    }
    j["predictions"] = preds;
    return j;
}

Json to_json(const ImputeResult& r, std::size_t offset) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.indices.size(); ++i) {
        Json e;
        e["t"] = r.indices[i] + 1 + offset;
        e["mean"] = r.mean[i];
        e["sd"] = r.sd[i];
        rows.push_back(e);
    }
    Json j;
    j["imputed"] = rows;
    return j;
}

Params params_from_json(const Json& j) {
    auto number = [&](const char* key) -> double {
        if (!j.contains(key)) throw DataError(std::string("parameter file lacks '") + key + "'");
        const auto& v = j.at(key);
        if (v.is_number()) return v.get<double>();
        if (v.is_string() && v.get<std::string>() == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        throw DataError(std::string("parameter '") + key + "' is not a number");
    };
    Params p{number("phi0"), number("phi1"), number("sigma2"), number("nu")};
    try {
        validate(p);
    } catch (const ConfigError& e) {
        throw DataError(std::string("parameter file: ") + e.what());
    }
    return p;
}

Params read_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
    return params_from_json(j);
}

void write_runs_csv(std::ostream& out, const McReport& r) {
    out << "run,seed,ok,phi0,phi1,sigma2,nu,iterations\n";
    for (const auto& run : r.runs) {
        out << run.index << ',' << run.seed << ',' << (run.ok ? 1 : 0) << ',';
        if (run.ok) {
            out << format_double(run.estimate.phi0) << ',' << format_double(run.estimate.phi1)
                << ',' << format_double(run.estimate.sigma2) << ','
                << format_double(run.estimate.nu) << ',' << run.iterations;
        } else {
            out << "NA,NA,NA,NA,NA";
        }
        out << '\n';
    }
}

void write_robustness_csv(std::ostream& out, const RobustnessReport& r) {
    out << "seed,ok,phi1_t,phi1_gaussian,nu_t,pred_error_t,pred_error_gaussian\n";
    for (const auto& row : r.rows) {
        out << row.seed << ',' << (row.ok ? 1 : 0) << ',';
        if (row.ok) {
            out << format_double(row.phi1_t) << ',' << format_double(row.phi1_gauss) << ','
                << format_double(row.nu_t) << ',' << format_double(row.pred_error_t) << ','
                << format_double(row.pred_error_gauss);
        } else {
            out << "NA,NA,NA,NA,NA";
        }
        out << '\n';
    }
}

void write_prediction_csv(std::ostream& out, const Prediction& p, std::size_t offset) {
    out << "t,y,yhat,sq_error\n";
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        const double e = p.yhat[i] - p.y[i];
        out << p.t[i] + 1 + offset << ',' << format_double(p.y[i]) << ','
            << format_double(p.yhat[i]) << ',' << format_double(e * e) << '\n';
    }
}

void write_impute_csv(std::ostream& out, const ImputeResult& r, std::size_t offset) {
    out << "t,mean,sd\n";
    for (std::size_t i = 0; i < r.indices.size(); ++i) {
        out << r.indices[i] + 1 + offset << ',' << format_double(r.mean[i]) << ','
            << format_double(r.sd[i]) << '\n';
    }
}

}  // namespace tailar::io
