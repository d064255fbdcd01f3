#include "tailar/cli.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <cmath>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "tailar/errors.hpp"
#include "tailar/experiments.hpp"
#include "tailar/io.hpp"
#include "tailar/model.hpp"
#include "tailar/rng.hpp"
#include "tailar/saem.hpp"

namespace tailar::cli {

namespace {

struct SeedOption {
    std::uint64_t value = 0;
    CLI::Option* option = nullptr;

    void add(CLI::App& app) {
        option = app.add_option("--seed", value, "Random seed (falls back to $TAILAR_SEED)");
    }

    std::uint64_t resolve() const {
        if (option != nullptr && option->count() > 0) return value;
        if (const char* env = std::getenv("TAILAR_SEED"); env != nullptr && *env != '\0') {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (end == nullptr || *end != '\0') {
                throw ConfigError("TAILAR_SEED must be a non-negative integer");
            }
            return v;
        }
        return 0;
    }
};

struct SaemFlags {
    std::size_t chains = 10;
    std::size_t warmup = 30;
    std::size_t max_iter = 150;
    std::string variant = "full";
    double nu0 = 5.0;
    bool random_nu0 = false;
    double nu_lo = 2.001;
    double nu_hi = 300.0;
    double eps = 1e-5;
    std::size_t patience = 10;
    double step_exponent = 1.0;

    void add(CLI::App& app) {
        app.add_option("--L,--chains", chains, "Parallel Gibbs chains")->capture_default_str();
        app.add_option("--K,--warmup", warmup, "Iterations with unit step size")
            ->capture_default_str();
        app.add_option("--max-iter", max_iter, "Maximum SAEM iterations")->capture_default_str();
        app.add_option("--variant", variant, "full | zero-mean | random-walk")
            ->capture_default_str();
        app.add_option("--nu0", nu0, "Initial degrees of freedom")->capture_default_str();
        app.add_flag("--random-nu0", random_nu0, "Draw the initial nu in [2.1, 10] from the seed");
        app.add_option("--nu-lo", nu_lo, "Lower end of the nu bracket")->capture_default_str();
        app.add_option("--nu-hi", nu_hi, "Upper end of the nu bracket")->capture_default_str();
        app.add_option("--eps", eps, "Relative-change stopping threshold")->capture_default_str();
        app.add_option("--patience", patience, "Iterations below eps before stopping")
            ->capture_default_str();
        app.add_option("--step-exponent", step_exponent,
                       "Step sizes (k-K)^(-a) after warm-up, a in (0.5, 1]")
            ->capture_default_str();
    }

    SaemConfig config(std::uint64_t seed) const {
        SaemConfig c;
        c.chains = chains;
        c.warmup = warmup;
        c.max_iter = max_iter;
        c.variant = parse_variant(variant);
        c.nu0 = nu0;
        c.randomize_nu0 = random_nu0;
        c.nu_lo = nu_lo;
        c.nu_hi = nu_hi;
        c.eps = eps;
        c.patience = patience;
        c.step_exponent = step_exponent;
        c.seed = seed;
        validate(c);
        return c;
    }
};

// Writes `text` to `path`, or to `out` when path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << text;
    if (!f) throw DataError("failed writing '" + path + "'");
}

std::string truth_path(const std::string& path) {
    const std::string ext = ".csv";
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
        return path.substr(0, path.size() - ext.size()) + ".truth.csv";
    }
    return path + ".truth.csv";
}

void check_format(const std::string& format) {
    if (format != "json" && format != "csv") {
        throw ConfigError("--format must be json or csv");
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Student's-t AR(1) estimation from incomplete time series", "tailar"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a (masked) t-AR(1) series");
    Params sim_params{1.0, 0.5, 0.01, 2.5};
    std::size_t sim_T = 300;
    double sim_rho = 0.0;
    double sim_y1 = std::numeric_limits<double>::quiet_NaN();
    std::string sim_out;
    SeedOption sim_seed;
    sim->add_option("--phi0", sim_params.phi0)->capture_default_str();
    sim->add_option("--phi1", sim_params.phi1)->capture_default_str();
    sim->add_option("--sigma2", sim_params.sigma2)->capture_default_str();
    sim->add_option("--nu", sim_params.nu, "Degrees of freedom (inf for Gaussian)")
        ->capture_default_str();
    sim->add_option("--T", sim_T, "Series length")->capture_default_str();
    sim->add_option("--rho", sim_rho, "Fraction of interior samples deleted")
        ->capture_default_str();
    sim->add_option("--y1", sim_y1, "First sample (default: stationary mean)");
    sim->add_option("-o,--output", sim_out, "Output CSV (a .truth.csv companion is written)");
    sim_seed.add(*sim);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Estimate parameters with SAEM-MCMC");
    std::string fit_in;
    std::string fit_out;
    std::string fit_model = "t";
    bool fit_trim = false;
    SaemFlags fit_flags;
    SeedOption fit_seed;
    fit_cmd->add_option("-i,--input", fit_in, "Input CSV")->required();
    fit_cmd->add_option("-o,--output", fit_out, "Output JSON (default stdout)");
    fit_cmd->add_option("--model", fit_model, "t | gaussian")->capture_default_str();
    fit_cmd->add_flag("--trim-edges", fit_trim, "Drop leading/trailing missing runs");
    fit_flags.add(*fit_cmd);
    fit_seed.add(*fit_cmd);

    // impute
    auto* imp = app.add_subcommand("impute", "Posterior mean/sd of the missing samples");
    std::string imp_in;
    std::string imp_params;
    std::string imp_out;
    std::string imp_format = "csv";
    std::size_t imp_draws = 1000;
    std::size_t imp_burn = 100;
    bool imp_trim = false;
    SeedOption imp_seed;
    imp->add_option("-i,--input", imp_in, "Input CSV")->required();
    imp->add_option("--params", imp_params, "Fit JSON with phi0, phi1, sigma2, nu")->required();
    imp->add_option("--draws", imp_draws, "Kept Gibbs sweeps")->capture_default_str();
    imp->add_option("--burn-in", imp_burn, "Discarded Gibbs sweeps")->capture_default_str();
    imp->add_option("--format", imp_format, "csv | json")->capture_default_str();
    imp->add_option("-o,--output", imp_out, "Output file (default stdout)");
    imp->add_flag("--trim-edges", imp_trim, "Drop leading/trailing missing runs");
    imp_seed.add(*imp);

    // predict
    auto* pred = app.add_subcommand("predict", "One-step-ahead predictions");
    std::string pred_in;
    std::string pred_params;
    std::string pred_out;
    std::string pred_format = "json";
    std::vector<std::size_t> pred_exclude;
    bool pred_trim = false;
    pred->add_option("-i,--input", pred_in, "Input CSV")->required();
    pred->add_option("--params", pred_params, "Fit JSON with phi0, phi1, sigma2, nu")
        ->required();
    pred->add_option("--exclude", pred_exclude, "1-based indices left out of the averaged error")
        ->delimiter(',');
    pred->add_option("--format", pred_format, "json | csv")->capture_default_str();
    pred->add_option("-o,--output", pred_out, "Output file (default stdout)");
    pred->add_flag("--trim-edges", pred_trim, "Drop leading/trailing missing runs");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Monte-Carlo experiments");
    bench->require_subcommand(1);
    auto* mse = bench->add_subcommand("mse", "MSE of the estimates over simulated series");
    Params mse_truth{1.0, 0.5, 0.01, 2.5};
    std::size_t mse_T = 300;
    double mse_rho = 0.1;
    std::size_t mse_runs = 20;
    std::size_t mse_threads = 1;
    std::string mse_out;
    std::string mse_csv;
    std::string mse_format = "json";
    SaemFlags mse_flags;
    SeedOption mse_seed;
    mse->add_option("--phi0", mse_truth.phi0)->capture_default_str();
    mse->add_option("--phi1", mse_truth.phi1)->capture_default_str();
    mse->add_option("--sigma2", mse_truth.sigma2)->capture_default_str();
    mse->add_option("--nu", mse_truth.nu)->capture_default_str();
    mse->add_option("--T", mse_T)->capture_default_str();
    mse->add_option("--rho", mse_rho)->capture_default_str();
    mse->add_option("--runs", mse_runs)->capture_default_str();
    mse->add_option("--threads", mse_threads)->capture_default_str();
    mse->add_option("--format", mse_format, "json | csv")->capture_default_str();
    mse->add_option("-o,--output", mse_out, "Report file (default stdout)");
    mse->add_option("--csv", mse_csv, "Also write per-run estimates as CSV");
    mse_flags.add(*mse);
    mse_seed.add(*mse);

    auto* rob = bench->add_subcommand("robustness", "t vs Gaussian fits under innovation outliers");
    RobustnessConfig rob_cfg;
    std::size_t rob_threads = 1;
    std::string rob_out;
    std::string rob_format = "json";
    SaemFlags rob_flags;
    rob_flags.variant = "zero-mean";
    SeedOption rob_seed;
    rob->add_option("--seeds", rob_cfg.n_seeds, "Number of replicates")->capture_default_str();
    rob->add_option("--T", rob_cfg.T)->capture_default_str();
    rob->add_option("--rho", rob_cfg.rho)->capture_default_str();
    rob->add_option("--phi1", rob_cfg.phi1)->capture_default_str();
    rob->add_option("--sigma2", rob_cfg.sigma2)->capture_default_str();
    rob->add_option("--magnitudes", rob_cfg.magnitudes, "Outlier sizes, comma separated")
        ->delimiter(',');
    rob->add_option("--threads", rob_threads)->capture_default_str();
    rob->add_option("--format", rob_format, "json | csv")->capture_default_str();
    rob->add_option("-o,--output", rob_out, "Report file (default stdout)");
    rob_flags.add(*rob);
    rob_seed.add(*rob);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (sim->parsed()) {
            const std::uint64_t seed = sim_seed.resolve();
            if (!(sim_params.sigma2 >= 0.0) || !(sim_params.nu > 0.0)) {
                throw ConfigError("--sigma2 must be >= 0 and --nu > 0");
            }
            const double y1 = std::isnan(sim_y1) ? default_initial_value(sim_params) : sim_y1;
            const auto y = simulate_ar1(sim_params, sim_T, y1, derive_seed(seed, 1));
            const ObservedSeries series = apply_missing(y, sim_rho, derive_seed(seed, 2));
            std::ostringstream masked;
            io::write_csv(masked, series);
            emit(sim_out, masked.str(), out);
            if (!sim_out.empty()) {
                std::ostringstream truth;
                io::write_values_csv(truth, y);
                emit(truth_path(sim_out), truth.str(), out);
            }
        } else if (fit_cmd->parsed()) {
            const auto csv = io::parse_csv(fit_in, {fit_trim});
            const SaemConfig config = fit_flags.config(fit_seed.resolve());
            io::Json doc;
            if (fit_model == "t") {
                doc = io::to_json(fit(csv.series, config), config.variant, csv.series.size());
            } else if (fit_model == "gaussian") {
                doc = io::gaussian_json(gaussian_em_fit(csv.series, config.gaussian_max_iter,
                                                        config.gaussian_tol, config.variant),
                                        csv.series.size());
                doc["variant"] = std::string(to_string(config.variant));
                doc["diagnostics"]["blocks"] = csv.series.blocks().size();
                doc["diagnostics"]["missing"] = csv.series.missing_count();
            } else {
                throw ConfigError("--model must be t or gaussian");
            }
            if (csv.offset > 0) doc["diagnostics"]["trimmed_leading"] = csv.offset;
            emit(fit_out, io::dump(doc), out);
        } else if (imp->parsed()) {
            check_format(imp_format);
            const auto csv = io::parse_csv(imp_in, {imp_trim});
            const Params params = io::read_params(imp_params);
            const ImputeResult r =
                impute(csv.series, params, imp_draws, imp_seed.resolve(), imp_burn);
            if (imp_format == "json") {
                emit(imp_out, io::dump(io::to_json(r, csv.offset)), out);
            } else {
                std::ostringstream s;
                io::write_impute_csv(s, r, csv.offset);
                emit(imp_out, s.str(), out);
            }
        } else if (pred->parsed()) {
            check_format(pred_format);
            const auto csv = io::parse_csv(pred_in, {pred_trim});
            const Params params = io::read_params(pred_params);
            std::vector<std::size_t> exclude;
            for (std::size_t t : pred_exclude) {
                if (t < 1 + csv.offset) throw ConfigError("--exclude indices are 1-based");
                exclude.push_back(t - 1 - csv.offset);
            }
            const Prediction p = predict_one_step(csv.series, params, exclude);
            if (pred_format == "json") {
                emit(pred_out, io::dump(io::to_json(p, csv.offset)), out);
            } else {
                std::ostringstream s;
                io::write_prediction_csv(s, p, csv.offset);
                emit(pred_out, s.str(), out);
                err << "averaged_error," << io::format_double(p.averaged_error) << '\n';
            }
        } else if (mse->parsed()) {
            check_format(mse_format);
            const std::uint64_t seed = mse_seed.resolve();
            const SaemConfig config = mse_flags.config(seed);
            const McReport r = mc_mse(mse_truth, mse_T, mse_rho, mse_runs, config, seed, mse_threads);
            std::ostringstream runs_csv;
            io::write_runs_csv(runs_csv, r);
            emit(mse_out, mse_format == "json" ? io::dump(io::to_json(r)) : runs_csv.str(), out);
            if (!mse_csv.empty()) emit(mse_csv, runs_csv.str(), out);
        } else if (rob->parsed()) {
            check_format(rob_format);
            const std::uint64_t seed = rob_seed.resolve();
            rob_cfg.seed = seed;
            rob_cfg.saem = rob_flags.config(seed);
            const RobustnessReport r = robustness_experiment(rob_cfg, rob_threads);
            if (rob_format == "json") {
                emit(rob_out, io::dump(io::to_json(r)), out);
            } else {
                std::ostringstream s;
                io::write_robustness_csv(s, r);
                emit(rob_out, s.str(), out);
            }
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}

}  // namespace tailar::cli
