#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "cnpressure/convergence.hpp"
#include "cnpressure/verify.hpp"

namespace {

enum ExitCode { kSuccess = 0, kAssertion = 1, kConfiguration = 2, kSolver = 3 };

struct ConvergenceOptions {
    std::string config_path;
    std::string out;
    std::string experiment;
    long long seed = -1;
    int threads = 0;
};

struct VerifyOptions {
    std::string target;
    std::string out;
    long long seed = 0;
    int trials = 50;
};

std::map<std::string, std::string> load_config(const ConvergenceOptions& opt) {
    std::map<std::string, std::string> kv;
    if (!opt.config_path.empty()) {
        std::ifstream is(opt.config_path);
        if (!is) throw cnpressure::InvalidArgument("cannot open config file '" + opt.config_path + "'");
        kv = cnpressure::parse_key_values(is);
    }
    if (!opt.experiment.empty()) kv["experiment"] = opt.experiment;
    if (!opt.out.empty()) kv["output"] = opt.out;
    if (opt.seed >= 0) kv["seed"] = std::to_string(opt.seed);
    if (opt.threads > 0) kv["threads"] = std::to_string(opt.threads);
    return kv;
}

int run_convergence(const ConvergenceOptions& opt) {
    cnpressure::RunConfig config;
    try {
        config = cnpressure::config_from_key_values(load_config(opt));
    } catch (const cnpressure::InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfiguration;
    }
    std::cerr << "running " << cnpressure::to_string(config.experiment) << " (reference step "
              << config.reference_step() << ")\n";
    const auto result = cnpressure::run_convergence(config);
    cnpressure::write_convergence(config.output, result);
    std::cout << cnpressure::convergence_csv(result);
    for (const auto& rec : result.records) {
        const auto& f = rec.rows.front();
        std::cerr << "rate n0=" << f.n0 << " alpha=" << f.alpha << " " << cnpressure::to_string(f.norm) << ": "
                  << cnpressure::rate_summary(rec) << "\n";
    }
    if (!result.all_ok()) {
        std::cerr << "solver failure; see " << (std::filesystem::path(config.output) / "manifest.txt").string() << "\n";
        return kSolver;
    }
    return kSuccess;
}

int run_verify(const VerifyOptions& opt) {
    namespace v = cnpressure::verify;
    std::vector<v::Report> reports;
    const auto seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.target == "temporal") reports.push_back(v::temporal_orders());
    else if (opt.target == "spectral-stability") {
        reports.push_back(v::spectral_exactness());
        reports.push_back(v::stability_drift(opt.trials, seed));
    } else if (opt.target == "spectral-smoothing") reports.push_back(v::smoothing_drift(opt.trials, seed));
    else if (opt.target == "euler-rates") reports.push_back(v::euler_rates());

    int code = kSuccess;
    if (!opt.out.empty()) std::filesystem::create_directories(opt.out);
    for (const auto& r : reports) {
        v::write_report(std::cout, r);
        if (!opt.out.empty()) {
            std::ofstream os(std::filesystem::path(opt.out) / (r.target + ".csv"));
            v::write_report(os, r);
        }
        for (const auto& c : r.checks)
            if (!c.passed()) {
                std::cerr << "assertion failed: " << r.target << ": " << c.name << " = " << c.measured << " not in ["
                          << c.lower << ", " << c.upper << "]\n";
                code = kAssertion;
            }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crank-Nicolson pressure convergence studies"};
    app.set_version_flag("--version", cnpressure::version_string);
    app.require_subcommand(1);

    ConvergenceOptions conv;
    auto* c = app.add_subcommand("convergence", "run a temporal convergence study");
    c->add_option("--config", conv.config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
    c->add_option("--experiment", conv.experiment, "case_i, case_ii, stokes_manufactured or custom");
    c->add_option("--out", conv.out, "output directory (overrides 'output')");
    c->add_option("--seed", conv.seed, "seed recorded in the manifest")->check(CLI::NonNegativeNumber);
    c->add_option("--threads", conv.threads, "concurrent solves")->check(CLI::PositiveNumber);

    VerifyOptions ver;
    auto* v = app.add_subcommand("verify", "check operator and stability estimates");
    v->add_option("target", ver.target, "temporal, spectral-stability, spectral-smoothing or euler-rates")
        ->required()
        ->check(CLI::IsMember({"temporal", "spectral-stability", "spectral-smoothing", "euler-rates"}));
    v->add_option("--out", ver.out, "directory for <target>.csv reports");
    v->add_option("--seed", ver.seed, "seed of the random trials")->check(CLI::NonNegativeNumber);
    v->add_option("--trials", ver.trials, "random trials per refinement")->check(CLI::PositiveNumber);
    v->add_option("--threads", conv.threads, "accepted for symmetry; verification is serial");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kConfiguration;
    }

    try {
        if (*c) return run_convergence(conv);
        return run_verify(ver);
    } catch (const cnpressure::InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfiguration;
    } catch (const cnpressure::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSolver;
    }
}
