#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cnpressure/errors.hpp"
#include "cnpressure/problems.hpp"
#include "cnpressure/schemes.hpp"

namespace cnpressure {

inline constexpr const char* version_string = "cnpressure 0.1.0";

enum class Experiment { CaseI, CaseII, StokesManufactured, Custom };

inline const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::CaseI: return "case_i";
    case Experiment::CaseII: return "case_ii";
    case Experiment::StokesManufactured: return "stokes_manufactured";
    case Experiment::Custom: return "custom";
    }
    return "?";
}

inline Experiment parse_experiment(const std::string& s) {
    if (s == "case_i") return Experiment::CaseI;
    if (s == "case_ii") return Experiment::CaseII;
    if (s == "stokes_manufactured") return Experiment::StokesManufactured;
    if (s == "custom") return Experiment::Custom;
    throw InvalidArgument("unknown experiment '" + s + "'");
}

/// Euler prefix length and weight exponent of one error evaluation. Weighted variants
/// measure on (t_{n0}, T]; unweighted ones on the whole interval.
struct Variant {
    std::size_t n0 = 0;
    double alpha = 0.0;

    std::size_t window() const { return alpha > 0.0 ? n0 : 0; }
    bool operator==(const Variant&) const = default;
};

struct RunConfig {
    Experiment experiment = Experiment::CaseI;
    double viscosity = 0.01;
    double final_time = 2.0;
    std::vector<double> k_list{0.02, 0.01, 0.005, 0.0025};
    std::vector<double> pattern{0.8, 1.2};
    std::vector<Variant> variants{{0, 0.0}};
    std::vector<NormId> norms{NormId::PressureL2l2, NormId::PressureLinfl2};
    int nx = 16;
    int ny = 16;
    int reference_factor = 8;
    SpatialNorm spatial = SpatialNorm::MassWeighted;
    PressureSampling sampling = PressureSampling::CoarseMidpoint;
    FlowModel model = FlowModel::NavierStokes;
    std::string forcing = "swirl_ramp";       ///< zero | swirl_ramp | manufactured
    double forcing_amplitude = 0.2;
    std::string initial = "zero";             ///< zero | stationary_quadrant
    std::string geometry = "square";
    double newton_tolerance = 1e-10;
    int newton_max_iterations = 20;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output = "out";

    static RunConfig preset(Experiment e) {
        RunConfig c;
        c.experiment = e;
        switch (e) {
        case Experiment::CaseI:
        case Experiment::Custom: break;
        case Experiment::CaseII:
            c.forcing = "zero";
            c.initial = "stationary_quadrant";
            c.variants = {{0, 0.0}, {1, 1.5}, {2, 2.0}, {1, 0.0}, {2, 0.0}};
            break;
        case Experiment::StokesManufactured:
            c.model = FlowModel::Stokes;
            c.forcing = "manufactured";
            c.norms = {NormId::PressureLinfl2, NormId::VelocityLinfV1};
            break;
        }
        return c;
    }

    double reference_step() const { return *std::min_element(k_list.begin(), k_list.end()) / reference_factor; }

    void validate() const {
        if (!(viscosity > 0.0)) throw InvalidArgument("viscosity must be positive");
        if (!(final_time > 0.0)) throw InvalidArgument("final_time must be positive");
        if (k_list.empty()) throw InvalidArgument("k_list must not be empty");
        for (std::size_t i = 0; i < k_list.size(); ++i) {
            if (!(k_list[i] > 0.0)) throw InvalidArgument("k_list entries must be positive");
            if (i > 0 && !(k_list[i] < k_list[i - 1])) throw InvalidArgument("k_list must be strictly descending");
        }
        if (pattern.empty()) throw InvalidArgument("pattern must not be empty");
        for (double p : pattern)
            if (!(p > 0.0)) throw InvalidArgument("pattern entries must be positive");
        if (variants.empty()) throw InvalidArgument("variants must not be empty");
        for (const auto& v : variants)
            if (!(v.alpha >= 0.0) || !std::isfinite(v.alpha)) throw InvalidArgument("alpha must be finite and >= 0");
        if (norms.empty()) throw InvalidArgument("norms must not be empty");
        if (nx < 1 || ny < 1) throw InvalidArgument("nx and ny must be positive");
        if (reference_factor < 4) throw InvalidArgument("reference_factor must be at least 4");
        if (forcing != "zero" && forcing != "swirl_ramp" && forcing != "manufactured")
            throw InvalidArgument("unknown forcing '" + forcing + "'");
        if (forcing == "manufactured" && model != FlowModel::Stokes)
            throw InvalidArgument("manufactured forcing solves the Stokes equations only");
        if (initial != "zero" && initial != "stationary_quadrant")
            throw InvalidArgument("unknown initial data '" + initial + "'");
        if (geometry != "square") throw InvalidArgument("only geometry = square ([-1,1]^2) is supported");
        if (threads < 1) throw InvalidArgument("threads must be positive");
        if (output.empty()) throw InvalidArgument("output must not be empty");
        NewtonConfig{newton_tolerance, newton_max_iterations}.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw InvalidArgument(key + ": '" + v + "' is not a number");
    return x;
}

inline long long to_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw InvalidArgument(key + ": '" + v + "' is not an integer");
    return x;
}

inline std::string join_numbers(const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os.str();
}

}  // namespace detail

/// Flat "key = value" text; '#' starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("line " + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw InvalidArgument("line " + std::to_string(lineno) + ": empty key");
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Builds a configuration from the experiment preset named by "experiment" (default case_i)
/// and the remaining keys. Unknown keys are rejected.
inline RunConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
    const auto exp = kv.find("experiment");
    RunConfig c = RunConfig::preset(exp == kv.end() ? Experiment::CaseI : parse_experiment(exp->second));
    using detail::to_double, detail::to_integer, detail::split;
    for (const auto& [key, value] : kv) {
        if (key == "experiment") continue;
        if (key == "viscosity") c.viscosity = to_double(key, value);
        else if (key == "final_time") c.final_time = to_double(key, value);
        else if (key == "k_list" || key == "pattern") {
            std::vector<double> xs;
            for (const auto& s : split(value, ',')) xs.push_back(to_double(key, s));
            (key == "k_list" ? c.k_list : c.pattern) = std::move(xs);
        } else if (key == "variants") {
            c.variants.clear();
            for (const auto& s : split(value, ',')) {
                const auto parts = split(s, ':');
                if (parts.size() != 2) throw InvalidArgument("variants: expected n0:alpha, got '" + s + "'");
                const auto n0 = to_integer(key, parts[0]);
                if (n0 < 0) throw InvalidArgument("variants: n0 must be >= 0");
                c.variants.push_back({static_cast<std::size_t>(n0), to_double(key, parts[1])});
            }
        } else if (key == "norms") {
            c.norms.clear();
            for (const auto& s : split(value, ',')) c.norms.push_back(parse_norm(s));
        } else if (key == "nx") c.nx = static_cast<int>(to_integer(key, value));
        else if (key == "ny") c.ny = static_cast<int>(to_integer(key, value));
        else if (key == "reference_factor") c.reference_factor = static_cast<int>(to_integer(key, value));
        else if (key == "spatial_norm") c.spatial = parse_spatial_norm(value);
        else if (key == "sampling") c.sampling = parse_sampling(value);
        else if (key == "model") {
            if (value == "stokes") c.model = FlowModel::Stokes;
            else if (value == "nse") c.model = FlowModel::NavierStokes;
            else throw InvalidArgument("model: expected stokes or nse, got '" + value + "'");
        } else if (key == "forcing") c.forcing = value;
        else if (key == "forcing_amplitude") c.forcing_amplitude = to_double(key, value);
        else if (key == "initial") c.initial = value;
        else if (key == "geometry") c.geometry = value;
        else if (key == "newton_tolerance") c.newton_tolerance = to_double(key, value);
        else if (key == "newton_max_iterations") c.newton_max_iterations = static_cast<int>(to_integer(key, value));
        else if (key == "seed") {
            const auto s = to_integer(key, value);
            if (s < 0) throw InvalidArgument("seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "threads") c.threads = static_cast<int>(to_integer(key, value));
        else if (key == "output") c.output = value;
        else throw InvalidArgument("unknown configuration key '" + key + "'");
    }
    c.validate();
    return c;
}

/// Inverse of config_from_key_values: parsing the result reproduces the configuration.
inline std::string to_key_values(const RunConfig& c) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "experiment = " << to_string(c.experiment) << "\n";
    os << "geometry = " << c.geometry << "\n";
    os << "model = " << to_string(c.model) << "\n";
    os << "viscosity = " << c.viscosity << "\n";
    os << "final_time = " << c.final_time << "\n";
    os << "k_list = " << detail::join_numbers(c.k_list) << "\n";
    os << "pattern = " << detail::join_numbers(c.pattern) << "\n";
    os << "variants = ";
    for (std::size_t i = 0; i < c.variants.size(); ++i)
        os << (i ? ", " : "") << c.variants[i].n0 << ':' << c.variants[i].alpha;
    os << "\nnorms = ";
    for (std::size_t i = 0; i < c.norms.size(); ++i) os << (i ? ", " : "") << to_string(c.norms[i]);
    os << "\nnx = " << c.nx << "\nny = " << c.ny << "\n";
    os << "reference_factor = " << c.reference_factor << "\n";
    os << "spatial_norm = " << to_string(c.spatial) << "\n";
    os << "sampling = " << to_string(c.sampling) << "\n";
    os << "forcing = " << c.forcing << "\n";
    os << "forcing_amplitude = " << c.forcing_amplitude << "\n";
    os << "initial = " << c.initial << "\n";
    os << "newton_tolerance = " << c.newton_tolerance << "\n";
    os << "newton_max_iterations = " << c.newton_max_iterations << "\n";
    os << "seed = " << c.seed << "\n";
    os << "threads = " << c.threads << "\n";
    os << "output = " << c.output << "\n";
    return os.str();
}

/// Problem data selected by a configuration; stationary initial data are solved once here.
inline ProblemSpec make_problem(const fem::TaylorHoodSpace& space, const RunConfig& c) {
    ProblemSpec spec;
    spec.viscosity = c.viscosity;
    spec.final_time = c.final_time;
    spec.model = c.model;
    spec.forcing_id = c.forcing;
    if (c.forcing == "swirl_ramp") spec.forcing = problems::ramped_swirl(c.forcing_amplitude);
    else if (c.forcing == "manufactured") spec.forcing = problems::ManufacturedStokes(c.viscosity).forcing_field();
    if (c.initial == "stationary_quadrant") {
        const NewtonConfig newton{c.newton_tolerance, c.newton_max_iterations};
        ProblemSpec stationary = spec;
        stationary.initial = InitialData::stationary(problems::quadrant_swirl(c.forcing_amplitude));
        spec.initial = InitialData::values(initial_velocity(space, stationary, newton), true);
    }
    return spec;
}

struct RowStatus {
    double k = 0.0;
    std::size_t n0 = 0;
    std::string status = "ok";
    double seconds = 0.0;
    std::size_t intervals = 0;
    int max_newton_iterations = 0;
};

struct ConvergenceResult {
    RunConfig config;
    /// One record per (variant, norm), in configuration order.
    std::vector<ConvergenceRecord> records;
    std::vector<RowStatus> rows;
    std::string reference_status = "ok";
    double reference_seconds = 0.0;
    double total_seconds = 0.0;

    const ConvergenceRecord& record(Variant v, NormId norm) const {
        for (const auto& r : records)
            if (!r.rows.empty() && r.rows.front().n0 == v.n0 && r.rows.front().alpha == v.alpha &&
                r.rows.front().norm == norm)
                return r;
        throw InvalidArgument("no record for the requested variant and norm");
    }

    /// Least-squares rate, or nullopt when fewer than two rows succeeded or errors vanish.
    std::optional<double> rate(Variant v, NormId norm) const {
        try {
            return record(v, norm).fit().slope;
        } catch (const InvalidArgument&) {
            return std::nullopt;
        }
    }

    bool all_ok() const {
        return reference_status == "ok" &&
               std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == "ok"; });
    }
};

/// Fitted slope as text; "exact match" when every successful row has error 0.
inline std::string rate_summary(const ConvergenceRecord& rec) {
    std::size_t ok = 0, zero = 0;
    for (const auto& r : rec.rows) {
        if (r.status != "ok") continue;
        ++ok;
        if (r.error == 0.0) ++zero;
    }
    if (ok > 0 && zero == ok) return "exact match";
    try {
        std::ostringstream os;
        os << std::setprecision(6) << rec.fit().slope;
        return os.str();
    } catch (const InvalidArgument& e) {
        return std::string("none (") + e.what() + ")";
    }
}

namespace detail {

/// Runs job(i) for i in [0, count) on up to `threads` workers.
template <class Job>
void parallel_for(std::size_t count, int threads, Job&& job) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Reference solve plus one coarse solve per (k, n0), then every selected norm for every variant.
/// Solver failures mark the affected rows and the run continues.
inline ConvergenceResult run_convergence(const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    ConvergenceResult result;
    result.config = config;

    const fem::TaylorHoodSpace space(fem::FemMesh2D::structured(fem::Rectangle{}, config.nx, config.ny));
    const ProblemSpec spec = make_problem(space, config);
    const NewtonConfig newton{config.newton_tolerance, config.newton_max_iterations};

    std::vector<std::size_t> prefixes;
    for (const auto& v : config.variants)
        if (std::find(prefixes.begin(), prefixes.end(), v.n0) == prefixes.end()) prefixes.push_back(v.n0);

    struct Job {
        std::size_t n0;
        double k;
    };
    std::vector<Job> jobs;
    for (std::size_t n0 : prefixes)
        for (double k : config.k_list) jobs.push_back({n0, k});

    // Slot 0 is the reference; slot i + 1 holds jobs[i].
    std::vector<std::optional<Trajectory>> trajectories(jobs.size() + 1);
    std::vector<std::string> status(jobs.size() + 1, "ok");
    std::vector<double> seconds(jobs.size() + 1, 0.0);
    const double k0 = config.reference_step();
    const auto fine_steps = std::llround(config.final_time / k0);

    detail::parallel_for(jobs.size() + 1, config.threads, [&](std::size_t slot) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (slot == 0) {
                trajectories[0] =
                    reference_solve(space, spec, build_uniform_mesh(config.final_time, fine_steps), 0.0, newton);
            } else {
                const auto& job = jobs[slot - 1];
                trajectories[slot] =
                    solve(space, spec, build_alternating_mesh(config.final_time, job.k, config.pattern), job.n0, newton);
            }
        } catch (const ConvergenceError& e) {
            status[slot] = std::string("newton: ") + e.what();
        } catch (const SolverError& e) {
            status[slot] = std::string("solver: ") + e.what();
        } catch (const InvalidArgument& e) {
            status[slot] = std::string("invalid: ") + e.what();
        }
        seconds[slot] = detail::seconds_since(t0);
    });

    result.reference_status = status[0];
    result.reference_seconds = seconds[0];
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        RowStatus row{jobs[i].k, jobs[i].n0, status[i + 1], seconds[i + 1], 0, 0};
        if (const auto& tr = trajectories[i + 1]) {
            row.intervals = tr->mesh().intervals();
            for (const auto& s : tr->steps) row.max_newton_iterations = std::max(row.max_newton_iterations, s.newton_iterations);
        }
        if (row.status == "ok" && result.reference_status != "ok") row.status = "reference failed";
        result.rows.push_back(row);
    }

    const ErrorEvaluator evaluator(space);
    for (const auto& v : config.variants) {
        for (NormId norm : config.norms) {
            ConvergenceRecord rec;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (jobs[i].n0 != v.n0) continue;
                ConvergenceRow row{jobs[i].k, v.n0, v.alpha, norm};
                row.status = result.rows[i].status;
                if (row.status == "ok") {
                    try {
                        row.error = evaluator(*trajectories[i + 1], *trajectories[0],
                                              ErrorSpec{norm, v.alpha, v.window(), config.spatial, config.sampling});
                    } catch (const InvalidArgument& e) {
                        row.status = std::string("error evaluation: ") + e.what();
                    }
                }
                rec.rows.push_back(row);
            }
            rec.sort();
            result.records.push_back(std::move(rec));
        }
    }
    result.total_seconds = detail::seconds_since(start);
    return result;
}

/// CSV of every record; contains no timings, so identical configurations give identical bytes.
inline std::string convergence_csv(const ConvergenceResult& r) {
    std::ostringstream os;
    write_csv(os, r.records);
    return os.str();
}

inline std::string convergence_manifest(const ConvergenceResult& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "# " << version_string << "\n";
    os << "# configuration (re-run with: cnpressure convergence --config <this file>)\n";
    os << to_key_values(r.config);
    os << "# reference: uniform, step " << r.config.reference_step() << ", status " << r.reference_status
       << ", " << std::setprecision(4) << r.reference_seconds << " s\n";
    for (const auto& row : r.rows)
        os << "# row k=" << std::setprecision(17) << row.k << " n0=" << row.n0 << " intervals=" << row.intervals
           << " max_newton=" << row.max_newton_iterations << " status=" << row.status << " time="
           << std::setprecision(4) << row.seconds << " s\n";
    for (const auto& rec : r.records) {
        if (rec.rows.empty()) continue;
        const auto& f = rec.rows.front();
        os << "# rate n0=" << f.n0 << " alpha=" << f.alpha << " " << to_string(f.norm) << " = " << rate_summary(rec)
           << "\n";
    }
    os << "# total time " << std::setprecision(4) << r.total_seconds << " s\n";
    return os.str();
}

/// Writes convergence.csv and manifest.txt into dir.
inline void write_convergence(const std::filesystem::path& dir, const ConvergenceResult& r) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "convergence.csv") << convergence_csv(r);
    std::ofstream(dir / "manifest.txt") << convergence_manifest(r);
}

}  // namespace cnpressure
