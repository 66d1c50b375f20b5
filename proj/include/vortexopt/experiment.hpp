#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vortexopt/low_contrast.hpp"
#include "vortexopt/mesh.hpp"
#include "vortexopt/optimize.hpp"
#include "vortexopt/radial.hpp"

namespace vortexopt {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ExperimentMode { Maximize, Minimize, LowContrast, Oracle, Conjecture };

enum class InitializerKind { LowContrast, Random, Lobe, ConjectureSeed };

struct ExperimentConfig {
    std::optional<ShapeSpec> shape;
    double target_h = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double area_A = 0.0;
    bool area_is_fraction = false;
    ExperimentMode mode = ExperimentMode::Maximize;
    double tol = 0.0; // 0 -> 5e-3 * |Omega|
    int max_iter = 100;
    std::vector<std::uint64_t> seeds = {1};
    InitializerKind initializer = InitializerKind::LowContrast;
    Vec2 lobe_point{0.0, 0.0};
    std::string output_dir = "out";
    std::vector<RadialRing> rings; // oracle mode

    double resolve_area(double total) const {
        return area_is_fraction ? area_A * total : area_A;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline double parse_number(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' has a non-numeric value '" + value + "'");
    }
    if (detail::trim(value.substr(used)) != "")
        throw std::runtime_error("config: key '" + key + "' has trailing characters in '" + value + "'");
    return out;
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);

    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw std::runtime_error("config: duplicate key '" + key + "'");
        kv[key] = value;
    }

    ExperimentConfig cfg;
    const auto take = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const auto require = [&](const std::string& key) {
        auto v = take(key);
        if (!v) throw std::runtime_error("config: missing required key '" + key + "'");
        return *v;
    };

    const std::string mode = require("mode");
    if (mode == "maximize") cfg.mode = ExperimentMode::Maximize;
    else if (mode == "minimize") cfg.mode = ExperimentMode::Minimize;
    else if (mode == "low_contrast") cfg.mode = ExperimentMode::LowContrast;
    else if (mode == "oracle") cfg.mode = ExperimentMode::Oracle;
    else if (mode == "conjecture") cfg.mode = ExperimentMode::Conjecture;
    else throw std::runtime_error("config: unknown mode '" + mode + "'");

    if (cfg.mode == ExperimentMode::Oracle) {
        const std::string rings = require("rings");
        std::istringstream rs(rings);
        std::string item;
        while (std::getline(rs, item, ',')) {
            item = detail::trim(item);
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("config: rings entries must look like 'outer_radius:f'");
            RadialRing ring;
            ring.outer_radius = detail::parse_number("rings", detail::trim(item.substr(0, colon)));
            ring.f_value = detail::parse_number("rings", detail::trim(item.substr(colon + 1)));
            cfg.rings.push_back(ring);
        }
        if (cfg.rings.empty()) throw std::runtime_error("config: rings is empty");
    } else {
        const std::string shape = require("shape");
        if (shape == "disk") {
            cfg.shape = ShapeSpec::disk(detail::parse_number("shape.radius", require("shape.radius")));
        } else if (shape == "rectangle") {
            cfg.shape = ShapeSpec::rectangle(
                detail::parse_number("shape.width", require("shape.width")),
                detail::parse_number("shape.height", require("shape.height")));
        } else if (shape == "dumbbell") {
            cfg.shape = ShapeSpec::dumbbell(
                detail::parse_number("shape.lobe_radius", require("shape.lobe_radius")),
                detail::parse_number("shape.neck_half_width", require("shape.neck_half_width")),
                detail::parse_number("shape.neck_length", require("shape.neck_length")));
        } else if (shape == "heart") {
            cfg.shape = ShapeSpec::heart(detail::parse_number("shape.scale", require("shape.scale")));
        } else {
            throw std::runtime_error("config: unknown shape '" + shape + "'");
        }
        cfg.target_h = detail::parse_number("target_h", require("target_h"));

        const std::string area = require("area_A");
        if (area.rfind("fraction:", 0) == 0) {
            cfg.area_is_fraction = true;
            cfg.area_A = detail::parse_number("area_A", area.substr(9));
            if (!(cfg.area_A > 0.0) || !(cfg.area_A < 1.0))
                throw std::runtime_error("config: area_A fraction must lie in (0, 1)");
        } else {
            cfg.area_A = detail::parse_number("area_A", area);
            if (!(cfg.area_A > 0.0)) throw std::runtime_error("config: area_A must be positive");
        }
    }

    if (cfg.mode == ExperimentMode::Maximize || cfg.mode == ExperimentMode::Minimize ||
        cfg.mode == ExperimentMode::Conjecture) {
        cfg.alpha = detail::parse_number("alpha", require("alpha"));
        cfg.beta = detail::parse_number("beta", require("beta"));
        if (!(cfg.beta > 0.0) || !(cfg.alpha > cfg.beta))
            throw std::runtime_error("config: requires alpha > beta > 0");
    } else if (cfg.mode == ExperimentMode::LowContrast) {
        cfg.beta = detail::parse_number("beta", require("beta"));
        if (!(cfg.beta > 0.0)) throw std::runtime_error("config: beta must be positive");
        if (auto a = take("alpha")) {
            cfg.alpha = detail::parse_number("alpha", *a);
            if (!(cfg.alpha > cfg.beta)) throw std::runtime_error("config: requires alpha > beta > 0");
        } else {
            cfg.alpha = cfg.beta * 1.01;
        }
    }

    if (auto v = take("TOL")) {
        cfg.tol = detail::parse_number("TOL", *v);
        if (!(cfg.tol > 0.0)) throw std::runtime_error("config: TOL must be positive");
    }
    if (auto v = take("max_iter")) {
        cfg.max_iter = static_cast<int>(detail::parse_number("max_iter", *v));
        if (cfg.max_iter < 1) throw std::runtime_error("config: max_iter must be at least 1");
    }
    if (auto v = take("seeds")) {
        cfg.seeds.clear();
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            cfg.seeds.push_back(static_cast<std::uint64_t>(detail::parse_number("seeds", detail::trim(item))));
        }
        if (cfg.seeds.empty()) throw std::runtime_error("config: seeds is empty");
    }
    if (auto v = take("initializer")) {
        if (*v == "low_contrast") cfg.initializer = InitializerKind::LowContrast;
        else if (*v == "random") cfg.initializer = InitializerKind::Random;
        else if (*v == "conjecture_seed") cfg.initializer = InitializerKind::ConjectureSeed;
        else if (v->rfind("lobe(", 0) == 0 && v->back() == ')') {
            cfg.initializer = InitializerKind::Lobe;
            const std::string inner = v->substr(5, v->size() - 6);
            const auto comma = inner.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("config: initializer lobe needs 'lobe(x, y)'");
            cfg.lobe_point.x = detail::parse_number("initializer", detail::trim(inner.substr(0, comma)));
            cfg.lobe_point.y = detail::parse_number("initializer", detail::trim(inner.substr(comma + 1)));
        } else {
            throw std::runtime_error("config: unknown initializer '" + *v + "'");
        }
    }
    if (auto v = take("output_dir")) cfg.output_dir = *v;

    if (!kv.empty()) throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
    return cfg;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunSummary {
    std::string label;
    double psi_final = 0.0;
    std::string stop_reason;
    int iterations = 0;
};

struct ExperimentReport {
    std::vector<std::pair<std::string, std::string>> echo; // config echo, ordered
    std::vector<RunSummary> runs;
    std::vector<MultistartCluster> clusters;
    std::vector<std::string> files; // names relative to output_dir
    double psi_final = 0.0;         // headline energy of the experiment
    std::string output_dir;
};

struct OracleComparison {
    bool pass = false;
    double relative_error = 0.0;
};

inline OracleComparison compare_with_oracle(const ExperimentReport& report, double oracle_value,
                                            double rel_tol) {
    OracleComparison out;
    out.relative_error = std::fabs(report.psi_final - oracle_value) / std::fabs(oracle_value);
    out.pass = std::fabs(report.psi_final - oracle_value) <= rel_tol * std::fabs(oracle_value);
    return out;
}

namespace detail {

inline void write_report_file(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot open " + path);
    for (const auto& [k, v] : report.echo) out << k << " = " << v << "\n";
    out << "psi_final = " << format_double(report.psi_final) << "\n";
    out << "runs = " << report.runs.size() << "\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const RunSummary& r = report.runs[i];
        const std::string p = "run." + std::to_string(i + 1) + ".";
        out << p << "label = " << r.label << "\n";
        out << p << "psi_final = " << format_double(r.psi_final) << "\n";
        out << p << "stop_reason = " << r.stop_reason << "\n";
        out << p << "iterations = " << r.iterations << "\n";
    }
    if (!report.clusters.empty()) {
        out << "clusters = " << report.clusters.size() << "\n";
        for (std::size_t i = 0; i < report.clusters.size(); ++i) {
            const std::string p = "cluster." + std::to_string(i + 1) + ".";
            out << p << "psi = " << format_double(report.clusters[i].psi) << "\n";
            out << p << "size = " << report.clusters[i].members.size() << "\n";
            out << p << "representative = " << report.clusters[i].representative + 1 << "\n";
        }
    }
    for (std::size_t i = 0; i < report.files.size(); ++i) {
        out << "file." << i + 1 << " = " << report.files[i] << "\n";
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

inline ExperimentReport run_experiment(const ExperimentConfig& config, bool quiet = true) {
    ExperimentReport report;
    report.output_dir = config.output_dir;
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    const auto out_path = [&](const std::string& name) { return (dir / name).string(); };
    const auto note = [&](const std::string& name) { report.files.push_back(name); };
    const auto say = [&](const std::string& msg) {
        if (!quiet) std::fputs((msg + "\n").c_str(), stdout);
    };

    const auto echo = [&](const std::string& k, const std::string& v) {
        report.echo.emplace_back(k, v);
    };
    const char* mode_names[] = {"maximize", "minimize", "low_contrast", "oracle", "conjecture"};
    echo("mode", mode_names[static_cast<int>(config.mode)]);

    if (config.mode == ExperimentMode::Oracle) {
        RadialConfig rc;
        rc.rings = config.rings;
        rc.R = config.rings.back().outer_radius;
        const RadialSolution sol = radial_solve(rc);
        report.psi_final = sol.psi;
        echo("R", detail::format_double(rc.R));

        std::ofstream samples(out_path("oracle_u.csv"));
        samples << "r,u\n";
        const int n = 400;
        for (int i = 0; i <= n; ++i) {
            const double r = rc.R * i / n;
            samples << detail::format_double(r) << "," << detail::format_double(radial_eval(sol, r))
                    << "\n";
        }
        samples.close();
        note("oracle_u.csv");
        say("oracle psi = " + detail::format_double(sol.psi));
        detail::write_report_file(report, out_path("report.txt"));
        note("report.txt");
        return report;
    }

    const ShapeSpec& shape = *config.shape;
    const TriMesh mesh = generate_domain(shape, config.target_h);
    const MeshMetrics metrics = mesh_metrics(mesh);
    const PoissonSystem system = assemble(mesh);
    const double total = metrics.total_area;
    const double A = config.resolve_area(total);
    if (!(A > 0.0) || !(A < total))
        throw std::runtime_error("config: area_A must resolve strictly inside (0, |Omega|)");
    const double tol = (config.tol > 0.0) ? config.tol : default_area_tolerance(total);

    const char* shape_names[] = {"disk", "rectangle", "dumbbell", "heart"};
    echo("shape", shape_names[static_cast<int>(shape.kind)]);
    echo("target_h", detail::format_double(config.target_h));
    echo("total_area", detail::format_double(total));
    echo("diameter", detail::format_double(metrics.diameter));
    echo("area_A", detail::format_double(A));
    echo("TOL", detail::format_double(tol));

    save_mesh(mesh, out_path("mesh.node"), out_path("mesh.ele"));
    note("mesh.node");
    note("mesh.ele");

    OptimizeOptions opt;
    opt.tol = tol;
    opt.max_iter = config.max_iter;

    const auto initial_set = [&](std::uint64_t seed) -> std::vector<int> {
        switch (config.initializer) {
        case InitializerKind::Random:
            return random_element_set(mesh, A, seed);
        case InitializerKind::Lobe:
            return initial_ball(mesh, A, config.lobe_point);
        case InitializerKind::ConjectureSeed: {
            const LowContrastResult lc = low_contrast_sets(mesh, system, config.beta, A, tol);
            const OptimizationTrace min_run =
                minimize(mesh, system, config.alpha, config.beta, A, lc.D_m, opt);
            const CorrelationResult corr =
                rearrangement_correlation(mesh, min_run.final_field, min_run.final_field);
            return corr.minimizer.set_D;
        }
        case InitializerKind::LowContrast:
        default: {
            const LowContrastResult lc = low_contrast_sets(mesh, system, config.beta, A, tol);
            return (config.mode == ExperimentMode::Minimize) ? lc.D_m : lc.D_M;
        }
        }
    };

    const auto dump_run = [&](const OptimizationTrace& trace, const std::string& label,
                              LevelDirection direction) {
        export_trace(trace, out_path("trace_" + label + ".csv"));
        note("trace_" + label + ".csv");
        export_field_csv(mesh, trace.final_field, out_path("field_" + label + ".csv"));
        note("field_" + label + ".csv");
        export_solution_csv(mesh, trace.final_solution.nodal_u, out_path("solution_" + label + ".csv"));
        note("solution_" + label + ".csv");
        BathtubResult as_set;
        as_set.set_D = trace.final_field.set_D;
        as_set.achieved_measure = trace.final_field.measure_D;
        // threshold level of the converged set under its own solution
        const std::vector<double> rep = element_representative(mesh, trace.final_solution.nodal_u);
        as_set.level = (direction == LevelDirection::Super)
                           ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
        for (const int e : as_set.set_D) {
            as_set.level = (direction == LevelDirection::Super)
                               ? std::fmin(as_set.level, rep[static_cast<std::size_t>(e)])
                               : std::fmax(as_set.level, rep[static_cast<std::size_t>(e)]);
        }
        export_set(as_set, out_path("set_" + label + ".txt"));
        note("set_" + label + ".txt");
        report.runs.push_back({label, trace.final_solution.psi, to_string(trace.stop_reason),
                               static_cast<int>(trace.iterations.size())});
        say("run " + label + ": psi = " + detail::format_double(trace.final_solution.psi) +
            " (" + to_string(trace.stop_reason) + ")");
    };

    switch (config.mode) {
    case ExperimentMode::Maximize: {
        std::vector<OptimizationTrace> traces;
        for (const std::uint64_t seed : config.seeds) {
            traces.push_back(maximize(mesh, system, config.alpha, config.beta, A,
                                      initial_set(seed), opt));
            dump_run(traces.back(), "seed" + std::to_string(seed), LevelDirection::Super);
        }
        report.clusters = cluster_final_sets(mesh, traces, 0.02 * total);
        report.psi_final = report.clusters.front().psi;
        break;
    }
    case ExperimentMode::Minimize: {
        std::vector<OptimizationTrace> traces;
        double lowest = std::numeric_limits<double>::infinity();
        for (const std::uint64_t seed : config.seeds) {
            traces.push_back(minimize(mesh, system, config.alpha, config.beta, A,
                                      initial_set(seed), opt));
            dump_run(traces.back(), "seed" + std::to_string(seed), LevelDirection::Sub);
            lowest = std::fmin(lowest, traces.back().final_solution.psi);
        }
        report.clusters = cluster_final_sets(mesh, traces, 0.02 * total);
        report.psi_final = lowest;
        break;
    }
    case ExperimentMode::LowContrast: {
        const double epsilon = config.alpha - config.beta;
        const LowContrastResult lc = low_contrast_sets(mesh, system, config.beta, A, tol);
        export_solution_csv(mesh, lc.phi0.nodal_u, out_path("phi0.csv"));
        note("phi0.csv");
        BathtubResult dm{lc.t_M, lc.D_M, lc.measure_D_M};
        export_set(dm, out_path("set_DM.txt"));
        note("set_DM.txt");
        BathtubResult dmin{lc.t_m, lc.D_m, lc.measure_D_m};
        export_set(dmin, out_path("set_Dm.txt"));
        note("set_Dm.txt");

        const PsiExpansion on_max = psi_expansion(mesh, system, config.beta, epsilon, lc.D_M, &lc.phi0);
        const PsiExpansion on_min = psi_expansion(mesh, system, config.beta, epsilon, lc.D_m, &lc.phi0);
        echo("epsilon", detail::format_double(epsilon));
        echo("psi_DM", detail::format_double(on_max.total));
        echo("psi_Dm", detail::format_double(on_min.total));

        for (const LevelDirection dir : {LevelDirection::Super, LevelDirection::Sub}) {
            const auto trials = low_contrast_perturbation_trials(mesh, system, config.beta, epsilon,
                                                                 A, dir, 50, config.seeds.front());
            const std::string name =
                (dir == LevelDirection::Super) ? "trials_super.csv" : "trials_sub.csv";
            export_perturbation_trials(trials, out_path(name));
            note(name);
        }
        report.psi_final = on_max.total;
        break;
    }
    case ExperimentMode::Conjecture: {
        const OptimizationTrace min_run =
            minimize(mesh, system, config.alpha, config.beta, A, initial_set(config.seeds.front()), opt);
        dump_run(min_run, "minimizer", LevelDirection::Sub);
        const VorticityField& f_hat = min_run.final_field;

        const CorrelationResult seed_corr = rearrangement_correlation(mesh, f_hat, f_hat);
        const OptimizationTrace max_run = maximize(mesh, system, config.alpha, config.beta, A,
                                                   seed_corr.minimizer.set_D, opt);
        dump_run(max_run, "maximizer", LevelDirection::Super);

        const CorrelationResult probe = rearrangement_correlation(mesh, max_run.final_field, f_hat);
        double sample_min = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 200; ++k) {
            const VorticityField random_f = vorticity_from_set(
                mesh, random_element_set(mesh, A, config.seeds.front() + 1000 + k), config.alpha,
                config.beta);
            sample_min = std::fmin(sample_min, field_correlation(mesh, random_f, f_hat));
        }
        echo("correlation_maximizer", detail::format_double(probe.correlation));
        echo("correlation_bathtub_min", detail::format_double(probe.min_correlation));
        echo("correlation_sampled_min", detail::format_double(sample_min));
        report.psi_final = max_run.final_solution.psi;
        break;
    }
    default:
        break;
    }

    detail::write_report_file(report, out_path("report.txt"));
    note("report.txt");
    say("report written to " + out_path("report.txt"));
    return report;
}

inline ExperimentReport run_experiment(const std::string& config_path, bool quiet = true) {
    return run_experiment(parse_experiment_config(config_path), quiet);
}

} // namespace vortexopt
