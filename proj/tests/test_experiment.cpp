#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "test_support.hpp"
#include "vortexopt/experiment.hpp"

using namespace vortexopt;
using std::numbers::pi;

namespace {

std::string write_config(const std::string& name, const std::string& body) {
    const std::string path = testsup::temp_path(name);
    testsup::write_file(path, body);
    return path;
}

std::string report_value(const std::string& report_text, const std::string& key) {
    const std::string needle = key + " = ";
    auto at = report_text.find(needle);
    REQUIRE(at != std::string::npos);
    at += needle.size();
    return report_text.substr(at, report_text.find('\n', at) - at);
}

// psi column of the last data row of a trace csv
std::string trace_final_psi(const std::string& trace_text) {
    std::string last;
    std::istringstream in(trace_text);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        last = line;
    }
    REQUIRE(!last.empty());
    const auto first = last.find(',');
    const auto second = last.find(',', first + 1);
    return last.substr(first + 1, second - first - 1);
}

} // namespace

TEST_CASE("config parsing covers every field") {
    const std::string path = write_config("full.cfg",
                                          "# comment line\n"
                                          "mode = maximize\n"
                                          "shape = dumbbell\n"
                                          "shape.lobe_radius = 1.5\n"
                                          "shape.neck_half_width = 0.3\n"
                                          "shape.neck_length = 0.8 # trailing comment\n"
                                          "target_h = 0.1\n"
                                          "alpha = 4\n"
                                          "beta = 0.5\n"
                                          "area_A = fraction:0.25\n"
                                          "TOL = 0.01\n"
                                          "max_iter = 42\n"
                                          "seeds = 3, 5, 8\n"
                                          "initializer = lobe(1.25, -0.5)\n"
                                          "output_dir = /tmp/somewhere\n");
    const ExperimentConfig cfg = parse_experiment_config(path);
    CHECK(cfg.mode == ExperimentMode::Maximize);
    CHECK(cfg.shape->kind == ShapeSpec::Kind::Dumbbell);
    CHECK(cfg.shape->lobe_radius == 1.5);
    CHECK(cfg.shape->neck_half_width == 0.3);
    CHECK(cfg.shape->neck_length == 0.8);
    CHECK(cfg.target_h == 0.1);
    CHECK(cfg.alpha == 4.0);
    CHECK(cfg.beta == 0.5);
    CHECK(cfg.area_is_fraction);
    CHECK(cfg.area_A == 0.25);
    CHECK(cfg.tol == 0.01);
    CHECK(cfg.max_iter == 42);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 5, 8});
    CHECK(cfg.initializer == InitializerKind::Lobe);
    CHECK(cfg.lobe_point.x == 1.25);
    CHECK(cfg.lobe_point.y == -0.5);
    CHECK(cfg.output_dir == "/tmp/somewhere");
}

TEST_CASE("config validation names the offending key") {
    const auto expect_error = [&](const std::string& body, const std::string& fragment) {
        const std::string path = write_config("bad.cfg", body);
        CHECK_THROWS_WITH_AS(parse_experiment_config(path), doctest::Contains(fragment.c_str()),
                             std::runtime_error);
    };
    expect_error("mode = maximize\nshape = disk\nshape.radius = 1\ntarget_h = 0.2\n"
                 "alpha = 1\nbeta = 1\narea_A = 1\n",
                 "alpha > beta");
    expect_error("mode = warp\n", "unknown mode");
    expect_error("mode = maximize\nshape = disk\nshape.radius = 1\ntarget_h = 0.2\n"
                 "alpha = 2\nbeta = 1\narea_A = 1\nbogus = 3\n",
                 "unknown key 'bogus'");
    expect_error("mode = maximize\nshape = disk\n", "shape.radius");
    expect_error("mode = oracle\nrings = nonsense\n", "rings");
    expect_error("mode = maximize\nshape = disk\nshape.radius = 1\ntarget_h = 0.2\n"
                 "alpha = two\nbeta = 1\narea_A = 1\n",
                 "alpha");
}

TEST_CASE("oracle mode computes the closed form without mesh work") {
    const std::string out = testsup::temp_path("oracle_out");
    std::filesystem::remove_all(out);
    const std::string path = write_config("oracle.cfg",
                                          "mode = oracle\n"
                                          "rings = 1:2, 2:1\n"
                                          "output_dir = " + out + "\n");
    const ExperimentReport report = run_experiment(path);
    CHECK(report.psi_final == doctest::Approx(13.2623).epsilon(1e-4));
    CHECK(std::filesystem::exists(out + "/oracle_u.csv"));
    CHECK(std::filesystem::exists(out + "/report.txt"));
    CHECK(!std::filesystem::exists(out + "/mesh.node"));
}

TEST_CASE("disk maximize experiment reproduces the oracle energy") {
    const std::string out = testsup::temp_path("max_out");
    std::filesystem::remove_all(out);
    const std::string path = write_config("max.cfg",
                                          "mode = maximize\n"
                                          "shape = disk\n"
                                          "shape.radius = 2\n"
                                          "target_h = 0.08\n"
                                          "alpha = 2\n"
                                          "beta = 1\n"
                                          "area_A = 3.1415926535897931\n"
                                          "TOL = 0.005\n"
                                          "seeds = 1, 2\n"
                                          "initializer = random\n"
                                          "output_dir = " + out + "\n");
    const ExperimentReport report = run_experiment(path);

    const double oracle = pi * (31.0 / 8.0 + 0.5 * std::log(2.0));
    CHECK(report.psi_final == doctest::Approx(oracle).epsilon(0.01));
    CHECK(compare_with_oracle(report, oracle, 0.01).pass);

    SUBCASE("every referenced file exists") {
        for (const std::string& name : report.files) {
            CHECK(std::filesystem::exists(out + "/" + name));
        }
    }
    SUBCASE("report psi values equal the trace finals exactly") {
        const std::string report_text = testsup::read_file(out + "/report.txt");
        const std::string trace_text = testsup::read_file(out + "/trace_seed1.csv");
        CHECK(report_value(report_text, "run.1.psi_final") == trace_final_psi(trace_text));
    }
    SUBCASE("rerunning the config reproduces identical bytes") {
        const std::string report_before = testsup::read_file(out + "/report.txt");
        const std::string trace_before = testsup::read_file(out + "/trace_seed1.csv");
        const std::string node_before = testsup::read_file(out + "/mesh.node");
        run_experiment(path);
        CHECK(testsup::read_file(out + "/report.txt") == report_before);
        CHECK(testsup::read_file(out + "/trace_seed1.csv") == trace_before);
        CHECK(testsup::read_file(out + "/mesh.node") == node_before);
    }
}

TEST_CASE("compare_with_oracle thresholds") {
    ExperimentReport report;
    report.psi_final = 13.20;
    CHECK(compare_with_oracle(report, 13.2623, 0.01).pass); // 0.47% off
    report.psi_final = 13.00;
    CHECK(!compare_with_oracle(report, 13.2623, 0.01).pass); // 1.98% off
    report.psi_final = 13.2623;
    const OracleComparison exact = compare_with_oracle(report, 13.2623, 0.01);
    CHECK(exact.pass);
    CHECK(exact.relative_error == 0.0);
}

TEST_CASE("low-contrast mode writes the level sets and trial tables") {
    const std::string out = testsup::temp_path("lc_out");
    std::filesystem::remove_all(out);
    const std::string path = write_config("lc.cfg",
                                          "mode = low_contrast\n"
                                          "shape = disk\n"
                                          "shape.radius = 2\n"
                                          "target_h = 0.15\n"
                                          "beta = 1\n"
                                          "alpha = 1.01\n"
                                          "area_A = 3.1415926535897931\n"
                                          "output_dir = " + out + "\n");
    const ExperimentReport report = run_experiment(path);
    for (const char* name : {"phi0.csv", "set_DM.txt", "set_Dm.txt", "trials_super.csv",
                             "trials_sub.csv", "report.txt"}) {
        CHECK(std::filesystem::exists(out + "/" + std::string(name)));
    }
    const std::string report_text = testsup::read_file(out + "/report.txt");
    CHECK(std::stod(report_value(report_text, "psi_DM")) >
          std::stod(report_value(report_text, "psi_Dm")));
}

TEST_CASE("conjecture_seed initializer drives maximize from the correlation minimizer") {
    const std::string out = testsup::temp_path("seed_out");
    std::filesystem::remove_all(out);
    const std::string path = write_config("seed.cfg",
                                          "mode = maximize\n"
                                          "shape = disk\n"
                                          "shape.radius = 2\n"
                                          "target_h = 0.14\n"
                                          "alpha = 2\n"
                                          "beta = 1\n"
                                          "area_A = 3.1415926535897931\n"
                                          "TOL = 0.005\n"
                                          "max_iter = 200\n"
                                          "initializer = conjecture_seed\n"
                                          "output_dir = " + out + "\n");
    const ExperimentReport report = run_experiment(path);
    const double oracle = pi * (31.0 / 8.0 + 0.5 * std::log(2.0));
    CHECK(report.psi_final == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("conjecture mode reports the correlation probe") {
    const std::string out = testsup::temp_path("conj_out");
    std::filesystem::remove_all(out);
    const std::string path = write_config("conj.cfg",
                                          "mode = conjecture\n"
                                          "shape = disk\n"
                                          "shape.radius = 2\n"
                                          "target_h = 0.14\n"
                                          "alpha = 2\n"
                                          "beta = 1\n"
                                          "area_A = 3.1415926535897931\n"
                                          "TOL = 0.005\n"
                                          "max_iter = 200\n"
                                          "output_dir = " + out + "\n");
    const ExperimentReport report = run_experiment(path);
    const std::string report_text = testsup::read_file(out + "/report.txt");
    const double corr_max = std::stod(report_value(report_text, "correlation_maximizer"));
    const double corr_sampled = std::stod(report_value(report_text, "correlation_sampled_min"));
    CHECK(corr_max <= corr_sampled * 1.01);
    CHECK(report.psi_final > 0.0);
}
