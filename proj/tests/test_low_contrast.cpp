#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "vortexopt/low_contrast.hpp"
#include "vortexopt/optimize.hpp"

using namespace vortexopt;
using std::numbers::pi;

namespace {

std::vector<int> elements_inside(const TriMesh& mesh, double radius) {
    std::vector<int> set;
    for (int e = 0; e < mesh.n_triangles(); ++e)
        if (norm(mesh.element_centroid[e]) <= radius) set.push_back(e);
    return set;
}

std::vector<int> elements_outside(const TriMesh& mesh, double radius) {
    std::vector<int> set;
    for (int e = 0; e < mesh.n_triangles(); ++e)
        if (norm(mesh.element_centroid[e]) >= radius) set.push_back(e);
    return set;
}

} // namespace

TEST_CASE("torsion solution phi0") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(2.0), 0.08);
    const PoissonSystem system = assemble(mesh);

    SUBCASE("disk center value") {
        const StreamSolution phi0 = torsion_phi0(system, 1.0);
        CHECK(phi0.nodal_u[0] == doctest::Approx(1.0).epsilon(0.01)); // beta R^2 / 4
    }
    SUBCASE("linear in beta") {
        const StreamSolution a = torsion_phi0(system, 1.0);
        const StreamSolution b = torsion_phi0(system, 2.0);
        double umax = 0.0;
        for (const double u : b.nodal_u) umax = std::fmax(umax, u);
        for (int v = 0; v < mesh.n_vertices(); ++v)
            CHECK(std::fabs(2.0 * a.nodal_u[v] - b.nodal_u[v]) <= 1e-9 * umax);
    }
    SUBCASE("square peaks at the center") {
        const TriMesh square = generate_domain(ShapeSpec::rectangle(2.0, 2.0), 0.15);
        const PoissonSystem sys2 = assemble(square);
        const StreamSolution phi0 = torsion_phi0(sys2, 1.0);
        int argmax = 0;
        for (int v = 1; v < square.n_vertices(); ++v)
            if (phi0.nodal_u[v] > phi0.nodal_u[argmax]) argmax = v;
        CHECK(norm(square.vertices[argmax]) <= 0.2); // within one element of the centroid
    }
    SUBCASE("nonpositive beta is rejected") { CHECK_THROWS(torsion_phi0(system, 0.0)); }
}

TEST_CASE("low-contrast level sets on the disk") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(2.0), 0.08);
    const PoissonSystem system = assemble(mesh);
    const LowContrastResult lc = low_contrast_sets(mesh, system, 1.0, pi);

    SUBCASE("D_M is the central disk of unit radius") {
        const double sd = symmetric_difference_area(mesh, lc.D_M, elements_inside(mesh, 1.0));
        CHECK(sd <= 0.05 * pi);
        CHECK(std::fabs(lc.measure_D_M - pi) <= default_area_tolerance(4.0 * pi));
    }
    SUBCASE("D_m is the outer annulus from sqrt(3)") {
        const double sd = symmetric_difference_area(mesh, lc.D_m, elements_outside(mesh, std::sqrt(3.0)));
        CHECK(sd <= 0.05 * pi);
        CHECK(std::fabs(lc.measure_D_m - pi) <= default_area_tolerance(4.0 * pi));
    }
    SUBCASE("target near the full domain selects almost everything") {
        const double total = mesh_metrics(mesh).total_area;
        const LowContrastResult full = low_contrast_sets(mesh, system, 1.0, total - mesh.element_area[0]);
        CHECK(static_cast<int>(full.D_M.size()) >= mesh.n_triangles() - 2);
        CHECK(static_cast<int>(full.D_m.size()) >= mesh.n_triangles() - 2);
    }
}

TEST_CASE("psi expansion") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(2.0), 0.08);
    const PoissonSystem system = assemble(mesh);
    const std::vector<int> central = elements_inside(mesh, 1.0);

    SUBCASE("zero contrast collapses to the leading term") {
        const PsiExpansion exp0 = psi_expansion(mesh, system, 1.0, 0.0, central);
        CHECK(exp0.term1 == 0.0);
        CHECK(exp0.term2 == 0.0);
        CHECK(exp0.total == exp0.term0);
    }
    SUBCASE("unit contrast on the central disk reaches the closed form") {
        const PsiExpansion e = psi_expansion(mesh, system, 1.0, 1.0, central);
        const double oracle = pi * (31.0 / 8.0 + 0.5 * std::log(2.0));
        CHECK(e.total == doctest::Approx(oracle).epsilon(0.01));
        CHECK(e.term2 > 0.0);
    }
    SUBCASE("second-order term is positive for any nonempty set") {
        const PsiExpansion e = psi_expansion(mesh, system, 1.0, 0.5, random_element_set(mesh, 2.0, 3));
        CHECK(e.term2 > 0.0);
    }
}

TEST_CASE("expansion total equals the direct solve") {
    const std::vector<std::pair<ShapeSpec, double>> domains = {
        {ShapeSpec::disk(2.0), 0.12},
        {ShapeSpec::rectangle(3.0, 2.0), 0.15},
    };
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> beta_dist(0.5, 2.0);
    std::uniform_real_distribution<double> eps_dist(0.01, 1.5);
    for (const auto& [spec, h] : domains) {
        const TriMesh mesh = generate_domain(spec, h);
        const PoissonSystem system = assemble(mesh);
        const double total = mesh_metrics(mesh).total_area;
        for (int trial = 0; trial < 10; ++trial) {
            const double beta = beta_dist(rng);
            const double eps = eps_dist(rng);
            const std::vector<int> set = random_element_set(mesh, 0.3 * total, 500 + trial);

            const PsiExpansion e = psi_expansion(mesh, system, beta, eps, set);
            std::vector<double> f(mesh.n_triangles(), beta);
            for (const int el : set) f[el] += eps;
            const StreamSolution direct = system.solve(f);
            CHECK(std::fabs(e.total - direct.psi) <= 1e-8 * std::fabs(direct.psi));
        }
    }
}

TEST_CASE("the expansion solution splits linearly") {
    // u^eps(D) = phi0 + eps phi1(D) nodal-wise
    const TriMesh mesh = generate_domain(ShapeSpec::disk(1.5), 0.1);
    const PoissonSystem system = assemble(mesh);
    const double beta = 1.2, eps = 0.4;
    const std::vector<int> set = random_element_set(mesh, 1.5, 11);

    const StreamSolution phi0 = torsion_phi0(system, beta);
    std::vector<double> indicator(mesh.n_triangles(), 0.0);
    for (const int e : set) indicator[e] = 1.0;
    const StreamSolution phi1 = system.solve(indicator);

    std::vector<double> f(mesh.n_triangles(), beta);
    for (const int e : set) f[e] += eps;
    const StreamSolution direct = system.solve(f);

    double umax = 0.0;
    for (const double u : direct.nodal_u) umax = std::fmax(umax, u);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        CHECK(std::fabs(phi0.nodal_u[v] + eps * phi1.nodal_u[v] - direct.nodal_u[v]) <= 1e-9 * umax);
    }
}

TEST_CASE("level sets beat random sets for small contrast") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(2.0), 0.1);
    const PoissonSystem system = assemble(mesh);
    const double beta = 1.0, eps = 0.01 * beta;

    for (const LevelDirection dir : {LevelDirection::Super, LevelDirection::Sub}) {
        const auto trials =
            low_contrast_perturbation_trials(mesh, system, beta, eps, pi, dir, 50, 900);
        REQUIRE(trials.size() == 50);
        for (const PerturbationTrial& t : trials) {
            CHECK(t.margin >= -1e-10 * std::fabs(t.psi_reference));
        }
    }
}

TEST_CASE("perturbation trial export") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(1.0), 0.2);
    const PoissonSystem system = assemble(mesh);
    const auto trials = low_contrast_perturbation_trials(mesh, system, 1.0, 0.01, 1.0,
                                                         LevelDirection::Super, 3, 1);
    const std::string path = testsup::temp_path("trials.csv");
    export_perturbation_trials(trials, path);
    const std::string content = testsup::read_file(path);
    CHECK(content.rfind("trial,psi_DM,psi_D,margin\n", 0) == 0);
    CHECK(std::count(content.begin(), content.end(), '\n') == 4);
}
