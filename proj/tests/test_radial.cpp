#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vortexopt/poisson.hpp"
#include "vortexopt/radial.hpp"

using namespace vortexopt;
using std::numbers::pi;

namespace {

// Independent check of psi by high-resolution trapezoid quadrature of
// 2 pi r f(r) u(r), ring by ring so the jumps of f never cross a panel.
double psi_by_quadrature(const RadialConfig& cfg, const RadialSolution& sol, int n_points) {
    double sum = 0.0;
    double inner = 0.0;
    for (const RadialRing& ring : cfg.rings) {
        const double width = ring.outer_radius - inner;
        const int n = std::max(1000, static_cast<int>(n_points * width / cfg.R));
        const double dr = width / n;
        double piece = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double r = inner + i * dr;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            piece += w * r * radial_eval(sol, r);
        }
        sum += ring.f_value * piece * dr;
        inner = ring.outer_radius;
    }
    return 2.0 * pi * sum;
}

} // namespace

TEST_CASE("uniform load on a disk gives the torsion solution") {
    RadialConfig cfg{2.0, {{2.0, 1.0}}};
    const RadialSolution sol = radial_solve(cfg);
    CHECK(radial_eval(sol, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (const double r : {0.3, 1.0, 1.7, 2.0}) {
        CHECK(radial_eval(sol, r) == doctest::Approx((4.0 - r * r) / 4.0).epsilon(1e-13));
    }
    CHECK(sol.psi == doctest::Approx(pi * 16.0 / 8.0).epsilon(1e-13)); // pi R^4 / 8 = 2 pi
}

TEST_CASE("two-ring maximizer configuration") {
    RadialConfig cfg{2.0, {{1.0, 2.0}, {2.0, 1.0}}};
    const RadialSolution sol = radial_solve(cfg);
    CHECK(radial_eval(sol, 0.0) == doctest::Approx(1.25 + 0.5 * std::log(2.0)).epsilon(1e-13));
    // exact piecewise integration: pi (31/8 + ln2 / 2)
    const double exact = pi * (31.0 / 8.0 + 0.5 * std::log(2.0));
    CHECK(sol.psi == doctest::Approx(exact).epsilon(1e-13));
    CHECK(sol.psi == doctest::Approx(13.2623).epsilon(1e-4));
}

TEST_CASE("two-ring minimizer configuration") {
    RadialConfig cfg{2.0, {{std::sqrt(3.0), 1.0}, {2.0, 2.0}}};
    const RadialSolution sol = radial_solve(cfg);
    // exact piecewise integration: pi (13/8 + (9/2) ln2 - (9/4) ln3)
    const double exact = pi * (13.0 / 8.0 + 4.5 * std::log(2.0) - 2.25 * std::log(3.0));
    CHECK(sol.psi == doctest::Approx(exact).epsilon(1e-13));
    CHECK(sol.psi == doctest::Approx(7.1387).epsilon(1e-4));
}

TEST_CASE("zero load gives the zero solution") {
    RadialConfig cfg{2.0, {{2.0, 0.0}}};
    const RadialSolution sol = radial_solve(cfg);
    CHECK(sol.psi == 0.0);
    CHECK(radial_eval(sol, 0.0) == 0.0);
    CHECK(radial_eval(sol, 1.3) == 0.0);
}

TEST_CASE("solution satisfies regularity, continuity and the boundary condition") {
    RadialConfig cfg{3.0, {{0.5, 2.5}, {1.2, 0.7}, {2.0, 1.9}, {3.0, 0.4}}};
    const RadialSolution sol = radial_solve(cfg);
    CHECK(sol.coef[0].b == 0.0);
    CHECK(std::fabs(radial_eval(sol, 3.0)) <= 1e-12);
    for (std::size_t k = 0; k + 1 < sol.coef.size(); ++k) {
        const double r = sol.outer_radius[k];
        const double left = sol.coef[k].a + sol.coef[k].b * std::log(r) - sol.coef[k].c * r * r;
        const double right = sol.coef[k + 1].a + sol.coef[k + 1].b * std::log(r) - sol.coef[k + 1].c * r * r;
        CHECK(std::fabs(left - right) <= 1e-12 * std::fmax(1.0, std::fabs(left)));
        // flux continuity: r u' = b - f r^2 / 2
        const double flux_left = sol.coef[k].b - 2.0 * sol.coef[k].c * r * r;
        const double flux_right = sol.coef[k + 1].b - 2.0 * sol.coef[k + 1].c * r * r;
        CHECK(std::fabs(flux_left - flux_right) <= 1e-12 * std::fmax(1.0, std::fabs(flux_left)));
    }
}

TEST_CASE("psi agrees with high-resolution quadrature") {
    for (const RadialConfig& cfg : {RadialConfig{2.0, {{1.0, 2.0}, {2.0, 1.0}}},
                                    RadialConfig{2.0, {{std::sqrt(3.0), 1.0}, {2.0, 2.0}}},
                                    RadialConfig{1.5, {{0.4, 3.0}, {0.9, 1.0}, {1.5, 2.0}}}}) {
        const RadialSolution sol = radial_solve(cfg);
        const double quad = psi_by_quadrature(cfg, sol, 1000000);
        CHECK(std::fabs(quad - sol.psi) <= 1e-8 * std::fabs(sol.psi));
    }
}

TEST_CASE("monotone decreasing for positive load") {
    RadialConfig cfg{2.0, {{0.8, 2.0}, {2.0, 1.0}}};
    const RadialSolution sol = radial_solve(cfg);
    double prev = radial_eval(sol, 0.0);
    for (int i = 1; i <= 1000; ++i) {
        const double u = radial_eval(sol, 2.0 * i / 1000.0);
        CHECK(u <= prev + 1e-12);
        prev = u;
    }
}

TEST_CASE("oracle and finite elements agree on annular configurations") {
    const TriMesh mesh = generate_domain(ShapeSpec::disk(2.0), 0.035);
    REQUIRE(mesh_metrics(mesh).h_max <= 0.05);
    const PoissonSystem system = assemble(mesh);

    for (const RadialConfig& cfg : {RadialConfig{2.0, {{1.0, 2.0}, {2.0, 1.0}}},
                                    RadialConfig{2.0, {{std::sqrt(3.0), 1.0}, {2.0, 2.0}}}}) {
        const RadialSolution oracle = radial_solve(cfg);

        // realize the radial data as per-element values by centroid radius
        std::vector<double> f(mesh.n_triangles());
        for (int e = 0; e < mesh.n_triangles(); ++e) {
            const double r = norm(mesh.element_centroid[e]);
            double value = cfg.rings.back().f_value;
            for (const RadialRing& ring : cfg.rings) {
                if (r <= ring.outer_radius) {
                    value = ring.f_value;
                    break;
                }
            }
            f[e] = value;
        }
        const StreamSolution fem = system.solve(f);

        CHECK(std::fabs(fem.psi - oracle.psi) <= 0.01 * oracle.psi);
        double umax = 0.0, worst = 0.0;
        for (int v = 0; v < mesh.n_vertices(); ++v) {
            const double exact = radial_eval(oracle, std::fmin(norm(mesh.vertices[v]), 2.0));
            umax = std::fmax(umax, exact);
            worst = std::fmax(worst, std::fabs(fem.nodal_u[v] - exact));
        }
        CHECK(worst <= 0.02 * umax);
    }
}

TEST_CASE("configuration validation") {
    CHECK_THROWS(radial_solve(RadialConfig{2.0, {{1.5, 1.0}, {1.0, 2.0}}})); // radii not increasing
    CHECK_THROWS(radial_solve(RadialConfig{2.0, {{1.0, 1.0}}}));             // last ring not at R
    CHECK_THROWS(radial_solve(RadialConfig{2.0, {{2.0, -1.0}}}));            // negative load
    CHECK_THROWS(radial_solve(RadialConfig{-1.0, {{1.0, 1.0}}}));
    const RadialSolution sol = radial_solve(RadialConfig{2.0, {{2.0, 1.0}}});
    CHECK_THROWS(radial_eval(sol, 2.5));
    CHECK_THROWS(radial_eval(sol, -0.1));
}
