#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "vortexopt/geometry.hpp"

namespace vortexopt {

// Closed-form solution of -(1/r)(r u')' = f(r) on a disk of radius R with
// u(R) = 0, for piecewise-constant radial data. Serves as ground truth for
// disk experiments.

struct RadialRing {
    double outer_radius = 0.0;
    double f_value = 0.0;
};

struct RadialConfig {
    double R = 0.0;
    std::vector<RadialRing> rings; // strictly increasing outer radii, last == R

    void validate() const {
        if (!(R > 0.0)) throw std::runtime_error("radial: R must be positive");
        if (rings.empty()) throw std::runtime_error("radial: no rings");
        double prev = 0.0;
        for (const RadialRing& ring : rings) {
            if (!(ring.outer_radius > prev))
                throw std::runtime_error("radial: ring radii must be strictly increasing");
            if (ring.f_value < 0.0) throw std::runtime_error("radial: f must be nonnegative");
            prev = ring.outer_radius;
        }
        if (std::fabs(prev - R) > 1e-12 * R)
            throw std::runtime_error("radial: last ring must end at R");
    }
};

struct RadialSolution {
    // u(r) = a_k + b_k ln r - c_k r^2 on ring k, with c_k = f_k / 4.
    struct Coef { double a = 0.0, b = 0.0, c = 0.0; };
    std::vector<Coef> coef;
    std::vector<double> outer_radius;
    double R = 0.0;
    double psi = 0.0;
};

namespace detail {

inline double radial_u(const RadialSolution::Coef& k, double r) {
    const double log_term = (k.b == 0.0) ? 0.0 : k.b * std::log(r);
    return k.a + log_term - k.c * r * r;
}

// Antiderivative of r u(r) on a ring.
inline double radial_ru_antider(const RadialSolution::Coef& k, double r) {
    if (r == 0.0) return 0.0;
    const double r2 = r * r;
    const double log_part = (k.b == 0.0) ? 0.0 : k.b * (0.5 * r2 * std::log(r) - 0.25 * r2);
    return 0.5 * k.a * r2 + log_part - 0.25 * k.c * r2 * r2;
}

} // namespace detail

inline RadialSolution radial_solve(const RadialConfig& config) {
    config.validate();
    const std::size_t n = config.rings.size();
    RadialSolution sol;
    sol.R = config.R;
    sol.coef.resize(n);
    sol.outer_radius.resize(n);
    for (std::size_t k = 0; k < n; ++k) sol.outer_radius[k] = config.rings[k].outer_radius;

    // Forward sweep: flux continuity fixes b, value continuity fixes a.
    sol.coef[0].a = 0.0;
    sol.coef[0].b = 0.0; // regularity at r = 0
    sol.coef[0].c = config.rings[0].f_value / 4.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double rk = config.rings[k - 1].outer_radius;
        const double f_prev = config.rings[k - 1].f_value;
        const double f_next = config.rings[k].f_value;
        sol.coef[k].c = f_next / 4.0;
        sol.coef[k].b = sol.coef[k - 1].b + 0.5 * (f_next - f_prev) * rk * rk;
        const double u_prev = detail::radial_u(sol.coef[k - 1], rk);
        const double log_rk = std::log(rk);
        sol.coef[k].a = u_prev - sol.coef[k].b * log_rk + sol.coef[k].c * rk * rk;
    }
    const double shift = detail::radial_u(sol.coef[n - 1], config.R);
    for (auto& c : sol.coef) c.a -= shift;

    // psi = sum_k f_k * 2 pi * int r u dr over ring k
    double psi = 0.0;
    double inner = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double outer = config.rings[k].outer_radius;
        const double piece = detail::radial_ru_antider(sol.coef[k], outer) -
                             detail::radial_ru_antider(sol.coef[k], inner);
        psi += config.rings[k].f_value * 2.0 * std::numbers::pi * piece;
        inner = outer;
    }
    sol.psi = psi;
    return sol;
}

inline double radial_psi(const RadialSolution& sol) { return sol.psi; }

inline double radial_psi(const RadialConfig& config) { return radial_solve(config).psi; }

inline double radial_eval(const RadialSolution& sol, double r) {
    if (r < 0.0 || r > sol.R * (1.0 + 1e-12))
        throw std::runtime_error("radial_eval: r outside [0, R]");
    std::size_t k = 0;
    while (k + 1 < sol.coef.size() && r > sol.outer_radius[k]) ++k;
    if (r == 0.0) return sol.coef[0].a;
    return detail::radial_u(sol.coef[k], r);
}

} // namespace vortexopt
