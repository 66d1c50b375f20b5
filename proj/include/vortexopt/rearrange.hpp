#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vortexopt/mesh.hpp"
#include "vortexopt/poisson.hpp"

namespace vortexopt {

enum class LevelDirection {
    Super, // {u >= t}, maximization
    Sub,   // {u <= t}, minimization
};

struct LevelQuery {
    LevelDirection direction = LevelDirection::Super;
    double target_measure = 0.0;
    double tolerance = 0.0; // area tolerance for |F(t) - A|
};

inline double default_area_tolerance(double total_area) { return 5e-3 * total_area; }

struct BathtubResult {
    double level = 0.0;
    std::vector<int> set_D; // sorted element indices
    double achieved_measure = 0.0;
};

struct BisectionResult {
    double level = 0.0;
    bool plateau = false; // distribution jumps across A; |F(t) - A| >= TOL
    int halvings = 0;
};

// Per-element stand-in for pointwise u: the value of the P1 interpolant at
// the element centroid, i.e. the mean of the three vertex values.
inline std::vector<double> element_representative(const TriMesh& mesh,
                                                  const std::vector<double>& nodal_u) {
    if (nodal_u.size() != static_cast<std::size_t>(mesh.n_vertices()))
        throw std::runtime_error("element_representative: nodal vector size mismatch");
    std::vector<double> rep(static_cast<std::size_t>(mesh.n_triangles()));
    for (std::size_t e = 0; e < rep.size(); ++e) {
        const auto& t = mesh.triangles[e];
        rep[e] = (nodal_u[static_cast<std::size_t>(t[0])] + nodal_u[static_cast<std::size_t>(t[1])] +
                  nodal_u[static_cast<std::size_t>(t[2])]) / 3.0;
    }
    return rep;
}

// F(s) = |{value <= s}| for Sub, |{value >= s}| for Super.
inline double distribution(const TriMesh& mesh, std::span<const double> values, double s,
                           LevelDirection direction) {
    if (values.size() != static_cast<std::size_t>(mesh.n_triangles()))
        throw std::runtime_error("distribution: per-element value size mismatch");
    double measure = 0.0;
    for (std::size_t e = 0; e < values.size(); ++e) {
        const bool in = (direction == LevelDirection::Sub) ? (values[e] <= s) : (values[e] >= s);
        if (in) measure += mesh.element_area[e];
    }
    return measure;
}

namespace detail {

inline void check_query(const TriMesh& mesh, const LevelQuery& query) {
    double total = 0.0;
    for (const double a : mesh.element_area) total += a;
    if (!(query.target_measure > 0.0) || !(query.target_measure < total))
        throw std::runtime_error("level query: target measure must lie strictly inside (0, |Omega|)");
    if (!(query.tolerance > 0.0)) throw std::runtime_error("level query: tolerance must be positive");
}

} // namespace detail

// Bisection for the level t with |F(t) - A| < TOL. When the distribution
// function jumps across A (discrete plateau) no such t exists; the jump
// level is returned with the plateau flag raised.
inline BisectionResult bisection_level(const TriMesh& mesh, std::span<const double> values,
                                       const LevelQuery& query) {
    detail::check_query(mesh, query);
    double vmin = values[0], vmax = values[0];
    for (const double v : values) {
        vmin = std::fmin(vmin, v);
        vmax = std::fmax(vmax, v);
    }

    BisectionResult out;
    if (vmin == vmax) { // constant field: every level is a plateau
        out.level = vmin;
        out.plateau = true;
        return out;
    }

    double lo = std::fmin(0.0, vmin), hi = vmax;
    const double scale = std::fmax(std::fabs(vmin), std::fabs(vmax));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        out.level = mid;
        out.halvings = it + 1;
        const double f = distribution(mesh, values, mid, query.direction);
        if (std::fabs(f - query.target_measure) < query.tolerance) return out;
        const bool go_up = (query.direction == LevelDirection::Sub) ? (f < query.target_measure)
                                                                    : (f >= query.target_measure);
        if (go_up) lo = mid; else hi = mid;
        if (hi - lo < 1e-15 * scale) {
            out.plateau = true;
            return out;
        }
    }
    out.plateau = true;
    return out;
}

// Sort-based threshold set of prescribed measure: the maximal prefix of
// elements ordered by representative value (descending for Super, ascending
// for Sub, ties by ascending element index) with cumulative area <= A, plus
// one more element when that brings the achieved measure closer to A.
inline BathtubResult bathtub_set(const TriMesh& mesh, std::span<const double> values,
                                 const LevelQuery& query) {
    detail::check_query(mesh, query);
    if (values.size() != static_cast<std::size_t>(mesh.n_triangles()))
        throw std::runtime_error("bathtub_set: per-element value size mismatch");

    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    if (query.direction == LevelDirection::Super) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = values[static_cast<std::size_t>(a)];
            const double vb = values[static_cast<std::size_t>(b)];
            return va > vb || (va == vb && a < b);
        });
    } else {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = values[static_cast<std::size_t>(a)];
            const double vb = values[static_cast<std::size_t>(b)];
            return va < vb || (va == vb && a < b);
        });
    }

    BathtubResult out;
    double cum = 0.0;
    std::size_t taken = 0;
    while (taken < order.size()) {
        const double a = mesh.element_area[static_cast<std::size_t>(order[taken])];
        if (cum + a > query.target_measure) break;
        cum += a;
        ++taken;
    }
    if (taken < order.size()) {
        const double a = mesh.element_area[static_cast<std::size_t>(order[taken])];
        if (std::fabs(cum + a - query.target_measure) < std::fabs(cum - query.target_measure)) {
            cum += a;
            ++taken;
        }
    }

    out.set_D.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(taken));
    std::sort(out.set_D.begin(), out.set_D.end());
    out.achieved_measure = cum;
    if (taken > 0) {
        out.level = values[static_cast<std::size_t>(order[taken - 1])];
    } else {
        out.level = (query.direction == LevelDirection::Super)
                        ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    }
    return out;
}

inline VorticityField vorticity_from_set(const TriMesh& mesh, std::span<const int> set_D,
                                         double alpha, double beta) {
    if (!(beta > 0.0) || !(alpha > beta))
        throw std::runtime_error("vorticity_from_set: requires alpha > beta > 0");
    VorticityField f;
    f.alpha = alpha;
    f.beta = beta;
    f.element_value.assign(static_cast<std::size_t>(mesh.n_triangles()), beta);
    f.set_D.assign(set_D.begin(), set_D.end());
    std::sort(f.set_D.begin(), f.set_D.end());
    f.set_D.erase(std::unique(f.set_D.begin(), f.set_D.end()), f.set_D.end());
    for (const int e : f.set_D) {
        if (e < 0 || e >= mesh.n_triangles())
            throw std::runtime_error("vorticity_from_set: element index out of range");
        f.element_value[static_cast<std::size_t>(e)] = alpha;
        f.measure_D += mesh.element_area[static_cast<std::size_t>(e)];
    }
    return f;
}

// Deterministic random element set of measure ~ target (prefix of a seeded
// shuffle, plus one element when that improves the measure).
inline std::vector<int> random_element_set(const TriMesh& mesh, double target_measure,
                                           std::uint64_t seed) {
    std::vector<int> order(static_cast<std::size_t>(mesh.n_triangles()));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> set;
    double cum = 0.0;
    for (const int e : order) {
        const double a = mesh.element_area[static_cast<std::size_t>(e)];
        if (cum + a > target_measure) {
            if (std::fabs(cum + a - target_measure) < std::fabs(cum - target_measure)) {
                set.push_back(e);
                cum += a;
            }
            break;
        }
        set.push_back(e);
        cum += a;
    }
    std::sort(set.begin(), set.end());
    return set;
}

inline void export_set(const BathtubResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_set: cannot open " + path);
    out << "# achieved_measure=" << detail::format_double(result.achieved_measure)
        << " t=" << detail::format_double(result.level) << "\n";
    for (const int e : result.set_D) out << e << "\n";
}

} // namespace vortexopt
