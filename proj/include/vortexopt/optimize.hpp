#pragma once

#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vortexopt/mesh.hpp"
#include "vortexopt/poisson.hpp"
#include "vortexopt/rearrange.hpp"

namespace vortexopt {

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

enum class StopReason { DeltaPsiBelowTol, SetUnchanged, MaxIter, SwapFloor };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::DeltaPsiBelowTol: return "delta_psi_below_TOL";
    case StopReason::SetUnchanged: return "set_unchanged";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::SwapFloor: return "swap_floor";
    }
    return "unknown";
}

struct TraceIteration {
    int iteration = 0;
    double psi = 0.0;
    double achieved_measure = 0.0;
    double set_change_area = 0.0;
    int swap_halvings = 0;
};

struct OptimizationTrace {
    std::vector<TraceIteration> iterations;
    VorticityField final_field;
    StreamSolution final_solution;
    StopReason stop_reason = StopReason::MaxIter;
};

struct OptimizeOptions {
    double tol = 0.0;        // delta-psi and area tolerance; 0 -> 5e-3 * |Omega|
    int max_iter = 100;
    double swap_floor = 0.0; // minimum swap measure; 0 -> smallest element area
};

// ---------------------------------------------------------------------------
// Set helpers
// ---------------------------------------------------------------------------

inline double set_area(const TriMesh& mesh, std::span<const int> set) {
    double a = 0.0;
    for (const int e : set) a += mesh.element_area[static_cast<std::size_t>(e)];
    return a;
}

// Both inputs sorted.
inline double symmetric_difference_area(const TriMesh& mesh, std::span<const int> a,
                                        std::span<const int> b) {
    double area = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j >= b.size() || (i < a.size() && a[i] < b[j])) {
            area += mesh.element_area[static_cast<std::size_t>(a[i++])];
        } else if (i >= a.size() || b[j] < a[i]) {
            area += mesh.element_area[static_cast<std::size_t>(b[j++])];
        } else {
            ++i;
            ++j;
        }
    }
    return area;
}

namespace detail {

inline std::vector<int> sorted_difference(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline std::vector<int> sorted_union(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Prefix of `pool` ordered by representative value with cumulative area <= target,
// plus one element when that improves the measure. ascending=true picks the
// lowest values first.
inline std::vector<int> value_prefix(const TriMesh& mesh, std::span<const double> rep,
                                     std::span<const int> pool, double target, bool ascending) {
    std::vector<int> order(pool.begin(), pool.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = rep[static_cast<std::size_t>(a)];
        const double vb = rep[static_cast<std::size_t>(b)];
        if (ascending) return va < vb || (va == vb && a < b);
        return va > vb || (va == vb && a < b);
    });
    std::vector<int> out;
    double cum = 0.0;
    for (const int e : order) {
        const double a = mesh.element_area[static_cast<std::size_t>(e)];
        if (cum + a > target) {
            if (std::fabs(cum + a - target) < std::fabs(cum - target)) {
                out.push_back(e);
                cum += a;
            }
            break;
        }
        out.push_back(e);
        cum += a;
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline void check_optimize_inputs(double alpha, double beta, double target, double total) {
    if (!(beta > 0.0) || !(alpha > beta))
        throw std::runtime_error("optimize: contrast must be positive (alpha > beta > 0)");
    if (!(target > 0.0) || !(target < total))
        throw std::runtime_error("optimize: target measure must lie strictly inside (0, |Omega|)");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Swap criterion
// ---------------------------------------------------------------------------

// theta = d / (N omega_N^(1/N)) at N = 2, with the mesh-measured diameter.
inline double swap_theta(const MeshMetrics& metrics) {
    return metrics.diameter / (2.0 * std::sqrt(std::numbers::pi));
}

struct SwapCheck {
    bool feasible = false;
    double margin = 0.0; // int_B2 u - int_B1 u + theta (alpha - beta) |B1|^(3/2)
};

inline SwapCheck swap_feasible(const TriMesh& mesh, const std::vector<double>& nodal_u,
                               std::span<const int> B1, std::span<const int> B2, double alpha,
                               double beta, double theta) {
    if (!(theta > 0.0)) throw std::runtime_error("swap_feasible: theta must be positive");
    {
        std::vector<int> inter;
        std::set_intersection(B1.begin(), B1.end(), B2.begin(), B2.end(), std::back_inserter(inter));
        if (!inter.empty()) throw std::runtime_error("swap_feasible: B1 and B2 must be disjoint");
    }
    const auto integral = [&](std::span<const int> set) {
        double s = 0.0;
        for (const int e : set) {
            const auto& t = mesh.triangles[static_cast<std::size_t>(e)];
            const double mean = (nodal_u[static_cast<std::size_t>(t[0])] +
                                 nodal_u[static_cast<std::size_t>(t[1])] +
                                 nodal_u[static_cast<std::size_t>(t[2])]) / 3.0;
            s += mesh.element_area[static_cast<std::size_t>(e)] * mean;
        }
        return s;
    };
    const double area_b1 = set_area(mesh, B1);
    SwapCheck out;
    out.margin = integral(B2) - integral(B1) + theta * (alpha - beta) * std::pow(area_b1, 1.5);
    out.feasible = out.margin < 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Energy maximization
// ---------------------------------------------------------------------------

// Fixed-point iteration on super-level sets of the current solution. The
// energy never decreases across iterations; a repeated set stops the loop.
inline OptimizationTrace maximize(const TriMesh& mesh, const PoissonSystem& system, double alpha,
                                  double beta, double target_measure,
                                  std::span<const int> initial_D, OptimizeOptions opt = {}) {
    const MeshMetrics metrics = mesh_metrics(mesh);
    detail::check_optimize_inputs(alpha, beta, target_measure, metrics.total_area);
    const double tol = (opt.tol > 0.0) ? opt.tol : default_area_tolerance(metrics.total_area);

    OptimizationTrace trace;
    VorticityField cur = vorticity_from_set(mesh, initial_D, alpha, beta);
    StreamSolution sol = system.solve(cur);
    trace.iterations.push_back({0, sol.psi, cur.measure_D, 0.0, 0});

    std::set<std::vector<int>> seen;
    seen.insert(cur.set_D);

    trace.stop_reason = StopReason::MaxIter;
    for (int n = 1; n <= opt.max_iter; ++n) {
        const std::vector<double> rep = element_representative(mesh, sol.nodal_u);
        const BathtubResult cand =
            bathtub_set(mesh, rep, {LevelDirection::Super, target_measure, tol});
        if (cand.set_D == cur.set_D || seen.count(cand.set_D)) {
            trace.stop_reason = StopReason::SetUnchanged;
            break;
        }
        VorticityField next = vorticity_from_set(mesh, cand.set_D, alpha, beta);
        StreamSolution next_sol = system.solve(next);
        const double delta = std::fabs(next_sol.psi - sol.psi);
        if (next_sol.psi < sol.psi - 1e-12 * std::fabs(sol.psi)) {
            // The ascent cannot drop at fixed measure; a lower candidate means
            // the prefix-rounding noise floor was reached. Keep the current set.
            seen.insert(cand.set_D);
            if (delta < tol) {
                trace.stop_reason = StopReason::DeltaPsiBelowTol;
                break;
            }
            continue; // the recomputed candidate repeats and trips the cycle guard
        }
        const double change = symmetric_difference_area(mesh, cur.set_D, next.set_D);
        trace.iterations.push_back({n, next_sol.psi, next.measure_D, change, 0});
        cur = std::move(next);
        sol = std::move(next_sol);
        seen.insert(cur.set_D);
        if (delta < tol) {
            trace.stop_reason = StopReason::DeltaPsiBelowTol;
            break;
        }
    }
    trace.final_field = std::move(cur);
    trace.final_solution = std::move(sol);
    return trace;
}

// ---------------------------------------------------------------------------
// Energy minimization
// ---------------------------------------------------------------------------

// Sub-level candidate per iteration; the move to the candidate is applied
// through a partial swap gated by the margin criterion, halving the swap
// measure until it passes. Stops when the candidate energy agrees with the
// current one to tol, or when the swap measure falls below swap_floor. The
// candidate is assigned before the stopping test, so whenever the loop
// halts the final iterate is the last candidate unless that would raise
// the energy.
inline OptimizationTrace minimize(const TriMesh& mesh, const PoissonSystem& system, double alpha,
                                  double beta, double target_measure,
                                  std::span<const int> initial_D, OptimizeOptions opt = {}) {
    const MeshMetrics metrics = mesh_metrics(mesh);
    detail::check_optimize_inputs(alpha, beta, target_measure, metrics.total_area);
    const double tol = (opt.tol > 0.0) ? opt.tol : default_area_tolerance(metrics.total_area);
    const double theta = swap_theta(metrics);
    double floor = opt.swap_floor;
    if (floor <= 0.0) {
        floor = *std::min_element(mesh.element_area.begin(), mesh.element_area.end());
    }

    OptimizationTrace trace;
    VorticityField cur = vorticity_from_set(mesh, initial_D, alpha, beta);
    StreamSolution sol = system.solve(cur);
    trace.iterations.push_back({0, sol.psi, cur.measure_D, 0.0, 0});

    VorticityField cand_field;
    StreamSolution cand_sol;
    bool have_candidate = false;
    const auto adopt_candidate_if_better = [&](int n) {
        if (have_candidate && cand_sol.psi <= sol.psi) {
            const double change = symmetric_difference_area(mesh, cur.set_D, cand_field.set_D);
            trace.iterations.push_back({n, cand_sol.psi, cand_field.measure_D, change, 0});
            cur = std::move(cand_field);
            sol = std::move(cand_sol);
        }
    };

    trace.stop_reason = StopReason::MaxIter;
    int n = 1;
    for (; n <= opt.max_iter; ++n) {
        const std::vector<double> rep = element_representative(mesh, sol.nodal_u);
        const BathtubResult cand = bathtub_set(mesh, rep, {LevelDirection::Sub, target_measure, tol});
        if (cand.set_D == cur.set_D) {
            trace.stop_reason = StopReason::DeltaPsiBelowTol; // delta psi is exactly zero
            have_candidate = false;
            break;
        }

        cand_field = vorticity_from_set(mesh, cand.set_D, alpha, beta);
        cand_sol = system.solve(cand_field);
        have_candidate = true;
        if (std::fabs(cand_sol.psi - sol.psi) < tol) {
            trace.stop_reason = StopReason::DeltaPsiBelowTol;
            break;
        }

        // Partial swap: move the lowest-u part of B in, the highest-u part
        // of B' out, with the swap measure halved until the margin passes.
        const std::vector<int> B = detail::sorted_difference(cand.set_D, cur.set_D);
        const std::vector<int> Bp = detail::sorted_difference(cur.set_D, cand.set_D);
        double a_prime = set_area(mesh, B);
        int halvings = 0;
        bool accepted = false;
        std::vector<int> B1, B2;
        while (a_prime >= floor) {
            B2 = detail::value_prefix(mesh, rep, B, a_prime, true);
            // keep the iterate measure pinned to the target across swaps
            double b1_target = set_area(mesh, B2) + (cur.measure_D - target_measure);
            if (b1_target < 0.0) b1_target = 0.0;
            B1 = detail::value_prefix(mesh, rep, Bp, b1_target, false);
            const SwapCheck check = swap_feasible(mesh, sol.nodal_u, B1, B2, alpha, beta, theta);
            if (check.feasible) {
                accepted = true;
                break;
            }
            a_prime *= 0.5;
            ++halvings;
        }
        if (!accepted) {
            trace.stop_reason = StopReason::SwapFloor;
            break;
        }

        const std::vector<int> next_set =
            detail::sorted_union(detail::sorted_difference(cur.set_D, B1), B2);
        VorticityField next = vorticity_from_set(mesh, next_set, alpha, beta);
        StreamSolution next_sol = system.solve(next);
        trace.iterations.push_back(
            {n, next_sol.psi, next.measure_D, set_area(mesh, B1) + set_area(mesh, B2), halvings});
        cur = std::move(next);
        sol = std::move(next_sol);
    }
    adopt_candidate_if_better(n);
    trace.final_field = std::move(cur);
    trace.final_solution = std::move(sol);
    return trace;
}

// ---------------------------------------------------------------------------
// Multistart and clustering
// ---------------------------------------------------------------------------

struct MultistartCluster {
    int representative = 0;       // index into runs
    double psi = 0.0;             // representative's final energy
    std::vector<int> members;     // run indices
};

struct MultistartResult {
    std::vector<OptimizationTrace> runs;
    std::vector<MultistartCluster> clusters; // sorted by psi descending
};

// Groups final sets whose pairwise symmetric difference is at most
// cluster_tol (default 2% of |Omega|); one representative per group.
inline std::vector<MultistartCluster> cluster_final_sets(const TriMesh& mesh,
                                                         const std::vector<OptimizationTrace>& runs,
                                                         double cluster_tol) {
    const std::size_t n = runs.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
        return v;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = symmetric_difference_area(mesh, runs[i].final_field.set_D,
                                                       runs[j].final_field.set_D);
            if (d <= cluster_tol) parent[static_cast<std::size_t>(find(static_cast<int>(j)))] = find(static_cast<int>(i));
        }
    }
    std::vector<MultistartCluster> clusters;
    for (std::size_t i = 0; i < n; ++i) {
        const int root = find(static_cast<int>(i));
        MultistartCluster* c = nullptr;
        for (auto& existing : clusters) {
            if (find(existing.representative) == root) {
                c = &existing;
                break;
            }
        }
        if (c == nullptr) {
            clusters.push_back({static_cast<int>(i), runs[i].final_solution.psi, {}});
            c = &clusters.back();
        }
        c->members.push_back(static_cast<int>(i));
        if (runs[i].final_solution.psi > c->psi) {
            c->psi = runs[i].final_solution.psi;
            c->representative = static_cast<int>(i);
        }
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const MultistartCluster& a, const MultistartCluster& b) { return a.psi > b.psi; });
    return clusters;
}

inline MultistartResult multistart(const TriMesh& mesh, const PoissonSystem& system, double alpha,
                                   double beta, double target_measure,
                                   const std::vector<std::vector<int>>& initial_sets,
                                   OptimizeOptions opt = {}) {
    if (initial_sets.empty()) throw std::runtime_error("multistart: need at least one initial set");
    MultistartResult out;
    out.runs.reserve(initial_sets.size());
    for (const auto& init : initial_sets) {
        out.runs.push_back(maximize(mesh, system, alpha, beta, target_measure, init, opt));
    }
    const double total = mesh_metrics(mesh).total_area;
    out.clusters = cluster_final_sets(mesh, out.runs, 0.02 * total);
    return out;
}

// Ball-shaped initializer: elements nearest to a point, measure ~ target.
inline std::vector<int> initial_ball(const TriMesh& mesh, double target_measure, Vec2 center) {
    std::vector<int> order(static_cast<std::size_t>(mesh.n_triangles()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = dist(mesh.element_centroid[static_cast<std::size_t>(a)], center);
        const double db = dist(mesh.element_centroid[static_cast<std::size_t>(b)], center);
        return da < db || (da == db && a < b);
    });
    std::vector<int> set;
    double cum = 0.0;
    for (const int e : order) {
        const double a = mesh.element_area[static_cast<std::size_t>(e)];
        if (cum + a > target_measure) {
            if (std::fabs(cum + a - target_measure) < std::fabs(cum - target_measure)) set.push_back(e);
            break;
        }
        set.push_back(e);
        cum += a;
    }
    std::sort(set.begin(), set.end());
    return set;
}

// ---------------------------------------------------------------------------
// Correlation with a reference rearrangement
// ---------------------------------------------------------------------------

struct CorrelationResult {
    double correlation = 0.0;      // int f f_hat
    VorticityField minimizer;      // alpha placed on the smallest-f_hat elements
    double min_correlation = 0.0;  // int f_min f_hat
};

inline double field_correlation(const TriMesh& mesh, const VorticityField& f,
                                const VorticityField& f_hat) {
    if (f.element_value.size() != f_hat.element_value.size() ||
        f.element_value.size() != static_cast<std::size_t>(mesh.n_triangles()))
        throw std::runtime_error("field_correlation: field size mismatch");
    double c = 0.0;
    for (std::size_t e = 0; e < f.element_value.size(); ++e)
        c += f.element_value[e] * f_hat.element_value[e] * mesh.element_area[e];
    return c;
}

inline CorrelationResult rearrangement_correlation(const TriMesh& mesh, const VorticityField& f,
                                                   const VorticityField& f_hat) {
    if (f.alpha != f_hat.alpha || f.beta != f_hat.beta)
        throw std::runtime_error("rearrangement_correlation: fields have mismatched alpha or beta");
    CorrelationResult out;
    out.correlation = field_correlation(mesh, f, f_hat);

    const double total = mesh_metrics(mesh).total_area;
    const BathtubResult low = bathtub_set(
        mesh, f_hat.element_value,
        {LevelDirection::Sub, f.measure_D, default_area_tolerance(total)});
    out.minimizer = vorticity_from_set(mesh, low.set_D, f.alpha, f.beta);
    out.min_correlation = field_correlation(mesh, out.minimizer, f_hat);
    return out;
}

// ---------------------------------------------------------------------------
// Trace export
// ---------------------------------------------------------------------------

inline void export_trace(const OptimizationTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_trace: cannot open " + path);
    out << "iter,psi,measure_D,set_change_area,halvings\n";
    for (const TraceIteration& it : trace.iterations) {
        out << it.iteration << "," << detail::format_double(it.psi) << ","
            << detail::format_double(it.achieved_measure) << ","
            << detail::format_double(it.set_change_area) << "," << it.swap_halvings << "\n";
    }
    out << "# stop_reason=" << to_string(trace.stop_reason) << "\n";
}

} // namespace vortexopt
