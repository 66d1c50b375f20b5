#pragma once

#include <algorithm>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vortexopt/mesh.hpp"
#include "vortexopt/sparse.hpp"

namespace vortexopt {

// ---------------------------------------------------------------------------
// Fields and solutions
// ---------------------------------------------------------------------------

// Two-valued vorticity f = alpha on set_D, beta elsewhere.
struct VorticityField {
    std::vector<double> element_value;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<int> set_D; // sorted element indices
    double measure_D = 0.0;
};

struct StreamSolution {
    std::vector<double> nodal_u; // zero at boundary vertices
    double psi = 0.0;            // int f u
    double dirichlet = 0.0;      // int |grad u|^2
    double residual = 0.0;
    int cg_iterations = 0;
};

struct SolveError : std::runtime_error {
    double residual;
    explicit SolveError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

// Discrete operator bundle for the P1 Dirichlet Poisson problem on a fixed
// mesh: full stiffness form, the interior block, and the element-to-node
// load map (exact for piecewise-constant f against P1 test functions).
class PoissonSystem {
public:
    explicit PoissonSystem(const TriMesh& mesh)
        : triangles_(mesh.triangles), area_(mesh.element_area) {
        const int nv = mesh.n_vertices();
        n_vertices_ = nv;

        interior_of_vertex_.assign(static_cast<std::size_t>(nv), -1);
        for (int v = 0; v < nv; ++v) {
            if (!mesh.boundary_vertex[static_cast<std::size_t>(v)]) {
                interior_of_vertex_[static_cast<std::size_t>(v)] = static_cast<int>(vertex_of_interior_.size());
                vertex_of_interior_.push_back(v);
            }
        }
        if (vertex_of_interior_.empty())
            throw std::runtime_error("poisson: mesh has no interior vertices, problem is unsolvable");

        CsrBuilder full(nv);
        CsrBuilder inner(static_cast<int>(vertex_of_interior_.size()));
        for (std::size_t e = 0; e < triangles_.size(); ++e) {
            const auto& t = triangles_[e];
            const Vec2& p0 = mesh.vertices[static_cast<std::size_t>(t[0])];
            const Vec2& p1 = mesh.vertices[static_cast<std::size_t>(t[1])];
            const Vec2& p2 = mesh.vertices[static_cast<std::size_t>(t[2])];
            const double T = area_[e];
            // grad of the hat function at vertex k is perp(opposite edge)/(2T)
            const Vec2 g[3] = {
                Vec2{p1.y - p2.y, p2.x - p1.x} * (1.0 / (2.0 * T)),
                Vec2{p2.y - p0.y, p0.x - p2.x} * (1.0 / (2.0 * T)),
                Vec2{p0.y - p1.y, p1.x - p0.x} * (1.0 / (2.0 * T)),
            };
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const double k = T * dot(g[a], g[b]);
                    full.add(t[a], t[b], k);
                    const int ia = interior_of_vertex_[static_cast<std::size_t>(t[a])];
                    const int ib = interior_of_vertex_[static_cast<std::size_t>(t[b])];
                    if (ia >= 0 && ib >= 0) inner.add(ia, ib, k);
                }
            }
        }
        stiffness_full_ = full.build();
        stiffness_interior_ = inner.build();
    }

    int n_vertices() const { return n_vertices_; }
    int n_elements() const { return static_cast<int>(triangles_.size()); }
    int n_interior() const { return static_cast<int>(vertex_of_interior_.size()); }
    const CsrMatrix& stiffness_full() const { return stiffness_full_; }
    const CsrMatrix& stiffness_interior() const { return stiffness_interior_; }
    const std::vector<int>& interior_vertices() const { return vertex_of_interior_; }

    // Per-vertex load: sum over incident elements of f_e * area_e / 3.
    std::vector<double> load_vector(std::span<const double> f) const {
        check_field(f);
        std::vector<double> load(static_cast<std::size_t>(n_vertices_), 0.0);
        for (std::size_t e = 0; e < triangles_.size(); ++e) {
            const double w = f[e] * area_[e] / 3.0;
            for (int k = 0; k < 3; ++k) load[static_cast<std::size_t>(triangles_[e][k])] += w;
        }
        return load;
    }

    StreamSolution solve(std::span<const double> f, double rel_tol = 1e-12, int max_iter = 20000) const {
        const std::vector<double> load = load_vector(f);
        std::vector<double> rhs(vertex_of_interior_.size());
        for (std::size_t i = 0; i < vertex_of_interior_.size(); ++i)
            rhs[i] = load[static_cast<std::size_t>(vertex_of_interior_[i])];

        std::vector<double> x;
        const CgResult cg = cg_solve(stiffness_interior_, rhs, x, rel_tol, max_iter);
        if (!cg.converged && cg.rel_residual > 1e-10) {
            throw SolveError("poisson: cg failed to converge, relative residual " +
                                 std::to_string(cg.rel_residual),
                             cg.rel_residual);
        }

        StreamSolution sol;
        sol.nodal_u.assign(static_cast<std::size_t>(n_vertices_), 0.0);
        for (std::size_t i = 0; i < vertex_of_interior_.size(); ++i)
            sol.nodal_u[static_cast<std::size_t>(vertex_of_interior_[i])] = x[i];
        sol.residual = cg.rel_residual;
        sol.cg_iterations = cg.iterations;
        sol.psi = energy_psi(f, sol.nodal_u);
        sol.dirichlet = stiffness_full_.quadratic_form(sol.nodal_u);
        return sol;
    }

    StreamSolution solve(const VorticityField& f, double rel_tol = 1e-12, int max_iter = 20000) const {
        return solve(std::span<const double>(f.element_value), rel_tol, max_iter);
    }

    // int f u with the exact P1 rule int_e u = area_e * mean(vertex values).
    double energy_psi(std::span<const double> f, const std::vector<double>& nodal_u) const {
        check_field(f);
        if (nodal_u.size() != static_cast<std::size_t>(n_vertices_))
            throw std::runtime_error("energy_psi: nodal vector size mismatch");
        double psi = 0.0;
        for (std::size_t e = 0; e < triangles_.size(); ++e) {
            const auto& t = triangles_[e];
            const double mean = (nodal_u[static_cast<std::size_t>(t[0])] +
                                 nodal_u[static_cast<std::size_t>(t[1])] +
                                 nodal_u[static_cast<std::size_t>(t[2])]) / 3.0;
            psi += f[e] * area_[e] * mean;
        }
        return psi;
    }

    double dirichlet_energy(const std::vector<double>& nodal_u) const {
        if (nodal_u.size() != static_cast<std::size_t>(n_vertices_))
            throw std::runtime_error("dirichlet_energy: nodal vector size mismatch");
        return stiffness_full_.quadratic_form(nodal_u);
    }

private:
    void check_field(std::span<const double> f) const {
        if (f.size() != triangles_.size())
            throw std::runtime_error("poisson: per-element field size mismatch");
        for (const double v : f) {
            if (!std::isfinite(v)) throw std::runtime_error("poisson: field value not finite");
        }
    }

    int n_vertices_ = 0;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<double> area_;
    std::vector<int> interior_of_vertex_;
    std::vector<int> vertex_of_interior_;
    CsrMatrix stiffness_full_;
    CsrMatrix stiffness_interior_;
};

inline PoissonSystem assemble(const TriMesh& mesh) { return PoissonSystem(mesh); }

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

inline void export_solution_csv(const TriMesh& mesh, const std::vector<double>& nodal_u,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_solution_csv: cannot open " + path);
    out << "vertex_index,x,y,u\n";
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        out << i << "," << detail::format_double(mesh.vertices[static_cast<std::size_t>(i)].x) << ","
            << detail::format_double(mesh.vertices[static_cast<std::size_t>(i)].y) << ","
            << detail::format_double(nodal_u[static_cast<std::size_t>(i)]) << "\n";
    }
}

inline void export_field_csv(const TriMesh& mesh, const VorticityField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_field_csv: cannot open " + path);
    out << "element_index,f,indicator\n";
    std::vector<char> in_d(static_cast<std::size_t>(mesh.n_triangles()), 0);
    for (const int e : field.set_D) in_d[static_cast<std::size_t>(e)] = 1;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        out << e << "," << detail::format_double(field.element_value[static_cast<std::size_t>(e)]) << ","
            << static_cast<int>(in_d[static_cast<std::size_t>(e)]) << "\n";
    }
}

} // namespace vortexopt
