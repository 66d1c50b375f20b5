#pragma once

#include <span>
#include <vector>

#include "vortexopt/mesh.hpp"
#include "vortexopt/poisson.hpp"
#include "vortexopt/rearrange.hpp"

namespace vortexopt {

// Analytical optimizers for the low-contrast regime f = beta + eps chi_D:
// level sets of the constant-load solution phi0 and the exact second-order
// expansion of the energy in eps.

struct LowContrastResult {
    StreamSolution phi0;   // solve with f == beta
    std::vector<int> D_M;  // super-level set of phi0, measure ~ A
    std::vector<int> D_m;  // sub-level set of phi0, measure ~ A
    double t_M = 0.0;
    double t_m = 0.0;
    double measure_D_M = 0.0;
    double measure_D_m = 0.0;
    double epsilon = 0.0;
};

struct PsiExpansion {
    double total = 0.0;
    double term0 = 0.0; // int beta phi0
    double term1 = 0.0; // 2 eps int_D phi0
    double term2 = 0.0; // eps^2 int_D phi1(D)
};

inline StreamSolution torsion_phi0(const PoissonSystem& system, double beta) {
    if (!(beta > 0.0)) throw std::runtime_error("torsion_phi0: beta must be positive");
    const std::vector<double> f(static_cast<std::size_t>(system.n_elements()), beta);
    return system.solve(f);
}

inline LowContrastResult low_contrast_sets(const TriMesh& mesh, const PoissonSystem& system,
                                           double beta, double target_measure,
                                           double area_tol = 0.0) {
    LowContrastResult out;
    out.phi0 = torsion_phi0(system, beta);
    const std::vector<double> rep = element_representative(mesh, out.phi0.nodal_u);
    const double total = mesh_metrics(mesh).total_area;
    const double tol = (area_tol > 0.0) ? area_tol : default_area_tolerance(total);

    const BathtubResult up = bathtub_set(mesh, rep, {LevelDirection::Super, target_measure, tol});
    const BathtubResult down = bathtub_set(mesh, rep, {LevelDirection::Sub, target_measure, tol});
    out.D_M = up.set_D;
    out.t_M = up.level;
    out.measure_D_M = up.achieved_measure;
    out.D_m = down.set_D;
    out.t_m = down.level;
    out.measure_D_m = down.achieved_measure;
    return out;
}

// Expansion of psi(beta + eps chi_D) with phi1(D) solving the unit load on D.
// The total matches a direct solve up to solver tolerance.
inline PsiExpansion psi_expansion(const TriMesh& mesh, const PoissonSystem& system, double beta,
                                  double epsilon, std::span<const int> set_D,
                                  const StreamSolution* phi0 = nullptr) {
    if (!(beta > 0.0)) throw std::runtime_error("psi_expansion: beta must be positive");
    if (epsilon < 0.0) throw std::runtime_error("psi_expansion: epsilon must be nonnegative");

    StreamSolution local_phi0;
    if (phi0 == nullptr) {
        local_phi0 = torsion_phi0(system, beta);
        phi0 = &local_phi0;
    }

    PsiExpansion out;
    const std::vector<double> beta_field(static_cast<std::size_t>(system.n_elements()), beta);
    out.term0 = system.energy_psi(beta_field, phi0->nodal_u);

    const auto set_integral = [&](const std::vector<double>& nodal) {
        double s = 0.0;
        for (const int e : set_D) {
            const auto& t = mesh.triangles[static_cast<std::size_t>(e)];
            const double mean = (nodal[static_cast<std::size_t>(t[0])] + nodal[static_cast<std::size_t>(t[1])] +
                                 nodal[static_cast<std::size_t>(t[2])]) / 3.0;
            s += mesh.element_area[static_cast<std::size_t>(e)] * mean;
        }
        return s;
    };

    out.term1 = 2.0 * epsilon * set_integral(phi0->nodal_u);
    if (epsilon > 0.0) {
        std::vector<double> indicator(static_cast<std::size_t>(system.n_elements()), 0.0);
        for (const int e : set_D) indicator[static_cast<std::size_t>(e)] = 1.0;
        const StreamSolution phi1 = system.solve(indicator);
        out.term2 = epsilon * epsilon * set_integral(phi1.nodal_u);
    }
    out.total = out.term0 + out.term1 + out.term2;
    return out;
}

struct PerturbationTrial {
    int trial = 0;
    double psi_reference = 0.0; // expansion total on D_M (or D_m)
    double psi_random = 0.0;    // expansion total on the random set
    double margin = 0.0;        // psi_reference - psi_random (Super); reversed for Sub
};

// Random-set comparison behind the low-contrast optimality statements.
inline std::vector<PerturbationTrial> low_contrast_perturbation_trials(
    const TriMesh& mesh, const PoissonSystem& system, double beta, double epsilon,
    double target_measure, LevelDirection direction, int n_trials, std::uint64_t base_seed = 1) {
    const LowContrastResult lc = low_contrast_sets(mesh, system, beta, target_measure);
    const std::vector<int>& ref_set = (direction == LevelDirection::Super) ? lc.D_M : lc.D_m;
    const PsiExpansion ref = psi_expansion(mesh, system, beta, epsilon, ref_set, &lc.phi0);

    std::vector<PerturbationTrial> out;
    out.reserve(static_cast<std::size_t>(n_trials));
    for (int k = 0; k < n_trials; ++k) {
        const std::vector<int> rnd = random_element_set(mesh, target_measure, base_seed + static_cast<std::uint64_t>(k));
        const PsiExpansion trial = psi_expansion(mesh, system, beta, epsilon, rnd, &lc.phi0);
        PerturbationTrial rec;
        rec.trial = k;
        rec.psi_reference = ref.total;
        rec.psi_random = trial.total;
        rec.margin = (direction == LevelDirection::Super) ? ref.total - trial.total
                                                          : trial.total - ref.total;
        out.push_back(rec);
    }
    return out;
}

inline void export_perturbation_trials(const std::vector<PerturbationTrial>& trials,
                                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_perturbation_trials: cannot open " + path);
    out << "trial,psi_DM,psi_D,margin\n";
    for (const PerturbationTrial& t : trials) {
        out << t.trial << "," << detail::format_double(t.psi_reference) << ","
            << detail::format_double(t.psi_random) << "," << detail::format_double(t.margin) << "\n";
    }
}

} // namespace vortexopt
