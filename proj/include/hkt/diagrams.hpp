#pragma once

// Equilibrium analysis: stationary longitudinal profiles, closed-form lateral
// diagrams and density sweeps of the hybrid model.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hkt/collocation.hpp"
#include "hkt/fokker_planck.hpp"
#include "hkt/hybrid.hpp"
#include "hkt/model.hpp"

namespace hkt {

enum class ProfileForm {
    printed,  ///< (D(u)/D(v))^2 exp(...) with D = V_A - v or v - V_B
    closure,  ///< zero-flux solution of the mean-field operator, nu(v) and kappa included
};

/// Stationary x-profile with W_x = u_x, normalised by two constants fixed from
/// unit mass and mean u_x (no continuity imposed at u_x).
struct StationaryProfile {
    double u_x = 0.0;
    double sigma2 = 0.0;
    double c_a = 0.0, c_b = 0.0;
    ProfileForm form = ProfileForm::closure;
    ModelParams params;
    /// Panel edges moving away from u_x and the exponent integral from u_x to each edge.
    std::vector<double> edges_lo, cum_lo, edges_hi, cum_hi;

    /// Density at v.
    double operator()(double v) const;
    /// Cell averages over n uniform cells of [0,1].
    std::vector<double> cell_averages(std::size_t n) const;
};

/// Throws NumericalError for degenerate closures (V_A = V_B = u_x), whose
/// stationary state is a point mass at u_x.
StationaryProfile stationary_gx(double u_x, double sigma2, const ModelParams& params,
                                ProfileForm form = ProfileForm::closure);

struct AnalyticYDiagram {
    double uy_bar = 0.0;
    double Ey_bar = 0.0;
    double var_Ey = 0.0;
    double halfwidth = 0.0;  ///< sqrt(Ey_bar + sqrt(var_Ey))
};

AnalyticYDiagram analytic_y_diagram(double rho, const ModelParams& params);

struct DiagramPoint {
    double rho = 0.0;
    double ux_inf = 0.0;
    double uy_bar_inf = 0.0;
    double Ey_bar_inf = 0.0;
    double var_Ey_inf = 0.0;
    double Iy = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
    bool equilibrated = true;
};

struct SweepSetup {
    std::size_t n_x = 100;
    std::size_t n_y = 40;
    double horizon = 100.0;
    std::uint64_t seed = 1;
    SolverConfig solver;
    HybridOptions hybrid;
    ThetaQuadrature quad;
};

/// Time average of the node's moments over the last `fraction` of its log.
MomentSet tail_average(const HybridState& node, double fraction = 0.1);

/// Diagram point from a finished ensemble.
DiagramPoint diagram_point(double rho, const EnsembleSolution& sol);

std::vector<DiagramPoint> diagram_sweep(const std::vector<double>& rho_grid, const ModelParams& params,
                                        const SweepSetup& setup);

void write_diagram_csv(std::ostream& os, const std::vector<DiagramPoint>& points);

}  // namespace hkt
