#pragma once

// Structure-preserving finite-volume solver for the nonlinear Fokker-Planck
// operator acting along v_x:
//
//     d_tau g = d_v ( Lc[g] g + (sigma^2/2) d_v (Dc[g] g) ),
//
// written in flux form F = C g + D d_v g with D = (sigma^2/2) Dc and
// C = Lc + d_v D. Interface values of g are Chang-Cooper convex combinations of
// the neighbouring cells. Boundaries carry zero flux.
//
// The functionals Lc, Dc depend on g only through its v_x-marginal, so one set
// of interface fields serves every v_y row.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hkt/grid.hpp"
#include "hkt/model.hpp"

namespace hkt {

enum class FluxVariant {
    standard,  ///< C_hat = Lc + dD, diffusion term D (g_{i+1} - g_i) / dv
    literal,   ///< C_hat = (Lc + dD) / dv, diffusion term (D/2) (g_{i+1} - g_i) / dv
};

enum class Stepper { explicit_euler, semi_implicit };

enum class DtPolicy {
    cfl_auto,        ///< largest step allowed by the stepper's positivity bound
    fixed,           ///< dt_value; refused if it violates the bound
    dv_over_sigma2,  ///< dv_x / sigma^2, capped by the positivity bound
};

std::string to_string(FluxVariant v);
std::string to_string(Stepper s);
std::string to_string(DtPolicy p);
FluxVariant parse_flux_variant(const std::string& s);
Stepper parse_stepper(const std::string& s);
DtPolicy parse_dt_policy(const std::string& s);

struct SolverConfig {
    FluxVariant flux = FluxVariant::standard;
    Stepper stepper = Stepper::semi_implicit;
    DtPolicy dt_policy = DtPolicy::dv_over_sigma2;
    double dt_value = 1e-3;
    double steady_tol = 1e-6;
    double t_max = 100.0;

    void validate() const;
    bool operator==(const SolverConfig&) const = default;
};

/// Drift and diffusion functionals sampled on the v_x grid.
struct OperatorFields {
    std::vector<double> drift;            ///< Lc at interfaces, n_x + 1 entries
    std::vector<double> diffusion;        ///< (sigma^2/2) Dc at interfaces, n_x + 1 entries
    std::vector<double> diffusion_slope;  ///< d_v of (sigma^2/2) Dc at interfaces
    std::vector<double> diffusion_center; ///< (sigma^2/2) Dc at cell centres, n_x entries

    static OperatorFields zeros(std::size_t n_x);
    /// Fill diffusion_slope from diffusion_center by centred differences (one-sided at the ends).
    void update_slope(double dv);
};

/// Lc, Dc for the configured reference mode (binary: integrated against the
/// v_x-marginal; mean-field: evaluated at W_x = u_x).
OperatorFields assemble_operators(const GridDistribution& dist, const ModelParams& params);
OperatorFields assemble_operators_1d(std::span<const double> marginal_x, double dv, const ModelParams& params);

/// Chang-Cooper weight delta(lambda) = 1/lambda + 1/(1 - e^lambda), in [0,1].
double chang_cooper_weight(double lambda);

/// Interface coefficients of the numerical flux written as F = a g_right - b g_left.
struct InterfaceCoefficients {
    std::vector<double> c_hat;
    std::vector<double> weight;  ///< Chang-Cooper delta
    std::vector<double> a;
    std::vector<double> b;
};

InterfaceCoefficients interface_coefficients(const OperatorFields& fields, double dv, FluxVariant variant);

/// Numerical flux at every interface of every row, row-major (n_y rows of n_x + 1).
std::vector<double> numerical_flux(const GridDistribution& dist, const OperatorFields& fields, FluxVariant variant);
std::vector<double> numerical_flux_1d(std::span<const double> g, const OperatorFields& fields, double dv,
                                      FluxVariant variant);

/// Positivity bounds. Infinite when the fields vanish; callers cap the step.
double cfl_explicit(const OperatorFields& fields, double dv, FluxVariant variant);
double cfl_semi_implicit(const OperatorFields& fields, double dv, FluxVariant variant);
double cfl_bound(const OperatorFields& fields, double dv, const SolverConfig& config);

/// Conservative explicit update. Throws NumericalError if dt exceeds the explicit bound.
GridDistribution explicit_step(const GridDistribution& dist, const OperatorFields& fields, double dt,
                               const SolverConfig& config);

/// Linearly implicit update with coefficients frozen at the old level; one
/// tridiagonal solve per nonzero row. Throws NumericalError if dt exceeds the
/// semi-implicit bound or a pivot falls below 1e-30.
GridDistribution semi_implicit_step(const GridDistribution& dist, const OperatorFields& fields, double dt,
                                    const SolverConfig& config);

/// 1D variants operating in place on a single row.
void explicit_step_1d(std::vector<double>& g, const OperatorFields& fields, double dv, double dt,
                      const SolverConfig& config);
void semi_implicit_step_1d(std::vector<double>& g, const OperatorFields& fields, double dv, double dt,
                           const SolverConfig& config);

struct FpLogRow {
    std::size_t step;
    double time, dt, mass, min_value, residual;
};

struct FpRunLog {
    std::vector<FpLogRow> rows;
    void write_csv(std::ostream& os) const;
};

/// Step size chosen by the configured policy for the given fields.
double policy_dt(const OperatorFields& fields, double dv, const ModelParams& params, const SolverConfig& config);

/// Advance by `duration`, reassembling the fields before every step.
GridDistribution evolve_fp(const GridDistribution& dist, const ModelParams& params, const SolverConfig& config,
                           double duration, FpRunLog* log = nullptr);
std::vector<double> evolve_fp_1d(std::vector<double> g, double dv, const ModelParams& params,
                                 const SolverConfig& config, double duration, FpRunLog* log = nullptr);

struct SteadyStateResult {
    GridDistribution dist;
    bool converged = false;
    double time = 0.0;
    double residual = 0.0;
    std::size_t steps = 0;
};

/// Evolve until rel_L1(g^{n+1}, g^n) / dt < steady_tol or t_max is reached.
SteadyStateResult steady_state(const GridDistribution& dist, const ModelParams& params, const SolverConfig& config,
                               FpRunLog* log = nullptr);

}  // namespace hkt
