#pragma once

// Stochastic collocation over theta ~ U(-1, 1).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hkt/grid.hpp"
#include "hkt/hybrid.hpp"

namespace hkt {

/// Nodes in (-1, 1) and weights summing to 1 (the density 1/2 is absorbed).
struct ThetaQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// m-point Gauss-Legendre rule by Golub-Welsch followed by a Newton polish.
ThetaQuadrature gauss_legendre(std::size_t m);

struct EnsembleSolution {
    ThetaQuadrature quad;
    std::vector<HybridState> nodes;
};

/// evolve_hybrid at every node; node k uses a seed derived from (master_seed, k).
EnsembleSolution run_ensemble(const GridDistribution& initial, const ModelParams& params, const SolverConfig& solver,
                              const HybridOptions& options, const ThetaQuadrature& quad, double horizon,
                              std::uint64_t master_seed);

GridDistribution expected_distribution(const EnsembleSolution& sol);

struct VarianceField {
    GridDistribution values;
    double floor_correction = 0.0;  ///< largest |negative| value clipped to zero
};

VarianceField theta_variance_distribution(const EnsembleSolution& sol);

enum class MomentKind { u_x, u_y, E_x, E_y };

MomentKind parse_moment_kind(const std::string& s);
std::string to_string(MomentKind k);
double pick(const MomentSet& m, MomentKind k);

/// Quadrature over per-node moments of the final states.
double expected_moment(const EnsembleSolution& sol, MomentKind which);
double theta_variance_moment(const EnsembleSolution& sol, MomentKind which);

/// Same reductions over arbitrary per-node values.
double expected_value(const ThetaQuadrature& quad, const std::vector<double>& values);
double theta_variance(const ThetaQuadrature& quad, const std::vector<double>& values);

struct UqRow {
    std::size_t m;
    std::string quantity;
    double value;
};

void write_uq_csv(std::ostream& os, const std::vector<UqRow>& rows);

}  // namespace hkt
