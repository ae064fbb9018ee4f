#pragma once

// Lie splitting of the hybrid Fokker-Planck / Boltzmann equation for one value
// of the uncertain parameter: a Fokker-Planck step along v_x followed by a
// lane-change collision step along v_y.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hkt/fokker_planck.hpp"
#include "hkt/grid.hpp"
#include "hkt/model.hpp"

namespace hkt {

enum class YPath {
    monte_carlo,  ///< stratified sample, Nanbu step, deposit
    oracle,       ///< deterministic gain term on the grid
};

std::string to_string(YPath p);
YPath parse_y_path(const std::string& s);

struct HybridOptions {
    std::size_t n_particles = 10000;
    YPath y_path = YPath::monte_carlo;
    /// mu rho dtau; 1 means every vehicle interacts once per step.
    double p_interact = 1.0;
    /// Record moments every this many steps (the final state is always recorded).
    std::size_t log_every = 1;

    bool operator==(const HybridOptions&) const = default;
};

struct MomentRecord {
    double tau = 0.0;
    MomentSet m;
};

struct HybridState {
    GridDistribution dist;
    double tau = 0.0;
    double theta = 0.0;
    std::size_t steps = 0;
    std::vector<MomentRecord> moment_log;
};

/// One Fokker-Planck substep of length dtau then one collision substep.
/// `seed` drives the particle draws of this step only.
void split_step(HybridState& state, double dtau, const ModelParams& params, const SolverConfig& solver,
                const HybridOptions& options, std::uint64_t seed);

/// Step size for the next split step: the solver's dt policy applied to the current fields.
double hybrid_dt(const GridDistribution& dist, const ModelParams& params, const SolverConfig& solver);

/// Iterate split_step until `horizon`. Step seeds are derived from `seed`.
HybridState evolve_hybrid(const GridDistribution& initial, double theta, const ModelParams& params,
                          const SolverConfig& solver, const HybridOptions& options, double horizon,
                          std::uint64_t seed);

void write_moment_log(std::ostream& os, const std::vector<MomentRecord>& log);

}  // namespace hkt
