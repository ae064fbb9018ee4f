#pragma once

// Particle machinery for the lateral collision operator: stratified sampling
// from grid densities, the Nanbu update, histogram deposition, a deterministic
// evaluation of the gain term, and a direct simulation of the unscaled
// Boltzmann dynamics used to check the macroscopic moment equations.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hkt/grid.hpp"
#include "hkt/model.hpp"
#include "hkt/rng.hpp"

namespace hkt {

struct Particle {
    double v_x = 0.0;
    double v_y = 0.0;
};

struct ParticleEnsemble {
    std::vector<Particle> pairs;
    std::uint64_t seed = 0;

    std::size_t size() const { return pairs.size(); }
    MomentSet moments() const;
    void write_csv(std::ostream& os) const;
};

/// Quota sampling: floor(n p_c) particles per cell, the remainder assigned to the
/// cells with the largest fractional parts, positions uniform strictly inside each cell.
ParticleEnsemble stratified_sample(const GridDistribution& dist, std::size_t n, std::uint64_t seed);

/// Each particle independently, with probability p_interact, relaxes v_y towards
/// v_d(theta). v_x is never touched. Throws DomainError if p_interact is outside [0,1].
void nanbu_y_step(ParticleEnsemble& ens, double u_x, double theta, double p_interact, const ModelParams& params,
                  Rng& rng);

/// Nearest-cell histogram normalised to unit mass.
GridDistribution deposit(const ParticleEnsemble& ens, const VelocityGrid& grid);

/// Q+_y(g) on the grid: the push-forward of the piecewise-constant density under
/// v_y -> (1 - beta) v_y + beta v_d(theta), computed by exact cell overlaps.
/// beta = 1 sends every row's mass to the cell containing v_d(theta).
GridDistribution qy_gain_grid(const GridDistribution& dist, double u_x, double theta, const ModelParams& params);

struct MomentSample {
    double t = 0.0;
    MomentSet m;
    double se_u_x = 0.0;  ///< standard error of the ensemble mean of v_x
    double se_u_y = 0.0;
};

struct OracleOptions {
    double dt = 1.0;
    std::size_t n_samples = 10;  ///< moment records after the initial one, evenly spaced
    double theta = 0.0;
    NoiseSpec noise{NoiseLaw::two_point, 0.0};  ///< variance 0 disables the x-noise
};

/// Direct simulation of the unscaled model. Per step of length dt each particle
/// interacts along x with probability rho/2 dt (leader drawn from the ensemble in
/// binary mode, W_x = u_x in mean-field mode) and across lanes with probability
/// gamma rho dt. Initial speeds are uniform on [0,1] x [-eps, eps].
/// Throws DomainError when a rate times dt exceeds 1.
std::vector<MomentSample> particle_boltzmann_oracle(const ModelParams& params, std::size_t n, double gamma,
                                                    double horizon, std::uint64_t seed,
                                                    const OracleOptions& options = {});

void write_moment_csv(std::ostream& os, const std::vector<MomentSample>& series);

}  // namespace hkt
