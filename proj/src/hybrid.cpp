#include "hkt/hybrid.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "hkt/errors.hpp"
#include "hkt/monte_carlo.hpp"
#include "hkt/rng.hpp"

namespace hkt {

std::string to_string(YPath p) { return p == YPath::monte_carlo ? "monte-carlo" : "oracle"; }

YPath parse_y_path(const std::string& s) {
    if (s == "monte-carlo") return YPath::monte_carlo;
    if (s == "oracle") return YPath::oracle;
    throw ConfigError("y_path: unknown value '" + s + "'");
}

void split_step(HybridState& state, double dtau, const ModelParams& params, const SolverConfig& solver,
                const HybridOptions& options, std::uint64_t seed) {
    if (!(dtau > 0.0)) throw DomainError("split_step: dtau must be > 0");
    if (!(options.p_interact >= 0.0 && options.p_interact <= 1.0))
        throw ConfigError("p_interact: mu rho dtau must lie in [0,1]");

    if (params.rho > 0.0) state.dist = evolve_fp(state.dist, params, solver, dtau);
    const double u_x = moments(state.dist).u_x;

    if (options.p_interact > 0.0) {
        if (options.y_path == YPath::oracle) {
            GridDistribution gain = qy_gain_grid(state.dist, u_x, state.theta, params);
            const double p = options.p_interact;
            auto out = gain.values();
            const auto in = state.dist.values();
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - p) * in[k] + p * out[k];
            state.dist = std::move(gain);
        } else {
            ParticleEnsemble ens = stratified_sample(state.dist, options.n_particles, seed);
            Rng rng = Rng::derive(seed, 1);
            nanbu_y_step(ens, u_x, state.theta, options.p_interact, params, rng);
            state.dist = deposit(ens, state.dist.grid());
        }
    }

    for (double v : state.dist.values())
        if (!std::isfinite(v)) throw NumericalError("split_step: non-finite density at tau = " + std::to_string(state.tau));
    state.tau += dtau;
    ++state.steps;
}

double hybrid_dt(const GridDistribution& dist, const ModelParams& params, const SolverConfig& solver) {
    const OperatorFields fields = assemble_operators(dist, params);
    return policy_dt(fields, dist.grid().dv_x(), params, solver);
}

HybridState evolve_hybrid(const GridDistribution& initial, double theta, const ModelParams& params,
                          const SolverConfig& solver, const HybridOptions& options, double horizon,
                          std::uint64_t seed) {
    if (!(horizon > 0.0)) throw DomainError("evolve_hybrid: horizon must be > 0");
    HybridState state{initial, 0.0, theta, 0, {}};
    state.moment_log.push_back({0.0, moments(initial)});
    const std::size_t every = std::max<std::size_t>(options.log_every, 1);
    while (horizon - state.tau > 1e-12 * horizon) {
        const double dt = std::min(hybrid_dt(state.dist, params, solver), horizon - state.tau);
        split_step(state, dt, params, solver, options, Rng::derive(seed, state.steps).next_u64());
        const bool last = horizon - state.tau <= 1e-12 * horizon;
        if (last || state.steps % every == 0) state.moment_log.push_back({state.tau, moments(state.dist)});
    }
    return state;
}

void write_moment_log(std::ostream& os, const std::vector<MomentRecord>& log) {
    os << "t,u_x,u_y,E_x,E_y\n";
    char buf[160];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.tau, r.m.u_x, r.m.u_y, r.m.E_x, r.m.E_y);
        os << buf;
    }
}

}  // namespace hkt
