#include <doctest.h>

#include <cmath>

#include "hkt/errors.hpp"
#include "hkt/hybrid.hpp"

using namespace hkt;
using doctest::Approx;

namespace {

GridDistribution skewed(const VelocityGrid& grid) {
    GridDistribution g(grid);
    for (std::size_t j = 0; j < grid.n_y(); ++j)
        for (std::size_t i = 0; i < grid.n_x(); ++i)
            g(i, j) = (1.0 + grid.x_center(i)) * (1.2 + grid.y_center(j));
    g.normalize();
    return g;
}

}  // namespace

TEST_CASE("degenerate splitting is the identity") {
    ModelParams p;
    p.rho = 0.0;
    p.sigma2 = 0.0;
    p.beta0 = 0.0;
    HybridOptions h;
    h.y_path = YPath::oracle;
    const VelocityGrid grid(10, 12);
    HybridState s{skewed(grid), 0.0, 0.3, 0, {}};
    const auto g0 = s.dist;
    for (int k = 0; k < 5; ++k) split_step(s, 0.1, p, SolverConfig{}, h, 1);
    for (std::size_t c = 0; c < g0.values().size(); ++c) CHECK(s.dist.values()[c] == Approx(g0.values()[c]).epsilon(1e-14));
    CHECK(s.tau == Approx(0.5));
    CHECK(s.steps == 5);
}

TEST_CASE("with zero density only the lateral relaxation acts") {
    ModelParams p;
    p.rho = 0.0;
    HybridOptions h;
    h.y_path = YPath::oracle;
    const VelocityGrid grid(10, 12);
    HybridState s{skewed(grid), 0.0, 0.0, 0, {}};
    const auto mx = marginal_x(s.dist);
    split_step(s, 0.1, p, SolverConfig{}, h, 1);
    const auto after = marginal_x(s.dist);
    for (std::size_t i = 0; i < mx.size(); ++i) CHECK(after[i] == Approx(mx[i]).epsilon(1e-13));
    CHECK(moments(s.dist).E_y < moments(skewed(grid)).E_y);
}

TEST_CASE("the Fokker-Planck substep preserves the y-marginal") {
    ModelParams p;
    p.rho = 0.4;
    const auto g = skewed(VelocityGrid(20, 8));
    const auto out = evolve_fp(g, p, SolverConfig{}, 0.05);
    const auto a = marginal_y(g), b = marginal_y(out);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] == Approx(a[j]).epsilon(1e-12));
}

TEST_CASE("Monte Carlo substep keeps the x-marginal within sampling noise") {
    ModelParams p;
    p.rho = 0.0;
    HybridOptions h;
    h.n_particles = 20000;
    const VelocityGrid grid(10, 12);
    HybridState s{skewed(grid), 0.0, 0.5, 0, {}};
    const auto mx = marginal_x(s.dist);
    split_step(s, 0.1, p, SolverConfig{}, h, 7);
    CHECK(rel_L1_error(marginal_x(s.dist), mx) <= 3.0 / std::sqrt(20000.0));
}

TEST_CASE("mass stays one after every split step") {
    ModelParams p;
    p.rho = 0.6;
    for (YPath path : {YPath::oracle, YPath::monte_carlo}) {
        HybridOptions h;
        h.y_path = path;
        h.n_particles = 5000;
        HybridState s{initial_condition(VelocityGrid(16, 10)), 0.0, 0.2, 0, {}};
        for (int k = 0; k < 10; ++k) {
            split_step(s, hybrid_dt(s.dist, p, SolverConfig{}), p, SolverConfig{}, h, 100 + k);
            CHECK(s.dist.mass() == Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("lateral marginal concentrates at the desired speed") {
    ModelParams p;
    p.rho = 0.3;
    p.lambda = 0.1;
    HybridOptions h;
    h.y_path = YPath::oracle;
    const VelocityGrid grid(10, 40);
    const auto s = evolve_hybrid(initial_condition(grid), 0.8, p, SolverConfig{}, h, 0.5, 1);
    const auto m = moments(s.dist);
    CHECK(std::abs(m.u_y - desired_speed(0.8, p.rho, p)) <= grid.dv_y());
    CHECK(m.E_y - m.u_y * m.u_y <= 4.0 * grid.dv_y() * grid.dv_y());
}

TEST_CASE("evolve_hybrid bookkeeping") {
    ModelParams p;
    p.rho = 0.5;
    HybridOptions h;
    h.y_path = YPath::oracle;
    h.log_every = 4;
    const auto g0 = initial_condition(VelocityGrid(10, 6));
    const auto s = evolve_hybrid(g0, 0.0, p, SolverConfig{}, h, 0.37, 3);
    CHECK(s.tau == Approx(0.37).epsilon(1e-12));
    REQUIRE(!s.moment_log.empty());
    CHECK(s.moment_log.back().tau == Approx(s.tau));

    h.p_interact = 0.0;
    const auto tiny = evolve_hybrid(g0, 0.0, p, SolverConfig{}, h, 1e-12, 3);
    CHECK(rel_L1_error(tiny.dist, g0) <= 1e-9);
    CHECK_THROWS_AS(evolve_hybrid(g0, 0.0, p, SolverConfig{}, h, 0.0, 3), DomainError);
}

TEST_CASE("identical seeds give identical Monte Carlo runs") {
    ModelParams p;
    p.rho = 0.5;
    HybridOptions h;
    h.n_particles = 2000;
    const auto g0 = initial_condition(VelocityGrid(10, 6));
    const auto a = evolve_hybrid(g0, 0.3, p, SolverConfig{}, h, 0.1, 11);
    const auto b = evolve_hybrid(g0, 0.3, p, SolverConfig{}, h, 0.1, 11);
    for (std::size_t c = 0; c < a.dist.values().size(); ++c) CHECK(a.dist.values()[c] == b.dist.values()[c]);
}

TEST_CASE("y-path tokens") {
    CHECK(parse_y_path(to_string(YPath::oracle)) == YPath::oracle);
    CHECK(parse_y_path(to_string(YPath::monte_carlo)) == YPath::monte_carlo);
    CHECK_THROWS_AS(parse_y_path("exact"), ConfigError);
}
