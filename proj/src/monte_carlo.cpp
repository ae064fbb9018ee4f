#include "hkt/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "hkt/errors.hpp"

namespace hkt {

MomentSet ParticleEnsemble::moments() const {
    MomentSet m;
    if (pairs.empty()) return m;
    for (const auto& p : pairs) {
        m.u_x += p.v_x;
        m.u_y += p.v_y;
        m.E_x += p.v_x * p.v_x;
        m.E_y += p.v_y * p.v_y;
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    m.u_x *= inv;
    m.u_y *= inv;
    m.E_x *= inv;
    m.E_y *= inv;
    return m;
}

void ParticleEnsemble::write_csv(std::ostream& os) const {
    os << "v_x,v_y\n";
    char buf[64];
    for (const auto& p : pairs) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.v_x, p.v_y);
        os << buf;
    }
}

ParticleEnsemble stratified_sample(const GridDistribution& dist, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("stratified_sample: n must be >= 1");
    const auto& grid = dist.grid();
    const auto values = dist.values();
    const double area = grid.cell_area();
    const double total = std::accumulate(values.begin(), values.end(), 0.0) * area;
    if (!(total > 0.0)) throw NumericalError("stratified_sample: distribution has no mass");

    std::vector<std::size_t> quota(values.size(), 0);
    std::vector<std::pair<double, std::size_t>> frac;
    std::size_t assigned = 0;
    const double scale = static_cast<double>(n) * area / total;
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (values[c] <= 0.0) continue;
        const double want = values[c] * scale;
        const double whole = std::floor(want);
        quota[c] = static_cast<std::size_t>(whole);
        assigned += quota[c];
        frac.emplace_back(want - whole, c);
    }
    // floor() of a rounded-up want can overshoot by one; trim from the smallest fractions.
    std::size_t remaining = n > assigned ? n - assigned : 0;
    auto by_fraction = [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); };
    if (assigned > n) {
        std::sort(frac.begin(), frac.end(), by_fraction);
        for (auto it = frac.rbegin(); assigned > n && it != frac.rend(); ++it)
            if (quota[it->second] > 0) {
                --quota[it->second];
                --assigned;
            }
    }
    if (remaining > 0) {
        remaining = std::min(remaining, frac.size());
        std::partial_sort(frac.begin(), frac.begin() + static_cast<std::ptrdiff_t>(remaining), frac.end(), by_fraction);
        for (std::size_t k = 0; k < remaining; ++k) ++quota[frac[k].second];
    }

    ParticleEnsemble ens;
    ens.seed = seed;
    ens.pairs.reserve(n);
    Rng rng(seed);
    for (std::size_t j = 0; j < grid.n_y(); ++j)
        for (std::size_t i = 0; i < grid.n_x(); ++i) {
            const std::size_t q = quota[grid.index(i, j)];
            const double x0 = grid.x_interface(i), y0 = grid.y_interface(j);
            for (std::size_t k = 0; k < q; ++k) {
                const double vx = x0 + grid.dv_x() * rng.uniform_open();
                const double vy = y0 + grid.dv_y() * rng.uniform_open();
                ens.pairs.push_back({vx, vy});
            }
        }
    return ens;
}

void nanbu_y_step(ParticleEnsemble& ens, double u_x, double theta, double p_interact, const ModelParams& params,
                  Rng& rng) {
    if (!(p_interact >= 0.0 && p_interact <= 1.0))
        throw DomainError("nanbu_y_step: interaction probability outside [0,1]");
    if (p_interact == 0.0) return;
    for (auto& p : ens.pairs) {
        if (p_interact < 1.0 && rng.uniform() >= p_interact) continue;
        p.v_y = y_interaction(p.v_y, u_x, theta, params);
    }
}

GridDistribution deposit(const ParticleEnsemble& ens, const VelocityGrid& grid) {
    if (ens.pairs.empty()) throw DomainError("deposit: empty ensemble");
    GridDistribution out(grid);
    const double eps = grid.epsilon();
    for (const auto& p : ens.pairs) {
        if (!(p.v_x >= 0.0 && p.v_x <= 1.0 && p.v_y >= -eps && p.v_y <= eps))
            throw NumericalError("deposit: particle outside the velocity domain");
        out(grid.x_cell(p.v_x), grid.y_cell(p.v_y)) += 1.0;
    }
    const double w = 1.0 / (static_cast<double>(ens.pairs.size()) * grid.cell_area());
    for (double& v : out.values()) v *= w;
    return out;
}

GridDistribution qy_gain_grid(const GridDistribution& dist, double u_x, double theta, const ModelParams& params) {
    const auto& grid = dist.grid();
    const double beta = relaxation_rate(u_x, params);
    const double vd = desired_speed(theta, params.rho, params);
    const std::size_t nx = grid.n_x(), ny = grid.n_y();
    GridDistribution out(grid);

    if (beta >= 1.0) {
        const std::size_t target = grid.y_cell(vd);
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) out(i, target) += dist(i, j);
        return out;
    }

    for (std::size_t j = 0; j < ny; ++j) {
        const auto src = dist.row(j);
        if (std::all_of(src.begin(), src.end(), [](double v) { return v == 0.0; })) continue;
        const double lo = (1.0 - beta) * grid.y_interface(j) + beta * vd;
        const double hi = (1.0 - beta) * grid.y_interface(j + 1) + beta * vd;
        const double width = hi - lo;
        const std::size_t k0 = grid.y_cell(lo), k1 = grid.y_cell(hi);
        for (std::size_t k = k0; k <= k1; ++k) {
            const double overlap = std::min(hi, grid.y_interface(k + 1)) - std::max(lo, grid.y_interface(k));
            if (overlap <= 0.0) continue;
            const double w = overlap / width;
            auto dst = out.row(k);
            for (std::size_t i = 0; i < nx; ++i) dst[i] += w * src[i];
        }
    }
    const double before = dist.mass(), after = out.mass();
    if (std::abs(after - before) > 1e-3 * std::max(before, 1e-300))
        throw NumericalError("qy_gain_grid: mass drift above 1e-3");
    if (after > 0.0)
        for (double& v : out.values()) v *= before / after;
    return out;
}

namespace {

MomentSample sample_moments(double t, const ParticleEnsemble& ens) {
    MomentSample s;
    s.t = t;
    s.m = ens.moments();
    const double n = static_cast<double>(ens.size());
    s.se_u_x = std::sqrt(std::max(s.m.E_x - s.m.u_x * s.m.u_x, 0.0) / n);
    s.se_u_y = std::sqrt(std::max(s.m.E_y - s.m.u_y * s.m.u_y, 0.0) / n);
    return s;
}

}  // namespace

std::vector<MomentSample> particle_boltzmann_oracle(const ModelParams& params, std::size_t n, double gamma,
                                                    double horizon, std::uint64_t seed,
                                                    const OracleOptions& options) {
    if (n < 2) throw DomainError("particle_boltzmann_oracle: need at least two particles");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("particle_boltzmann_oracle: gamma outside (0,1]");
    if (!(options.dt > 0.0) || !(horizon > 0.0)) throw DomainError("particle_boltzmann_oracle: dt, horizon must be > 0");
    const double px = 0.5 * params.rho * options.dt;
    const double py = gamma * params.rho * options.dt;
    if (px > 1.0 || py > 1.0) throw DomainError("particle_boltzmann_oracle: rate * dt exceeds 1");

    Rng rng(seed);
    ParticleEnsemble ens;
    ens.seed = seed;
    ens.pairs.resize(n);
    for (auto& p : ens.pairs) {
        p.v_x = rng.uniform();
        p.v_y = rng.uniform(-params.epsilon, params.epsilon);
    }

    const auto steps = static_cast<std::size_t>(std::llround(horizon / options.dt));
    const std::size_t samples = std::max<std::size_t>(options.n_samples, 1);
    std::vector<MomentSample> out{sample_moments(0.0, ens)};
    std::vector<double> leaders(n);
    std::size_t next_sample = 1;

    for (std::size_t s = 1; s <= steps; ++s) {
        double u_x = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            leaders[k] = ens.pairs[k].v_x;
            u_x += leaders[k];
        }
        u_x /= static_cast<double>(n);

        for (std::size_t k = 0; k < n; ++k) {
            auto& p = ens.pairs[k];
            if (rng.uniform() < px) {
                double w = u_x;
                if (params.wx_mode == ReferenceMode::binary) {
                    std::size_t partner = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - 1));
                    if (partner >= k) ++partner;
                    w = leaders[partner];
                }
                for (int attempt = 0;; ++attempt) {
                    const double xi = options.noise.variance > 0.0 ? options.noise.sample(rng) : 0.0;
                    try {
                        p.v_x = x_interaction(p.v_x, w, params, xi, u_x);
                        break;
                    } catch (const RejectedDraw&) {
                        if (attempt > 1000) throw NumericalError("particle_boltzmann_oracle: noise never admissible");
                    }
                }
            }
            if (rng.uniform() < py) p.v_y = y_interaction(p.v_y, u_x, options.theta, params);
        }
        if (next_sample <= samples && s * samples >= next_sample * steps) {
            out.push_back(sample_moments(static_cast<double>(s) * options.dt, ens));
            ++next_sample;
        }
    }
    return out;
}

void write_moment_csv(std::ostream& os, const std::vector<MomentSample>& series) {
    os << "t,u_x,u_y,E_x,E_y\n";
    char buf[160];
    for (const auto& s : series) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.m.u_x, s.m.u_y, s.m.E_x, s.m.E_y);
        os << buf;
    }
}

}  // namespace hkt
