#include "hkt/collocation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hkt/errors.hpp"

namespace hkt {

namespace {

// P_m(x) and P_m'(x) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t m, double x) {
    double p0 = 1.0, p1 = x;
    if (m == 0) return {1.0, 0.0};
    for (std::size_t k = 2; k <= m; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
    }
    const double dm = static_cast<double>(m);
    const double dp = dm * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace

ThetaQuadrature gauss_legendre(std::size_t m) {
    if (m == 0) throw DomainError("gauss_legendre: m must be >= 1");
    ThetaQuadrature q;
    if (m == 1) {
        q.nodes = {0.0};
        q.weights = {1.0};
        return q;
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t k = 1; k < m; ++k) {
        const double kk = static_cast<double>(k);
        const double b = kk / std::sqrt(4.0 * kk * kk - 1.0);
        J(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
        J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("gauss_legendre: eigen-decomposition failed");

    q.nodes.resize(m);
    q.weights.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        double x = es.eigenvalues()(static_cast<Eigen::Index>(k));
        for (int it = 0; it < 3; ++it) {
            const auto [p, dp] = legendre(m, x);
            x -= p / dp;
        }
        const double dp = legendre(m, x).second;
        q.nodes[k] = x;
        q.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2 / ((1 - x^2) P'^2), halved
    }
    // Exact symmetry about zero.
    for (std::size_t k = 0; k < m / 2; ++k) {
        const double x = 0.5 * (q.nodes[m - 1 - k] - q.nodes[k]);
        const double w = 0.5 * (q.weights[k] + q.weights[m - 1 - k]);
        q.nodes[k] = -x;
        q.nodes[m - 1 - k] = x;
        q.weights[k] = q.weights[m - 1 - k] = w;
    }
    if (m % 2 == 1) q.nodes[m / 2] = 0.0;
    double total = 0.0;
    for (double w : q.weights) total += w;
    for (double& w : q.weights) w /= total;
    return q;
}

EnsembleSolution run_ensemble(const GridDistribution& initial, const ModelParams& params, const SolverConfig& solver,
                              const HybridOptions& options, const ThetaQuadrature& quad, double horizon,
                              std::uint64_t master_seed) {
    if (quad.size() == 0 || quad.nodes.size() != quad.weights.size())
        throw DomainError("run_ensemble: invalid quadrature");
    EnsembleSolution sol{quad, {}};
    sol.nodes.reserve(quad.size());
    for (std::size_t k = 0; k < quad.size(); ++k)
        sol.nodes.push_back(evolve_hybrid(initial, quad.nodes[k], params, solver, options, horizon,
                                          Rng::derive(master_seed, k).next_u64()));
    return sol;
}

GridDistribution expected_distribution(const EnsembleSolution& sol) {
    GridDistribution out(sol.nodes.at(0).dist.grid());
    auto o = out.values();
    for (std::size_t k = 0; k < sol.nodes.size(); ++k) {
        const auto v = sol.nodes[k].dist.values();
        for (std::size_t c = 0; c < o.size(); ++c) o[c] += sol.quad.weights[k] * v[c];
    }
    return out;
}

VarianceField theta_variance_distribution(const EnsembleSolution& sol) {
    const GridDistribution mean = expected_distribution(sol);
    VarianceField var{GridDistribution(mean.grid()), 0.0};
    auto o = var.values.values();
    for (std::size_t k = 0; k < sol.nodes.size(); ++k) {
        const auto v = sol.nodes[k].dist.values();
        for (std::size_t c = 0; c < o.size(); ++c) o[c] += sol.quad.weights[k] * v[c] * v[c];
    }
    const auto m = mean.values();
    for (std::size_t c = 0; c < o.size(); ++c) {
        o[c] -= m[c] * m[c];
        if (o[c] < 0.0) {
            var.floor_correction = std::max(var.floor_correction, -o[c]);
            o[c] = 0.0;
        }
    }
    return var;
}

MomentKind parse_moment_kind(const std::string& s) {
    if (s == "u_x") return MomentKind::u_x;
    if (s == "u_y") return MomentKind::u_y;
    if (s == "E_x") return MomentKind::E_x;
    if (s == "E_y") return MomentKind::E_y;
    throw ConfigError("moment: unknown value '" + s + "'");
}

std::string to_string(MomentKind k) {
    switch (k) {
        case MomentKind::u_x: return "u_x";
        case MomentKind::u_y: return "u_y";
        case MomentKind::E_x: return "E_x";
        case MomentKind::E_y: return "E_y";
    }
    return "?";
}

double pick(const MomentSet& m, MomentKind k) {
    switch (k) {
        case MomentKind::u_x: return m.u_x;
        case MomentKind::u_y: return m.u_y;
        case MomentKind::E_x: return m.E_x;
        case MomentKind::E_y: return m.E_y;
    }
    return 0.0;
}

double expected_value(const ThetaQuadrature& quad, const std::vector<double>& values) {
    if (values.size() != quad.size()) throw DomainError("expected_value: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += quad.weights[k] * values[k];
    return s;
}

double theta_variance(const ThetaQuadrature& quad, const std::vector<double>& values) {
    const double mean = expected_value(quad, values);
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += quad.weights[k] * (values[k] - mean) * (values[k] - mean);
    return std::max(s, 0.0);
}

namespace {

std::vector<double> final_moments(const EnsembleSolution& sol, MomentKind which) {
    std::vector<double> v;
    for (const auto& n : sol.nodes) v.push_back(pick(moments(n.dist), which));
    return v;
}

}  // namespace

double expected_moment(const EnsembleSolution& sol, MomentKind which) {
    return expected_value(sol.quad, final_moments(sol, which));
}

double theta_variance_moment(const EnsembleSolution& sol, MomentKind which) {
    return theta_variance(sol.quad, final_moments(sol, which));
}

void write_uq_csv(std::ostream& os, const std::vector<UqRow>& rows) {
    os << "m,quantity,value\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.17g\n", r.m, r.quantity.c_str(), r.value);
        os << buf;
    }
}

}  // namespace hkt
