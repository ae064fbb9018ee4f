#include "hkt/fokker_planck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "hkt/errors.hpp"

namespace hkt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepSlack = 1.0 + 1e-12;

// x / (e^x - 1), with B(0) = 1.
double bernoulli(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
    if (x > 700.0) return 0.0;
    return x / std::expm1(x);
}

double ipow(double x, double k) { return k == 1.0 ? x : std::pow(x, k); }

struct BranchTerms {
    double drift = 0.0;
    double diff2 = 0.0;  // D^2 without the rho/2 and sigma^2/2 prefactors
};

// L and D^2 of the longitudinal rule for a speed v against a reference w_ref.
BranchTerms branch_terms(double v, double w_ref, double u_x, double P, const ModelParams& p) {
    BranchTerms t;
    if (v == w_ref) return t;
    const double nu = v * (1.0 - v);
    const TargetSpeeds s = closure_targets(std::clamp(v, 0.0, 1.0), w_ref, u_x, p);
    if (v < w_ref) {
        const double gap = std::max(s.accel - v, 0.0);
        t.drift = P * (v - s.accel);
        const double d = nu * ipow(gap, p.kappa);
        t.diff2 = P * d * d;
    } else {
        const double gap = std::max(v - s.brake, 0.0);
        t.drift = (1.0 - P) * (v - s.brake);
        const double d = nu * ipow(gap, p.kappa);
        t.diff2 = (1.0 - P) * d * d;
    }
    return t;
}

// Row-independent flux operator: coefficients and, for the implicit stepper,
// the Thomas factorization of (I - dt/dv A).
class RowOperator {
public:
    RowOperator(const OperatorFields& fields, double dv, double dt, const SolverConfig& config)
        : n_(fields.diffusion_center.size()), r_(dt / dv), stepper_(config.stepper) {
        const double bound = cfl_bound(fields, dv, config);
        if (dt > bound * kStepSlack)
            throw NumericalError("time step " + std::to_string(dt) + " exceeds positivity bound " +
                                 std::to_string(bound));
        coeff_ = interface_coefficients(fields, dv, config.flux);
        if (stepper_ == Stepper::semi_implicit) factor();
    }

    void apply(std::span<double> g) const {
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) return;
        if (stepper_ == Stepper::explicit_euler)
            apply_explicit(g);
        else
            apply_implicit(g);
    }

private:
    void apply_explicit(std::span<double> g) const {
        const auto& a = coeff_.a;
        const auto& b = coeff_.b;
        scratch_.assign(g.begin(), g.end());
        for (std::size_t i = 0; i < n_; ++i) {
            double v = scratch_[i] * (1.0 - r_ * (b[i + 1] + a[i]));
            if (i + 1 < n_) v += r_ * a[i + 1] * scratch_[i + 1];
            if (i > 0) v += r_ * b[i] * scratch_[i - 1];
            g[i] = v;
        }
    }

    void factor() {
        const auto& a = coeff_.a;
        const auto& b = coeff_.b;
        lower_.resize(n_);
        cprime_.resize(n_);
        denom_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double diag = 1.0 + r_ * (b[i + 1] + a[i]);
            const double upper = i + 1 < n_ ? -r_ * a[i + 1] : 0.0;
            lower_[i] = i > 0 ? -r_ * b[i] : 0.0;
            const double d = i > 0 ? diag - lower_[i] * cprime_[i - 1] : diag;
            if (std::abs(d) < 1e-30) throw NumericalError("semi_implicit_step: singular tridiagonal system");
            denom_[i] = d;
            cprime_[i] = upper / d;
        }
    }

    void apply_implicit(std::span<double> g) const {
        for (std::size_t i = 0; i < n_; ++i) {
            const double prev = i > 0 ? g[i - 1] : 0.0;
            g[i] = (g[i] - lower_[i] * prev) / denom_[i];
        }
        for (std::size_t i = n_ - 1; i-- > 0;) g[i] -= cprime_[i] * g[i + 1];
    }

    std::size_t n_;
    double r_;
    Stepper stepper_;
    InterfaceCoefficients coeff_;
    std::vector<double> lower_, cprime_, denom_;
    mutable std::vector<double> scratch_;
};

}  // namespace

std::string to_string(FluxVariant v) { return v == FluxVariant::standard ? "standard" : "literal"; }
std::string to_string(Stepper s) { return s == Stepper::explicit_euler ? "explicit" : "semi-implicit"; }
std::string to_string(DtPolicy p) {
    switch (p) {
        case DtPolicy::cfl_auto: return "cfl-auto";
        case DtPolicy::fixed: return "fixed";
        case DtPolicy::dv_over_sigma2: return "dv-over-sigma2";
    }
    return "?";
}

FluxVariant parse_flux_variant(const std::string& s) {
    if (s == "standard") return FluxVariant::standard;
    if (s == "literal") return FluxVariant::literal;
    throw ConfigError("flux_variant: unknown value '" + s + "'");
}

Stepper parse_stepper(const std::string& s) {
    if (s == "explicit") return Stepper::explicit_euler;
    if (s == "semi-implicit") return Stepper::semi_implicit;
    throw ConfigError("stepper: unknown value '" + s + "'");
}

DtPolicy parse_dt_policy(const std::string& s) {
    if (s == "cfl-auto") return DtPolicy::cfl_auto;
    if (s == "fixed") return DtPolicy::fixed;
    if (s == "dv-over-sigma2") return DtPolicy::dv_over_sigma2;
    throw ConfigError("dt_policy: unknown value '" + s + "'");
}

void SolverConfig::validate() const {
    if (!(steady_tol > 0.0)) throw ConfigError("steady_tol: must be > 0");
    if (dt_policy == DtPolicy::fixed && !(dt_value > 0.0)) throw ConfigError("dt_value: must be > 0");
    if (!(t_max > 0.0)) throw ConfigError("t_max: must be > 0");
}

OperatorFields OperatorFields::zeros(std::size_t n_x) {
    OperatorFields f;
    f.drift.assign(n_x + 1, 0.0);
    f.diffusion.assign(n_x + 1, 0.0);
    f.diffusion_slope.assign(n_x + 1, 0.0);
    f.diffusion_center.assign(n_x, 0.0);
    return f;
}

void OperatorFields::update_slope(double dv) {
    const std::size_t n = diffusion_center.size();
    diffusion_slope.assign(n + 1, 0.0);
    if (n < 2) return;
    for (std::size_t k = 1; k < n; ++k) diffusion_slope[k] = (diffusion_center[k] - diffusion_center[k - 1]) / dv;
    diffusion_slope[0] = diffusion_slope[1];
    diffusion_slope[n] = diffusion_slope[n - 1];
}

OperatorFields assemble_operators_1d(std::span<const double> gx, double dv, const ModelParams& p) {
    const std::size_t n = gx.size();
    OperatorFields f = OperatorFields::zeros(n);
    if (p.rho == 0.0) return f;

    const double P = accel_probability(p.rho, p.delta);
    const double rate = 0.5 * p.rho;
    const double diff_scale = 0.5 * p.sigma2 * rate;

    double mass = 0.0, first = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mass += gx[i] * dv;
        first += (static_cast<double>(i) + 0.5) * dv * gx[i] * dv;
    }
    const double u_x = mass > 0.0 ? first / mass : 0.5;

    if (p.wx_mode == ReferenceMode::mean_field) {
        for (std::size_t k = 0; k <= n; ++k) {
            const BranchTerms t = branch_terms(static_cast<double>(k) * dv, u_x, u_x, P, p);
            f.drift[k] = rate * t.drift;
            f.diffusion[k] = diff_scale * t.diff2;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const BranchTerms t = branch_terms((static_cast<double>(i) + 0.5) * dv, u_x, u_x, P, p);
            f.diffusion_center[i] = diff_scale * t.diff2;
        }
        f.diffusion[0] = f.diffusion[n] = 0.0;
        f.update_slope(dv);
        return f;
    }

    if (p.target_mode == TargetMode::mean_speed)
        throw ConfigError("target_mode: mean-speed targets require the mean-field reference mode");

    // Binary reference: leaders w above v accelerate the follower, leaders below brake it.
    // Each leader cell lies strictly on one side of an interface; at a cell centre the
    // cell itself is split into halves.
    auto eval = [&](double v, std::size_t below_end, std::size_t above_begin, double half_mass) {
        double above = half_mass, drift_brake = 0.0, diff_brake = 0.0;
        for (std::size_t i = above_begin; i < n; ++i) above += gx[i] * dv;
        auto brake_contrib = [&](double w, double m) {
            const BranchTerms t = branch_terms(v, w, u_x, P, p);
            drift_brake += t.drift * m;
            diff_brake += t.diff2 * m;
        };
        for (std::size_t i = 0; i < below_end; ++i) brake_contrib((static_cast<double>(i) + 0.5) * dv, gx[i] * dv);
        if (half_mass > 0.0) brake_contrib(v - 0.25 * dv, half_mass);
        BranchTerms acc{};
        if (v < 1.0) acc = branch_terms(v, 1.0, u_x, P, p);  // any reference above v selects acceleration
        return BranchTerms{acc.drift * above + drift_brake, acc.diff2 * above + diff_brake};
    };

    // Fast path: integer 2 kappa lets the braking sums use prefix moments of the marginal.
    const double two_kappa = 2.0 * p.kappa;
    const bool polynomial = two_kappa == std::floor(two_kappa) && two_kappa <= 8.0;
    if (!polynomial) {
        for (std::size_t k = 0; k <= n; ++k) {
            const BranchTerms t = eval(static_cast<double>(k) * dv, k, k, 0.0);
            f.drift[k] = rate * t.drift;
            f.diffusion[k] = diff_scale * t.diff2;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const BranchTerms t = eval((static_cast<double>(i) + 0.5) * dv, i, i + 1, 0.5 * gx[i] * dv);
            f.diffusion_center[i] = diff_scale * t.diff2;
        }
    } else {
        // Braking with V_B = P w: L = (1-P)(v - P w), D^2 = (1-P) nu^2 (v - P w)^{2 kappa}.
        const int deg = static_cast<int>(two_kappa);
        std::vector<std::array<double, 9>> prefix(n + 1);
        prefix[0].fill(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (static_cast<double>(i) + 0.5) * dv;
            const double m = gx[i] * dv;
            double wp = 1.0;
            for (int q = 0; q <= deg; ++q) {
                prefix[i + 1][q] = prefix[i][q] + wp * m;
                wp *= w;
            }
        }
        std::array<double, 9> binom{};
        binom[0] = 1.0;
        for (int q = 1; q <= deg; ++q) binom[q] = binom[q - 1] * (deg - q + 1) / q;

        auto brake_sums = [&](double v, const std::array<double, 9>& mom) {
            // sum_w (v - P w) m_w  and  sum_w (v - P w)^deg m_w
            const double lin = v * mom[0] - P * mom[1];
            double poly = 0.0;
            for (int q = 0; q <= deg; ++q)
                poly += binom[q] * std::pow(v, deg - q) * std::pow(-P, q) * mom[q];
            return std::pair{lin, poly};
        };
        auto total = [&](double v, const std::array<double, 9>& below, double above) {
            const double nu = v * (1.0 - v);
            const auto [lin, poly] = brake_sums(v, below);
            BranchTerms acc{};
            if (v < 1.0) acc = branch_terms(v, 1.0, u_x, P, p);
            return BranchTerms{acc.drift * above + (1.0 - P) * lin,
                               acc.diff2 * above + (1.0 - P) * nu * nu * poly};
        };
        for (std::size_t k = 0; k <= n; ++k) {
            const double v = static_cast<double>(k) * dv;
            const BranchTerms t = total(v, prefix[k], prefix[n][0] - prefix[k][0]);
            f.drift[k] = rate * t.drift;
            f.diffusion[k] = diff_scale * t.diff2;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (static_cast<double>(i) + 0.5) * dv;
            const double half = 0.5 * gx[i] * dv;
            std::array<double, 9> below = prefix[i];
            const double w = v - 0.25 * dv;
            double wp = 1.0;
            for (int q = 0; q <= deg; ++q) {
                below[q] += wp * half;
                wp *= w;
            }
            const BranchTerms t = total(v, below, prefix[n][0] - prefix[i + 1][0] + half);
            f.diffusion_center[i] = diff_scale * t.diff2;
        }
    }
    f.diffusion[0] = f.diffusion[n] = 0.0;
    f.update_slope(dv);
    return f;
}

OperatorFields assemble_operators(const GridDistribution& dist, const ModelParams& params) {
    const auto gx = marginal_x(dist);
    return assemble_operators_1d(gx, dist.grid().dv_x(), params);
}

double chang_cooper_weight(double lambda) {
    if (std::isnan(lambda)) throw DomainError("chang_cooper_weight: lambda is NaN");
    if (lambda > 500.0) return 0.0;
    if (lambda < -500.0) return 1.0;
    if (std::abs(lambda) < 1e-4) {
        const double l2 = lambda * lambda;
        return 0.5 - lambda / 12.0 + lambda * l2 / 720.0;
    }
    const double w = 1.0 / lambda - 1.0 / std::expm1(lambda);
    return std::clamp(w, 0.0, 1.0);
}

InterfaceCoefficients interface_coefficients(const OperatorFields& fields, double dv, FluxVariant variant) {
    const std::size_t m = fields.drift.size();
    InterfaceCoefficients c;
    c.c_hat.resize(m);
    c.weight.resize(m);
    c.a.assign(m, 0.0);
    c.b.assign(m, 0.0);
    const bool literal = variant == FluxVariant::literal;
    for (std::size_t k = 0; k < m; ++k) {
        const double C = literal ? (fields.drift[k] + fields.diffusion_slope[k]) / dv
                                 : fields.drift[k] + fields.diffusion_slope[k];
        const double D = fields.diffusion[k];
        double lambda;
        if (D > 0.0)
            lambda = dv * C / D;
        else
            lambda = C > 0.0 ? kInf : (C < 0.0 ? -kInf : 0.0);
        const double delta = chang_cooper_weight(lambda);
        c.c_hat[k] = C;
        c.weight[k] = delta;
        if (k == 0 || k + 1 == m) continue;  // zero-flux boundaries
        if (literal) {
            const double dterm = 0.5 * D / dv;
            c.a[k] = C * (1.0 - delta) + dterm;
            c.b[k] = dterm - C * delta;
        } else if (D > 0.0 && std::abs(lambda) <= 500.0) {
            // C (1 - delta) + D/dv = (D/dv) B(-lambda),  D/dv - C delta = (D/dv) B(lambda)
            c.a[k] = D / dv * bernoulli(-lambda);
            c.b[k] = D / dv * bernoulli(lambda);
        } else {
            c.a[k] = std::max(C, 0.0);
            c.b[k] = std::max(-C, 0.0);
        }
    }
    return c;
}

std::vector<double> numerical_flux_1d(std::span<const double> g, const OperatorFields& fields, double dv,
                                      FluxVariant variant) {
    const InterfaceCoefficients c = interface_coefficients(fields, dv, variant);
    const std::size_t n = g.size();
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t k = 1; k < n; ++k) flux[k] = c.a[k] * g[k] - c.b[k] * g[k - 1];
    return flux;
}

std::vector<double> numerical_flux(const GridDistribution& dist, const OperatorFields& fields, FluxVariant variant) {
    const auto& grid = dist.grid();
    const InterfaceCoefficients c = interface_coefficients(fields, grid.dv_x(), variant);
    const std::size_t n = grid.n_x();
    std::vector<double> flux(grid.n_y() * (n + 1), 0.0);
    for (std::size_t j = 0; j < grid.n_y(); ++j) {
        const auto g = dist.row(j);
        for (std::size_t k = 1; k < n; ++k) flux[j * (n + 1) + k] = c.a[k] * g[k] - c.b[k] * g[k - 1];
    }
    return flux;
}

double cfl_explicit(const OperatorFields& fields, double dv, FluxVariant variant) {
    double c_max = 0.0, d_max = 0.0;
    for (std::size_t k = 0; k < fields.drift.size(); ++k) {
        double C = fields.drift[k] + fields.diffusion_slope[k];
        if (variant == FluxVariant::literal) C /= dv;
        c_max = std::max(c_max, std::abs(C));
        d_max = std::max(d_max, fields.diffusion[k]);
    }
    const double den = 2.0 * (c_max * dv + d_max);
    return den > 0.0 ? dv * dv / den : kInf;
}

double cfl_semi_implicit(const OperatorFields& fields, double dv, FluxVariant variant) {
    double c_max = 0.0;
    for (std::size_t k = 0; k < fields.drift.size(); ++k) {
        double C = fields.drift[k] + fields.diffusion_slope[k];
        if (variant == FluxVariant::literal) C /= dv;
        c_max = std::max(c_max, std::abs(C));
    }
    return c_max > 0.0 ? dv / (2.0 * c_max) : kInf;
}

double cfl_bound(const OperatorFields& fields, double dv, const SolverConfig& config) {
    return config.stepper == Stepper::explicit_euler ? cfl_explicit(fields, dv, config.flux)
                                                     : cfl_semi_implicit(fields, dv, config.flux);
}

void explicit_step_1d(std::vector<double>& g, const OperatorFields& fields, double dv, double dt,
                      const SolverConfig& config) {
    SolverConfig c = config;
    c.stepper = Stepper::explicit_euler;
    RowOperator(fields, dv, dt, c).apply(g);
}

void semi_implicit_step_1d(std::vector<double>& g, const OperatorFields& fields, double dv, double dt,
                           const SolverConfig& config) {
    SolverConfig c = config;
    c.stepper = Stepper::semi_implicit;
    RowOperator(fields, dv, dt, c).apply(g);
}

namespace {

GridDistribution step_rows(const GridDistribution& dist, const OperatorFields& fields, double dt,
                           const SolverConfig& config) {
    GridDistribution out = dist;
    const RowOperator op(fields, dist.grid().dv_x(), dt, config);
    for (std::size_t j = 0; j < dist.grid().n_y(); ++j) op.apply(out.row(j));
    return out;
}

}  // namespace

GridDistribution explicit_step(const GridDistribution& dist, const OperatorFields& fields, double dt,
                               const SolverConfig& config) {
    SolverConfig c = config;
    c.stepper = Stepper::explicit_euler;
    return step_rows(dist, fields, dt, c);
}

GridDistribution semi_implicit_step(const GridDistribution& dist, const OperatorFields& fields, double dt,
                                    const SolverConfig& config) {
    SolverConfig c = config;
    c.stepper = Stepper::semi_implicit;
    return step_rows(dist, fields, dt, c);
}

void FpRunLog::write_csv(std::ostream& os) const {
    os << "step,time,dt,mass,min_value,residual\n";
    for (const auto& r : rows)
        os << r.step << ',' << r.time << ',' << r.dt << ',' << r.mass << ',' << r.min_value << ',' << r.residual
           << '\n';
}

double policy_dt(const OperatorFields& fields, double dv, const ModelParams& params, const SolverConfig& config) {
    const double bound = cfl_bound(fields, dv, config);
    switch (config.dt_policy) {
        case DtPolicy::fixed: return config.dt_value;
        case DtPolicy::cfl_auto: return std::min(bound, config.t_max);
        case DtPolicy::dv_over_sigma2: {
            const double d = params.sigma2 > 0.0 ? dv / params.sigma2 : kInf;
            return std::min({d, bound, config.t_max});
        }
    }
    return bound;
}

namespace {

double l1_change(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += std::abs(a[k] - b[k]);
        den += std::abs(b[k]);
    }
    return den > 0.0 ? num / den : 0.0;
}

// Time-stepping loop shared by the 1D and 2D drivers. `Advance(dt)` performs one
// step and returns the relative L1 change; stops at `duration` or when `stop` fires.
template <class State, class Assemble, class Step, class Stop>
std::size_t march(State& state, double dv, const ModelParams& params, const SolverConfig& config, double duration,
                  Assemble assemble, Step step, Stop stop, FpRunLog* log, double& t_out) {
    double t = 0.0;
    std::size_t steps = 0;
    while (duration - t > 1e-12 * std::max(1.0, duration)) {
        const OperatorFields fields = assemble(state);
        double dt = policy_dt(fields, dv, params, config);
        if (duration - t < dt) dt = duration - t;
        State next = step(state, fields, dt);
        const double residual = l1_change(std::span<const double>(next), std::span<const double>(state)) / dt;
        state = std::move(next);
        t += dt;
        ++steps;
        if (log) {
            const auto v = std::span<const double>(state);
            const double mass = std::accumulate(v.begin(), v.end(), 0.0);
            log->rows.push_back({steps, t, dt, mass, *std::min_element(v.begin(), v.end()), residual});
        }
        if (!std::isfinite(residual)) throw NumericalError("evolve_fp: non-finite state at t = " + std::to_string(t));
        if (stop(residual)) break;
    }
    t_out = t;
    return steps;
}

}  // namespace

std::vector<double> evolve_fp_1d(std::vector<double> g, double dv, const ModelParams& params,
                                 const SolverConfig& config, double duration, FpRunLog* log) {
    if (duration < 0.0) throw DomainError("evolve_fp: negative duration");
    double t = 0.0;
    march(
        g, dv, params, config, duration,
        [&](const std::vector<double>& s) { return assemble_operators_1d(s, dv, params); },
        [&](const std::vector<double>& s, const OperatorFields& f, double dt) {
            std::vector<double> out = s;
            RowOperator(f, dv, dt, config).apply(out);
            return out;
        },
        [](double) { return false; }, log, t);
    if (log)
        for (auto& r : log->rows) r.mass *= dv;
    return g;
}

namespace {

// Adapter so the 2D state can be viewed as a flat span by `march`.
struct FlatDist {
    GridDistribution dist;
    operator std::span<const double>() const { return dist.values(); }
};

}  // namespace

GridDistribution evolve_fp(const GridDistribution& dist, const ModelParams& params, const SolverConfig& config,
                           double duration, FpRunLog* log) {
    if (duration < 0.0) throw DomainError("evolve_fp: negative duration");
    FlatDist state{dist};
    const double dv = dist.grid().dv_x();
    double t = 0.0;
    march(
        state, dv, params, config, duration, [&](const FlatDist& s) { return assemble_operators(s.dist, params); },
        [&](const FlatDist& s, const OperatorFields& f, double dt) {
            return FlatDist{step_rows(s.dist, f, dt, config)};
        },
        [](double) { return false; }, log, t);
    if (log)
        for (auto& r : log->rows) r.mass *= dist.grid().cell_area();
    return std::move(state.dist);
}

SteadyStateResult steady_state(const GridDistribution& dist, const ModelParams& params, const SolverConfig& config,
                               FpRunLog* log) {
    config.validate();
    FlatDist state{dist};
    const double dv = dist.grid().dv_x();
    SteadyStateResult res{dist};
    double last_residual = kInf;
    double t = 0.0;
    res.steps = march(
        state, dv, params, config, config.t_max,
        [&](const FlatDist& s) { return assemble_operators(s.dist, params); },
        [&](const FlatDist& s, const OperatorFields& f, double dt) {
            return FlatDist{step_rows(s.dist, f, dt, config)};
        },
        [&](double r) {
            last_residual = r;
            return r < config.steady_tol;
        },
        log, t);
    if (log)
        for (auto& r : log->rows) r.mass *= dist.grid().cell_area();
    res.dist = std::move(state.dist);
    res.time = t;
    res.residual = last_residual;
    res.converged = last_residual < config.steady_tol;
    return res;
}

}  // namespace hkt
