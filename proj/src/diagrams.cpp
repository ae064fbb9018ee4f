#include "hkt/diagrams.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hkt/errors.hpp"

namespace hkt {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kTol = 1e-10;
constexpr unsigned kDepth = 12;

template <class F>
double integrate(F f, double a, double b) {
    if (a == b) return 0.0;
    return gauss_kronrod<double, 31>::integrate(f, a, b, kDepth, kTol);
}

double accel_gap(double v, const ModelParams& p) { return std::min(v + p.dv_jump, 1.0) - v; }
double brake_gap(double v, double u, const ModelParams& p) {
    return v - accel_probability(p.rho, p.delta) * u;
}

// Branch "diffusion" D(v) and exponent integrand 1/(D-weighted gap).
struct Branch {
    double scale;      // D(v)
    double integrand;  // L / D^2 up to sign
};

Branch branch(double v, double u, const ModelParams& p, ProfileForm form) {
    const bool accel = v < u;
    const double gap = accel ? accel_gap(v, p) : brake_gap(v, u, p);
    if (form == ProfileForm::printed) return {gap, 1.0 / gap};
    const double nu = v * (1.0 - v);
    const double d = nu * std::pow(gap, p.kappa);
    return {d, gap / (d * d)};
}

constexpr std::size_t kPanels = 4096;
constexpr double kExpCap = 745.0;

// Cumulative integral of the exponent integrand from u outwards to each panel edge.
void tabulate(double u, double end, const ModelParams& p, ProfileForm form, std::vector<double>& edges,
              std::vector<double>& cum) {
    edges.resize(kPanels + 1);
    cum.assign(kPanels + 1, std::numeric_limits<double>::infinity());
    const double h = (end - u) / static_cast<double>(kPanels);
    for (std::size_t k = 0; k <= kPanels; ++k) edges[k] = u + h * static_cast<double>(k);
    edges[kPanels] = end;
    cum[0] = 0.0;
    auto f = [&](double s) { return branch(s, u, p, form).integrand; };
    for (std::size_t k = 0; k < kPanels; ++k) {
        const double a = std::min(edges[k], edges[k + 1]), b = std::max(edges[k], edges[k + 1]);
        if (b <= 0.0 || a >= 1.0 || (k + 1 == kPanels && (end == 0.0 || end == 1.0))) break;
        const double piece = gauss_kronrod<double, 15>::integrate(f, a, b, 5, 1e-10);
        cum[k + 1] = cum[k] + piece;
        if (!std::isfinite(cum[k + 1]) || cum[k + 1] > 1e300) break;
    }
}

}  // namespace

double StationaryProfile::operator()(double v) const {
    if (v <= 0.0 || v >= 1.0 || v == u_x) return 0.0;
    const double u = u_x;
    const bool lo = v < u;
    const auto& edges = lo ? edges_lo : edges_hi;
    const auto& cum = lo ? cum_lo : cum_hi;
    const double h = (edges.back() - edges.front()) / static_cast<double>(kPanels);
    auto k = static_cast<std::size_t>(std::floor((v - u) / h));
    k = std::min(k, kPanels - 1);
    if (!std::isfinite(cum[k]) || 2.0 / sigma2 * cum[k] > kExpCap) return 0.0;
    auto f = [&](double s) { return branch(s, u, params, form).integrand; };
    const double a = std::min(edges[k], v), b = std::max(edges[k], v);
    const double inner = cum[k] + (a < b ? gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0) : 0.0);
    const double expo = 2.0 / sigma2 * inner;
    if (!(expo < kExpCap)) return 0.0;
    const double ref = branch(lo ? std::nextafter(u, 0.0) : std::nextafter(u, 1.0), u, params, form).scale;
    const double r = ref / branch(v, u, params, form).scale;
    const double value = r * r * std::exp(-expo);
    if (!std::isfinite(value)) return 0.0;
    return (lo ? c_a : c_b) * value;
}

std::vector<double> StationaryProfile::cell_averages(std::size_t n) const {
    std::vector<double> out(n, 0.0);
    const double dv = 1.0 / static_cast<double>(n);
    auto f = [&](double v) { return (*this)(v); };
    for (std::size_t i = 0; i < n; ++i) {
        const double a = static_cast<double>(i) * dv, b = a + dv;
        double s;
        if (a < u_x && u_x < b)
            s = integrate(f, a, u_x) + integrate(f, u_x, b);
        else
            s = integrate(f, a, b);
        out[i] = s / dv;
    }
    return out;
}

StationaryProfile stationary_gx(double u_x, double sigma2, const ModelParams& params, ProfileForm form) {
    if (!(u_x > 0.0 && u_x < 1.0)) throw DomainError("stationary_gx: u_x outside (0,1)");
    if (!(sigma2 > 0.0)) throw DomainError("stationary_gx: sigma2 must be > 0");
    if (params.target_mode == TargetMode::mean_speed)
        throw NumericalError(
            "stationary_gx: V_A = V_B = u_x gives a singular system; the stationary state is a point mass at u_x");
    const double P = accel_probability(params.rho, params.delta);
    if (P <= 0.0 || P >= 1.0 || brake_gap(u_x, u_x, params) <= 0.0)
        throw NumericalError("stationary_gx: degenerate closure, one branch carries no profile");

    StationaryProfile prof{u_x, sigma2, 1.0, 1.0, form, params, {}, {}, {}, {}};
    tabulate(u_x, 0.0, params, form, prof.edges_lo, prof.cum_lo);
    tabulate(u_x, 1.0, params, form, prof.edges_hi, prof.cum_hi);
    auto f = [&](double v) { return prof(v); };
    auto vf = [&](double v) { return v * prof(v); };
    const double a0 = integrate(f, 0.0, u_x), a1 = integrate(vf, 0.0, u_x);
    const double b0 = integrate(f, u_x, 1.0), b1 = integrate(vf, u_x, 1.0);
    const double det = a0 * b1 - b0 * a1;
    if (!(std::abs(det) > 1e-300) || !std::isfinite(det))
        throw NumericalError("stationary_gx: singular normalisation system");
    prof.c_a = (b1 - u_x * b0) / det;
    prof.c_b = (u_x * a0 - a1) / det;
    return prof;
}

AnalyticYDiagram analytic_y_diagram(double rho, const ModelParams& params) {
    const double a = params.lambda * accel_probability(rho, params.delta);
    const double a2 = a * a;
    const double vb2 = params.vbar_d * params.vbar_d;
    AnalyticYDiagram d;
    d.uy_bar = params.vbar_d;
    d.Ey_bar = vb2 + a2 / 3.0;
    d.var_Ey = 4.0 * (vb2 / 3.0 + a2 / 45.0) * a2;
    d.halfwidth = std::sqrt(d.Ey_bar + std::sqrt(d.var_Ey));
    return d;
}

MomentSet tail_average(const HybridState& node, double fraction) {
    const auto& log = node.moment_log;
    if (log.empty()) return moments(node.dist);
    const double t_end = log.back().tau;
    const double t0 = t_end * (1.0 - fraction);
    MomentSet avg;
    std::size_t count = 0;
    for (const auto& r : log) {
        if (r.tau < t0) continue;
        avg.u_x += r.m.u_x;
        avg.u_y += r.m.u_y;
        avg.E_x += r.m.E_x;
        avg.E_y += r.m.E_y;
        ++count;
    }
    const double inv = 1.0 / static_cast<double>(count);
    avg.u_x *= inv;
    avg.u_y *= inv;
    avg.E_x *= inv;
    avg.E_y *= inv;
    return avg;
}

DiagramPoint diagram_point(double rho, const EnsembleSolution& sol) {
    DiagramPoint pt;
    pt.rho = rho;
    std::vector<double> uy, ey;
    for (const auto& node : sol.nodes) {
        const MomentSet m = tail_average(node);
        uy.push_back(m.u_y);
        ey.push_back(m.E_y);

        const auto& log = node.moment_log;
        const double t0 = 0.9 * log.back().tau;
        const double dvy = node.dist.grid().dv_y();
        for (const auto& r : log)
            if (r.tau >= t0 && (std::abs(r.m.u_x - m.u_x) > 1e-3 || std::abs(r.m.u_y - m.u_y) > dvy))
                pt.equilibrated = false;
    }
    pt.ux_inf = tail_average(sol.nodes.front()).u_x;
    pt.uy_bar_inf = expected_value(sol.quad, uy);
    pt.Ey_bar_inf = expected_value(sol.quad, ey);
    pt.var_Ey_inf = theta_variance(sol.quad, ey);
    pt.Iy = pt.Ey_bar_inf + std::sqrt(pt.var_Ey_inf);
    pt.band_lo = pt.uy_bar_inf - std::sqrt(pt.Iy);
    pt.band_hi = pt.uy_bar_inf + std::sqrt(pt.Iy);
    return pt;
}

std::vector<DiagramPoint> diagram_sweep(const std::vector<double>& rho_grid, const ModelParams& params,
                                        const SweepSetup& setup) {
    std::vector<DiagramPoint> out;
    const VelocityGrid grid(setup.n_x, setup.n_y, params.epsilon);
    const GridDistribution g0 = initial_condition(grid);
    for (std::size_t k = 0; k < rho_grid.size(); ++k) {
        ModelParams p = params;
        p.rho = rho_grid[k];
        p.validate();
        const EnsembleSolution sol =
            run_ensemble(g0, p, setup.solver, setup.hybrid, setup.quad, setup.horizon, Rng::derive(setup.seed, k).next_u64());
        out.push_back(diagram_point(p.rho, sol));
    }
    return out;
}

void write_diagram_csv(std::ostream& os, const std::vector<DiagramPoint>& points) {
    os << "rho,ux_inf,uy_bar_inf,Iy,band_lo,band_hi\n";
    char buf[192];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.rho, p.ux_inf, p.uy_bar_inf, p.Iy,
                      p.band_lo, p.band_hi);
        os << buf;
    }
}

}  // namespace hkt
