#include "hkt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hkt/errors.hpp"

namespace hkt {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(std::string(field) + ": " + what);
}

}  // namespace

void ModelParams::validate() const {
    require(alpha > 0.0 && alpha <= 1.0, "alpha", "must lie in (0,1]");
    require(delta >= 0.0, "delta", "must be >= 0");
    require(dv_jump > 0.0, "dv_jump", "must be > 0");
    require(kappa >= 1.0, "kappa", "must be >= 1");
    require(sigma2 >= 0.0, "sigma2", "must be >= 0");
    require(epsilon > 0.0 && epsilon <= 1.0, "epsilon", "must lie in (0,1]");
    require(beta0 > 0.0 && beta0 <= 1.0, "beta0", "must lie in (0,1]");
    require(vbar_d > -1.0 && vbar_d < 1.0, "vbar_d", "must lie in (-1,1)");
    require(lambda > 0.0, "lambda", "must be > 0");
    require(rho >= 0.0 && rho <= 1.0, "rho", "must lie in [0,1]");
    // max over rho of P(rho) is 1 for delta > 0 (attained at rho = 0); with delta = 0, P == 0.
    const double p_max = delta > 0.0 ? 1.0 : 0.0;
    require(std::abs(vbar_d) + lambda * p_max <= epsilon + 1e-15, "lambda",
            "|vbar_d| + lambda * max P must not exceed epsilon");
}

std::string to_string(BetaMode m) { return m == BetaMode::constant ? "constant" : "linear-in-ux"; }
std::string to_string(ReferenceMode m) { return m == ReferenceMode::binary ? "binary" : "mean-field"; }
std::string to_string(TargetMode m) {
    return m == TargetMode::jump_and_scaled ? "jump-and-scaled" : "mean-speed";
}

BetaMode parse_beta_mode(const std::string& s) {
    if (s == "constant") return BetaMode::constant;
    if (s == "linear-in-ux") return BetaMode::linear_in_ux;
    throw ConfigError("beta_mode: unknown value '" + s + "'");
}

ReferenceMode parse_reference_mode(const std::string& s) {
    if (s == "binary") return ReferenceMode::binary;
    if (s == "mean-field") return ReferenceMode::mean_field;
    throw ConfigError("wx_mode: unknown value '" + s + "'");
}

TargetMode parse_target_mode(const std::string& s) {
    if (s == "jump-and-scaled") return TargetMode::jump_and_scaled;
    if (s == "mean-speed") return TargetMode::mean_speed;
    throw ConfigError("target_mode: unknown value '" + s + "'");
}

double accel_probability(double rho, double delta) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("accel_probability: rho outside [0,1]");
    if (!(delta >= 0.0)) throw DomainError("accel_probability: delta must be >= 0");
    return 1.0 - std::pow(rho, delta);
}

double critical_density(double delta) {
    if (!(delta > 0.0)) throw DomainError("critical_density: no critical density for delta <= 0");
    if (std::isinf(delta)) return 1.0;
    return std::pow(0.5, 1.0 / delta);
}

TargetSpeeds target_speeds(double v_x, double w_ref, double rho, double delta, double dv_jump) {
    if (!(v_x >= 0.0 && v_x <= 1.0) || !(w_ref >= 0.0 && w_ref <= 1.0))
        throw DomainError("target_speeds: speeds must lie in [0,1]");
    return {std::min(v_x + dv_jump, 1.0), accel_probability(rho, delta) * w_ref};
}

DiffusionCoefficients diffusion_coefficients(double v_x, double v_accel, double v_brake, double kappa) {
    if (!(v_x >= 0.0 && v_x <= 1.0)) throw DomainError("diffusion_coefficients: v_x outside [0,1]");
    if (v_accel < v_x) throw DomainError("diffusion_coefficients: V_A < v_x");
    if (v_brake > v_x) throw DomainError("diffusion_coefficients: V_B > v_x");
    const double nu = v_x * (1.0 - v_x);
    return {nu * std::pow(v_accel - v_x, kappa), nu * std::pow(v_x - v_brake, kappa)};
}

TargetSpeeds closure_targets(double v_x, double w_ref, double u_x, const ModelParams& p) {
    if (p.target_mode == TargetMode::mean_speed) return {u_x, u_x};
    return target_speeds(v_x, w_ref, p.rho, p.delta, p.dv_jump);
}

double XiBounds::joint() const {
    double h = std::numeric_limits<double>::infinity();
    if (accel) h = std::min(h, *accel);
    if (brake) h = std::min(h, *brake);
    return h;
}

XiBounds xi_admissible_halfwidth(double rho, double alpha, double delta) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("xi_admissible_halfwidth: alpha outside (0,1]");
    const double P = accel_probability(rho, delta);
    XiBounds b;
    const double qa = alpha * P;
    const double qb = alpha * (1.0 - P);
    if (qa > 0.0) b.accel = (1.0 - qa) / std::sqrt(qa);
    if (qb > 0.0) {
        b.lower = (qb - 1.0) / std::sqrt(qb);
        b.brake = (1.0 - qb) / std::sqrt(qb);
    }
    return b;
}

double x_interaction(double v_x, double w_ref, const ModelParams& p, double xi, double u_x) {
    if (!(v_x >= 0.0 && v_x <= 1.0) || !(w_ref >= 0.0 && w_ref <= 1.0))
        throw DomainError("x_interaction: speeds must lie in [0,1]");
    if (v_x == w_ref) return v_x;

    const double P = accel_probability(p.rho, p.delta);
    const XiBounds bounds = xi_admissible_halfwidth(p.rho, p.alpha, p.delta);
    const TargetSpeeds t = closure_targets(v_x, w_ref, u_x, p);

    if (v_x < w_ref) {
        const double q = p.alpha * P;
        if (q == 0.0) return v_x;
        if (std::abs(xi) > *bounds.accel) throw RejectedDraw("x_interaction: |xi| above acceleration bound");
        const double d = v_x * (1.0 - v_x) * std::pow(t.accel - v_x, p.kappa);
        return v_x + q * (t.accel - v_x) + std::sqrt(q) * d * xi;
    }
    const double q = p.alpha * (1.0 - P);
    if (q == 0.0) return v_x;
    if (std::abs(xi) > *bounds.brake) throw RejectedDraw("x_interaction: |xi| above braking bound");
    const double d = v_x * (1.0 - v_x) * std::pow(v_x - t.brake, p.kappa);
    return v_x + q * (t.brake - v_x) + std::sqrt(q) * d * xi;
}

double relaxation_rate(double u_x, const ModelParams& p) {
    const double beta = p.beta_mode == BetaMode::constant ? p.beta0 : p.beta0 * u_x;
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta0: effective relaxation rate outside [0,1]");
    return beta;
}

double desired_speed(double theta, double rho, const ModelParams& p) {
    return p.vbar_d + p.lambda * accel_probability(rho, p.delta) * theta;
}

double y_interaction(double v_y, double u_x, double theta, const ModelParams& p) {
    const double beta = relaxation_rate(u_x, p);
    return (1.0 - beta) * v_y + beta * desired_speed(theta, p.rho, p);
}

double NoiseSpec::support_halfwidth() const {
    const double s = std::sqrt(variance);
    return law == NoiseLaw::two_point ? s : std::sqrt(3.0) * s;
}

double NoiseSpec::sample(Rng& rng) const {
    const double s = std::sqrt(variance);
    if (law == NoiseLaw::two_point) return rng.uniform() < 0.5 ? -s : s;
    return rng.uniform(-std::sqrt(3.0) * s, std::sqrt(3.0) * s);
}

void NoiseSpec::check_admissible(double rho, double alpha, double delta) const {
    if (!(variance > 0.0)) throw ConfigError("noise_variance: must be > 0");
    const XiBounds b = xi_admissible_halfwidth(rho, alpha, delta);
    if (b.accel && *b.accel > 0.0 && support_halfwidth() > *b.accel)
        throw ConfigError("noise_variance: support exceeds the acceleration-branch bound");
    if (b.brake && *b.brake > 0.0 && support_halfwidth() > *b.brake)
        throw ConfigError("noise_variance: support exceeds the braking-branch bound");
}

}  // namespace hkt
