#pragma once

// Microscopic interaction rules for two-dimensional traffic: longitudinal
// acceleration/braking with bounded noise, lateral relaxation towards an
// uncertain desired speed, and the closures that parametrize both.
//
// All speeds are dimensionless: v_x in [0,1], v_y in [-epsilon, epsilon].

#include <optional>
#include <string>
#include <utility>

#include "hkt/rng.hpp"

namespace hkt {

enum class BetaMode { constant, linear_in_ux };

/// Reference speed W_x deciding between acceleration and braking.
enum class ReferenceMode {
    binary,      ///< W_x = w_x, the speed of a leading vehicle
    mean_field,  ///< W_x = u_x, the mean longitudinal speed
};

/// Target speeds used by the longitudinal rule.
enum class TargetMode {
    jump_and_scaled,  ///< V_A = min(v_x + dv, 1), V_B = P(rho) W_x
    mean_speed,       ///< V_A = V_B = u_x (synchronised-traffic analysis)
};

struct ModelParams {
    double alpha = 0.1;     ///< interaction strength, (0,1]
    double delta = 1.0;     ///< exponent in P(rho) = 1 - rho^delta
    double dv_jump = 0.2;   ///< acceleration speed jump
    double kappa = 1.0;     ///< diffusion exponent, >= 1
    double sigma2 = 10.0;   ///< diffusion coefficient of the limit equation
    double epsilon = 1.0;   ///< lateral speed bound, (0,1]
    BetaMode beta_mode = BetaMode::constant;
    double beta0 = 0.5;     ///< base lateral relaxation rate, (0,1]
    double vbar_d = 0.0;    ///< mean desired lateral speed
    double lambda = 0.1;    ///< amplitude of the desired-speed uncertainty
    double rho = 0.3;       ///< vehicle density, [0,1]
    ReferenceMode wx_mode = ReferenceMode::binary;
    TargetMode target_mode = TargetMode::jump_and_scaled;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

std::string to_string(BetaMode m);
std::string to_string(ReferenceMode m);
std::string to_string(TargetMode m);
BetaMode parse_beta_mode(const std::string& s);
ReferenceMode parse_reference_mode(const std::string& s);
TargetMode parse_target_mode(const std::string& s);

/// Probability of accelerating, P(rho) = 1 - rho^delta.
double accel_probability(double rho, double delta);

/// Density at which P(rho) = 1/2.
double critical_density(double delta);

struct TargetSpeeds {
    double accel;  ///< V_A
    double brake;  ///< V_B
};

/// V_A = min(v + dv, 1), V_B = P(rho) W.
TargetSpeeds target_speeds(double v_x, double w_ref, double rho, double delta, double dv_jump);

struct DiffusionCoefficients {
    double accel;  ///< D_A
    double brake;  ///< D_B
};

/// D_A = nu (V_A - v)^kappa, D_B = nu (v - V_B)^kappa with nu = v (1 - v).
DiffusionCoefficients diffusion_coefficients(double v_x, double v_accel, double v_brake, double kappa);

/// Target speeds for the configured closure. `w_ref` is W_x; `u_x` is only read
/// in TargetMode::mean_speed.
TargetSpeeds closure_targets(double v_x, double w_ref, double u_x, const ModelParams& p);

/// Post-interaction longitudinal speed. The leader is never modified.
/// Throws RejectedDraw if |xi| exceeds the admissible bound of the active branch.
double x_interaction(double v_x, double w_ref, const ModelParams& p, double xi, double u_x = 0.0);

/// Bounds on |xi| guaranteeing v_x' in [0,1].
struct XiBounds {
    /// (1 - alpha P) / sqrt(alpha P); empty when P = 0 (acceleration branch has no noise).
    std::optional<double> accel;
    /// (alpha (1-P) - 1) / sqrt(alpha (1-P)) as a lower bound on |xi|; vacuous when negative,
    /// empty when P = 1.
    std::optional<double> lower;
    /// (1 - alpha (1-P)) / sqrt(alpha (1-P)), the braking-branch analogue of `accel`;
    /// empty when P = 1.
    std::optional<double> brake;

    bool lower_vacuous() const { return !lower || *lower < 0.0; }
    /// Largest half-width admissible for both branches.
    double joint() const;
};

XiBounds xi_admissible_halfwidth(double rho, double alpha, double delta);

/// Effective lateral relaxation rate for the configured mode.
double relaxation_rate(double u_x, const ModelParams& p);

/// v_d(theta) = vbar_d + lambda P(rho) theta.
double desired_speed(double theta, double rho, const ModelParams& p);

/// v_y' = (1 - beta) v_y + beta v_d(theta).
double y_interaction(double v_y, double u_x, double theta, const ModelParams& p);

enum class NoiseLaw { two_point, uniform };

/// Zero-mean compactly supported fluctuation with prescribed variance.
struct NoiseSpec {
    NoiseLaw law = NoiseLaw::two_point;
    double variance = 0.01;

    double support_halfwidth() const;
    double sample(Rng& rng) const;
    /// Throws ConfigError if the support exceeds the admissible bound for (rho, alpha, delta).
    void check_admissible(double rho, double alpha, double delta) const;

    bool operator==(const NoiseSpec&) const = default;
};

}  // namespace hkt
