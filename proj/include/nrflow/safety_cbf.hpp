#ifndef NRFLOW_SAFETY_CBF_HPP
#define NRFLOW_SAFETY_CBF_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "nrflow/errors.hpp"
#include "nrflow/vehicle_dynamics.hpp"

namespace nrflow {

using Vec2 = Eigen::Vector2d;

/// Minimum-gap barrier parameters. kappa is the identity.
struct LongitudinalCbfSpec {
    double d0 = 5.0;     // minimum inter-vehicle distance [m]
    double a_bar = 7.0;  // braking capability assumed by the barrier [m/s^2]

    double k() const { return 1.0 / (2.0 * a_bar); }
    double kappa(double h) const { return h; }

    void validate() const {
        if (!(d0 > 0.0)) throw DomainError("LongitudinalCbfSpec.d0 must be > 0");
        if (!(a_bar > 0.0)) throw DomainError("LongitudinalCbfSpec.a_bar must be > 0");
    }
};

/// Lane-keeping barrier parameters. kappa(h) = gamma * h^3.
struct LateralCbfSpec {
    double y_max = 0.5;    // maximum lateral deviation [m]
    double a_tilde = 5.0;  // lateral acceleration capability [m/s^2]
    double gamma = 15.0;

    double k() const { return 1.0 / (2.0 * a_tilde); }
    double kappa(double h) const { return gamma * h * h * h; }

    void validate() const {
        if (!(y_max > 0.0)) throw DomainError("LateralCbfSpec.y_max must be > 0");
        if (!(a_tilde > 0.0)) throw DomainError("LateralCbfSpec.a_tilde must be > 0");
        if (!(gamma > 0.0)) throw DomainError("LateralCbfSpec.gamma must be > 0");
    }
};

struct RelativeKinematics {
    Vec2 delta_p = Vec2::Zero();  // p1 - p2
    Vec2 delta_v = Vec2::Zero();  // v1 - v2
    double v_hat = 0.0;           // relative speed along delta_p / |delta_p|

    double distance() const { return delta_p.norm(); }
};

inline RelativeKinematics relative_kinematics(const Vec2& p1, const Vec2& v1, const Vec2& p2,
                                              const Vec2& v2) {
    RelativeKinematics rk;
    rk.delta_p = p1 - p2;
    rk.delta_v = v1 - v2;
    const double d = rk.delta_p.norm();
    if (!(d > 0.0)) throw DomainError("relative_kinematics: coincident positions");
    rk.v_hat = rk.delta_p.dot(rk.delta_v) / d;
    return rk;
}

/// World-frame velocity of the center of gravity.
inline Vec2 world_velocity(const VehicleState& x) {
    const double c = std::cos(x.psi), s = std::sin(x.psi);
    return {x.v_lon * c - x.v_lat * s, x.v_lon * s + x.v_lat * c};
}

/// World-frame acceleration, split as `base + accel * per_accel` for a fixed steering angle.
struct AffineAcceleration {
    Vec2 base = Vec2::Zero();
    Vec2 per_accel = Vec2::Zero();

    Vec2 at(double accel) const { return base + accel * per_accel; }
};

inline AffineAcceleration world_acceleration(const VehicleState& x, double steer,
                                             const VehicleParams& p, double v_min = 0.1) {
    const StateDerivative d0 = state_derivative(x, {0.0, steer}, p, v_min);
    const double c = std::cos(x.psi), s = std::sin(x.psi);
    AffineAcceleration out;
    // d/dt of (v_lon c - v_lat s, v_lon s + v_lat c) with accel = 0
    out.base = {d0.v_lon * c - d0.v_lat * s - x.psi_dot * (x.v_lon * s + x.v_lat * c),
                d0.v_lon * s + d0.v_lat * c + x.psi_dot * (x.v_lon * c - x.v_lat * s)};
    out.per_accel = {c, s};
    return out;
}

/// h = |dp| - k v_hat^2 - d0; nonnegative exactly on the safe set.
inline double longitudinal_barrier(const RelativeKinematics& rk, const LongitudinalCbfSpec& spec) {
    return rk.distance() - spec.k() * rk.v_hat * rk.v_hat - spec.d0;
}

/// h_dot + kappa(h); the barrier condition holds iff this is >= 0.
template <class Kappa>
double cbf_condition(double h, double h_dot, const Kappa& kappa) {
    return h_dot + kappa(h);
}

inline double cbf_condition(double h, double h_dot) {
    return cbf_condition(h, h_dot, [](double v) { return v; });
}

struct FilterResult {
    double value = 0.0;
    bool modified = false;
    bool infeasible = false;
};

/// Position, velocity and acceleration of the vehicle ahead.
struct LeadMotion {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    Vec2 accel = Vec2::Zero();
};

/// Barrier condition along the longitudinal channel, affine in the ego acceleration.
struct LongitudinalCondition {
    double h = 0.0;
    double offset = 0.0;  // condition value at accel = 0
    double slope = 0.0;   // d(condition)/d(accel)

    double at(double accel) const { return offset + slope * accel; }
};

inline LongitudinalCondition longitudinal_condition(const VehicleState& ego, double steer,
                                                    const LeadMotion& lead,
                                                    const LongitudinalCbfSpec& spec,
                                                    const VehicleParams& p, double v_min = 0.1) {
    const Vec2 p2{ego.z1, ego.z2};
    const RelativeKinematics rk = relative_kinematics(lead.position, lead.velocity, p2,
                                                      world_velocity(ego));
    const double dist = rk.distance();
    const Vec2 n = rk.delta_p / dist;
    const AffineAcceleration ego_acc = world_acceleration(ego, steer, p, v_min);

    // d(v_hat)/dt = <n, dA> + (|dv|^2 - v_hat^2) / |dp|, with dA = a1 - a2(accel)
    const double turn = (rk.delta_v.squaredNorm() - rk.v_hat * rk.v_hat) / dist;
    const double vhat_dot0 = n.dot(lead.accel - ego_acc.base) + turn;
    const double vhat_dot1 = -n.dot(ego_acc.per_accel);
    const double k = spec.k();

    LongitudinalCondition c;
    c.h = longitudinal_barrier(rk, spec);
    // h_dot = v_hat - 2 k v_hat d(v_hat)/dt
    c.offset = rk.v_hat - 2.0 * k * rk.v_hat * vhat_dot0 + spec.kappa(c.h);
    c.slope = -2.0 * k * rk.v_hat * vhat_dot1;
    return c;
}

/**
 * Closest admissible acceleration to `nominal` satisfying h_dot + h >= 0.
 *
 * The constraint is affine in the acceleration, so the projection is either
 * the nominal value or the constraint boundary. With no admissible solution
 * the filter commands maximum braking and reports infeasibility.
 */
inline FilterResult longitudinal_filter(double nominal, const VehicleState& ego, double steer,
                                        const LeadMotion& lead, const LongitudinalCbfSpec& spec,
                                        const VehicleParams& p, const Limits& lim) {
    const LongitudinalCondition c = longitudinal_condition(ego, steer, lead, spec, p, lim.v_min);
    FilterResult r;
    r.value = nominal;
    if (c.at(nominal) >= 0.0) return r;

    r.modified = true;
    auto brake = [&] {
        r.value = std::clamp(-spec.a_bar, lim.a_min, lim.a_max);
        r.infeasible = true;
        return r;
    };
    if (c.slope == 0.0) return brake();
    const double boundary = -c.offset / c.slope;
    if (c.slope > 0.0 && boundary > lim.a_max) return brake();
    if (c.slope < 0.0 && boundary < lim.a_min) return brake();
    r.value = std::clamp(boundary, lim.a_min, lim.a_max);
    return r;
}

/// Lateral position and rate relative to a straight lane along z1.
struct LateralMotion {
    double y = 0.0;
    double y_dot = 0.0;
};

inline LateralMotion lateral_motion(const VehicleState& x) {
    return {x.z2, x.v_lon * std::sin(x.psi) + x.v_lat * std::cos(x.psi)};
}

inline double lateral_sign(double y, double y_dot) {
    const double v = y != 0.0 ? y : y_dot;
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

/// h = y_max - |y + k sign(y) y_dot^2|, with sign(0) taken from y_dot.
inline double lateral_barrier(double y, double y_dot, const LateralCbfSpec& spec) {
    const double s = lateral_sign(y, y_dot);
    return spec.y_max - std::abs(y + spec.k() * s * y_dot * y_dot);
}

/// Lateral barrier condition h_dot + gamma h^3 for a candidate steering angle.
inline double lateral_condition(double steer, const VehicleState& ego, double accel,
                                const LateralCbfSpec& spec, const VehicleParams& p,
                                double v_min = 0.1) {
    const StateDerivative d = state_derivative(ego, {accel, steer}, p, v_min);
    const double c = std::cos(ego.psi), s = std::sin(ego.psi);
    const double y = ego.z2;
    const double y_dot = d.z2;
    const double y_ddot = d.v_lon * s + ego.v_lon * ego.psi_dot * c + d.v_lat * c -
                          ego.v_lat * ego.psi_dot * s;
    const double sg = lateral_sign(y, y_dot);
    const double k = spec.k();
    const double w = y + k * sg * y_dot * y_dot;
    const double w_dot = y_dot + 2.0 * k * sg * y_dot * y_ddot;
    const double h = spec.y_max - std::abs(w);
    const double h_dot = -(w >= 0.0 ? 1.0 : -1.0) * w_dot;
    return cbf_condition(h, h_dot, [&](double v) { return spec.kappa(v); });
}

namespace detail {

/// Bisection between a feasible and an infeasible steering angle; returns the feasible end.
template <class Condition>
double bisect_feasible(const Condition& cond, double feasible, double infeasible) {
    constexpr double kTol = 1e-4;
    constexpr int kMaxIter = 60;
    for (int i = 0; i < kMaxIter && std::abs(infeasible - feasible) > kTol; ++i) {
        const double mid = 0.5 * (feasible + infeasible);
        if (cond(mid) >= 0.0)
            feasible = mid;
        else
            infeasible = mid;
    }
    return feasible;
}

}  // namespace detail

/**
 * Closest steering angle to `nominal` satisfying the lateral barrier
 * condition, searched by bisection on each side of the nominal value.
 * The acceleration is frozen at `accel`.
 */
inline FilterResult lateral_filter(double nominal, const VehicleState& ego, double accel,
                                   const LateralCbfSpec& spec, const VehicleParams& p,
                                   const Limits& lim) {
    auto cond = [&](double steer) {
        return lateral_condition(steer, ego, accel, spec, p, lim.v_min);
    };
    FilterResult r;
    r.value = nominal;
    if (cond(nominal) >= 0.0) return r;
    r.modified = true;

    std::optional<double> best;
    const double lo = -lim.steer_max, hi = lim.steer_max;
    if (nominal > lo && cond(lo) >= 0.0) best = detail::bisect_feasible(cond, lo, nominal);
    if (nominal < hi && cond(hi) >= 0.0) {
        const double right = detail::bisect_feasible(cond, hi, nominal);
        if (!best || std::abs(right - nominal) < std::abs(*best - nominal)) best = right;
    }
    if (best) {
        r.value = *best;
        return r;
    }

    constexpr int kGrid = 101;
    double arg = lo, top = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGrid; ++i) {
        const double steer = lo + (hi - lo) * i / (kGrid - 1);
        const double v = cond(steer);
        if (v > top) {
            top = v;
            arg = steer;
        }
    }
    r.value = arg;
    r.infeasible = true;
    return r;
}

}  // namespace nrflow

#endif  // NRFLOW_SAFETY_CBF_HPP
