#ifndef NRFLOW_VEHICLE_DYNAMICS_HPP
#define NRFLOW_VEHICLE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nrflow/errors.hpp"

namespace nrflow {

/**
 * Parameters of the six-state dynamic bicycle model.
 *
 * All quantities are SI. The front/rear distances are measured from the
 * center of gravity; cornering stiffnesses relate slip angle to lateral
 * tire force in the linear tire model.
 */
struct VehicleParams {
    double mass = 2050.0;         // [kg]
    double yaw_inertia = 3344.0;  // [kg m^2]
    double lf = 1.105;            // [m]
    double lr = 1.738;            // [m]
    double c_front = 57500.0;     // [N/rad]
    double c_rear = 92500.0;      // [N/rad]

    void validate() const {
        auto check = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                std::ostringstream os;
                os << "VehicleParams." << name << " must be finite and > 0 (got " << v << ")";
                throw DomainError(os.str());
            }
        };
        check(mass, "mass");
        check(yaw_inertia, "yaw_inertia");
        check(lf, "lf");
        check(lr, "lr");
        check(c_front, "c_front");
        check(c_rear, "c_rear");
    }

    /// Copy with the mass scaled; used to give a predictor a deliberately wrong weight.
    VehicleParams with_mass_factor(double factor) const {
        VehicleParams p = *this;
        p.mass *= factor;
        return p;
    }
};

/// x = (z1, z2, v_lon, v_lat, psi, psi_dot).
struct VehicleState {
    double z1 = 0.0;       // [m] world position of the center of gravity
    double z2 = 0.0;       // [m]
    double v_lon = 0.0;    // [m/s] body-frame longitudinal velocity
    double v_lat = 0.0;    // [m/s] body-frame lateral velocity
    double psi = 0.0;      // [rad] heading
    double psi_dot = 0.0;  // [rad/s] yaw rate

    bool finite() const {
        return std::isfinite(z1) && std::isfinite(z2) && std::isfinite(v_lon) &&
               std::isfinite(v_lat) && std::isfinite(psi) && std::isfinite(psi_dot);
    }

    bool operator==(const VehicleState&) const = default;
};

/// Time derivative of VehicleState, field for field.
struct StateDerivative {
    double z1 = 0.0;
    double z2 = 0.0;
    double v_lon = 0.0;
    double v_lat = 0.0;
    double psi = 0.0;
    double psi_dot = 0.0;
};

/// u = (a_lon, delta_f).
struct ControlInput {
    double accel = 0.0;  // [m/s^2] longitudinal acceleration command
    double steer = 0.0;  // [rad] front-wheel steering angle

    bool operator==(const ControlInput&) const = default;
};

/// Actuator bounds and the longitudinal speed floor.
struct Limits {
    double a_min = -7.0;                           // [m/s^2]
    double a_max = 7.0;                            // [m/s^2]
    double steer_max = std::numbers::pi / 4.0;     // [rad], symmetric
    double v_min = 0.1;                            // [m/s]

    void validate() const {
        if (!(a_min < a_max)) throw DomainError("Limits: a_min must be < a_max");
        if (!(steer_max > 0.0)) throw DomainError("Limits: steer_max must be > 0");
        if (!(v_min > 0.0)) throw DomainError("Limits: v_min must be > 0");
    }

    bool admissible(const ControlInput& u) const {
        return u.accel >= a_min && u.accel <= a_max && u.steer >= -steer_max &&
               u.steer <= steer_max;
    }

    struct Clamped {
        ControlInput input;
        bool saturated = false;
    };

    /// Saturates u into the admissible box.
    Clamped clamp(const ControlInput& u) const {
        Clamped out;
        out.input.accel = std::clamp(u.accel, a_min, a_max);
        out.input.steer = std::clamp(u.steer, -steer_max, steer_max);
        out.saturated = out.input.accel != u.accel || out.input.steer != u.steer;
        return out;
    }
};

struct TireForces {
    double front = 0.0;  // [N]
    double rear = 0.0;   // [N]
};

/// Linear-tire lateral forces. Throws DegenerateSpeedError when v_lon < v_min.
inline TireForces lateral_tire_forces(const VehicleState& x, double steer,
                                      const VehicleParams& p, double v_min = 0.1) {
    if (!(x.v_lon >= v_min)) {
        std::ostringstream os;
        os << "longitudinal speed " << x.v_lon << " below floor " << v_min;
        throw DegenerateSpeedError(os.str());
    }
    TireForces f;
    f.front = p.c_front * (steer - std::atan((x.v_lat + p.lf * x.psi_dot) / x.v_lon));
    f.rear = -p.c_rear * std::atan((x.v_lat - p.lr * x.psi_dot) / x.v_lon);
    return f;
}

/// Right-hand side of the dynamic bicycle model.
inline StateDerivative state_derivative(const VehicleState& x, const ControlInput& u,
                                        const VehicleParams& p, double v_min = 0.1) {
    const TireForces f = lateral_tire_forces(x, u.steer, p, v_min);
    const double c_psi = std::cos(x.psi);
    const double s_psi = std::sin(x.psi);
    const double front_lat = f.front * std::cos(u.steer);

    StateDerivative d;
    d.z1 = x.v_lon * c_psi - x.v_lat * s_psi;
    d.z2 = x.v_lon * s_psi + x.v_lat * c_psi;
    d.v_lon = x.psi_dot * x.v_lat + u.accel;
    d.v_lat = -x.psi_dot * x.v_lon + 2.0 * (front_lat + f.rear) / p.mass;
    d.psi = x.psi_dot;
    d.psi_dot = 2.0 * (p.lf * front_lat - p.lr * f.rear) / p.yaw_inertia;
    return d;
}

inline VehicleState advance(const VehicleState& x, const StateDerivative& d, double dt) {
    return VehicleState{x.z1 + dt * d.z1,       x.z2 + dt * d.z2,   x.v_lon + dt * d.v_lon,
                        x.v_lat + dt * d.v_lat, x.psi + dt * d.psi, x.psi_dot + dt * d.psi_dot};
}

struct EulerStep {
    VehicleState state;
    bool speed_clamped = false;
};

/// One forward-Euler step; v_lon is floored at v_min and the event reported.
inline EulerStep euler_step(const VehicleState& x, const ControlInput& u, const VehicleParams& p,
                            double dt, double v_min = 0.1) {
    if (dt < 0.0) throw DomainError("euler_step: dt must be >= 0");
    EulerStep out;
    if (dt == 0.0) {
        out.state = x;
        return out;
    }
    out.state = advance(x, state_derivative(x, u, p, v_min), dt);
    if (out.state.v_lon < v_min) {
        out.state.v_lon = v_min;
        out.speed_clamped = true;
    }
    return out;
}

/// Number of fixed steps used to cover `horizon` with nominal step `step`.
inline long step_count(double horizon, double step) {
    return std::lround(horizon / step);
}

/// Constant-input forward simulation over `horizon`.
inline VehicleState rollout(const VehicleState& x0, const ControlInput& u, const VehicleParams& p,
                            double horizon, double step, double v_min = 0.1) {
    if (horizon < 0.0) throw DomainError("rollout: horizon must be >= 0");
    if (!(step > 0.0)) throw DomainError("rollout: step must be > 0");
    VehicleState x = x0;
    const long n = step_count(horizon, step);
    for (long i = 0; i < n; ++i) x = euler_step(x, u, p, step, v_min).state;
    return x;
}

}  // namespace nrflow

#endif  // NRFLOW_VEHICLE_DYNAMICS_HPP
