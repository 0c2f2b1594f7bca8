#ifndef NRFLOW_NR_CONTROLLER_HPP
#define NRFLOW_NR_CONTROLLER_HPP

#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "nrflow/errors.hpp"
#include "nrflow/vehicle_dynamics.hpp"

namespace nrflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/**
 * Configuration of the Newton-Raphson flow tracking controller.
 *
 * The controller integrates
 *
 *     du/dt = alpha * (dg/du)^-1 * (r(t + T) - g(x, u))
 *
 * where g(x, u) is the position reached by a constant-input Euler rollout
 * of `model` over `horizon`. The model may differ from the plant.
 */
struct ControllerConfig {
    double alpha = 100.0;           // speedup gain
    double horizon = 1.0;           // T [s]
    double predictor_step = 0.001;  // Euler step of the output predictor [s]
    double control_step = 0.001;    // Euler step of the controller ODE [s]
    double jac_eps_accel = 0.01;    // [m/s^2]
    double jac_eps_steer = 0.001;   // [rad]
    double cond_max = 1.0e6;
    VehicleParams model;            // parameters used by the predictor
    Limits limits;

    void validate() const {
        if (!(alpha > 0.0)) throw DomainError("ControllerConfig.alpha must be > 0");
        if (!(horizon > 0.0)) throw DomainError("ControllerConfig.horizon must be > 0");
        if (!(predictor_step > 0.0 && predictor_step <= horizon))
            throw DomainError("ControllerConfig.predictor_step must lie in (0, horizon]");
        if (!(control_step > 0.0)) throw DomainError("ControllerConfig.control_step must be > 0");
        if (!(jac_eps_accel > 0.0 && jac_eps_steer > 0.0))
            throw DomainError("ControllerConfig.jac_eps must be > 0 per channel");
        if (!(cond_max > 1.0)) throw DomainError("ControllerConfig.cond_max must be > 1");
        model.validate();
        limits.validate();
    }
};

/// Integrator state of the controller: the current nominal input.
struct ControllerState {
    ControlInput u;
};

inline Vec2 as_vec(const ControlInput& u) { return {u.accel, u.steer}; }
inline ControlInput as_input(const Vec2& v) { return {v.x(), v.y()}; }

/// g(x, u): predicted position at t + T under constant input.
inline Vec2 predict_output(const VehicleState& x, const ControlInput& u,
                           const ControllerConfig& cfg) {
    const VehicleState end =
        rollout(x, u, cfg.model, cfg.horizon, cfg.predictor_step, cfg.limits.v_min);
    return {end.z1, end.z2};
}

/// 2-norm condition number of a 2x2 matrix; +inf when singular.
inline double condition_number(const Mat2& m) {
    const double det = std::abs(m.determinant());
    const double fro2 = m.squaredNorm();
    if (!(det > 0.0) || !std::isfinite(fro2)) return std::numeric_limits<double>::infinity();
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    const double smax2 = 0.5 * (fro2 + disc);
    return smax2 / det;
}

struct PredictorJacobian {
    Mat2 jacobian;
    double condition = 0.0;
};

/// Central-difference dg/du; one-sided where a perturbation would leave the input box.
inline PredictorJacobian predictor_jacobian(const VehicleState& x, const ControlInput& u,
                                            const ControllerConfig& cfg) {
    const Limits& lim = cfg.limits;
    PredictorJacobian out;

    ControlInput up = u, dn = u;
    up.accel = std::min(u.accel + cfg.jac_eps_accel, lim.a_max);
    dn.accel = std::max(u.accel - cfg.jac_eps_accel, lim.a_min);
    out.jacobian.col(0) =
        (predict_output(x, up, cfg) - predict_output(x, dn, cfg)) / (up.accel - dn.accel);

    up = u;
    dn = u;
    up.steer = std::min(u.steer + cfg.jac_eps_steer, lim.steer_max);
    dn.steer = std::max(u.steer - cfg.jac_eps_steer, -lim.steer_max);
    out.jacobian.col(1) =
        (predict_output(x, up, cfg) - predict_output(x, dn, cfg)) / (up.steer - dn.steer);

    out.condition = condition_number(out.jacobian);
    if (!(out.condition <= cfg.cond_max)) {
        std::ostringstream os;
        os << "predictor Jacobian condition number " << out.condition << " exceeds "
           << cfg.cond_max;
        throw SingularJacobianError(os.str(), out.condition);
    }
    return out;
}

/// Everything computed for one evaluation of the flow.
struct FlowEvaluation {
    Vec2 u_dot = Vec2::Zero();      // (m/s^3, rad/s)
    Vec2 predicted = Vec2::Zero();  // g(x, u)
    PredictorJacobian jacobian;
};

inline FlowEvaluation evaluate_flow(const VehicleState& x, const ControlInput& u,
                                    const Vec2& r_future, const ControllerConfig& cfg) {
    FlowEvaluation ev;
    ev.predicted = predict_output(x, u, cfg);
    ev.jacobian = predictor_jacobian(x, u, cfg);
    ev.u_dot = cfg.alpha * ev.jacobian.jacobian.partialPivLu().solve(r_future - ev.predicted);
    return ev;
}

/// alpha * J^-1 * (r(t+T) - g(x, u)).
inline Vec2 nr_control_derivative(const VehicleState& x, const ControlInput& u,
                                  const Vec2& r_future, const ControllerConfig& cfg) {
    return evaluate_flow(x, u, r_future, cfg).u_dot;
}

struct ControllerUpdate {
    ControllerState state;
    Vec2 predicted = Vec2::Zero();  // g(x(t), u(t)) at the start of the step
    bool saturated = false;
};

/**
 * Advances the controller over one plant step of length `plant_dt`.
 *
 * The plant state is held frozen while u is integrated with
 * `round(plant_dt / control_step)` Euler substeps. After each substep u is
 * clamped into the admissible box.
 */
template <class Reference>
ControllerUpdate controller_update(const ControllerState& ctrl, const VehicleState& x,
                                   const Reference& reference, double t, double plant_dt,
                                   const ControllerConfig& cfg) {
    const Vec2 r_future = reference(t + cfg.horizon);
    const long substeps = step_count(plant_dt, cfg.control_step);
    ControllerUpdate out;
    out.state = ctrl;
    for (long k = 0; k < substeps; ++k) {
        const FlowEvaluation ev = evaluate_flow(x, out.state.u, r_future, cfg);
        if (k == 0) out.predicted = ev.predicted;
        const Vec2 next = as_vec(out.state.u) + cfg.control_step * ev.u_dot;
        const Limits::Clamped c = cfg.limits.clamp(as_input(next));
        out.state.u = c.input;
        out.saturated = out.saturated || c.saturated;
    }
    if (substeps == 0) out.predicted = predict_output(x, ctrl.u, cfg);
    return out;
}

/// One sample of the memoryless tracking run.
template <class U>
struct MemorylessSample {
    double t = 0.0;
    U u{};
    U error{};
};

/**
 * Euler integration of the memoryless Newton-Raphson flow
 * du/dt = alpha * g'(u)^-1 * (r(t) - g(u)), for scalar or 2-vector u.
 *
 * `dg` returns the derivative (double) or Jacobian (Mat2) of g.
 */
template <class U, class G, class DG, class R>
std::vector<MemorylessSample<U>> memoryless_nr_track(const G& g, const DG& dg, const R& r,
                                                     double alpha, U u0, double duration,
                                                     double dt) {
    if (!(dt > 0.0)) throw DomainError("memoryless_nr_track: dt must be > 0");
    const long n = step_count(duration, dt);
    std::vector<MemorylessSample<U>> trace;
    trace.reserve(static_cast<std::size_t>(n) + 1);
    U u = u0;
    for (long i = 0;; ++i) {
        const double t = static_cast<double>(i) * dt;
        const U e = r(t) - g(u);
        trace.push_back({t, u, e});
        if (i == n) break;
        if constexpr (std::is_floating_point_v<U>) {
            const double d = dg(u);
            if (!(std::abs(d) > 1e-12)) throw SingularJacobianError("dg/du vanished", 0.0);
            u = u + dt * alpha * e / d;
        } else {
            const Mat2 j = dg(u);
            const double c = condition_number(j);
            if (!(c <= 1e12)) throw SingularJacobianError("dg/du singular", c);
            u = u + dt * alpha * j.partialPivLu().solve(e);
        }
    }
    return trace;
}

}  // namespace nrflow

#endif  // NRFLOW_NR_CONTROLLER_HPP
