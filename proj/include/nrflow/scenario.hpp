#ifndef NRFLOW_SCENARIO_HPP
#define NRFLOW_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nrflow/errors.hpp"
#include "nrflow/nr_controller.hpp"
#include "nrflow/planner.hpp"
#include "nrflow/safety_cbf.hpp"
#include "nrflow/trace.hpp"
#include "nrflow/vehicle_dynamics.hpp"

namespace nrflow {

/// One controlled vehicle entering the control zone.
struct VehicleSpec {
    double t_arrival = 0.0;
    VehicleState init{0.0, 0.0, 13.4, 0.0, 0.0, 0.0};
    VehicleParams params;
    double predictor_mass_factor = 1.0;
    ControlInput u0;
};

/// Arrival times drawn uniformly on [window_start, window_end] from the scenario seed.
struct RandomArrivals {
    int count = 0;
    double window_start = 0.0;
    double window_end = 0.0;
};

struct ScheduleSettings {
    double headway = 5.0;   // [s]
    double v_merge = 13.4;  // [m/s]
};

struct CbfSettings {
    bool longitudinal_enabled = false;
    LongitudinalCbfSpec longitudinal;
    bool lateral_enabled = false;
    LateralCbfSpec lateral;
};

/// Uncontrolled vehicle ahead of the first controlled one, driving a speed script.
struct LeadSettings {
    std::vector<SpeedScript::Knot> knots;  // first knot time is its control-zone entry
};

struct ScenarioConfig {
    std::string name = "scenario";
    RoadGeometry geometry;
    std::vector<VehicleSpec> vehicles;
    std::optional<RandomArrivals> random_arrivals;
    VehicleSpec vehicle_defaults;
    ScheduleSettings schedule;
    ControllerConfig controller;  // `model` is replaced per vehicle
    double dt_sim = 0.005;
    double duration = 60.0;
    double t_start = 0.0;
    CbfSettings cbf;
    std::optional<LeadSettings> lead;
    std::uint64_t seed = 1;
    double transient_window = 3.0;
    std::string output_dir = "out";

    /// Throws ConfigError with a field-level message.
    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError(m); };
        try {
            geometry.validate();
            controller.validate();
        } catch (const DomainError& e) {
            fail(e.what());
        }
        if (!(dt_sim > 0.0)) fail("dt_sim must be > 0");
        if (!(duration >= 0.0)) fail("duration must be >= 0");
        const double ratio = dt_sim / controller.control_step;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || ratio < 0.5)
            fail("dt_sim must be an integer multiple of controller.control_step");
        if (!(schedule.headway >= 0.0)) fail("schedule.headway must be >= 0");
        if (!(schedule.v_merge > 0.0)) fail("schedule.v_merge must be > 0");
        if (!(transient_window >= 0.0)) fail("transient_window must be >= 0");
        if (vehicles.empty() && !random_arrivals) fail("no vehicles configured");
        if (random_arrivals) {
            if (random_arrivals->count <= 0) fail("random_arrivals.count must be > 0");
            if (!(random_arrivals->window_end >= random_arrivals->window_start))
                fail("random_arrivals window must satisfy start <= end");
        }
        auto check_vehicle = [&](const VehicleSpec& v, const std::string& where) {
            try {
                v.params.validate();
            } catch (const DomainError& e) {
                fail(where + ": " + e.what());
            }
            if (!(v.predictor_mass_factor > 0.0)) fail(where + ".predictor_mass_factor must be > 0");
            if (!v.init.finite()) fail(where + ".init must be finite");
            if (!(v.init.v_lon >= controller.limits.v_min))
                fail(where + ".init.v_lon must be >= limits.v_min");
            if (!controller.limits.admissible(v.u0)) fail(where + ".u0 outside input limits");
        };
        check_vehicle(vehicle_defaults, "vehicle_defaults");
        for (std::size_t i = 0; i < vehicles.size(); ++i)
            check_vehicle(vehicles[i], "vehicles[" + std::to_string(i) + "]");
        try {
            cbf.longitudinal.validate();
            cbf.lateral.validate();
        } catch (const DomainError& e) {
            fail(std::string("cbf: ") + e.what());
        }
        if (cbf.lateral_enabled && geometry.kind != RoadKind::straight)
            fail("cbf.lateral requires a straight road");
        if (lead) {
            if (geometry.kind != RoadKind::straight) fail("lead requires a straight road");
            try {
                SpeedScript s(lead->knots);
            } catch (const DomainError& e) {
                fail(std::string("lead: ") + e.what());
            }
            for (const auto& k : lead->knots)
                if (!(k.v > 0.0)) fail("lead knot speeds must be > 0");
        }
    }
};

/// Snaps a time onto the plant grid anchored at t_start.
inline double snap_to_grid(double t, double t_start, double dt) {
    return t_start + std::round((t - t_start) / dt) * dt;
}

/// Explicit vehicles, or those drawn from the seeded arrival window; sorted by arrival.
inline std::vector<VehicleSpec> materialize_vehicles(const ScenarioConfig& cfg) {
    std::vector<VehicleSpec> out = cfg.vehicles;
    if (cfg.random_arrivals) {
        std::mt19937_64 rng(cfg.seed);
        const RandomArrivals& ra = *cfg.random_arrivals;
        for (int i = 0; i < ra.count; ++i) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            VehicleSpec v = cfg.vehicle_defaults;
            v.t_arrival = ra.window_start + u * (ra.window_end - ra.window_start);
            out.push_back(v);
        }
    }
    for (VehicleSpec& v : out) v.t_arrival = snap_to_grid(v.t_arrival, cfg.t_start, cfg.dt_sim);
    std::stable_sort(out.begin(), out.end(), [](const VehicleSpec& a, const VehicleSpec& b) {
        return a.t_arrival < b.t_arrival;
    });
    return out;
}

/// Per-vehicle plan derived from the configuration.
struct VehiclePlan {
    VehicleSpec spec;
    ScheduleEntry schedule;
    SpeedProfile profile;
    ControllerConfig controller;
};

inline std::vector<VehiclePlan> plan_vehicles(const ScenarioConfig& cfg) {
    const std::vector<VehicleSpec> specs = materialize_vehicles(cfg);
    std::vector<Arrival> arrivals;
    arrivals.reserve(specs.size());
    for (const VehicleSpec& v : specs) arrivals.push_back({v.t_arrival, v.init.v_lon});
    const Schedule schedule =
        schedule_merging(arrivals, cfg.geometry, cfg.schedule.headway, cfg.schedule.v_merge);
    std::vector<VehiclePlan> plans;
    plans.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        VehiclePlan p;
        p.spec = specs[i];
        p.schedule = schedule[i];
        p.profile = vehicle_profile(schedule[i], cfg.geometry);
        p.controller = cfg.controller;
        p.controller.model = specs[i].params.with_mass_factor(specs[i].predictor_mass_factor);
        plans.push_back(std::move(p));
    }
    return plans;
}

namespace detail {

struct VehicleRuntime {
    VehiclePlan plan;
    int id = 0;
    bool active = false;
    bool exited = false;
    VehicleState x;
    ControllerState ctrl;
};

inline Vec2 road_point(double s, const RoadGeometry& g) {
    const RoadPose p = lane_point(s, g);
    return {p.z1, p.z2};
}

}  // namespace detail

/**
 * Runs the closed loop on a uniform plant grid. Each step: reference lookup
 * at t + T, controller update, optional longitudinal then lateral safety
 * filtering, then one Euler step of every plant with the filtered input.
 */
inline SimTrace run_simulation(const ScenarioConfig& cfg) {
    cfg.validate();
    const RoadGeometry& geom = cfg.geometry;
    const Limits& lim = cfg.controller.limits;
    const double dt = cfg.dt_sim;
    const double eps_t = 1e-9 * std::max(1.0, dt);

    std::vector<detail::VehicleRuntime> fleet;
    {
        int id = 1;
        for (VehiclePlan& p : plan_vehicles(cfg)) {
            detail::VehicleRuntime v;
            v.plan = std::move(p);
            v.id = id++;
            v.x = v.plan.spec.init;
            v.ctrl.u = v.plan.spec.u0;
            fleet.push_back(std::move(v));
        }
    }
    std::optional<SpeedScript> lead;
    if (cfg.lead) lead.emplace(cfg.lead->knots);

    SimTrace trace;
    trace.dt = dt;
    trace.geometry = geom;
    const long steps = step_count(cfg.duration, dt);

    for (long n = 0; n < steps; ++n) {
        const double t = cfg.t_start + static_cast<double>(n) * dt;

        // Snapshot of the vehicle ahead of each controlled vehicle.
        std::optional<LeadMotion> ahead;
        if (lead && t >= cfg.lead->knots.front().t - eps_t) {
            LeadMotion m;
            m.position = {lead->distance(t), 0.0};
            m.velocity = {lead->speed(t), 0.0};
            m.accel = {lead->accel(t), 0.0};
            ahead = m;

            TraceRecord rec;
            rec.t = t;
            rec.vehicle_id = 0;
            rec.state = {m.position.x(), 0.0, m.velocity.x(), 0.0, 0.0, 0.0};
            rec.nominal = rec.applied = {m.accel.x(), 0.0};
            rec.r1 = m.position.x();
            rec.yhat1 = lead->distance(t + cfg.controller.horizon);
            rec.flags = kScripted;
            trace.records.push_back(rec);
        }

        std::vector<std::optional<LeadMotion>> leaders(fleet.size());
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            auto& v = fleet[i];
            if (!v.active && t >= v.plan.spec.t_arrival - eps_t) v.active = true;
            leaders[i] = ahead;
            if (v.active && !v.exited) {
                LeadMotion m;
                m.position = {v.x.z1, v.x.z2};
                m.velocity = world_velocity(v.x);
                const ControlInput u = v.ctrl.u;
                const AffineAcceleration a = world_acceleration(v.x, u.steer, v.plan.spec.params,
                                                                lim.v_min);
                m.accel = a.at(u.accel);
                ahead = m;
            } else if (v.exited) {
                ahead.reset();
            }
        }

        std::vector<std::pair<std::size_t, ControlInput>> to_step;
        for (std::size_t i = 0; i < fleet.size(); ++i) {
            auto& v = fleet[i];
            if (!v.active) continue;
            const VehiclePlan& plan = v.plan;
            const SpeedProfile& profile = plan.profile;
            // Targets past the merging zone continue along the lane at merge speed.
            auto reference = [&](double tau) {
                return detail::road_point(profile.position_extended(tau), geom);
            };

            if (!v.exited && t >= profile.end() - eps_t) v.exited = true;

            TraceRecord rec;
            rec.t = t;
            rec.vehicle_id = v.id;
            rec.state = v.x;
            const Vec2 r_now = reference(t);
            rec.r1 = r_now.x();
            rec.r2 = r_now.y();
            if (profile.position(t) >= geom.control_length - 1e-9) rec.flags |= kInMergingZone;

            if (v.exited) {
                rec.flags |= kExited;
                rec.yhat1 = rec.r1;
                rec.yhat2 = rec.r2;
                trace.records.push_back(rec);
                continue;
            }

            ControllerUpdate upd;
            try {
                upd = controller_update(v.ctrl, v.x, reference, t, dt, plan.controller);
                v.ctrl = upd.state;
                if (upd.saturated) rec.flags |= kSaturated;
            } catch (const SingularJacobianError&) {
                rec.flags |= kSingularJacobian;
                upd.state = v.ctrl;
                upd.predicted = predict_output(v.x, v.ctrl.u, plan.controller);
            } catch (const DegenerateSpeedError& e) {
                throw SimulationAbort(std::string("vehicle ") + std::to_string(v.id) + ": " +
                                          e.what(),
                                      n);
            }
            rec.yhat1 = upd.predicted.x();
            rec.yhat2 = upd.predicted.y();
            rec.nominal = v.ctrl.u;

            ControlInput applied = v.ctrl.u;
            if (leaders[i]) {
                const LongitudinalCondition lc = longitudinal_condition(
                    v.x, applied.steer, *leaders[i], cfg.cbf.longitudinal, plan.spec.params,
                    lim.v_min);
                rec.h_long = lc.h;
                if (cfg.cbf.longitudinal_enabled) {
                    const FilterResult f =
                        longitudinal_filter(applied.accel, v.x, applied.steer, *leaders[i],
                                            cfg.cbf.longitudinal, plan.spec.params, lim);
                    applied.accel = f.value;
                    if (f.modified) rec.flags |= kLongFilterActive;
                    if (f.infeasible) rec.flags |= kLongInfeasible;
                }
            }
            if (geom.kind == RoadKind::straight) {
                const LateralMotion lm = lateral_motion(v.x);
                rec.h_lat = lateral_barrier(lm.y, lm.y_dot, cfg.cbf.lateral);
                if (cfg.cbf.lateral_enabled) {
                    const FilterResult f = lateral_filter(applied.steer, v.x, applied.accel,
                                                          cfg.cbf.lateral, plan.spec.params, lim);
                    applied.steer = f.value;
                    if (f.modified) rec.flags |= kLatFilterActive;
                    if (f.infeasible) rec.flags |= kLatInfeasible;
                }
            }
            rec.applied = applied;
            trace.records.push_back(rec);
            to_step.emplace_back(i, applied);
        }

        // Plants advance synchronously after every input has been decided.
        for (std::size_t k = 0; k < to_step.size(); ++k) {
            auto& v = fleet[to_step[k].first];
            EulerStep s;
            try {
                s = euler_step(v.x, to_step[k].second, v.plan.spec.params, dt, lim.v_min);
            } catch (const DegenerateSpeedError& e) {
                throw SimulationAbort(std::string("vehicle ") + std::to_string(v.id) + ": " +
                                          e.what(),
                                      n);
            }
            if (!s.state.finite())
                throw SimulationAbort("vehicle " + std::to_string(v.id) + ": non-finite state", n);
            v.x = s.state;
            if (s.speed_clamped) {
                // flag the record that produced this step
                for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
                    if (it->vehicle_id == v.id) {
                        it->flags |= kSpeedClamped;
                        break;
                    }
                }
            }
        }
    }
    return trace;
}

}  // namespace nrflow

#endif  // NRFLOW_SCENARIO_HPP
