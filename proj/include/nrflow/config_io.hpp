#ifndef NRFLOW_CONFIG_IO_HPP
#define NRFLOW_CONFIG_IO_HPP

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nrflow/errors.hpp"
#include "nrflow/scenario.hpp"

namespace nrflow {

using json = nlohmann::json;

namespace detail {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    /// Rejects keys not listed.
    void only(std::initializer_list<const char*> keys) const {
        for (const auto& [k, _] : j_.items()) {
            bool known = false;
            for (const char* allowed : keys) known = known || k == allowed;
            if (!known) throw ConfigError(path_ + ": unknown key '" + k + "'");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    void number(const char* key, double& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
        out = v.get<double>();
    }
    void boolean(const char* key, bool& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true/false");
        out = v.get<bool>();
    }
    void string(const char* key, std::string& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
        out = v.get<std::string>();
    }
    template <class Int>
    void integer(const char* key, Int& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
        out = v.get<Int>();
    }
    Reader child(const char* key) const { return Reader(j_.at(key), field(key)); }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string field(const char* key) const { return path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
};

inline void read_state(const Reader& r, VehicleState& s) {
    r.only({"z1", "z2", "v_l", "v_n", "psi", "psi_dot"});
    r.number("z1", s.z1);
    r.number("z2", s.z2);
    r.number("v_l", s.v_lon);
    r.number("v_n", s.v_lat);
    r.number("psi", s.psi);
    r.number("psi_dot", s.psi_dot);
}

inline void read_params(const Reader& r, VehicleParams& p) {
    r.only({"m", "I_z", "l_f", "l_r", "C_af", "C_ar"});
    r.number("m", p.mass);
    r.number("I_z", p.yaw_inertia);
    r.number("l_f", p.lf);
    r.number("l_r", p.lr);
    r.number("C_af", p.c_front);
    r.number("C_ar", p.c_rear);
}

inline void read_vehicle(const Reader& r, VehicleSpec& v) {
    r.only({"t_arrival", "init", "params", "predictor_mass_factor", "u0"});
    r.number("t_arrival", v.t_arrival);
    if (r.has("init")) read_state(r.child("init"), v.init);
    if (r.has("params")) read_params(r.child("params"), v.params);
    r.number("predictor_mass_factor", v.predictor_mass_factor);
    if (r.has("u0")) {
        const Reader u = r.child("u0");
        u.only({"a_l", "delta_f"});
        u.number("a_l", v.u0.accel);
        u.number("delta_f", v.u0.steer);
    }
}

inline json state_json(const VehicleState& s) {
    return {{"z1", s.z1}, {"z2", s.z2},   {"v_l", s.v_lon},
            {"v_n", s.v_lat}, {"psi", s.psi}, {"psi_dot", s.psi_dot}};
}

inline json params_json(const VehicleParams& p) {
    return {{"m", p.mass}, {"I_z", p.yaw_inertia}, {"l_f", p.lf},
            {"l_r", p.lr}, {"C_af", p.c_front},    {"C_ar", p.c_rear}};
}

inline json vehicle_json(const VehicleSpec& v, bool with_time) {
    json j = {{"init", state_json(v.init)},
              {"params", params_json(v.params)},
              {"predictor_mass_factor", v.predictor_mass_factor},
              {"u0", {{"a_l", v.u0.accel}, {"delta_f", v.u0.steer}}}};
    if (with_time) j["t_arrival"] = v.t_arrival;
    return j;
}

}  // namespace detail

/// Parses a scenario from JSON text; unknown keys are rejected.
inline ScenarioConfig parse_config(const json& j) {
    using detail::Reader;
    ScenarioConfig cfg;
    const Reader root(j, "config");
    root.only({"name", "geometry", "vehicles", "random_arrivals", "vehicle_defaults", "schedule",
               "controller", "limits", "dt_sim", "duration", "t_start", "cbf", "lead", "seed",
               "transient_window", "output_dir"});
    root.string("name", cfg.name);

    if (!root.has("geometry")) throw ConfigError("config.geometry: required");
    {
        const Reader g = root.child("geometry");
        g.only({"kind", "L_ctrl", "L_merge", "R", "arc_angle"});
        std::string kind = "straight";
        g.string("kind", kind);
        if (kind == "straight")
            cfg.geometry.kind = RoadKind::straight;
        else if (kind == "arc")
            cfg.geometry.kind = RoadKind::arc;
        else
            throw ConfigError("config.geometry.kind: expected 'straight' or 'arc'");
        g.number("L_ctrl", cfg.geometry.control_length);
        g.number("L_merge", cfg.geometry.merge_length);
        g.number("R", cfg.geometry.radius);
        if (g.has("arc_angle")) {
            if (g.has("R")) throw ConfigError("config.geometry: give either R or arc_angle");
            double angle = 0.0;
            g.number("arc_angle", angle);
            if (!(angle > 0.0)) throw ConfigError("config.geometry.arc_angle: must be > 0");
            cfg.geometry.radius = cfg.geometry.length() / angle;
        }
    }

    if (root.has("vehicle_defaults"))
        detail::read_vehicle(root.child("vehicle_defaults"), cfg.vehicle_defaults);
    if (root.has("vehicles")) {
        const json& arr = root.raw("vehicles");
        if (!arr.is_array()) throw ConfigError("config.vehicles: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            VehicleSpec v = cfg.vehicle_defaults;
            detail::read_vehicle(Reader(arr[i], "config.vehicles[" + std::to_string(i) + "]"), v);
            cfg.vehicles.push_back(v);
        }
    }
    if (root.has("random_arrivals")) {
        const Reader r = root.child("random_arrivals");
        r.only({"count", "window_start", "window_end"});
        RandomArrivals ra;
        r.integer("count", ra.count);
        r.number("window_start", ra.window_start);
        r.number("window_end", ra.window_end);
        cfg.random_arrivals = ra;
    }
    if (root.has("schedule")) {
        const Reader r = root.child("schedule");
        r.only({"headway", "v_merge"});
        r.number("headway", cfg.schedule.headway);
        r.number("v_merge", cfg.schedule.v_merge);
    }
    if (root.has("controller")) {
        const Reader r = root.child("controller");
        r.only({"alpha", "T", "delta_t", "dt_ctrl", "jac_eps_a_l", "jac_eps_delta_f", "cond_max"});
        r.number("alpha", cfg.controller.alpha);
        r.number("T", cfg.controller.horizon);
        r.number("delta_t", cfg.controller.predictor_step);
        r.number("dt_ctrl", cfg.controller.control_step);
        r.number("jac_eps_a_l", cfg.controller.jac_eps_accel);
        r.number("jac_eps_delta_f", cfg.controller.jac_eps_steer);
        r.number("cond_max", cfg.controller.cond_max);
    }
    if (root.has("limits")) {
        const Reader r = root.child("limits");
        r.only({"a_min", "a_max", "delta_max", "v_min"});
        r.number("a_min", cfg.controller.limits.a_min);
        r.number("a_max", cfg.controller.limits.a_max);
        r.number("delta_max", cfg.controller.limits.steer_max);
        r.number("v_min", cfg.controller.limits.v_min);
    }
    root.number("dt_sim", cfg.dt_sim);
    root.number("duration", cfg.duration);
    root.number("t_start", cfg.t_start);
    if (root.has("cbf")) {
        const Reader c = root.child("cbf");
        c.only({"longitudinal", "lateral"});
        if (c.has("longitudinal")) {
            const Reader r = c.child("longitudinal");
            r.only({"enabled", "d0", "a_bar"});
            r.boolean("enabled", cfg.cbf.longitudinal_enabled);
            r.number("d0", cfg.cbf.longitudinal.d0);
            r.number("a_bar", cfg.cbf.longitudinal.a_bar);
        }
        if (c.has("lateral")) {
            const Reader r = c.child("lateral");
            r.only({"enabled", "y_max", "a_tilde", "gamma"});
            r.boolean("enabled", cfg.cbf.lateral_enabled);
            r.number("y_max", cfg.cbf.lateral.y_max);
            r.number("a_tilde", cfg.cbf.lateral.a_tilde);
            r.number("gamma", cfg.cbf.lateral.gamma);
        }
    }
    if (root.has("lead")) {
        const Reader r = root.child("lead");
        r.only({"speed_knots"});
        const json& knots = r.raw("speed_knots");
        if (!knots.is_array()) throw ConfigError("config.lead.speed_knots: expected an array");
        LeadSettings lead;
        for (const json& k : knots) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
                throw ConfigError("config.lead.speed_knots: entries must be [t, v] pairs");
            lead.knots.push_back({k[0].get<double>(), k[1].get<double>()});
        }
        cfg.lead = lead;
    }
    root.integer("seed", cfg.seed);
    root.number("transient_window", cfg.transient_window);
    root.string("output_dir", cfg.output_dir);
    return cfg;
}

/// Loads, parses and validates a scenario file.
inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    ScenarioConfig cfg = parse_config(j);
    if (!(cfg.duration > 0.0)) throw ConfigError("config.duration: must be > 0");
    cfg.validate();
    return cfg;
}

/// Fully resolved configuration, including materialized vehicles.
inline json resolved_json(const ScenarioConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    json g = {{"kind", cfg.geometry.kind == RoadKind::arc ? "arc" : "straight"},
              {"L_ctrl", cfg.geometry.control_length},
              {"L_merge", cfg.geometry.merge_length}};
    if (cfg.geometry.kind == RoadKind::arc) g["R"] = cfg.geometry.radius;
    j["geometry"] = g;
    json vehicles = json::array();
    for (const VehicleSpec& v : materialize_vehicles(cfg))
        vehicles.push_back(detail::vehicle_json(v, true));
    j["vehicles"] = vehicles;
    j["schedule"] = {{"headway", cfg.schedule.headway}, {"v_merge", cfg.schedule.v_merge}};
    const ControllerConfig& c = cfg.controller;
    j["controller"] = {{"alpha", c.alpha},
                       {"T", c.horizon},
                       {"delta_t", c.predictor_step},
                       {"dt_ctrl", c.control_step},
                       {"jac_eps_a_l", c.jac_eps_accel},
                       {"jac_eps_delta_f", c.jac_eps_steer},
                       {"cond_max", c.cond_max}};
    j["limits"] = {{"a_min", c.limits.a_min},
                   {"a_max", c.limits.a_max},
                   {"delta_max", c.limits.steer_max},
                   {"v_min", c.limits.v_min}};
    j["dt_sim"] = cfg.dt_sim;
    j["duration"] = cfg.duration;
    j["t_start"] = cfg.t_start;
    j["cbf"] = {{"longitudinal",
                 {{"enabled", cfg.cbf.longitudinal_enabled},
                  {"d0", cfg.cbf.longitudinal.d0},
                  {"a_bar", cfg.cbf.longitudinal.a_bar}}},
                {"lateral",
                 {{"enabled", cfg.cbf.lateral_enabled},
                  {"y_max", cfg.cbf.lateral.y_max},
                  {"a_tilde", cfg.cbf.lateral.a_tilde},
                  {"gamma", cfg.cbf.lateral.gamma}}}};
    if (cfg.lead) {
        json knots = json::array();
        for (const auto& k : cfg.lead->knots) knots.push_back({k.t, k.v});
        j["lead"] = {{"speed_knots", knots}};
    }
    j["seed"] = cfg.seed;
    j["transient_window"] = cfg.transient_window;
    j["output_dir"] = cfg.output_dir;
    return j;
}

}  // namespace nrflow

#endif  // NRFLOW_CONFIG_IO_HPP
