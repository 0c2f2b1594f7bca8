#ifndef NRFLOW_OUTPUTS_HPP
#define NRFLOW_OUTPUTS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nrflow/errors.hpp"
#include "nrflow/metrics.hpp"
#include "nrflow/plots.hpp"
#include "nrflow/trace.hpp"

namespace nrflow {

inline nlohmann::json metrics_json(const Metrics& m) {
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json vehicles = nlohmann::json::array();
    for (const VehicleMetrics& v : m.vehicles) {
        vehicles.push_back({{"vehicle_id", v.vehicle_id},
                            {"t_arrival", v.t_arrival},
                            {"transient_error", v.transient_error},
                            {"steady_state_error", v.steady_state_error},
                            {"max_abs_a_l", v.max_abs_accel},
                            {"t_merge_entry", num(v.t_merge_entry)},
                            {"merge_entry_abs_a_l", num(v.merge_entry_accel)},
                            {"max_lateral_deviation", v.max_lateral_deviation}});
    }
    return {{"vehicles", vehicles},
            {"largest_steady_state_error", m.largest_steady_state_error()},
            {"largest_transient_error", m.largest_transient_error()},
            {"min_inter_vehicle_distance", num(m.min_inter_vehicle_distance)},
            {"max_lateral_deviation", m.max_lateral_deviation}};
}

struct OutputPaths {
    std::filesystem::path dir;
    std::string trace_csv = "trace.csv";
    std::string metrics_json = "metrics.json";
};

/// Writes the trace CSV, metrics JSON (when given) and the SVG figure set.
inline void emit_outputs(const SimTrace& trace, const Metrics* metrics, const OutputPaths& paths) {
    std::error_code ec;
    std::filesystem::create_directories(paths.dir, ec);
    if (ec) throw Error("cannot create " + paths.dir.string() + ": " + ec.message());
    write_trace_csv(trace, (paths.dir / paths.trace_csv).string());
    if (metrics) {
        const auto p = paths.dir / paths.metrics_json;
        std::ofstream os(p);
        if (!os) throw Error("cannot open " + p.string() + " for writing");
        os << metrics_json(*metrics).dump(2) << '\n';
    }
    write_trace_figures(trace, paths.dir);
}

}  // namespace nrflow

#endif  // NRFLOW_OUTPUTS_HPP
