#ifndef NRFLOW_METRICS_HPP
#define NRFLOW_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "nrflow/errors.hpp"
#include "nrflow/planner.hpp"
#include "nrflow/safety_cbf.hpp"
#include "nrflow/trace.hpp"

namespace nrflow {

struct VehicleMetrics {
    int vehicle_id = 0;
    double t_arrival = 0.0;
    double transient_error = 0.0;     // max |r - y| within the transient window [m]
    double steady_state_error = 0.0;  // max |r - y| after it, until exit [m]
    double max_abs_accel = 0.0;       // applied a_l [m/s^2]
    double merge_entry_accel = std::numeric_limits<double>::quiet_NaN();  // |a_l| at entry
    double t_merge_entry = std::numeric_limits<double>::quiet_NaN();
    double max_lateral_deviation = 0.0;  // [m]
};

struct Metrics {
    std::vector<VehicleMetrics> vehicles;  // controlled vehicles, by id
    double min_inter_vehicle_distance = std::numeric_limits<double>::infinity();
    double max_lateral_deviation = 0.0;

    double largest_steady_state_error() const {
        double m = 0.0;
        for (const auto& v : vehicles) m = std::max(m, v.steady_state_error);
        return m;
    }
    double largest_transient_error() const {
        double m = 0.0;
        for (const auto& v : vehicles) m = std::max(m, v.transient_error);
        return m;
    }
};

/// Records grouped per vehicle id, each in time order.
inline std::map<int, std::vector<const TraceRecord*>> records_by_vehicle(const SimTrace& trace) {
    std::map<int, std::vector<const TraceRecord*>> out;
    for (const TraceRecord& r : trace.records) out[r.vehicle_id].push_back(&r);
    return out;
}

/**
 * Summary statistics of a trace. Steady-state error is the largest
 * |r(t) - y(t)| over records later than arrival + transient_window,
 * excluding records after the vehicle has exited.
 */
inline Metrics compute_metrics(const SimTrace& trace, double transient_window) {
    if (trace.empty()) throw Error("compute_metrics: empty trace");
    const RoadGeometry geom = infer_geometry(trace);
    const double eps = 1e-9;
    Metrics m;

    for (const auto& [id, recs] : records_by_vehicle(trace)) {
        if (recs.front()->has(kScripted)) continue;
        VehicleMetrics vm;
        vm.vehicle_id = id;
        vm.t_arrival = recs.front()->t;
        for (const TraceRecord* r : recs) {
            if (r->has(kExited)) continue;
            const double err = r->tracking_error();
            if (r->t <= vm.t_arrival + transient_window + eps)
                vm.transient_error = std::max(vm.transient_error, err);
            else
                vm.steady_state_error = std::max(vm.steady_state_error, err);
            vm.max_abs_accel = std::max(vm.max_abs_accel, std::abs(r->applied.accel));
            if (std::isnan(vm.t_merge_entry) && r->has(kInMergingZone)) {
                vm.t_merge_entry = r->t;
                vm.merge_entry_accel = std::abs(r->applied.accel);
            }
            const double dev = std::abs(lane_coordinates(r->state.z1, r->state.z2, geom).offset);
            vm.max_lateral_deviation = std::max(vm.max_lateral_deviation, dev);
        }
        m.max_lateral_deviation = std::max(m.max_lateral_deviation, vm.max_lateral_deviation);
        m.vehicles.push_back(vm);
    }

    // Consecutive vehicles on the road at the same instant.
    std::size_t i = 0;
    const auto& recs = trace.records;
    while (i < recs.size()) {
        std::size_t j = i;
        while (j < recs.size() && recs[j].t == recs[i].t) ++j;
        const TraceRecord* prev = nullptr;
        for (std::size_t k = i; k < j; ++k) {
            const TraceRecord& r = recs[k];
            if (r.has(kExited)) {
                prev = nullptr;
                continue;
            }
            if (prev) {
                const double d = std::hypot(prev->state.z1 - r.state.z1, prev->state.z2 - r.state.z2);
                m.min_inter_vehicle_distance = std::min(m.min_inter_vehicle_distance, d);
            }
            prev = &r;
        }
        i = j;
    }
    return m;
}

}  // namespace nrflow

#endif  // NRFLOW_METRICS_HPP
