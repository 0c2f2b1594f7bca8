#ifndef NRFLOW_TRACE_HPP
#define NRFLOW_TRACE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nrflow/errors.hpp"
#include "nrflow/planner.hpp"
#include "nrflow/vehicle_dynamics.hpp"

namespace nrflow {

/// Per-record event bits, written as an integer in the `flags` column.
enum TraceFlag : std::uint32_t {
    kSaturated = 1u << 0,         // controller input clamped into the admissible box
    kLongFilterActive = 1u << 1,  // longitudinal filter changed a_l
    kLongInfeasible = 1u << 2,
    kLatFilterActive = 1u << 3,  // lateral filter changed delta_f
    kLatInfeasible = 1u << 4,
    kSpeedClamped = 1u << 5,     // plant v_lon floored at v_min
    kSingularJacobian = 1u << 6, // previous input held for this step
    kInMergingZone = 1u << 7,    // reference is past the control zone
    kExited = 1u << 8,           // vehicle left the merging zone; state held
    kScripted = 1u << 9,         // vehicle follows a speed script, not controlled
};

struct TraceRecord {
    double t = 0.0;
    int vehicle_id = 0;
    VehicleState state;
    ControlInput nominal;
    ControlInput applied;
    double r1 = 0.0, r2 = 0.0;
    double yhat1 = 0.0, yhat2 = 0.0;
    double h_long = std::numeric_limits<double>::quiet_NaN();
    double h_lat = std::numeric_limits<double>::quiet_NaN();
    std::uint32_t flags = 0;

    bool has(TraceFlag f) const { return (flags & f) != 0; }
    double tracking_error() const { return std::hypot(r1 - state.z1, r2 - state.z2); }
};

struct SimTrace {
    double dt = 0.0;
    std::optional<RoadGeometry> geometry;
    std::vector<TraceRecord> records;

    bool empty() const { return records.empty(); }
};

inline constexpr const char* kTraceHeader =
    "t,vehicle_id,z1,z2,v_l,v_n,psi,psi_dot,a_l_nom,delta_f_nom,a_l,delta_f,r1,r2,yhat1,yhat2,"
    "h_long,h_lat,flags";

namespace detail {

inline void put_number(std::string& out, double v) {
    char buf[40];
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += buf;
}

}  // namespace detail

inline std::string format_record(const TraceRecord& r) {
    std::string line;
    line.reserve(256);
    const double cols[] = {r.t,           r.state.z1,     r.state.z2,      r.state.v_lon,
                           r.state.v_lat, r.state.psi,    r.state.psi_dot, r.nominal.accel,
                           r.nominal.steer, r.applied.accel, r.applied.steer, r.r1,
                           r.r2,          r.yhat1,        r.yhat2,         r.h_long,
                           r.h_lat};
    detail::put_number(line, cols[0]);
    line += ',';
    line += std::to_string(r.vehicle_id);
    for (std::size_t i = 1; i < std::size(cols); ++i) {
        line += ',';
        detail::put_number(line, cols[i]);
    }
    line += ',';
    line += std::to_string(r.flags);
    return line;
}

inline void write_trace_csv(const SimTrace& trace, std::ostream& os) {
    os << kTraceHeader << '\n';
    for (const TraceRecord& r : trace.records) os << format_record(r) << '\n';
}

inline void write_trace_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_trace_csv(trace, os);
    if (!os) throw Error("write failed: " + path);
}

inline SimTrace read_trace_csv(std::istream& is, const std::string& origin = "<stream>") {
    std::string line;
    if (!std::getline(is, line)) throw Error(origin + ": empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw Error(origin + ": unexpected trace header");

    SimTrace trace;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 19) {
            throw Error(origin + ":" + std::to_string(lineno) + ": expected 19 columns");
        }
        auto num = [&](std::size_t i) {
            try {
                return std::stod(cells[i]);
            } catch (const std::exception&) {
                throw Error(origin + ":" + std::to_string(lineno) + ": bad number '" + cells[i] +
                            "'");
            }
        };
        TraceRecord r;
        r.t = num(0);
        r.vehicle_id = static_cast<int>(num(1));
        r.state = {num(2), num(3), num(4), num(5), num(6), num(7)};
        r.nominal = {num(8), num(9)};
        r.applied = {num(10), num(11)};
        r.r1 = num(12);
        r.r2 = num(13);
        r.yhat1 = num(14);
        r.yhat2 = num(15);
        r.h_long = num(16);
        r.h_lat = num(17);
        r.flags = static_cast<std::uint32_t>(num(18));
        trace.records.push_back(r);
    }
    if (trace.records.size() >= 2) {
        for (std::size_t i = 1; i < trace.records.size(); ++i) {
            if (trace.records[i].t > trace.records[0].t) {
                trace.dt = trace.records[i].t - trace.records[0].t;
                break;
            }
        }
    }
    return trace;
}

inline SimTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    return read_trace_csv(is, path);
}

/**
 * Recovers the road from the reference columns: a straight road when every
 * reference point lies on z2 = 0, otherwise the left-turning circle through
 * the origin tangent to the z1 axis that fits the points.
 */
inline RoadGeometry infer_geometry(const SimTrace& trace) {
    if (trace.geometry) return *trace.geometry;
    RoadGeometry g;
    std::vector<double> radii;
    double max_len = 0.0;
    for (const TraceRecord& r : trace.records) {
        if (r.has(kScripted)) continue;
        if (std::abs(r.r2) > 1e-3) radii.push_back((r.r1 * r.r1 + r.r2 * r.r2) / (2.0 * r.r2));
        max_len = std::max(max_len, std::hypot(r.r1, r.r2));
    }
    if (!radii.empty()) {
        std::nth_element(radii.begin(), radii.begin() + radii.size() / 2, radii.end());
        g.kind = RoadKind::arc;
        g.radius = radii[radii.size() / 2];
    }
    // Lengths are not recoverable from positions alone; use generous bounds.
    g.control_length = std::max(1.0, 2.0 * max_len + 1.0);
    g.merge_length = 1.0;
    if (g.kind == RoadKind::arc)
        g.control_length = std::numbers::pi * g.radius;
    return g;
}

}  // namespace nrflow

#endif  // NRFLOW_TRACE_HPP
