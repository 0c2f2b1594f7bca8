#ifndef NRFLOW_PLOTS_HPP
#define NRFLOW_PLOTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nrflow/errors.hpp"
#include "nrflow/metrics.hpp"
#include "nrflow/trace.hpp"

namespace nrflow {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Roughly five "nice" tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (span / step <= 6.0) break;
    }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
        out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return colors[i % std::size(colors)];
}

}  // namespace detail

/// Standalone SVG line chart; empty series give labelled empty axes.
inline std::string render_svg(const LinePlot& plot) {
    constexpr double W = 720, H = 440, L = 80, R = 150, T = 40, B = 60;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : plot.series)
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmin <= xmax)) xmin = 0.0, xmax = 1.0;
    if (!(ymin <= ymax)) ymin = 0.0, ymax = 1.0;
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12 * std::max(1.0, std::abs(ymax))) {
        const double pad = std::max(1e-3, 0.05 * std::abs(ymax));
        ymin -= pad;
        ymax += pad;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return T + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };
    using detail::fmt;

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
           fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           detail::escape_xml(plot.title) + "</text>\n";
    svg += "<rect x=\"" + fmt(L) + "\" y=\"" + fmt(T) + "\" width=\"" + fmt(pw) + "\" height=\"" +
           fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double x : detail::ticks(xmin, xmax)) {
        svg += "<line x1=\"" + fmt(px(x)) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(px(x)) +
               "\" y2=\"" + fmt(T + ph + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(T + ph + 20) +
               "\" text-anchor=\"middle\" font-size=\"12\">" + fmt(x, "%g") + "</text>\n";
    }
    for (double y : detail::ticks(ymin, ymax)) {
        svg += "<line x1=\"" + fmt(L - 5) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(L) +
               "\" y2=\"" + fmt(py(y)) + "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(L + pw) +
               "\" y2=\"" + fmt(py(y)) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + fmt(L - 8) + "\" y=\"" + fmt(py(y) + 4) +
               "\" text-anchor=\"end\" font-size=\"12\">" + fmt(y, "%g") + "</text>\n";
    }
    svg += "<text x=\"" + fmt(L + pw / 2) + "\" y=\"" + fmt(H - 15) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + detail::escape_xml(plot.x_label) +
           "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(T + ph / 2) + "\" text-anchor=\"middle\" font-size=\"13\" " +
           "transform=\"rotate(-90 18 " + fmt(T + ph / 2) + ")\">" +
           detail::escape_xml(plot.y_label) + "</text>\n";

    for (std::size_t i = 0; i < plot.series.size(); ++i) {
        const Series& s = plot.series[i];
        std::string pts;
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            pts += fmt(px(x), "%.2f") + "," + fmt(py(y), "%.2f") + " ";
        }
        if (!pts.empty())
            svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" +
                   std::string(detail::palette(i)) + "\" points=\"" + pts + "\"/>\n";
        const double ly = T + 14 + 18 * static_cast<double>(i);
        svg += "<line x1=\"" + fmt(L + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(L + pw + 32) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + detail::palette(i) +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(L + pw + 38) + "\" y=\"" + fmt(ly + 4) + "\" font-size=\"12\">" +
               detail::escape_xml(s.label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

inline void write_svg(const LinePlot& plot, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << render_svg(plot);
    if (!os) throw Error("write failed: " + path.string());
}

/// Keeps at most `limit` evenly spaced points (always the last one).
inline std::vector<std::pair<double, double>> decimate(std::vector<std::pair<double, double>> pts,
                                                       std::size_t limit = 2000) {
    if (pts.size() <= limit) return pts;
    std::vector<std::pair<double, double>> out;
    const double stride = static_cast<double>(pts.size() - 1) / static_cast<double>(limit - 1);
    for (std::size_t i = 0; i < limit; ++i)
        out.push_back(pts[static_cast<std::size_t>(std::llround(stride * static_cast<double>(i)))]);
    return out;
}

/// The standard figure set for a trace, keyed by output file name.
inline std::vector<std::pair<std::string, LinePlot>> trace_figures(const SimTrace& trace) {
    const RoadGeometry geom = infer_geometry(trace);
    std::vector<std::pair<std::string, LinePlot>> figs = {
        {"distance_traveled.svg", {"Distance traveled", "time [s]", "arc length [m]", {}}},
        {"tracking_error.svg", {"Tracking error", "time [s]", "|r(t) - y(t)| [m]", {}}},
        {"longitudinal_accel.svg",
         {"Longitudinal acceleration", "time [s]", "a_l [m/s^2]", {}}},
        {"speeds.svg", {"Longitudinal speed", "time [s]", "v_l [m/s]", {}}},
        {"inter_vehicle_distance.svg",
         {"Distance to vehicle ahead", "time [s]", "distance [m]", {}}},
        {"lateral_deviation.svg",
         {"Deviation from lane center", "time [s]", "lateral offset [m]", {}}},
        {"steering_angle.svg", {"Steering angle", "time [s]", "delta_f [rad]", {}}},
    };
    const auto by_vehicle = records_by_vehicle(trace);
    for (const auto& [id, recs] : by_vehicle) {
        const std::string label = recs.front()->has(kScripted) ? "lead" : "car " + std::to_string(id);
        const bool controlled = !recs.front()->has(kScripted);
        std::vector<std::pair<double, double>> s, err, acc, spd, lat, steer;
        for (const TraceRecord* r : recs) {
            const LaneCoordinates lc = lane_coordinates(r->state.z1, r->state.z2, geom);
            s.emplace_back(r->t, lc.s);
            spd.emplace_back(r->t, r->state.v_lon);
            if (!controlled) continue;
            err.emplace_back(r->t, r->tracking_error());
            if (r->has(kExited)) continue;
            acc.emplace_back(r->t, r->applied.accel);
            lat.emplace_back(r->t, lc.offset);
            steer.emplace_back(r->t, r->applied.steer);
        }
        figs[0].second.series.push_back({label, decimate(std::move(s))});
        figs[3].second.series.push_back({label, decimate(std::move(spd))});
        if (controlled) {
            figs[1].second.series.push_back({label, decimate(std::move(err))});
            figs[2].second.series.push_back({label, decimate(std::move(acc))});
            figs[5].second.series.push_back({label, decimate(std::move(lat))});
            figs[6].second.series.push_back({label, decimate(std::move(steer))});
        }
    }
    // Gap to the previous active vehicle at each instant, attributed to the follower.
    std::map<int, std::vector<std::pair<double, double>>> gaps;
    const auto& recs = trace.records;
    for (std::size_t i = 0; i < recs.size();) {
        std::size_t j = i;
        while (j < recs.size() && recs[j].t == recs[i].t) ++j;
        const TraceRecord* prev = nullptr;
        for (std::size_t k = i; k < j; ++k) {
            if (recs[k].has(kExited)) {
                prev = nullptr;
                continue;
            }
            if (prev)
                gaps[recs[k].vehicle_id].emplace_back(
                    recs[k].t, std::hypot(prev->state.z1 - recs[k].state.z1,
                                          prev->state.z2 - recs[k].state.z2));
            prev = &recs[k];
        }
        i = j;
    }
    for (auto& [id, pts] : gaps)
        figs[4].second.series.push_back({"car " + std::to_string(id), decimate(std::move(pts))});
    return figs;
}

inline void write_trace_figures(const SimTrace& trace, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, plot] : trace_figures(trace)) write_svg(plot, dir / name);
}

}  // namespace nrflow

#endif  // NRFLOW_PLOTS_HPP
