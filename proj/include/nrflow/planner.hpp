#ifndef NRFLOW_PLANNER_HPP
#define NRFLOW_PLANNER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <span>
#include <vector>

#include "nrflow/errors.hpp"

namespace nrflow {

enum class RoadKind { straight, arc };

/// Single-lane approach: a control zone followed by a merging zone.
struct RoadGeometry {
    RoadKind kind = RoadKind::straight;
    double control_length = 400.0;  // [m]
    double merge_length = 30.0;     // [m]
    double radius = 0.0;            // [m], arc only; the arc turns left

    double length() const { return control_length + merge_length; }

    void validate() const {
        if (!(control_length > 0.0)) throw DomainError("RoadGeometry.control_length must be > 0");
        if (!(merge_length > 0.0)) throw DomainError("RoadGeometry.merge_length must be > 0");
        if (kind == RoadKind::arc && !(radius > 0.0))
            throw DomainError("RoadGeometry.radius must be > 0 for an arc");
    }

    /// Circular arc whose total length subtends `angle` radians.
    static RoadGeometry arc_with_angle(double control_length, double merge_length, double angle) {
        RoadGeometry g;
        g.kind = RoadKind::arc;
        g.control_length = control_length;
        g.merge_length = merge_length;
        g.radius = g.length() / angle;
        return g;
    }
};

struct RoadPose {
    double z1 = 0.0;
    double z2 = 0.0;
    double heading = 0.0;
};

/// Maps arc length along the lane center to a world pose.
inline RoadPose arc_position(double s, const RoadGeometry& g) {
    const double tol = 1e-9 * std::max(1.0, g.length());
    if (!(s >= -tol && s <= g.length() + tol)) {
        std::ostringstream os;
        os << "arc length " << s << " outside [0, " << g.length() << "]";
        throw DomainError(os.str());
    }
    if (g.kind == RoadKind::straight) return {s, 0.0, 0.0};
    const double theta = s / g.radius;
    return {g.radius * std::sin(theta), g.radius * (1.0 - std::cos(theta)), theta};
}

/// As arc_position, but continues the lane geometry past its end (s >= 0).
inline RoadPose lane_point(double s, const RoadGeometry& g) {
    s = std::max(s, 0.0);
    if (g.kind == RoadKind::straight) return {s, 0.0, 0.0};
    const double theta = s / g.radius;
    return {g.radius * std::sin(theta), g.radius * (1.0 - std::cos(theta)), theta};
}

/// Lane coordinates of a world point: arc length and signed offset (left positive).
struct LaneCoordinates {
    double s = 0.0;
    double offset = 0.0;
};

inline LaneCoordinates lane_coordinates(double z1, double z2, const RoadGeometry& g) {
    if (g.kind == RoadKind::straight) return {z1, z2};
    const double dx = z1;
    const double dy = g.radius - z2;
    return {g.radius * std::atan2(dx, dy), g.radius - std::hypot(dx, dy)};
}

/// Polynomial piece s(t) = sum c[k] (t - t0)^k on [t0, t1].
struct PolySegment {
    double t0 = 0.0;
    double t1 = 0.0;
    std::array<double, 5> c{};

    double position(double t) const {
        const double x = t - t0;
        return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
    }
    double speed(double t) const {
        const double x = t - t0;
        return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
    }
    double accel(double t) const {
        const double x = t - t0;
        return (12.0 * c[4] * x + 6.0 * c[3]) * x + 2.0 * c[2];
    }
    double jerk(double t) const { return 24.0 * c[4] * (t - t0) + 6.0 * c[3]; }

    /// Smallest speed over the segment (endpoints and interior accel roots).
    double min_speed() const {
        double m = std::min(speed(t0), speed(t1));
        const double a = 12.0 * c[4], b = 6.0 * c[3], cc = 2.0 * c[2];
        auto consider = [&](double x) {
            if (x > 0.0 && x < t1 - t0) m = std::min(m, speed(t0 + x));
        };
        if (a == 0.0) {
            if (b != 0.0) consider(-cc / b);
        } else {
            const double disc = b * b - 4.0 * a * cc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                consider((-b + sq) / (2.0 * a));
                consider((-b - sq) / (2.0 * a));
            }
        }
        return m;
    }
};

/**
 * Minimum-energy double-integrator motion between fixed boundary states.
 *
 * Minimizing the integral of squared acceleration with position and speed
 * fixed at both ends yields a cubic in time.
 */
inline PolySegment min_energy_profile(double t0, double tf, double s0, double v0, double sf,
                                      double vf) {
    if (!(tf > t0)) throw DomainError("min_energy_profile: tf must be > t0");
    const double h = tf - t0;
    PolySegment seg;
    seg.t0 = t0;
    seg.t1 = tf;
    seg.c[0] = s0;
    seg.c[1] = v0;
    seg.c[2] = (3.0 * (sf - s0) - (2.0 * v0 + vf) * h) / (h * h);
    seg.c[3] = (-2.0 * (sf - s0) + (v0 + vf) * h) / (h * h * h);
    if (seg.min_speed() < 0.0) throw InfeasibleProfileError("cubic profile reverses direction");
    return seg;
}

/// As min_energy_profile, additionally pinning the terminal acceleration (quartic).
inline PolySegment min_energy_profile(double t0, double tf, double s0, double v0, double sf,
                                      double vf, double af) {
    if (!(tf > t0)) throw DomainError("min_energy_profile: tf must be > t0");
    const double h = tf - t0;
    const double gap = sf - s0 - v0 * h;
    const double dv = vf - v0;
    const double q4 = 0.5 * (af * h * h + 6.0 * gap - 4.0 * dv * h);
    const double q3 = dv * h - 2.0 * gap - 2.0 * q4;
    const double q2 = gap - q3 - q4;
    PolySegment seg;
    seg.t0 = t0;
    seg.t1 = tf;
    seg.c = {s0, v0, q2 / (h * h), q3 / (h * h * h), q4 / (h * h * h * h)};
    if (seg.min_speed() < 0.0) throw InfeasibleProfileError("quartic profile reverses direction");
    return seg;
}

/// Piecewise-polynomial arc length s(t); held constant outside its domain.
class SpeedProfile {
public:
    SpeedProfile() = default;
    explicit SpeedProfile(std::vector<PolySegment> segments) : segs_(std::move(segments)) {
        if (segs_.empty()) throw DomainError("SpeedProfile needs at least one segment");
        for (std::size_t i = 1; i < segs_.size(); ++i)
            if (segs_[i].t0 != segs_[i - 1].t1)
                throw DomainError("SpeedProfile segments must be contiguous");
    }

    double start() const { return segs_.front().t0; }
    double end() const { return segs_.back().t1; }
    std::span<const PolySegment> segments() const { return segs_; }

    double position(double t) const {
        if (t <= start()) return segs_.front().position(start());
        if (t >= end()) return segs_.back().position(end());
        return locate(t).position(t);
    }
    /// Beyond the end, continues the final segment instead of holding.
    double position_extended(double t) const {
        if (t <= start()) return segs_.front().position(start());
        if (t >= end()) return segs_.back().position(t);
        return locate(t).position(t);
    }
    double speed(double t) const {
        if (t < start() || t > end()) return 0.0;
        return locate(t).speed(t);
    }
    double accel(double t) const {
        if (t < start() || t > end()) return 0.0;
        return locate(t).accel(t);
    }

private:
    const PolySegment& locate(double t) const {
        auto it = std::upper_bound(segs_.begin(), segs_.end(), t,
                                   [](double v, const PolySegment& s) { return v < s.t1; });
        if (it == segs_.end()) return segs_.back();
        return *it;
    }

    std::vector<PolySegment> segs_;
};

struct Arrival {
    double t = 0.0;  // control-zone entry time [s]
    double v = 0.0;  // entry speed [m/s]
};

struct ScheduleEntry {
    double t_arrival = 0.0;
    double v_arrival = 0.0;
    double t_merge = 0.0;
    double v_merge = 0.0;
};

using Schedule = std::vector<ScheduleEntry>;

/// First-in-first-out merging-zone schedule with a minimum entry headway.
inline Schedule schedule_merging(std::span<const Arrival> arrivals, const RoadGeometry& g,
                                 double headway, double v_merge) {
    if (headway < 0.0) throw DomainError("schedule_merging: headway must be >= 0");
    if (!(v_merge > 0.0)) throw DomainError("schedule_merging: v_merge must be > 0");
    Schedule out;
    out.reserve(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        const Arrival& a = arrivals[i];
        if (!(a.v > 0.0)) throw DomainError("schedule_merging: arrival speed must be > 0");
        if (i > 0 && a.t < arrivals[i - 1].t)
            throw DomainError("schedule_merging: arrivals must be sorted by time");
        double t_merge = a.t + g.control_length / a.v;
        if (i > 0) t_merge = std::max(t_merge, out.back().t_merge + headway);
        out.push_back({a.t, a.v, t_merge, v_merge});
    }
    return out;
}

/**
 * Full arc-length plan for one vehicle: a minimum-energy quartic through
 * the control zone reaching the merge speed with zero acceleration, then
 * constant speed across the merging zone.
 */
inline SpeedProfile vehicle_profile(const ScheduleEntry& e, const RoadGeometry& g) {
    PolySegment approach = min_energy_profile(e.t_arrival, e.t_merge, 0.0, e.v_arrival,
                                              g.control_length, e.v_merge, 0.0);
    if (!(approach.min_speed() > 0.0))
        throw InfeasibleProfileError("approach profile must keep a positive speed");
    PolySegment merge;
    merge.t0 = e.t_merge;
    merge.t1 = e.t_merge + g.merge_length / e.v_merge;
    merge.c = {g.control_length, e.v_merge, 0.0, 0.0, 0.0};
    return SpeedProfile({approach, merge});
}

/// Planned position r(t) on the road.
inline RoadPose reference_at(double t, const SpeedProfile& profile, const RoadGeometry& g) {
    return arc_position(std::clamp(profile.position(t), 0.0, g.length()), g);
}

/**
 * Scripted vehicle following a piecewise-linear speed profile along a road.
 * Speed is held at the last knot value beyond the final knot.
 */
class SpeedScript {
public:
    struct Knot {
        double t = 0.0;
        double v = 0.0;
    };

    SpeedScript() = default;
    explicit SpeedScript(std::vector<Knot> knots) : knots_(std::move(knots)) {
        if (knots_.empty()) throw DomainError("SpeedScript needs at least one knot");
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (!(knots_[i].t > knots_[i - 1].t))
                throw DomainError("SpeedScript knots must have increasing times");
        offsets_.assign(knots_.size(), 0.0);
        for (std::size_t i = 1; i < knots_.size(); ++i)
            offsets_[i] = offsets_[i - 1] +
                          0.5 * (knots_[i - 1].v + knots_[i].v) * (knots_[i].t - knots_[i - 1].t);
    }

    /// Distance travelled since the first knot.
    double distance(double t) const {
        if (t <= knots_.front().t) return knots_.front().v * (t - knots_.front().t);
        const std::size_t i = segment(t);
        const double dt = t - knots_[i].t;
        return offsets_[i] + knots_[i].v * dt + 0.5 * slope(i) * dt * dt;
    }
    double speed(double t) const {
        if (t <= knots_.front().t) return knots_.front().v;
        const std::size_t i = segment(t);
        return knots_[i].v + slope(i) * (t - knots_[i].t);
    }
    double accel(double t) const {
        if (t < knots_.front().t) return 0.0;
        return slope(segment(t));
    }

private:
    std::size_t segment(double t) const {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const Knot& k) { return v < k.t; });
        return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
    }
    double slope(std::size_t i) const {
        if (i + 1 >= knots_.size()) return 0.0;
        return (knots_[i + 1].v - knots_[i].v) / (knots_[i + 1].t - knots_[i].t);
    }

    std::vector<Knot> knots_;
    std::vector<double> offsets_;
};

}  // namespace nrflow

#endif  // NRFLOW_PLANNER_HPP
