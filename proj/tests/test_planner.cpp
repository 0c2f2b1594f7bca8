#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nrflow/planner.hpp"

using namespace nrflow;

namespace {

RoadGeometry curved_road() {
    RoadGeometry g;
    g.kind = RoadKind::arc;
    g.radius = 2580.0 / std::numbers::pi;
    return g;
}

}  // namespace

TEST(RoadGeometry, ArcWithAngleMatchesRadius) {
    const RoadGeometry g = RoadGeometry::arc_with_angle(400, 30, std::numbers::pi / 6);
    EXPECT_NEAR(g.radius, 2580.0 / std::numbers::pi, 1e-9);
    EXPECT_DOUBLE_EQ(g.length(), 430.0);
}

TEST(RoadGeometry, Validation) {
    RoadGeometry g;
    g.control_length = 0;
    EXPECT_THROW(g.validate(), DomainError);
    g = RoadGeometry{};
    g.kind = RoadKind::arc;
    EXPECT_THROW(g.validate(), DomainError);
}

TEST(ArcPosition, Origin) {
    const RoadPose p = arc_position(0.0, curved_road());
    EXPECT_EQ(p.z1, 0.0);
    EXPECT_EQ(p.z2, 0.0);
    EXPECT_EQ(p.heading, 0.0);
}

TEST(ArcPosition, EndOfCurvedRoad) {
    const RoadPose p = arc_position(430.0, curved_road());
    EXPECT_NEAR(p.z1, 410.62, 5e-3);
    EXPECT_NEAR(p.z2, 110.03, 5e-3);
    EXPECT_NEAR(p.heading, std::numbers::pi / 6, 1e-12);
}

TEST(ArcPosition, Straight) {
    const RoadPose p = arc_position(100.0, RoadGeometry{});
    EXPECT_EQ(p.z1, 100.0);
    EXPECT_EQ(p.z2, 0.0);
    EXPECT_EQ(p.heading, 0.0);
}

TEST(ArcPosition, OutOfRangeThrows) {
    EXPECT_THROW(arc_position(-1.0, curved_road()), DomainError);
    EXPECT_THROW(arc_position(430.5, curved_road()), DomainError);
}

TEST(ArcPosition, PreservesArcLength) {
    const RoadGeometry g = curved_road();
    const int n = 200000;
    const double s_end = 430.0;
    double len = 0.0;
    RoadPose prev = arc_position(0.0, g);
    for (int i = 1; i <= n; ++i) {
        const RoadPose p = arc_position(s_end * i / n, g);
        len += std::hypot(p.z1 - prev.z1, p.z2 - prev.z2);
        prev = p;
    }
    EXPECT_NEAR(len, s_end, 1e-6 * s_end);
}

TEST(LaneCoordinates, InvertsArcPosition) {
    const RoadGeometry g = curved_road();
    for (double s : {0.0, 12.5, 200.0, 429.0}) {
        const RoadPose p = arc_position(s, g);
        const double off = 0.3;
        // point displaced to the left of the lane
        const LaneCoordinates lc = lane_coordinates(p.z1 - off * std::sin(p.heading),
                                                    p.z2 + off * std::cos(p.heading), g);
        EXPECT_NEAR(lc.s, s, 1e-9);
        EXPECT_NEAR(lc.offset, off, 1e-9);
    }
}

TEST(LanePoint, ContinuesPastRoadEnd) {
    const RoadGeometry g = curved_road();
    EXPECT_NEAR(lane_point(430.0, g).z1, arc_position(430.0, g).z1, 1e-12);
    const RoadPose beyond = lane_point(440.0, g);
    EXPECT_NEAR(beyond.heading, 440.0 / g.radius, 1e-12);
}

TEST(MinEnergyProfile, ConstantVelocityDegenerates) {
    const PolySegment s = min_energy_profile(1.0, 3.0, 5.0, 2.0, 9.0, 2.0);
    EXPECT_NEAR(s.c[2], 0.0, 1e-15);
    EXPECT_NEAR(s.c[3], 0.0, 1e-15);
    EXPECT_NEAR(s.accel(2.0), 0.0, 1e-15);
}

TEST(MinEnergyProfile, RestToRestExample) {
    const PolySegment s = min_energy_profile(0.0, 2.0, 0.0, 0.0, 1.0, 0.0);
    EXPECT_NEAR(s.c[2], 0.75, 1e-15);
    EXPECT_NEAR(s.c[3], -0.25, 1e-15);
    EXPECT_EQ(s.c[4], 0.0);
}

TEST(MinEnergyProfile, RejectsReversal) {
    EXPECT_THROW(min_energy_profile(0.0, 1.0, 0.0, 5.0, 0.5, 5.0), InfeasibleProfileError);
    EXPECT_THROW(min_energy_profile(1.0, 1.0, 0.0, 1.0, 1.0, 1.0), DomainError);
}

TEST(MinEnergyProfile, RandomBoundaryResiduals) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        const double t0 = 10 * u(rng), h = 1 + 30 * u(rng);
        const double v0 = 1 + 15 * u(rng), vf = 1 + 15 * u(rng);
        const double s0 = 100 * u(rng), sf = s0 + 0.5 * (v0 + vf) * h * (0.8 + 0.4 * u(rng));
        PolySegment p;
        try {
            p = min_energy_profile(t0, t0 + h, s0, v0, sf, vf);
        } catch (const InfeasibleProfileError&) {
            continue;
        }
        ++checked;
        const double scale = 1 + std::abs(sf);
        EXPECT_LT(std::abs(p.position(t0) - s0), 1e-9 * scale);
        EXPECT_LT(std::abs(p.speed(t0) - v0), 1e-9 * (1 + v0));
        EXPECT_LT(std::abs(p.position(t0 + h) - sf), 1e-9 * scale);
        EXPECT_LT(std::abs(p.speed(t0 + h) - vf), 1e-9 * (1 + vf));
    }
    EXPECT_GT(checked, 400);
}

TEST(MinEnergyProfile, QuarticHitsFiveConditions) {
    const PolySegment p = min_energy_profile(2.0, 34.0, 0.0, 13.4, 400.0, 13.4, 0.0);
    EXPECT_NEAR(p.position(2.0), 0.0, 1e-12);
    EXPECT_NEAR(p.speed(2.0), 13.4, 1e-12);
    EXPECT_NEAR(p.position(34.0), 400.0, 1e-9);
    EXPECT_NEAR(p.speed(34.0), 13.4, 1e-9);
    EXPECT_NEAR(p.accel(34.0), 0.0, 1e-9);
}

TEST(Schedule, FreeFlowSingleVehicle) {
    const std::vector<Arrival> a = {{0.0, 13.4}};
    const Schedule s = schedule_merging(a, RoadGeometry{}, 5.0, 13.4);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_NEAR(s[0].t_merge, 400.0 / 13.4, 1e-12);
    EXPECT_NEAR(s[0].t_merge, 29.85, 5e-3);
}

TEST(Schedule, HeadwayBinds) {
    const std::vector<Arrival> a = {{0.0, 13.4}, {1.0, 13.4}};
    const Schedule s = schedule_merging(a, RoadGeometry{}, 5.0, 13.4);
    EXPECT_DOUBLE_EQ(s[1].t_merge, s[0].t_merge + 5.0);
}

TEST(Schedule, ZeroHeadwayIsFreeFlow) {
    const std::vector<Arrival> a = {{0.0, 13.4}, {1.0, 13.4}, {1.5, 10.0}};
    const Schedule s = schedule_merging(a, RoadGeometry{}, 0.0, 13.4);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_DOUBLE_EQ(s[i].t_merge, a[i].t + 400.0 / a[i].v);
}

TEST(Schedule, RejectsUnsortedArrivals) {
    const std::vector<Arrival> a = {{2.0, 13.4}, {1.0, 13.4}};
    EXPECT_THROW(schedule_merging(a, RoadGeometry{}, 5.0, 13.4), DomainError);
}

TEST(VehicleProfile, ContinuityAndZeroEntryAcceleration) {
    const std::vector<Arrival> a = {{0.0, 13.4}, {1.0, 13.4}, {3.0, 13.4}};
    const Schedule s = schedule_merging(a, RoadGeometry{}, 5.0, 13.4);
    for (const ScheduleEntry& e : s) {
        const SpeedProfile p = vehicle_profile(e, RoadGeometry{});
        const auto segs = p.segments();
        ASSERT_EQ(segs.size(), 2u);
        EXPECT_NEAR(segs[0].position(segs[0].t1), segs[1].position(segs[1].t0), 1e-9);
        EXPECT_NEAR(segs[0].speed(segs[0].t1), segs[1].speed(segs[1].t0), 1e-9);
        EXPECT_LT(std::abs(segs[0].accel(segs[0].t1)), 1e-9);
        EXPECT_NEAR(p.position(e.t_arrival), 0.0, 1e-12);
        EXPECT_NEAR(p.position(p.end()), 430.0, 1e-9);
        EXPECT_GT(segs[0].min_speed(), 0.0);
    }
}

TEST(ReferenceAt, StraightLinearProfile) {
    RoadGeometry g;
    g.control_length = 400;
    const ScheduleEntry e{0.0, 2.0, 200.0, 2.0};
    const SpeedProfile p = vehicle_profile(e, g);
    for (double t : {0.0, 10.0, 55.5}) {
        const RoadPose r = reference_at(t, p, g);
        EXPECT_NEAR(r.z1, 2.0 * t, 1e-9);
        EXPECT_EQ(r.z2, 0.0);
    }
    EXPECT_NEAR(reference_at(1e4, p, g).z1, 430.0, 1e-9);
    EXPECT_NEAR(reference_at(-5.0, p, g).z1, 0.0, 1e-12);
}

TEST(SpeedScript, PiecewiseLinearSpeed) {
    const SpeedScript s({{-5, 2}, {50, 2}, {55, 1}, {75, 1}, {80, 2}});
    EXPECT_DOUBLE_EQ(s.distance(0.0), 10.0);
    EXPECT_DOUBLE_EQ(s.speed(52.5), 1.5);
    EXPECT_DOUBLE_EQ(s.accel(52.5), -0.2);
    EXPECT_DOUBLE_EQ(s.accel(60.0), 0.0);
    EXPECT_DOUBLE_EQ(s.speed(100.0), 2.0);
    EXPECT_NEAR(s.distance(80.0), 10.0 + 100.0 + 7.5 + 20.0 + 7.5, 1e-12);
    EXPECT_THROW(SpeedScript({{0, 1}, {0, 2}}), DomainError);
}
