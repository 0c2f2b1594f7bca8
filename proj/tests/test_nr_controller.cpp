#include <gtest/gtest.h>

#include <cmath>

#include "nrflow/nr_controller.hpp"

using namespace nrflow;

namespace {

ControllerConfig straight_config(double horizon = 1.0, double step = 0.001) {
    ControllerConfig c;
    c.horizon = horizon;
    c.predictor_step = step;
    return c;
}

const VehicleState kCruise{0, 0, 13.4, 0, 0, 0};

}  // namespace

TEST(PredictOutput, StraightCoastAdvancesByVT) {
    const Vec2 y = predict_output({5, 1, 13.4, 0, 0, 0}, {0, 0}, straight_config());
    EXPECT_NEAR(y.x(), 5 + 13.4, 1e-9);
    EXPECT_EQ(y.y(), 1.0);
}

TEST(PredictOutput, HorizonOfOneStepIsExact) {
    const Vec2 y = predict_output(kCruise, {2.0, 0}, straight_config(0.001));
    EXPECT_DOUBLE_EQ(y.x(), 13.4 * 0.001);
}

TEST(PredictOutput, ConstantAccelMatchesEulerSum) {
    // z_N = v T + a dt^2 N (N-1) / 2 for N = T / dt
    const Vec2 y = predict_output(kCruise, {1.0, 0}, straight_config());
    EXPECT_NEAR(y.x(), 13.4 + 0.4995, 1e-9);
}

TEST(PredictorJacobian, AccelColumnIsEulerDoubleIntegrator) {
    for (double dt : {0.001, 0.002, 0.01}) {
        const PredictorJacobian j = predictor_jacobian(kCruise, {0, 0}, straight_config(1.0, dt));
        EXPECT_NEAR(j.jacobian(0, 0), 1.0 * (1.0 - dt) / 2.0, 1e-9) << "dt " << dt;
        EXPECT_NEAR(j.jacobian(1, 0), 0.0, 1e-12);
    }
}

TEST(PredictorJacobian, SteerMovesLateralNotAlongTrack) {
    const PredictorJacobian j = predictor_jacobian(kCruise, {0, 0}, straight_config());
    EXPECT_GT(j.jacobian(1, 1), 1.0);
    EXPECT_LT(std::abs(j.jacobian(0, 1)), 1e-3 * j.jacobian(1, 1));
}

TEST(PredictorJacobian, StepHalvingIsConsistent) {
    const VehicleState x{0, 0, 12.0, 0.2, 0.1, 0.05};
    const ControlInput u{0.3, 0.02};
    ControllerConfig coarse = straight_config();
    ControllerConfig fine = coarse;
    fine.jac_eps_accel /= 2;
    fine.jac_eps_steer /= 2;
    ControllerConfig finer = fine;
    finer.jac_eps_accel /= 2;
    finer.jac_eps_steer /= 2;
    const Mat2 a = predictor_jacobian(x, u, coarse).jacobian;
    const Mat2 b = predictor_jacobian(x, u, fine).jacobian;
    const Mat2 c = predictor_jacobian(x, u, finer).jacobian;
    // central differences: successive gaps shrink roughly fourfold
    const double d1 = (a - b).norm(), d2 = (b - c).norm();
    EXPECT_LT((a - b).norm(), 1e-4 * a.norm());
    EXPECT_LT(d2, 0.5 * d1 + 1e-9 * a.norm());
}

TEST(PredictorJacobian, OneSidedAtInputBound) {
    ControllerConfig cfg = straight_config();
    const PredictorJacobian j = predictor_jacobian(kCruise, {cfg.limits.a_max, 0}, cfg);
    EXPECT_NEAR(j.jacobian(0, 0), 0.4995, 1e-9);
}

TEST(PredictorJacobian, IllConditionedThrows) {
    ControllerConfig cfg = straight_config();
    cfg.cond_max = 1.5;
    try {
        predictor_jacobian(kCruise, {0, 0}, cfg);
        FAIL() << "expected SingularJacobianError";
    } catch (const SingularJacobianError& e) {
        EXPECT_GT(e.condition(), 1.5);
    }
}

TEST(ConditionNumber, DiagonalAndSingular) {
    Mat2 m;
    m << 1, 0, 0, 10;
    EXPECT_NEAR(condition_number(m), 10.0, 1e-12);
    m << 1, 2, 2, 4;
    EXPECT_TRUE(std::isinf(condition_number(m)));
    m << 0, 1, -1, 0;
    EXPECT_NEAR(condition_number(m), 1.0, 1e-12);
}

TEST(NrControlDerivative, ZeroWhenOnTarget) {
    const ControllerConfig cfg = straight_config();
    const Vec2 target = predict_output(kCruise, {0.2, 0.01}, cfg);
    const Vec2 d = nr_control_derivative(kCruise, {0.2, 0.01}, target, cfg);
    EXPECT_NEAR(d.norm(), 0.0, 1e-6);
}

TEST(NrControlDerivative, TargetAheadRaisesAccel) {
    const ControllerConfig cfg = straight_config();
    const Vec2 y = predict_output(kCruise, {0, 0}, cfg);
    const Vec2 target = y + Vec2(0.5, 0.0);
    const Vec2 d = nr_control_derivative(kCruise, {0, 0}, target, cfg);
    const Mat2 j = predictor_jacobian(kCruise, {0, 0}, cfg).jacobian;
    const Vec2 oracle = cfg.alpha * j.inverse() * Vec2(0.5, 0.0);
    EXPECT_GT(d.x(), 0.0);
    EXPECT_NEAR(d.x(), oracle.x(), 1e-9 * std::abs(oracle.x()));
    EXPECT_NEAR(d.y(), oracle.y(), 1e-9 * std::abs(oracle.x()));
    EXPECT_LT(std::abs(d.y()), 1e-3 * d.x());
}

TEST(ControllerUpdate, SubstepsAndClamping) {
    ControllerConfig cfg = straight_config();
    auto far_ahead = [](double t) { return Vec2(13.4 * t + 100.0, 0.0); };
    const ControllerUpdate up = controller_update({}, kCruise, far_ahead, 0.0, 0.005, cfg);
    EXPECT_TRUE(up.saturated);
    EXPECT_DOUBLE_EQ(up.state.u.accel, cfg.limits.a_max);
    EXPECT_NEAR(up.predicted.x(), 13.4, 1e-9);
}

TEST(ControllerUpdate, OnTargetStaysPut) {
    ControllerConfig cfg = straight_config();
    auto cruise = [](double t) { return Vec2(13.4 * t, 0.0); };
    const ControllerUpdate up = controller_update({}, kCruise, cruise, 0.0, 0.005, cfg);
    EXPECT_FALSE(up.saturated);
    EXPECT_NEAR(up.state.u.accel, 0.0, 1e-9);
    EXPECT_NEAR(up.state.u.steer, 0.0, 1e-12);
}

TEST(MemorylessTracking, RampErrorIsRateOverAlpha) {
    auto g = [](double u) { return u; };
    auto dg = [](double) { return 1.0; };
    auto ramp = [](double t) { return t; };
    for (double alpha : {100.0, 200.0}) {
        const auto trace = memoryless_nr_track(g, dg, ramp, alpha, 0.0, 1.0, 1e-5);
        EXPECT_NEAR(trace.back().error, 1.0 / alpha, 0.01 / alpha) << "alpha " << alpha;
    }
}

TEST(MemorylessTracking, VectorNonlinearMap) {
    auto g = [](const Vec2& u) { return Vec2(u.x() + 0.1 * u.y() * u.y(), std::sinh(u.y())); };
    auto dg = [](const Vec2& u) {
        Mat2 j;
        j << 1.0, 0.2 * u.y(), 0.0, std::cosh(u.y());
        return j;
    };
    auto r = [](double t) { return Vec2(1.0 + 0.0 * t, 0.5); };
    const auto trace = memoryless_nr_track<Vec2>(g, dg, r, 50.0, Vec2::Zero(), 0.5, 1e-4);
    EXPECT_LT(trace.back().error.norm(), 1e-8);
}

TEST(ControllerConfig, Validation) {
    ControllerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
    c = ControllerConfig{};
    c.predictor_step = 2.0;
    EXPECT_THROW(c.validate(), DomainError);
    c = ControllerConfig{};
    c.cond_max = 1.0;
    EXPECT_THROW(c.validate(), DomainError);
}
