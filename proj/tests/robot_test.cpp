#include "wsnbed/robot.hpp"
#include "wsnbed/scenario.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace wsnbed;

namespace {

constexpr double pi = std::numbers::pi;

// Oracle: RK4 on the unicycle ODE, independent of the closed-form arc used by plant_step.
Pose rk4_unicycle(Pose p, WheelSpeeds w, double t, const RobotGeometry& g, int steps = 20000) {
    const double v = g.wheel_radius_m * (w.left + w.right) / 2;
    const double om = g.wheel_radius_m * (w.right - w.left) / g.wheelbase_m;
    const double h = t / steps;
    auto f = [&](double th) { return std::array<double, 3>{v * std::cos(th), v * std::sin(th), om}; };
    for (int i = 0; i < steps; ++i) {
        auto k1 = f(p.theta);
        auto k2 = f(p.theta + h / 2 * k1[2]);
        auto k3 = f(p.theta + h / 2 * k2[2]);
        auto k4 = f(p.theta + h * k3[2]);
        p.x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        p.y += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        p.theta += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    }
    p.theta = normalize_angle(p.theta);
    return p;
}

}  // namespace

TEST(NormalizeAngle, HalfOpenRange) {
    EXPECT_DOUBLE_EQ(normalize_angle(pi), pi);
    EXPECT_DOUBLE_EQ(normalize_angle(-pi), pi);
    EXPECT_NEAR(normalize_angle(3 * pi / 2), -pi / 2, 1e-12);
    EXPECT_NEAR(normalize_angle(0.1 + 4 * pi), 0.1, 1e-12);
}

TEST(PlantStep, StraightLine) {
    const RobotGeometry g;
    const Pose p = plant_step({}, {3, 3}, 2, g);
    EXPECT_DOUBLE_EQ(p.x, 0.05 * 3 * 2);
    EXPECT_DOUBLE_EQ(p.y, 0);
    EXPECT_DOUBLE_EQ(p.theta, 0);
}

TEST(PlantStep, PureRotation) {
    const RobotGeometry g;
    const Pose p = plant_step({1, 2, 0}, {-1, 1}, 0.5, g);
    EXPECT_NEAR(p.x, 1, 1e-15);
    EXPECT_NEAR(p.y, 2, 1e-15);
    EXPECT_NEAR(p.theta, 0.05 * 2 * 0.5 / 0.4, 1e-15);
}

TEST(PlantStep, ArcMatchesAnalyticAndRk4) {
    const RobotGeometry g{0.05, 0.4, 400};
    const Pose p = plant_step({}, {1, 2}, 1, g);
    const double v = 0.075, om = 0.125;
    EXPECT_NEAR(p.x, v / om * std::sin(om), 1e-15);
    EXPECT_NEAR(p.y, v / om * (1 - std::cos(om)), 1e-15);
    const Pose ref = rk4_unicycle({}, {1, 2}, 1, g);
    EXPECT_NEAR(p.x, ref.x, 1e-12);
    EXPECT_NEAR(p.y, ref.y, 1e-12);
    EXPECT_NEAR(p.theta, ref.theta, 1e-12);
}

TEST(PlantStep, RandomArcsAgreeWithRk4) {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> w(-6, 6);
    const RobotGeometry g;
    for (int i = 0; i < 30; ++i) {
        const Pose start{w(gen), w(gen), normalize_angle(w(gen))};
        const WheelSpeeds s{w(gen), w(gen)};
        const Pose a = plant_step(start, s, 0.7, g);
        const Pose b = rk4_unicycle(start, s, 0.7, g, 4000);
        EXPECT_NEAR(a.x, b.x, 1e-9);
        EXPECT_NEAR(a.y, b.y, 1e-9);
        EXPECT_NEAR(normalize_angle(a.theta - b.theta), 0, 1e-9);
    }
}

TEST(EncoderUpdate, OneRevolution) {
    const RobotGeometry g;
    auto c = encoder_update({}, {2 * pi, 2 * pi}, 1, g);
    EXPECT_EQ(c.left, 400);
    EXPECT_EQ(c.right, 400);
}

TEST(EncoderUpdate, FractionCarriesAcrossCalls) {
    const RobotGeometry g;
    auto c = encoder_update({}, {2 * pi, 0}, 0.5, g);
    c = encoder_update(c, {2 * pi, 0}, 0.5, g);
    EXPECT_EQ(c.left, 400);
    EXPECT_EQ(c.right, 0);
}

TEST(EncoderUpdate, PartitionIndependence) {
    std::mt19937 gen(2);
    const RobotGeometry g;
    for (int trial = 0; trial < 50; ++trial) {
        const WheelSpeeds s{std::uniform_real_distribution<double>(-8, 8)(gen),
                            std::uniform_real_distribution<double>(-8, 8)(gen)};
        const double total = 3.0;
        const auto whole = encoder_update({}, s, total, g);
        EncoderCounts split{};
        int pieces = 1 + static_cast<int>(gen() % 200);
        for (int i = 0; i < pieces; ++i) split = encoder_update(split, s, total / pieces, g);
        EXPECT_LE(std::llabs(whole.left - split.left), 1);
        EXPECT_LE(std::llabs(whole.right - split.right), 1);
        // Counts plus carried fraction agree up to rounding of the sum.
        EXPECT_NEAR(whole.left + whole.left_fraction, split.left + split.left_fraction, 1e-6);
        EXPECT_NEAR(whole.right + whole.right_fraction, split.right + split.right_fraction, 1e-6);
    }
}

TEST(OdometryUpdate, OneRevolutionForward) {
    const RobotGeometry g;
    const Pose p = odometry_update({}, 400, 400, 1, g);
    EXPECT_NEAR(p.x, 2 * pi * 0.05, 1e-12);
    EXPECT_NEAR(p.y, 0, 1e-15);
    const Pose rotated = odometry_update({0, 0, pi / 2}, 400, 400, 1, g);
    EXPECT_NEAR(rotated.y, 2 * pi * 0.05, 1e-12);
}

TEST(OdometryUpdate, NoCountsNoMotion) {
    const Pose start{1.5, -2, 0.3};
    const Pose p = odometry_update(start, 0, 0, 0.01, RobotGeometry{});
    EXPECT_EQ(p.x, start.x);
    EXPECT_EQ(p.y, start.y);
    EXPECT_EQ(p.theta, start.theta);
}

TEST(OdometryUpdate, PureRotationLeavesPositionExactly) {
    std::mt19937 gen(3);
    const RobotGeometry g;
    Pose p{0.25, 0.75, 0};
    for (int i = 0; i < 10000; ++i) {
        const long long d = static_cast<long long>(gen() % 11) - 5;
        p = odometry_update(p, -d, d, 0.01, g);
        ASSERT_EQ(p.x, 0.25);
        ASSERT_EQ(p.y, 0.75);
        ASSERT_GT(p.theta, -pi);
        ASSERT_LE(p.theta, pi);
    }
}

TEST(Odometry, StraightTwoMetersAtOneMillisecond) {
    const RobotGeometry g;
    const WheelSpeeds s{5, 5};  // 0.25 m/s
    Pose truth, est;
    EncoderCounts enc;
    double max_err = 0;
    for (int i = 0; i < 8000; ++i) {
        truth = plant_step(truth, s, 0.001, g);
        auto before = enc;
        enc = encoder_update(enc, s, 0.001, g);
        est = odometry_update(est, enc.left - before.left, enc.right - before.right, 0.001, g);
        max_err = std::max(max_err, std::hypot(est.x - truth.x, est.y - truth.y));
    }
    EXPECT_NEAR(truth.x, 2.0, 1e-9);
    EXPECT_LT(max_err, 0.001);
}

TEST(Odometry, EulerErrorOnArcsIsFirstOrder) {
    // Fine encoders so truncation error dominates quantization.
    const RobotGeometry g{0.05, 0.4, 4e7};
    const WheelSpeeds s{4, 6};
    std::vector<double> errs;
    for (double dt : {0.01, 0.005, 0.0025}) {
        Pose truth, est;
        EncoderCounts enc;
        double max_err = 0;
        const int n = static_cast<int>(std::lround(4.0 / dt));
        for (int i = 0; i < n; ++i) {
            truth = plant_step(truth, s, dt, g);
            auto before = enc;
            enc = encoder_update(enc, s, dt, g);
            est = odometry_update(est, enc.left - before.left, enc.right - before.right, dt, g);
            max_err = std::max(max_err, std::hypot(est.x - truth.x, est.y - truth.y));
        }
        errs.push_back(max_err);
    }
    EXPECT_GT(errs[0] / errs[1], 1.8);
    EXPECT_GT(errs[1] / errs[2], 1.8);
}

// --- controller ---------------------------------------------------------------

TEST(Controller, ZeroSpeedsWhenIdleOrDone) {
    const RobotGeometry g;
    const ControllerParams p;
    for (auto phase : {MissionPhase::Idle, MissionPhase::Done}) {
        auto [w, m] = controller_step({phase, 2, 1}, {}, g, p);
        EXPECT_EQ(w.left, 0.0);
        EXPECT_EQ(w.right, 0.0);
        EXPECT_EQ(m.phase, phase);
    }
}

TEST(Controller, TargetAtOriginIsImmediatelyDone) {
    EXPECT_EQ(start_mission(0, 0, {}, {}).phase, MissionPhase::Done);
    EXPECT_EQ(start_mission(2, 1, {}, {}).phase, MissionPhase::DriveX);
}

TEST(Controller, PhaseProgression) {
    const RobotGeometry g;
    const ControllerParams p;
    auto [w1, m1] = controller_step({MissionPhase::DriveX, 2, 1}, {0.5, 0, 0}, g, p);
    EXPECT_EQ(m1.phase, MissionPhase::DriveX);
    EXPECT_EQ(w1.left, w1.right);
    EXPECT_GT(w1.left, 0);
    auto [w2, m2] = controller_step(m1, {1.995, 0, 0}, g, p);
    EXPECT_EQ(m2.phase, MissionPhase::Turn);
    EXPECT_LT(w2.left, 0);
    EXPECT_GT(w2.right, 0);  // counterclockwise
    auto [w3, m3] = controller_step(m2, {1.995, 0, pi / 2 - 0.001}, g, p);
    EXPECT_EQ(m3.phase, MissionPhase::DriveY);
    auto [w4, m4] = controller_step(m3, {1.995, 0.999, pi / 2}, g, p);
    EXPECT_EQ(m4.phase, MissionPhase::Done);
    EXPECT_EQ(w4, (WheelSpeeds{0, 0}));
}

TEST(Controller, CruiseAndTurnRates) {
    const RobotGeometry g;
    const ControllerParams p;
    auto [drive, m] = controller_step({MissionPhase::DriveX, 2, 1}, {}, g, p);
    EXPECT_NEAR(g.wheel_radius_m * (drive.left + drive.right) / 2, 0.25, 1e-12);
    auto [turn, m2] = controller_step({MissionPhase::Turn, 2, 1}, {2, 0, 0}, g, p);
    EXPECT_NEAR(g.wheel_radius_m * (turn.right - turn.left) / g.wheelbase_m, 0.5, 1e-12);
}

TEST(Robot, MissionTwoOneWithoutNetwork) {
    Robot robot;
    ASSERT_TRUE(robot.apply_command(Frame(kRobotNodeId, {2, 1})));
    std::vector<MissionPhase> phases{robot.mission().phase};
    int ticks = 0;
    while (robot.active() && ticks < 5000) {
        robot.advance(0.01);
        ++ticks;
        if (robot.mission().phase != phases.back()) phases.push_back(robot.mission().phase);
        ASSERT_GT(robot.estimate().theta, -pi);
        ASSERT_LE(robot.estimate().theta, pi);
    }
    EXPECT_EQ(phases, (std::vector<MissionPhase>{MissionPhase::DriveX, MissionPhase::Turn, MissionPhase::DriveY,
                                                   MissionPhase::Done}));
    EXPECT_NEAR(robot.estimate().x, 2, 0.01);
    EXPECT_NEAR(robot.estimate().y, 1, 0.01);
    EXPECT_NEAR(robot.estimate().theta, pi / 2, 0.5 * pi / 180);
    EXPECT_NEAR(ticks * 0.01, 15.2, 1.0);
}

TEST(Robot, RestartMidDriveX) {
    Robot robot;
    robot.apply_command(Frame(kRobotNodeId, {2, 1}));
    for (int i = 0; i < 200; ++i) robot.advance(0.01);
    ASSERT_EQ(robot.mission().phase, MissionPhase::DriveX);
    robot.apply_command(Frame(kRobotNodeId, {5, 3}));
    EXPECT_EQ(robot.mission().phase, MissionPhase::DriveX);
    EXPECT_EQ(robot.mission().target_x, 5);
    EXPECT_EQ(robot.mission().target_y, 3);
    while (robot.active()) robot.advance(0.01);
    EXPECT_NEAR(robot.estimate().x, 5, 0.02);
    EXPECT_NEAR(robot.estimate().y, 3, 0.02);
    EXPECT_EQ(report_position(robot.estimate()).payload, (Bytes{5, 3}));
}

TEST(Robot, WrongShapeCommandIgnored) {
    Robot robot;
    EXPECT_FALSE(robot.apply_command(Frame(kRobotNodeId, {2})));
    EXPECT_FALSE(robot.apply_command(Frame(1, {2, 1})));
    EXPECT_EQ(robot.mission().phase, MissionPhase::Idle);
    EXPECT_EQ(robot.rejected_commands(), 2u);
}

TEST(Robot, ShortCommandRejectedByFraming) {
    ParserState st;
    auto frames = decode_stream(st, Bytes{0xFF, 0x03, 0x02, 0x05}, PayloadRegistry::robot_downlink());
    EXPECT_TRUE(frames.empty());
}

TEST(ReportPosition, FloorAndClamp) {
    EXPECT_EQ(report_position({1.7, 0.2, 0}).payload, (Bytes{1, 0}));
    EXPECT_EQ(report_position({0, 0, 0}).payload, (Bytes{0, 0}));
    EXPECT_EQ(report_position({5.0, 3.0, pi / 2}).payload, (Bytes{5, 3}));
    EXPECT_EQ(report_position({-0.5, 300, 0}).payload, (Bytes{0, 255}));
    EXPECT_EQ(report_position({1.7, 0.2, 0}).node_id, kRobotNodeId);
}

TEST(ReportPosition, MarginIsTolerancePlusOnePulse) {
    const double pulse = pulse_length_m(RobotGeometry{});
    EXPECT_NEAR(pulse, 2 * pi * 0.05 / 400, 1e-15);
    EXPECT_EQ(report_position({1.99 - pulse + 1e-6, 0, 0}).payload[0], 2);
    EXPECT_EQ(report_position({1.99 - pulse - 1e-6, 0, 0}).payload[0], 1);
}

TEST(Robot, ReportedXNeverFallsBackDuringTurn) {
    // Straddle the stop threshold with several cruise speeds.
    for (double cruise : {0.2, 0.23, 0.25, 0.27, 0.3}) {
        RobotConfig cfg;
        cfg.controller.cruise_speed_mps = cruise;
        Robot robot(cfg);
        robot.apply_command(Frame(kRobotNodeId, {2, 1}));
        int last_x = 0;
        while (robot.active()) {
            robot.advance(0.01);
            const int x = report_position(robot.estimate()).payload[0];
            ASSERT_GE(x, last_x) << "cruise " << cruise;
            last_x = x;
        }
        EXPECT_EQ(report_position(robot.estimate()).payload, (Bytes{2, 1})) << "cruise " << cruise;
    }
}
