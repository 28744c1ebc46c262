#pragma once

/**
 * @file robot.hpp
 * @brief Differential-drive robot: exact unicycle plant, quadrature encoders,
 * Euler dead reckoning from encoder counts, and the waypoint mission
 * (drive along x, turn +90 degrees, drive along y).
 *
 * The radio end device and the controller are joined by a zero-delay serial
 * pipe; command and report bytes still pass through the frame codec.
 */

#include "wsnbed/frame.hpp"
#include "wsnbed/network.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace wsnbed {

struct RobotGeometry {
    double wheel_radius_m = 0.05;
    double wheelbase_m = 0.4;
    double encoder_ppr = 400;

    void validate() const {
        if (!(wheel_radius_m > 0 && wheelbase_m > 0 && encoder_ppr > 0)) {
            throw ContractViolation("robot geometry values must all be > 0");
        }
    }
};

/// Normalizes to (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double pi = std::numbers::pi;
    a = std::remainder(a, 2 * pi);
    if (a <= -pi) a += 2 * pi;
    return a;
}

struct Pose {
    double x = 0;
    double y = 0;
    double theta = 0;
};

struct WheelSpeeds {
    double left = 0;   // rad/s
    double right = 0;  // rad/s
    friend bool operator==(const WheelSpeeds&, const WheelSpeeds&) = default;
};

/// Ground truth over dt seconds with constant wheel speeds: straight line or circular arc.
inline Pose plant_step(const Pose& pose, WheelSpeeds w, double dt, const RobotGeometry& g) {
    const double v = g.wheel_radius_m * (w.left + w.right) / 2.0;
    const double omega = g.wheel_radius_m * (w.right - w.left) / g.wheelbase_m;
    Pose out = pose;
    if (omega == 0.0) {
        out.x += v * std::cos(pose.theta) * dt;
        out.y += v * std::sin(pose.theta) * dt;
    } else {
        const double radius = v / omega;
        const double theta1 = pose.theta + omega * dt;
        out.x += radius * (std::sin(theta1) - std::sin(pose.theta));
        out.y -= radius * (std::cos(theta1) - std::cos(pose.theta));
        out.theta = theta1;
    }
    out.theta = normalize_angle(out.theta);
    return out;
}

/// Integer counts plus the residual pulse (within half a count) carried between updates.
struct EncoderCounts {
    long long left = 0;
    long long right = 0;
    double left_fraction = 0;
    double right_fraction = 0;
};

inline EncoderCounts encoder_update(EncoderCounts c, WheelSpeeds w, double dt, const RobotGeometry& g) {
    const double per_rad = g.encoder_ppr / (2.0 * std::numbers::pi);
    auto advance = [&](long long& count, double& frac, double omega) {
        frac += omega * dt * per_rad;
        // Rounds half away from zero, so equal and opposite wheels give equal and opposite counts.
        const double whole = std::round(frac);
        count += static_cast<long long>(whole);
        frac -= whole;
    };
    advance(c.left, c.left_fraction, w.left);
    advance(c.right, c.right_fraction, w.right);
    return c;
}

/// One Euler step of dead reckoning from encoder deltas.
inline Pose odometry_update(const Pose& est, long long delta_left, long long delta_right, double dt,
                            const RobotGeometry& g) {
    const double to_rad = 2.0 * std::numbers::pi / (g.encoder_ppr * dt);
    const double wl = static_cast<double>(delta_left) * to_rad;
    const double wr = static_cast<double>(delta_right) * to_rad;
    const double v = g.wheel_radius_m * (wl + wr) / 2.0;
    const double omega = g.wheel_radius_m * (wr - wl) / g.wheelbase_m;
    Pose out = est;
    out.x += v * std::cos(est.theta) * dt;
    out.y += v * std::sin(est.theta) * dt;
    out.theta = normalize_angle(est.theta + omega * dt);
    return out;
}

enum class MissionPhase { Idle, DriveX, Turn, DriveY, Done };

inline const char* to_string(MissionPhase p) {
    switch (p) {
        case MissionPhase::Idle: return "idle";
        case MissionPhase::DriveX: return "drive_x";
        case MissionPhase::Turn: return "turn";
        case MissionPhase::DriveY: return "drive_y";
        case MissionPhase::Done: return "done";
    }
    return "unknown";
}

struct ControllerParams {
    double position_tol_m = 0.01;
    double heading_tol_rad = 0.5 * std::numbers::pi / 180.0;
    double cruise_speed_mps = 0.25;
    double turn_rate_radps = 0.5;
};

struct MissionState {
    MissionPhase phase = MissionPhase::Idle;
    int target_x = 0;
    int target_y = 0;
};

/// A target is reached once the estimate is within tolerance below it.
inline bool reached(double value, int target, const ControllerParams& p) {
    return value + p.position_tol_m >= static_cast<double>(target);
}

/// Starts (or restarts) a mission from the current estimate.
inline MissionState start_mission(int x, int y, const Pose& estimate, const ControllerParams& p) {
    MissionState m{MissionPhase::DriveX, x, y};
    if (std::abs(estimate.x - x) <= p.position_tol_m && std::abs(estimate.y - y) <= p.position_tol_m) {
        m.phase = MissionPhase::Done;
    }
    return m;
}

inline std::pair<WheelSpeeds, MissionState> controller_step(MissionState m, const Pose& est,
                                                           const RobotGeometry& g, const ControllerParams& p) {
    const double cruise = p.cruise_speed_mps / g.wheel_radius_m;
    const double spin = p.turn_rate_radps * g.wheelbase_m / (2.0 * g.wheel_radius_m);
    constexpr double half_pi = std::numbers::pi / 2.0;

    if (m.phase == MissionPhase::DriveX && reached(est.x, m.target_x, p)) m.phase = MissionPhase::Turn;
    if (m.phase == MissionPhase::Turn && est.theta >= half_pi - p.heading_tol_rad) m.phase = MissionPhase::DriveY;
    if (m.phase == MissionPhase::DriveY && reached(est.y, m.target_y, p)) m.phase = MissionPhase::Done;

    switch (m.phase) {
        case MissionPhase::DriveX:
            // A restart can leave the heading off +x; square up before driving.
            if (std::abs(est.theta) > p.heading_tol_rad) {
                return {est.theta > 0 ? WheelSpeeds{spin, -spin} : WheelSpeeds{-spin, spin}, m};
            }
            return {{cruise, cruise}, m};
        case MissionPhase::Turn:
            return {{-spin, spin}, m};
        case MissionPhase::DriveY:
            return {{cruise, cruise}, m};
        case MissionPhase::Idle:
        case MissionPhase::Done:
            break;
    }
    return {{0.0, 0.0}, m};
}

/// Distance one wheel travels per encoder pulse.
inline double pulse_length_m(const RobotGeometry& g) { return 2.0 * std::numbers::pi * g.wheel_radius_m / g.encoder_ppr; }

/**
 * Integer-meter position byte. A mission stops up to position_tol short of its
 * target, and turning in place can then nudge the estimate by a fraction of a
 * pulse, so the floor is taken after shifting by the tolerance plus one pulse.
 */
inline Byte position_byte(double meters, const ControllerParams& p, const RobotGeometry& g = {}) {
    const double margin = p.position_tol_m + pulse_length_m(g);
    return static_cast<Byte>(std::clamp(std::floor(meters + margin), 0.0, 255.0));
}

inline Frame report_position(const Pose& est, const ControllerParams& p = {}, const RobotGeometry& g = {}) {
    return Frame(kRobotNodeId, {position_byte(est.x, p, g), position_byte(est.y, p, g)});
}

struct RobotConfig {
    Byte node_id = kRobotNodeId;
    RobotGeometry geometry;
    ControllerParams controller;
    SimTime control_period_ms = 10;
    SimTime report_period_ms = 500;
    SimTime first_report_ms = 0;
};

/**
 * Robot end device. The control loop only ticks while a mission is active;
 * position reports go out on their own cadence regardless.
 */
class Robot : public NodeHandler {
public:
    static constexpr int kControlTag = 1;
    static constexpr int kReportTag = 2;

    explicit Robot(RobotConfig config = {}) : config_(config) { config_.geometry.validate(); }

    void start(Network& net) {
        net.attach(config_.node_id, this);
        net.schedule_timer(config_.node_id, config_.first_report_ms, kReportTag);
    }

    /// Bytes arriving on the serial port from the radio.
    void on_receive(Network& net, const Delivery& d) override {
        for (const Frame& f : decode_stream(serial_, d.packet.bytes, downlink_registry_)) {
            handle_command(net, f);
        }
    }

    void on_timer(Network& net, int tag) override {
        if (tag == kControlTag) {
            control_tick(net);
        } else if (tag == kReportTag) {
            net.note("report", config_.node_id, net.topology().coordinator(),
                     "x=" + std::to_string(estimate_.x) + " y=" + std::to_string(estimate_.y));
            net.transmit(config_.node_id, net.topology().coordinator(),
                         encode_frame(report_position(estimate_, config_.controller, config_.geometry)));
            net.schedule_timer(config_.node_id, net.now() + config_.report_period_ms, kReportTag);
        }
    }

    /// Applies a waypoint frame; returns false if its shape is wrong.
    bool handle_command(Network& net, const Frame& f) {
        if (!apply_command(f)) {
            net.note("command_rejected", -1, config_.node_id, "");
            return false;
        }
        net.note("command", -1, config_.node_id,
                 "target=" + std::to_string(mission_.target_x) + "," + std::to_string(mission_.target_y) +
                     " phase=" + to_string(mission_.phase));
        if (!control_scheduled_ && active()) {
            control_scheduled_ = true;
            net.schedule_timer(config_.node_id, net.now() + config_.control_period_ms, kControlTag);
        }
        return true;
    }

    /// Command handling with no network attached.
    bool apply_command(const Frame& f) {
        if (f.node_id != config_.node_id || f.payload.size() != 2) {
            ++rejected_commands_;
            return false;
        }
        mission_ = start_mission(f.payload[0], f.payload[1], estimate_, config_.controller);
        ++accepted_commands_;
        return true;
    }

    /// One control period: decide speeds from the estimate, move the plant, read the encoders.
    void advance(double dt) {
        auto [speeds, next] = controller_step(mission_, estimate_, config_.geometry, config_.controller);
        mission_ = next;
        truth_ = plant_step(truth_, speeds, dt, config_.geometry);
        const EncoderCounts before = encoders_;
        encoders_ = encoder_update(encoders_, speeds, dt, config_.geometry);
        estimate_ = odometry_update(estimate_, encoders_.left - before.left, encoders_.right - before.right, dt,
                                    config_.geometry);
        speeds_ = speeds;
    }

    bool active() const { return mission_.phase != MissionPhase::Idle && mission_.phase != MissionPhase::Done; }

    const MissionState& mission() const { return mission_; }
    const Pose& estimate() const { return estimate_; }
    const Pose& truth() const { return truth_; }
    const EncoderCounts& encoders() const { return encoders_; }
    WheelSpeeds speeds() const { return speeds_; }
    const RobotConfig& config() const { return config_; }
    std::uint64_t rejected_commands() const { return rejected_commands_ + serial_.checksum_failures; }
    std::uint64_t accepted_commands() const { return accepted_commands_; }

private:
    void control_tick(Network& net) {
        const MissionPhase before = mission_.phase;
        advance(config_.control_period_ms / 1000.0);
        if (mission_.phase != before) {
            net.note("phase", config_.node_id, -1, std::string(to_string(before)) + "->" + to_string(mission_.phase));
        }
        if (active()) {
            net.schedule_timer(config_.node_id, net.now() + config_.control_period_ms, kControlTag);
        } else {
            speeds_ = {};
            control_scheduled_ = false;
        }
    }

    RobotConfig config_;
    PayloadRegistry downlink_registry_ = PayloadRegistry::robot_downlink();
    ParserState serial_;
    MissionState mission_;
    Pose truth_;
    Pose estimate_;
    EncoderCounts encoders_;
    WheelSpeeds speeds_;
    bool control_scheduled_ = false;
    std::uint64_t rejected_commands_ = 0;
    std::uint64_t accepted_commands_ = 0;
};

}  // namespace wsnbed
