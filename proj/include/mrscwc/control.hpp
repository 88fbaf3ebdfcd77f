#pragma once

// Leader-follower target-direction tracking, wheel speed loops and the
// stiffness switch driven by the leader's environmental-torque estimate.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrscwc/common.hpp"
#include "mrscwc/dynamics.hpp"

namespace mrscwc {

struct ControlGains {
    double forward_speed = 0.075;    // v0, m/s
    double heading_gain = 0.5;       // Kp, 1/s
    double motor_gain = 0.5;         // Km, N m s/rad
    double stiffness_low = 5.0;      // N m/rad
    double stiffness_high = 100.0;   // N m/rad
    double env_torque_threshold = 20.0;  // N m
    double switch_dwell = 0.2;       // s
    double torque_limit = 2.0;       // per wheel, N m

    void validate() const {
        if (!(forward_speed > 0 && heading_gain > 0 && motor_gain > 0 && stiffness_low > 0 &&
              stiffness_high > 0 && torque_limit > 0))
            throw std::invalid_argument("control gains must be positive");
        if (!(stiffness_low < stiffness_high)) throw std::invalid_argument("k_low must be below k_high");
        if (!(env_torque_threshold >= 0) || !(switch_dwell >= 0))
            throw std::invalid_argument("threshold and dwell must be nonnegative");
    }
};

struct NavigationTarget {
    Vec2 position{9.0, 9.0};
    double success_radius = 0.5;  // m
    double time_limit = 1000.0;   // s
};

inline double bearing(Vec2 from, Vec2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

// index is 0-based: 0 is the leader.
inline double reference_heading(int index, const ChainState& s, const NavigationTarget& target) {
    if (index < 0 || index >= kRobots) throw std::out_of_range("reference_heading: robot index");
    if (index == 0) return bearing(s.robots[0].position, target.position);
    return s.robots[index - 1].heading;
}

struct WheelSpeeds {
    double left = 0.0;
    double right = 0.0;
};

inline WheelSpeeds motion_command(const RobotState& s, double heading_ref, const ControlGains& gains,
                                  const RobotBody& body) {
    const double yaw_rate_cmd = gains.heading_gain * wrap_angle(heading_ref - s.heading);
    const double half = 0.5 * yaw_rate_cmd * body.wheel_separation;
    return {(gains.forward_speed - half) / body.wheel_radius, (gains.forward_speed + half) / body.wheel_radius};
}

inline double wheel_p_control(double omega_cmd, double omega_actual, double motor_gain, double torque_limit) {
    return std::clamp(motor_gain * (omega_cmd - omega_actual), -torque_limit, torque_limit);
}

inline WheelTorques wheel_torques(const RobotState& s, WheelSpeeds cmd, const ControlGains& gains) {
    return {wheel_p_control(cmd.left, s.omega_left, gains.motor_gain, gains.torque_limit),
            wheel_p_control(cmd.right, s.omega_right, gains.motor_gain, gains.torque_limit)};
}

// Leader's environmental yaw torque with I_z psi'' neglected.
inline double estimate_env_torque(const ChainState& s, double leader_steering_torque, double k_alpha) {
    return -leader_steering_torque + k_alpha * (s.robots[0].heading - s.robots[1].heading);
}

// Same estimate for any robot, using each adjacent joint's own stiffness.
inline double estimate_env_torque_at(const ChainState& s, int i, double steering_torque, bool jointed) {
    double est = -steering_torque;
    if (!jointed) return est;
    const double psi = s.robots[i].heading;
    if (i + 1 < kRobots) est -= s.joints[i].yaw_stiffness * wrap_angle(s.robots[i + 1].heading - psi);
    if (i > 0) est -= s.joints[i - 1].yaw_stiffness * wrap_angle(s.robots[i - 1].heading - psi);
    return est;
}

// Yaw torque the first joint exerts on the leader.
inline double leader_constraint_torque(const ChainState& s, double k_alpha) {
    return k_alpha * wrap_angle(s.robots[1].heading - s.robots[0].heading);
}

// Instantaneous switching rule: yield when the steering torque fights the
// joint or the estimated environmental torque is large, otherwise stiffen.
inline double stiffness_rule(double steering_torque, double constraint_torque, double env_torque_estimate,
                             const ControlGains& gains) {
    if (steering_torque * constraint_torque < 0.0 || std::abs(env_torque_estimate) >= gains.env_torque_threshold)
        return gains.stiffness_low;
    return gains.stiffness_high;
}

// The rule with a minimum dwell between changes.
inline double stiffness_switch(double steering_torque, double constraint_torque, double env_torque_estimate,
                               const ControlGains& gains, double current, double time_in_state) {
    const double wanted = stiffness_rule(steering_torque, constraint_torque, env_torque_estimate, gains);
    if (wanted != current && time_in_state < gains.switch_dwell) return current;
    return wanted;
}

// Holds the dwell timer for one trial. Starts yielding (K_low).
class StiffnessController {
public:
    explicit StiffnessController(const ControlGains& gains) : gains_(gains), current_(gains.stiffness_low) {}

    double current() const { return current_; }
    int switch_count() const { return switches_; }

    double update(double steering_torque, double constraint_torque, double env_torque_estimate, double dt) {
        const double next =
            stiffness_switch(steering_torque, constraint_torque, env_torque_estimate, gains_, current_, time_in_state_);
        if (next != current_) {
            current_ = next;
            time_in_state_ = 0.0;
            ++switches_;
        }
        time_in_state_ += dt;
        return current_;
    }

private:
    ControlGains gains_;
    double current_;
    double time_in_state_ = 0.0;
    int switches_ = 0;
};

inline void broadcast_stiffness(ChainState& s, double k_alpha) {
    for (auto& j : s.joints) j.yaw_stiffness = k_alpha;
}

}  // namespace mrscwc
