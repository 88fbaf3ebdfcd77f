#pragma once

// Flat trial configuration: one JSON object of numeric keys, plus
// `key=value` overrides. Unknown keys are rejected.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrscwc/baselines.hpp"
#include "mrscwc/control.hpp"
#include "mrscwc/dynamics.hpp"

namespace mrscwc {

struct SimConfig {
    ControlGains gains;
    RobotBody body;
    EnvModel env;
    CouplingModel coupling;
    JointState joint_defaults;  // K_beta, K_gamma
    MotorizedJointGains servo;
    PlannerWeights planner;
    double planner_resolution = 0.25;
    double lookahead = 0.6;
    NavigationTarget target;
    Vec2 start{0.0, 0.0};
    double dt = 0.005;
    double log_interval = 0.1;
    double divergence_factor = 100.0;  // speed cap as a multiple of v0
    // Std. dev. of an independent Gaussian disturbance added to every wheel
    // torque at every step, drawn from the per-trial generator, N m.
    double torque_noise = 0.05;
    // Terrain contact yaw disturbance: per-robot Ornstein-Uhlenbeck torque
    // with stationary std. dev. contact_yaw_noise * sin(local slope), N m,
    // and correlation time contact_noise_time, s.
    double contact_yaw_noise = 0.5;
    double contact_noise_time = 1.0;

    // Spacing travel time 2L / v0 used by the delay lines.
    double spacing_delay() const { return 2.0 * body.half_link_length / gains.forward_speed; }

    ChainModel chain_model(bool jointed) const {
        ChainModel m;
        m.body = body;
        m.env = env;
        m.coupling = coupling;
        m.coupling.enabled = jointed;
        m.divergence_speed = divergence_factor * gains.forward_speed;
        return m;
    }

    void validate() const {
        gains.validate();
        body.validate();
        env.validate();
        if (!(dt > 0) || !(log_interval > 0)) throw std::invalid_argument("dt and log_interval must be positive");
        if (!(target.success_radius > 0) || !(target.time_limit > 0))
            throw std::invalid_argument("success_radius and time_limit must be positive");
        if (!(coupling.translational_stiffness >= 0)) throw std::invalid_argument("k_trans must be nonnegative");
        if (!(planner_resolution > 0) || !(lookahead > 0))
            throw std::invalid_argument("astar_resolution and lookahead must be positive");
        if (!(divergence_factor > 0)) throw std::invalid_argument("divergence_factor must be positive");
        if (!(torque_noise >= 0)) throw std::invalid_argument("torque_noise must be nonnegative");
        if (!(contact_yaw_noise >= 0) || !(contact_noise_time > 0))
            throw std::invalid_argument("contact_yaw_noise must be nonnegative and contact_noise_time positive");
    }
};

struct ConfigKey {
    const char* name;
    std::function<double&(SimConfig&)> ref;
};

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"v0", [](SimConfig& c) -> double& { return c.gains.forward_speed; }},
        {"kp", [](SimConfig& c) -> double& { return c.gains.heading_gain; }},
        {"km", [](SimConfig& c) -> double& { return c.gains.motor_gain; }},
        {"k_low", [](SimConfig& c) -> double& { return c.gains.stiffness_low; }},
        {"k_high", [](SimConfig& c) -> double& { return c.gains.stiffness_high; }},
        {"tau_env_threshold", [](SimConfig& c) -> double& { return c.gains.env_torque_threshold; }},
        {"switch_dwell", [](SimConfig& c) -> double& { return c.gains.switch_dwell; }},
        {"tau_max", [](SimConfig& c) -> double& { return c.gains.torque_limit; }},
        {"mass", [](SimConfig& c) -> double& { return c.body.mass; }},
        {"yaw_inertia", [](SimConfig& c) -> double& { return c.body.yaw_inertia; }},
        {"wheel_radius", [](SimConfig& c) -> double& { return c.body.wheel_radius; }},
        {"wheel_separation", [](SimConfig& c) -> double& { return c.body.wheel_separation; }},
        {"half_link_length", [](SimConfig& c) -> double& { return c.body.half_link_length; }},
        {"axle_offset", [](SimConfig& c) -> double& { return c.body.axle_offset; }},
        {"wheel_inertia", [](SimConfig& c) -> double& { return c.body.wheel_inertia; }},
        {"gravity", [](SimConfig& c) -> double& { return c.env.gravity; }},
        {"mu", [](SimConfig& c) -> double& { return c.env.traction; }},
        {"linear_drag", [](SimConfig& c) -> double& { return c.env.linear_drag; }},
        {"yaw_drag", [](SimConfig& c) -> double& { return c.env.yaw_drag; }},
        {"block_slope_deg", [](SimConfig& c) -> double& { return c.env.block_slope_deg; }},
        {"lateral_response_time", [](SimConfig& c) -> double& { return c.env.lateral_response_time; }},
        {"k_trans", [](SimConfig& c) -> double& { return c.coupling.translational_stiffness; }},
        {"trans_damping", [](SimConfig& c) -> double& { return c.coupling.translational_damping; }},
        {"k_beta", [](SimConfig& c) -> double& { return c.joint_defaults.pitch_stiffness; }},
        {"k_gamma", [](SimConfig& c) -> double& { return c.joint_defaults.roll_stiffness; }},
        {"mj_kp", [](SimConfig& c) -> double& { return c.servo.position_gain; }},
        {"mj_kd", [](SimConfig& c) -> double& { return c.servo.damping; }},
        {"astar_resolution", [](SimConfig& c) -> double& { return c.planner_resolution; }},
        {"w_slope", [](SimConfig& c) -> double& { return c.planner.slope_weight; }},
        {"w_tip", [](SimConfig& c) -> double& { return c.planner.tip_weight; }},
        {"astar_blocked_slope_deg", [](SimConfig& c) -> double& { return c.planner.blocked_slope_deg; }},
        {"lookahead", [](SimConfig& c) -> double& { return c.lookahead; }},
        {"target_x", [](SimConfig& c) -> double& { return c.target.position.x; }},
        {"target_y", [](SimConfig& c) -> double& { return c.target.position.y; }},
        {"start_x", [](SimConfig& c) -> double& { return c.start.x; }},
        {"start_y", [](SimConfig& c) -> double& { return c.start.y; }},
        {"success_radius", [](SimConfig& c) -> double& { return c.target.success_radius; }},
        {"time_limit", [](SimConfig& c) -> double& { return c.target.time_limit; }},
        {"dt", [](SimConfig& c) -> double& { return c.dt; }},
        {"log_interval", [](SimConfig& c) -> double& { return c.log_interval; }},
        {"divergence_factor", [](SimConfig& c) -> double& { return c.divergence_factor; }},
        {"torque_noise", [](SimConfig& c) -> double& { return c.torque_noise; }},
        {"contact_yaw_noise", [](SimConfig& c) -> double& { return c.contact_yaw_noise; }},
        {"contact_noise_time", [](SimConfig& c) -> double& { return c.contact_noise_time; }},
    };
    return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
    for (const auto& k : config_keys())
        if (name == k.name) return &k;
    return nullptr;
}

inline void set_config_value(SimConfig& c, std::string_view key, double value) {
    const ConfigKey* k = find_config_key(key);
    if (!k) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
    if (!std::isfinite(value)) throw std::invalid_argument("config key '" + std::string(key) + "' must be finite");
    k->ref(c) = value;
}

inline nlohmann::json config_to_json(const SimConfig& c) {
    SimConfig copy = c;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : config_keys()) j[k.name] = k.ref(copy);
    return j;
}

inline void apply_config_json(SimConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number())
            throw std::invalid_argument("config key '" + key + "' must be a number");
        set_config_value(c, key, value.get<double>());
    }
}

inline SimConfig config_from_json(const nlohmann::json& j) {
    SimConfig c;
    apply_config_json(c, j);
    c.validate();
    return c;
}

// Parses "key=value".
inline void apply_override(SimConfig& c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw std::invalid_argument("override '" + std::string(assignment) + "' is not of the form key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty())
        throw std::invalid_argument("override value for '" + key + "' is not a number: '" + text + "'");
    set_config_value(c, key, value);
}

}  // namespace mrscwc
