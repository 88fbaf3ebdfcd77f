#pragma once

// One navigation trial: chain initialization, the per-method control stack,
// fixed-step simulation, trajectory logging and the trial record.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mrscwc/baselines.hpp"
#include "mrscwc/config.hpp"
#include "mrscwc/control.hpp"
#include "mrscwc/dynamics.hpp"
#include "mrscwc/metrics.hpp"
#include "mrscwc/terrain.hpp"

namespace mrscwc {

struct ControlOutput {
    std::array<WheelTorques, kRobots> torques{};
    std::array<double, kRobots> steering_torque{};
    std::array<double, kRobots> env_torque_estimate{};
};

// Per-trial control stack for one method. compute() writes the joint
// parameters for the coming step into the state and returns wheel torques.
class MethodController {
public:
    MethodController(MethodSpec method, const SimConfig& cfg, const TerrainParams& terrain, const ChainState& initial)
        : method_(method), cfg_(cfg), stiffness_(cfg.gains) {
        if (method.navigation == Navigation::AStar) {
            const auto path = plan_astar(terrain, cfg.start, cfg.target.position, cfg.planner_resolution, cfg.planner);
            if (path) tracker_.emplace(*path, cfg.target.position, cfg.lookahead);
            else fallback_ = true;
        }
        if (method.constraint == ConstraintType::MJ)
            head_.emplace(cfg.spacing_delay(), cfg.dt, initial.robots[0].heading);
        if (method.constraint == ConstraintType::D)
            links_.emplace(initial, cfg.spacing_delay(), cfg.dt, cfg.gains.forward_speed);
    }

    bool astar_fallback() const { return fallback_; }
    int stiffness_switches() const { return stiffness_.switch_count(); }
    const PathTracker* tracker() const { return tracker_ ? &*tracker_ : nullptr; }
    bool jointed() const { return method_.constraint != ConstraintType::D; }

    static double initial_stiffness(MethodSpec m, const SimConfig& cfg) {
        switch (m.constraint) {
            case ConstraintType::CWC:
            case ConstraintType::CS: return cfg.gains.stiffness_low;
            case ConstraintType::MJ: return cfg.servo.position_gain;
            case ConstraintType::D: return 0.0;
        }
        return 0.0;
    }

    ControlOutput compute(ChainState& s) {
        const RobotBody& body = cfg_.body;
        const ControlGains& gains = cfg_.gains;

        std::array<double, kRobots> ref{};
        ref[0] = tracker_ ? tracker_->reference(s.robots[0].position)
                          : bearing(s.robots[0].position, cfg_.target.position);

        std::array<double, kJoints> setpoints{};
        if (head_) {
            head_->record(gains.heading_gain * wrap_angle(ref[0] - s.robots[0].heading));
            setpoints = head_->setpoints();
            apply_servo_setpoints(s, setpoints, cfg_.servo);
        }
        if (links_) links_->record(s);

        for (int i = 1; i < kRobots; ++i) {
            switch (method_.constraint) {
                case ConstraintType::MJ: ref[i] = servo_follower_reference(s, i, setpoints); break;
                case ConstraintType::D: ref[i] = links_->follower_reference(s, i, body.half_link_length); break;
                default: ref[i] = s.robots[i - 1].heading; break;
            }
        }

        ControlOutput out;
        for (int i = 0; i < kRobots; ++i) {
            const WheelSpeeds cmd = motion_command(s.robots[i], ref[i], gains, body);
            out.torques[i] = wheel_torques(s.robots[i], cmd, gains);
            out.steering_torque[i] = wheel_forces(body, out.torques[i].left, out.torques[i].right).steering_torque;
        }

        if (method_.constraint == ConstraintType::CWC) {
            const double k = stiffness_.current();
            const double tau1 = out.steering_torque[0];
            const double k_next = stiffness_.update(tau1, leader_constraint_torque(s, k),
                                                    estimate_env_torque(s, tau1, k), cfg_.dt);
            broadcast_stiffness(s, k_next);
        } else if (method_.constraint == ConstraintType::CS) {
            broadcast_stiffness(s, gains.stiffness_low);
        }

        for (int i = 0; i < kRobots; ++i)
            out.env_torque_estimate[i] = estimate_env_torque_at(s, i, out.steering_torque[i], jointed());
        return out;
    }

private:
    MethodSpec method_;
    SimConfig cfg_;
    StiffnessController stiffness_;
    std::optional<PathTracker> tracker_;
    std::optional<HeadFollowing> head_;
    std::optional<VirtualLinks> links_;
    bool fallback_ = false;
};

inline constexpr const char* kTrajectoryHeader = "t,robot,x,y,psi,omega_l,omega_r,k_alpha,tau_l,tau_r,tau_env_hat";

// CSV trajectory log. The first line is a '#' comment carrying the terrain
// id so that plots can verify the pairing; a second one holds the resolved
// config as compact JSON when given.
class TrajectoryLog {
public:
    TrajectoryLog(std::ostream& out, const std::string& terrain_id, MethodSpec method,
                  const nlohmann::json& config = nullptr)
        : out_(out) {
        out_ << "# terrain_id=" << terrain_id << " method=" << to_string(method)
             << " generator_version=" << kGeneratorVersion << "\n";
        if (!config.is_null()) out_ << "# config=" << config.dump() << "\n";
        out_ << kTrajectoryHeader << "\n";
        out_ << std::setprecision(10);
    }

    void write(const ChainState& s, const ControlOutput& c, bool jointed) {
        for (int i = 0; i < kRobots; ++i) {
            const RobotState& r = s.robots[i];
            const double k = jointed ? s.joints[std::min(i, kJoints - 1)].yaw_stiffness : 0.0;
            out_ << s.time << ',' << (i + 1) << ',' << r.position.x << ',' << r.position.y << ',' << r.heading << ','
                 << r.omega_left << ',' << r.omega_right << ',' << k << ',' << c.torques[i].left << ','
                 << c.torques[i].right << ',' << c.env_torque_estimate[i] << '\n';
        }
    }

private:
    std::ostream& out_;
};

struct TrialOptions {
    TrajectoryLog* log = nullptr;
    // Extra wrench on each robot at every step (test instrumentation).
    std::array<Wrench, kRobots> external{};
    // Called after every step with the new state.
    std::function<void(const ChainState&, const ControlOutput&)> observer;
};

inline ChainState initial_chain(MethodSpec method, const SimConfig& cfg) {
    ChainState s = straight_chain(cfg.start, bearing(cfg.start, cfg.target.position), cfg.body,
                                  MethodController::initial_stiffness(method, cfg));
    for (auto& j : s.joints) {
        j.pitch_stiffness = cfg.joint_defaults.pitch_stiffness;
        j.roll_stiffness = cfg.joint_defaults.roll_stiffness;
    }
    return s;
}

inline TrialRecord run_trial(const TerrainParams& terrain, const std::string& terrain_id, MethodSpec method,
                             const SimConfig& cfg, std::uint64_t seed, const TrialOptions& opt = {}) {
    cfg.validate();
    TrialRecord rec;
    rec.terrain_id = terrain_id;
    rec.group = terrain.group;
    rec.method = method;
    rec.seed = seed;
    rec.config = config_to_json(cfg);
    rec.start_distance = norm(cfg.target.position - cfg.start);
    rec.min_distance = rec.start_distance;

    const ChainModel model = cfg.chain_model(method.constraint != ConstraintType::D);
    ChainState state = initial_chain(method, cfg);
    MethodController ctrl(method, cfg, terrain, state);
    rec.astar_fallback = ctrl.astar_fallback();
    if (rec.astar_fallback) rec.diagnostics = "no A* path; fell back to target-direction tracking";

    rec.min_spacing = std::numeric_limits<double>::infinity();
    rec.max_spacing = 0.0;
    auto track_spacing = [&](const ChainState& s) {
        for (int j = 0; j < kJoints; ++j) {
            const double d = center_spacing(s, j);
            rec.min_spacing = std::min(rec.min_spacing, d);
            rec.max_spacing = std::max(rec.max_spacing, d);
            if (model.coupling.enabled) {
                const double gap = norm(front_point(s.robots[j + 1], cfg.body.half_link_length) -
                                        rear_point(s.robots[j], cfg.body.half_link_length));
                rec.max_joint_gap = std::max(rec.max_joint_gap, gap);
            }
        }
    };
    track_spacing(state);

    const long log_every = std::max(1L, std::lround(cfg.log_interval / cfg.dt));
    const long max_steps = std::lround(cfg.target.time_limit / cfg.dt);
    Vec2 leader_prev = state.robots[0].position;
    SeededRng rng(seed);
    std::array<double, kRobots> contact{};  // unit-variance OU states
    const double ou_decay = std::exp(-cfg.dt / cfg.contact_noise_time);
    const double ou_kick = std::sqrt(1.0 - ou_decay * ou_decay);
    std::array<Wrench, kRobots> external = opt.external;

    try {
        for (long k = 0; k < max_steps; ++k) {
            ControlOutput c = ctrl.compute(state);
            if (cfg.torque_noise > 0.0)
                for (auto& t : c.torques) {
                    t.left += cfg.torque_noise * rng.normal();
                    t.right += cfg.torque_noise * rng.normal();
                }
            if (opt.log && k % log_every == 0) opt.log->write(state, c, ctrl.jointed());
            rec.energy += energy_accumulate(c.torques, state.robots, cfg.dt);
            external = opt.external;
            if (cfg.contact_yaw_noise > 0.0)
                for (int i = 0; i < kRobots; ++i) {
                    contact[i] = ou_decay * contact[i] + ou_kick * rng.normal();
                    const Vec2 p = state.robots[i].position;
                    const double slope = std::atan(norm(gradient(terrain, p.x, p.y)));
                    external[i].torque += cfg.contact_yaw_noise * std::sin(slope) * contact[i];
                }
            state = step(state, c.torques, terrain, model, cfg.dt, external);
            if (opt.observer) opt.observer(state, c);

            const Vec2 leader = state.robots[0].position;
            rec.journey += norm(leader - leader_prev);
            leader_prev = leader;
            rec.min_distance = std::min(rec.min_distance, norm(cfg.target.position - leader));
            track_spacing(state);
            if (norm(cfg.target.position - leader) < cfg.target.success_radius) {
                rec.success = true;
                break;
            }
        }
    } catch (const DivergenceError& e) {
        rec.diverged = true;
        rec.success = false;
        if (!rec.diagnostics.empty()) rec.diagnostics += "; ";
        rec.diagnostics += e.what();
    }
    rec.total_time = state.time;
    rec.effective_distance = rec.success ? rec.start_distance : rec.start_distance - rec.min_distance;
    rec.stiffness_switches = ctrl.stiffness_switches();
    return rec;
}

}  // namespace mrscwc
