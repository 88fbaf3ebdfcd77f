#pragma once

// Planar dynamics of a six-robot differential-drive chain coupled by
// stiffness-controllable yaw joints and translational penalty springs, driven
// over an analytic heightfield.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mrscwc/common.hpp"
#include "mrscwc/terrain.hpp"

namespace mrscwc {

inline constexpr int kRobots = 6;
inline constexpr int kJoints = kRobots - 1;

struct RobotBody {
    double mass = 2.0;               // kg
    double yaw_inertia = 0.02;       // kg m^2
    double wheel_radius = 0.05;      // m
    double wheel_separation = 0.2;   // m
    double half_link_length = 0.15;  // m, robot center to joint
    double axle_offset = 0.05;       // m, wheel axle behind the center of mass
    double wheel_inertia = 0.005;    // kg m^2 per wheel, spin axis

    void validate() const {
        if (!(mass > 0 && yaw_inertia > 0 && wheel_radius > 0 && wheel_separation > 0 && half_link_length > 0))
            throw std::invalid_argument("robot body parameters must be strictly positive");
        if (!(wheel_inertia > 0)) throw std::invalid_argument("wheel_inertia must be positive");
        if (!(axle_offset >= 0 && axle_offset < half_link_length))
            throw std::invalid_argument("axle_offset must lie in [0, half_link_length)");
    }
};

struct RobotState {
    Vec2 position;
    double heading = 0.0;  // psi, wrapped to (-pi, pi]
    Vec2 velocity;
    double yaw_rate = 0.0;
    double omega_left = 0.0;  // actual wheel speeds, rad/s
    double omega_right = 0.0;
    double slip_left = 0.0;   // wheel spin beyond rolling, rad/s
    double slip_right = 0.0;

    double forward_speed() const { return dot(velocity, heading_vector(heading)); }
};

struct JointState {
    double yaw_stiffness = 0.0;    // K_alpha, N m/rad
    double pitch_stiffness = 15.0; // K_beta; stored only, the planar model has no pitch
    double roll_stiffness = 30.0;  // K_gamma; stored only
    double relative_angle = 0.0;   // alpha = psi_i - psi_{i+1}
    double angle_setpoint = 0.0;   // nonzero only for position-servoed joints
    double yaw_damping = 0.0;      // N m s/rad, servo damping on alpha rate
};

struct ChainState {
    std::array<RobotState, kRobots> robots{};
    std::array<JointState, kJoints> joints{};
    double time = 0.0;
};

struct EnvModel {
    double gravity = 9.81;
    double traction = 0.8;          // mu
    double linear_drag = 2.0;       // c_v, N s/m
    double yaw_drag = 0.05;         // c_psi, N m s/rad
    double block_slope_deg = 70.0;  // drive vanishes at and above this slope
    double lateral_response_time = 0.02;  // s, relaxation of lateral slip velocity

    void validate() const {
        if (!(gravity >= 0 && traction >= 0 && linear_drag >= 0 && yaw_drag >= 0 && block_slope_deg >= 0 &&
              block_slope_deg <= 90 && lateral_response_time > 0))
            throw std::invalid_argument("environment parameters out of range");
    }
};

struct CouplingModel {
    bool enabled = true;              // false: discrete robots, no joints at all
    double translational_stiffness = 5000.0;  // N/m
    double translational_damping = -1.0;      // N s/m; negative selects critical damping
};

inline double critical_pair_damping(double stiffness, double mass) {
    // Two equal masses: reduced mass m/2.
    return 2.0 * std::sqrt(stiffness * 0.5 * mass);
}

struct ChainModel {
    RobotBody body;
    EnvModel env;
    CouplingModel coupling;
    double divergence_speed = 7.5;  // m/s; 100 v0 for the default speed

    double translational_damping() const {
        return coupling.translational_damping < 0.0
                   ? critical_pair_damping(coupling.translational_stiffness, body.mass)
                   : coupling.translational_damping;
    }
};

struct Wrench {
    Vec2 force;
    double torque = 0.0;

    Wrench& operator+=(const Wrench& o) {
        force += o.force;
        torque += o.torque;
        return *this;
    }
};

struct WheelTorques {
    double left = 0.0;
    double right = 0.0;
};

struct DriveWrench {
    double drive_force = 0.0;     // along the heading
    double steering_torque = 0.0;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline DriveWrench wheel_forces(const RobotBody& body, double tau_left, double tau_right) {
    return {(tau_left + tau_right) / body.wheel_radius,
            body.wheel_separation * (tau_right - tau_left) / (2.0 * body.wheel_radius)};
}

inline Vec2 rear_point(const RobotState& s, double half_link) {
    return s.position - half_link * heading_vector(s.heading);
}

inline Vec2 front_point(const RobotState& s, double half_link) {
    return s.position + half_link * heading_vector(s.heading);
}

// Velocity of the body-fixed material point currently at world position p.
inline Vec2 point_velocity(const RobotState& s, Vec2 p) {
    const Vec2 a = p - s.position;
    return s.velocity + s.yaw_rate * Vec2{-a.y, a.x};
}

// Joint j couples robot j (its rear point) with robot j+1 (its front point).
// The penalty force acts on both robots at the midpoint of the two
// attachment points, so the pair carries no net force and no net torque
// about that point.
struct JointReaction {
    Vec2 point;           // application point
    Vec2 force_on_front;  // on robot j; robot j+1 receives the negation
    double yaw_torque_on_front = 0.0;  // robot j+1 receives the negation
};

inline JointReaction joint_reaction(const ChainState& s, const ChainModel& model, int j,
                                    bool include_damping = true) {
    const double L = model.body.half_link_length;
    const RobotState& a = s.robots[j];
    const RobotState& b = s.robots[j + 1];
    const Vec2 pa = rear_point(a, L);
    const Vec2 pb = front_point(b, L);
    const Vec2 mid = 0.5 * (pa + pb);
    const Vec2 gap = pb - pa;

    JointReaction r;
    r.point = mid;
    r.force_on_front = model.coupling.translational_stiffness * gap;
    if (include_damping) {
        const Vec2 rel = point_velocity(b, mid) - point_velocity(a, mid);
        r.force_on_front += model.translational_damping() * rel;
    }
    const JointState& js = s.joints[j];
    const double alpha = wrap_angle(a.heading - b.heading);
    double t = -js.yaw_stiffness * (alpha - js.angle_setpoint);
    if (include_damping) t -= js.yaw_damping * (a.yaw_rate - b.yaw_rate);
    r.yaw_torque_on_front = t;
    return r;
}

// Total constraint wrench on every robot; boundary robots see only their one
// joint. All zero when the coupling is disabled.
inline std::array<Wrench, kRobots> constraint_wrenches(const ChainState& s, const ChainModel& model,
                                                       bool include_damping = true) {
    std::array<Wrench, kRobots> w{};
    if (!model.coupling.enabled) return w;
    for (int j = 0; j < kJoints; ++j) {
        const JointReaction r = joint_reaction(s, model, j, include_damping);
        const Vec2 fa = r.force_on_front;
        const Vec2 fb = -fa;
        w[j].force += fa;
        w[j].torque += cross(r.point - s.robots[j].position, fa) + r.yaw_torque_on_front;
        w[j + 1].force += fb;
        w[j + 1].torque += cross(r.point - s.robots[j + 1].position, fb) - r.yaw_torque_on_front;
    }
    return w;
}

// Horizontal component of the weight projected onto the tangent plane.
inline Vec2 gravity_force(const RobotBody& body, const EnvModel& env, Vec2 grad) {
    const double k = -body.mass * env.gravity / (1.0 + dot(grad, grad));
    return k * grad;
}

inline double normal_force(const RobotBody& body, const EnvModel& env, Vec2 grad) {
    return body.mass * env.gravity / std::sqrt(1.0 + dot(grad, grad));
}

// Lateral traction acts at the wheel axle. It opposes the lateral component
// of the other applied forces and relaxes the axle's lateral slip velocity.
// It shares the friction circle with the drive force: |lateral| is bounded
// by sqrt((mu N)^2 - drive^2). With the axle behind the center of mass, a
// lateral load yaws the nose toward it.
inline Wrench lateral_traction(const RobotState& s, const RobotBody& body, const EnvModel& env, Vec2 grad,
                               Vec2 applied_force, double drive_force = 0.0) {
    const Vec2 h = heading_vector(s.heading);
    const Vec2 n{-h.y, h.x};
    const double v_lat = dot(s.velocity, n) - body.axle_offset * s.yaw_rate;
    const double demand = dot(applied_force, n) + body.mass * v_lat / env.lateral_response_time;
    const double grip = env.traction * normal_force(body, env, grad);
    const double limit = std::sqrt(std::max(0.0, grip * grip - drive_force * drive_force));
    const double f = -std::clamp(demand, -limit, limit);
    return {f * n, -body.axle_offset * f};
}

// Environmental wrench on one robot. applied_force is the sum of the
// non-environmental horizontal forces acting on it (drive, constraints); it
// only enters through the traction bound.
inline Wrench env_wrench(const RobotState& s, const RobotBody& body, const TerrainParams& terrain,
                         const EnvModel& env, Vec2 applied_force = {}) {
    const Vec2 grad = gradient(terrain, s.position.x, s.position.y);
    const Vec2 g = gravity_force(body, env, grad);
    Wrench w;
    w.force = g - env.linear_drag * s.velocity;
    w.torque = -env.yaw_drag * s.yaw_rate;
    w += lateral_traction(s, body, env, grad, applied_force + w.force);
    return w;
}

inline double traction_ramp(double slope_deg, double block_slope_deg) {
    if (slope_deg >= block_slope_deg) return 0.0;
    if (slope_deg <= block_slope_deg - 10.0) return 1.0;
    return (block_slope_deg - slope_deg) / 10.0;
}

inline double drive_limit(const RobotBody& body, double slope_deg, const EnvModel& env) {
    return env.traction * body.mass * env.gravity * std::cos(deg_to_rad(slope_deg)) *
           traction_ramp(slope_deg, env.block_slope_deg);
}

inline double traction_limit(const RobotBody& body, double slope_deg, const EnvModel& env,
                             double requested_drive) {
    const double limit = drive_limit(body, slope_deg, env);
    return std::clamp(requested_drive, -limit, limit);
}

// Longitudinal contact of one wheel. The wheel rolls while its torque fits
// its share of the traction bound. Beyond it the wheel spins: the contact
// force sits at the bound and the excess torque accelerates the wheel's
// slip, which decays back to rolling once the motor eases off.
struct WheelContact {
    double force = 0.0;
    double slip = 0.0;  // after the step, rad/s
};

inline WheelContact wheel_contact(const RobotBody& body, double limit, double tau, double slip, double dt) {
    const double requested = tau / body.wheel_radius;
    if (slip == 0.0 && std::abs(requested) <= limit) return {requested, 0.0};
    const double dir = slip != 0.0 ? (slip > 0.0 ? 1.0 : -1.0) : (requested > 0.0 ? 1.0 : -1.0);
    const double force = dir * limit;
    const double next = slip + dt * (tau - body.wheel_radius * force) / body.wheel_inertia;
    if (next * dir <= 0.0) return {std::clamp(requested, -limit, limit), 0.0};
    return {force, next};
}

inline void update_joint_angles(ChainState& s) {
    for (int j = 0; j < kJoints; ++j)
        s.joints[j].relative_angle = wrap_angle(s.robots[j].heading - s.robots[j + 1].heading);
}

inline void update_wheel_speeds(RobotState& r, const RobotBody& body) {
    const double v = r.forward_speed();
    const double half = 0.5 * r.yaw_rate * body.wheel_separation;
    r.omega_left = (v - half) / body.wheel_radius + r.slip_left;
    r.omega_right = (v + half) / body.wheel_radius + r.slip_right;
}

struct StepDiagnostics {
    std::array<double, kRobots> applied_drive{};
};

// One semi-implicit Euler step. Velocities are advanced first (with the
// linear damping terms taken at the new velocity), then poses from the new
// velocities. Throws std::invalid_argument for non-finite controls and
// DivergenceError when a speed exceeds model.divergence_speed.
inline ChainState step(const ChainState& state, std::span<const WheelTorques, kRobots> controls,
                       const TerrainParams& terrain, const ChainModel& model, double dt,
                       std::span<const Wrench> external = {}, StepDiagnostics* diag = nullptr) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");
    for (const auto& c : controls)
        if (!std::isfinite(c.left) || !std::isfinite(c.right))
            throw std::invalid_argument("step: non-finite wheel torque");

    constexpr int N = 3 * kRobots;
    using Mat = Eigen::Matrix<double, N, N>;
    using Vec = Eigen::Matrix<double, N, 1>;

    const RobotBody& body = model.body;
    const EnvModel& env = model.env;

    // Explicit (position- and control-dependent) generalized forces.
    std::array<Wrench, kRobots> f{};
    std::array<std::array<double, 2>, kRobots> slip{};
    const auto springs = constraint_wrenches(state, model, /*include_damping=*/false);
    const auto dampers = constraint_wrenches(state, model, /*include_damping=*/true);
    for (int i = 0; i < kRobots; ++i) {
        const RobotState& r = state.robots[i];
        const Vec2 h = heading_vector(r.heading);
        const Vec2 grad = gradient(terrain, r.position.x, r.position.y);
        const double slope = rad_to_deg(std::atan(norm(grad)));

        // Each wheel carries half the traction bound; the drive and steering
        // follow the contact forces actually transmitted.
        const double wheel_limit = 0.5 * drive_limit(body, slope, env);
        const WheelContact cl = wheel_contact(body, wheel_limit, controls[i].left, r.slip_left, dt);
        const WheelContact cr = wheel_contact(body, wheel_limit, controls[i].right, r.slip_right, dt);
        const DriveWrench dw = wheel_forces(body, body.wheel_radius * cl.force, body.wheel_radius * cr.force);
        const double drive = dw.drive_force;
        slip[i] = {cl.slip, cr.slip};
        if (diag) diag->applied_drive[i] = drive;

        Wrench w;
        w.force = drive * h + gravity_force(body, env, grad) + springs[i].force;
        w.torque = dw.steering_torque + springs[i].torque;
        if (i < static_cast<int>(external.size())) w += external[i];

        // The traction bound sees the damping and drag it is about to be
        // combined with, evaluated at the current velocity.
        const Vec2 damping_now = dampers[i].force - springs[i].force - env.linear_drag * r.velocity;
        w += lateral_traction(r, body, env, grad, w.force + damping_now, drive);
        f[i] = w;
    }

    // Damping and joint stiffness are taken implicitly:
    // (M + dt C + dt^2 K) u+ = M u + dt f
    Mat A = Mat::Zero();
    Vec rhs;
    for (int i = 0; i < kRobots; ++i) {
        const RobotState& r = state.robots[i];
        const int k = 3 * i;
        A(k, k) = body.mass + dt * env.linear_drag;
        A(k + 1, k + 1) = body.mass + dt * env.linear_drag;
        A(k + 2, k + 2) = body.yaw_inertia + dt * env.yaw_drag;
        rhs(k) = body.mass * r.velocity.x + dt * f[i].force.x;
        rhs(k + 1) = body.mass * r.velocity.y + dt * f[i].force.y;
        rhs(k + 2) = body.yaw_inertia * r.yaw_rate + dt * f[i].torque;
    }
    if (model.coupling.enabled) {
        const double L = body.half_link_length;
        const double c = model.translational_damping() + dt * model.coupling.translational_stiffness;
        for (int j = 0; j < kJoints; ++j) {
            const RobotState& a = state.robots[j];
            const RobotState& b = state.robots[j + 1];
            const Vec2 mid = 0.5 * (rear_point(a, L) + front_point(b, L));
            // Relative point velocity = B u, B = [-G_a, G_b], G = [I | perp(p - r)].
            Eigen::Matrix<double, 2, 6> B;
            const Vec2 da = mid - a.position;
            const Vec2 db = mid - b.position;
            B << -1, 0, da.y, 1, 0, -db.y,
                  0, -1, -da.x, 0, 1, db.x;
            const Eigen::Matrix<double, 6, 6> blk = dt * c * (B.transpose() * B);
            A.block<6, 6>(3 * j, 3 * j) += blk;

            const double cd = state.joints[j].yaw_damping + dt * state.joints[j].yaw_stiffness;
            if (cd != 0.0) {
                const int ka = 3 * j + 2;
                const int kb = 3 * (j + 1) + 2;
                A(ka, ka) += dt * cd;
                A(kb, kb) += dt * cd;
                A(ka, kb) -= dt * cd;
                A(kb, ka) -= dt * cd;
            }
        }
    }
    const Vec u = A.llt().solve(rhs);

    ChainState next = state;
    next.time = state.time + dt;
    for (int i = 0; i < kRobots; ++i) {
        RobotState& r = next.robots[i];
        const int k = 3 * i;
        r.velocity = {u(k), u(k + 1)};
        r.yaw_rate = u(k + 2);
        r.position += dt * r.velocity;
        r.heading = wrap_angle(r.heading + dt * r.yaw_rate);
        r.slip_left = slip[i][0];
        r.slip_right = slip[i][1];
        update_wheel_speeds(r, body);
        const double speed = norm(r.velocity);
        if (!std::isfinite(speed) || !std::isfinite(r.yaw_rate) || speed > model.divergence_speed) {
            throw DivergenceError("integration diverged at t=" + std::to_string(next.time) + " s: robot " +
                                  std::to_string(i + 1) + " speed " + std::to_string(speed) + " m/s");
        }
    }
    update_joint_angles(next);
    return next;
}

// Robots collinear along `heading`, leader at `start`, spacing 2L, at rest.
inline ChainState straight_chain(Vec2 start, double heading, const RobotBody& body, double k_alpha) {
    ChainState s;
    const Vec2 back = -2.0 * body.half_link_length * heading_vector(heading);
    for (int i = 0; i < kRobots; ++i) {
        s.robots[i].position = start + static_cast<double>(i) * back;
        s.robots[i].heading = wrap_angle(heading);
    }
    for (auto& j : s.joints) j.yaw_stiffness = k_alpha;
    update_joint_angles(s);
    return s;
}

inline double center_spacing(const ChainState& s, int j) {
    return norm(s.robots[j].position - s.robots[j + 1].position);
}

}  // namespace mrscwc
