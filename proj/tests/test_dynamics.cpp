#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mrscwc/dynamics.hpp"

using namespace mrscwc;

namespace {

using Controls = std::array<WheelTorques, kRobots>;

ChainModel frictionless_model() {
    ChainModel m;
    m.env.traction = 0.0;
    m.env.linear_drag = 0.0;
    m.env.yaw_drag = 0.0;
    return m;
}

ChainState random_chain(std::mt19937_64& gen, double k_alpha) {
    std::normal_distribution<double> n(0.0, 1.0);
    const RobotBody body;
    ChainState s = straight_chain({1.0, 2.0}, 0.7, body, k_alpha);
    for (auto& r : s.robots) {
        r.position += Vec2{0.01 * n(gen), 0.01 * n(gen)};
        r.heading = wrap_angle(r.heading + 0.2 * n(gen));
        r.velocity = {0.1 * n(gen), 0.1 * n(gen)};
        r.yaw_rate = 0.3 * n(gen);
    }
    update_joint_angles(s);
    return s;
}

Vec2 momentum(const ChainState& s, const RobotBody& body) {
    Vec2 p;
    for (const auto& r : s.robots) p += body.mass * r.velocity;
    return p;
}

double mechanical_energy(const ChainState& s, const ChainModel& m) {
    double e = 0.0;
    for (const auto& r : s.robots)
        e += 0.5 * m.body.mass * dot(r.velocity, r.velocity) + 0.5 * m.body.yaw_inertia * r.yaw_rate * r.yaw_rate;
    for (int j = 0; j < kJoints; ++j) {
        const Vec2 gap = front_point(s.robots[j + 1], m.body.half_link_length) -
                         rear_point(s.robots[j], m.body.half_link_length);
        e += 0.5 * m.coupling.translational_stiffness * dot(gap, gap);
        e += 0.5 * s.joints[j].yaw_stiffness * s.joints[j].relative_angle * s.joints[j].relative_angle;
    }
    return e;
}

}  // namespace

TEST(WheelForces, Examples) {
    const RobotBody body;
    const DriveWrench zero = wheel_forces(body, 0.0, 0.0);
    EXPECT_EQ(zero.drive_force, 0.0);
    EXPECT_EQ(zero.steering_torque, 0.0);
    const DriveWrench fwd = wheel_forces(body, 0.5, 0.5);
    EXPECT_NEAR(fwd.drive_force, 20.0, 1e-12);
    EXPECT_EQ(fwd.steering_torque, 0.0);
    const DriveWrench turn = wheel_forces(body, -0.3, 0.3);
    EXPECT_EQ(turn.drive_force, 0.0);
    EXPECT_NEAR(turn.steering_torque, 0.2 * 0.6 / 0.1, 1e-12);
}

TEST(ConstraintWrenches, RestConfigurationIsZero) {
    const ChainModel m;
    const ChainState s = straight_chain({0, 0}, 0.3, m.body, 100.0);
    for (const auto& w : constraint_wrenches(s, m)) {
        EXPECT_NEAR(w.force.x, 0.0, 1e-12);
        EXPECT_NEAR(w.force.y, 0.0, 1e-12);
        EXPECT_NEAR(w.torque, 0.0, 1e-12);
    }
}

TEST(ConstraintWrenches, YawTermExample) {
    const ChainModel m;
    ChainState s = straight_chain({0, 0}, 0.0, m.body, 100.0);
    s.robots[1].heading = 0.1;
    update_joint_angles(s);
    const JointReaction r = joint_reaction(s, m, 0);
    EXPECT_NEAR(r.yaw_torque_on_front, 10.0, 1e-12);  // on robot 1; robot 2 gets -10
}

TEST(ConstraintWrenches, InternalForcesCancel) {
    std::mt19937_64 gen(3);
    const ChainModel m;
    for (int k = 0; k < 200; ++k) {
        const ChainState s = random_chain(gen, k % 2 ? 100.0 : 5.0);
        Vec2 f;
        double torque_about_origin = 0.0, scale = 0.0;
        for (int i = 0; i < kRobots; ++i) {
            const Wrench w = constraint_wrenches(s, m)[i];
            f += w.force;
            torque_about_origin += w.torque + cross(s.robots[i].position, w.force);
            scale += norm(w.force) + std::abs(w.torque);
        }
        EXPECT_LE(norm(f), 1e-9 * scale);
        EXPECT_LE(std::abs(torque_about_origin), 1e-9 * scale * 10.0);
    }
}

TEST(ConstraintWrenches, DisabledCouplingIsZero) {
    std::mt19937_64 gen(4);
    ChainModel m;
    m.coupling.enabled = false;
    const ChainState s = random_chain(gen, 100.0);
    for (const auto& w : constraint_wrenches(s, m)) {
        EXPECT_EQ(w.force.x, 0.0);
        EXPECT_EQ(w.force.y, 0.0);
        EXPECT_EQ(w.torque, 0.0);
    }
}

TEST(EnvWrench, FlatAtRestIsZero) {
    const ChainModel m;
    RobotState r;
    const Wrench w = env_wrench(r, m.body, TerrainParams{}, m.env);
    EXPECT_EQ(w.force.x, 0.0);
    EXPECT_EQ(w.force.y, 0.0);
    EXPECT_EQ(w.torque, 0.0);
}

TEST(EnvWrench, GravityProjectionExample) {
    TerrainParams p;
    p.amplitude = {0.5, 0.0, 0.0};
    p.frequency = {1.0, 0.0, 0.0};
    RobotState r;
    r.position = {0.0, kPi / 2};  // gradient (0.5, 0)
    const ChainModel m;
    const Vec2 g = gradient(p, r.position.x, r.position.y);
    ASSERT_NEAR(g.x, 0.5, 1e-12);
    ASSERT_NEAR(g.y, 0.0, 1e-12);
    const Wrench w = env_wrench(r, m.body, p, m.env);
    EXPECT_NEAR(w.force.x, -2.0 * 9.81 * 0.5 / 1.25, 1e-9);
    EXPECT_NEAR(gravity_force(m.body, m.env, {-0.5, 0.0}).x, 7.848, 1e-9);
}

TEST(EnvWrench, LateralTractionBoundedByFrictionCircle) {
    const ChainModel m;
    RobotState r;
    r.velocity = {0.0, 5.0};  // pure sideways slide
    const Vec2 grad{0.0, 0.0};
    const double grip = m.env.traction * normal_force(m.body, m.env, grad);
    EXPECT_NEAR(norm(lateral_traction(r, m.body, m.env, grad, {}).force), grip, 1e-12);
    const double drive = 0.6 * grip;
    EXPECT_NEAR(norm(lateral_traction(r, m.body, m.env, grad, {}, drive).force), 0.8 * grip, 1e-12);
}

TEST(TractionLimit, Examples) {
    const RobotBody body;
    const EnvModel env;
    EXPECT_EQ(traction_limit(body, 0.0, env, 3.0), 3.0);
    EXPECT_EQ(traction_limit(body, 70.0, env, 3.0), 0.0);
    EXPECT_EQ(traction_limit(body, 80.0, env, -3.0), 0.0);
    const double limit = 0.8 * 2.0 * 9.81 * std::cos(deg_to_rad(65.0)) * 0.5;
    EXPECT_NEAR(traction_limit(body, 65.0, env, 100.0), limit, 1e-12);
    EXPECT_NEAR(traction_limit(body, 65.0, env, -100.0), -limit, 1e-12);
}

TEST(WheelContact, RollsWithinBoundAndSpinsBeyond) {
    const RobotBody body;
    const WheelContact roll = wheel_contact(body, 10.0, 0.2, 0.0, 0.005);
    EXPECT_NEAR(roll.force, 4.0, 1e-12);
    EXPECT_EQ(roll.slip, 0.0);
    const WheelContact spin = wheel_contact(body, 1.0, 0.2, 0.0, 0.005);
    EXPECT_EQ(spin.force, 1.0);
    EXPECT_GT(spin.slip, 0.0);
    // Torque removed: ground friction brakes the spin, r F / J = 10 rad/s^2,
    // until the wheel grips again.
    WheelContact c = spin;
    int steps = 0;
    while (c.slip != 0.0 && steps < 100) {
        const double before = c.slip;
        c = wheel_contact(body, 1.0, 0.0, c.slip, 0.005);
        EXPECT_LT(c.slip, before);
        ++steps;
    }
    EXPECT_EQ(c.slip, 0.0);
    EXPECT_LE(steps, static_cast<int>(std::ceil(spin.slip / (10.0 * 0.005))) + 1);
    EXPECT_EQ(c.force, 0.0);
}

TEST(Step, EquilibriumOnFlatGround) {
    const ChainModel m;
    const ChainState s = straight_chain({0, 0}, 0.5, m.body, 5.0);
    const Controls zero{};
    const ChainState n = step(s, zero, TerrainParams{}, m, 0.005);
    EXPECT_DOUBLE_EQ(n.time, 0.005);
    for (int i = 0; i < kRobots; ++i) {
        EXPECT_NEAR(norm(n.robots[i].position - s.robots[i].position), 0.0, 1e-12);
        EXPECT_NEAR(n.robots[i].heading, s.robots[i].heading, 1e-12);
        EXPECT_NEAR(norm(n.robots[i].velocity), 0.0, 1e-12);
    }
}

TEST(Step, ConstantForceClosedForm) {
    ChainModel m;
    m.coupling.enabled = false;
    m.env.traction = 50.0;  // never saturates
    m.env.linear_drag = 0.0;
    m.env.yaw_drag = 0.0;
    ChainState s = straight_chain({0, 0}, 0.0, m.body, 0.0);
    Controls c;
    for (auto& t : c) t = {0.05, 0.05};  // F = 2 N
    const double dt = 0.005;
    for (int k = 0; k < 200; ++k) s = step(s, c, TerrainParams{}, m, dt);
    const double expected = 2.0 * 1.0 / m.body.mass;
    for (const auto& r : s.robots) EXPECT_NEAR(r.velocity.x, expected, 0.01 * expected);
}

TEST(Step, PenaltySpringSettlesWithoutEnergyGain) {
    const ChainModel m = frictionless_model();
    ChainState s = straight_chain({0, 0}, 0.0, m.body, 5.0);
    s.robots[0].position.x += 0.02;  // stretched along the link axis
    const Controls zero{};
    double e = mechanical_energy(s, m);
    const double e0 = e;
    for (int k = 0; k < 2000; ++k) {
        s = step(s, zero, TerrainParams{}, m, 0.005);
        const double en = mechanical_energy(s, m);
        ASSERT_LE(en, e + 1e-12) << "step " << k;
        e = en;
    }
    EXPECT_LT(e, 1e-3 * e0);
    EXPECT_NEAR(center_spacing(s, 0), 2.0 * m.body.half_link_length, 1e-4);
}

TEST(Step, MomentumConservedOnFreeFlatChain) {
    std::mt19937_64 gen(11);
    const ChainModel m = frictionless_model();
    ChainState s = random_chain(gen, 100.0);
    const Vec2 p0 = momentum(s, m.body);
    const Controls zero{};
    for (int k = 0; k < 10000; ++k) s = step(s, zero, TerrainParams{}, m, 0.005);
    EXPECT_LE(norm(momentum(s, m.body) - p0), 1e-6 * norm(p0));
}

TEST(Step, HeadingWrappedAndWheelSpeedsKinematic) {
    ChainModel m;
    m.coupling.enabled = false;
    ChainState s = straight_chain({0, 0}, kPi - 1e-4, m.body, 0.0);
    for (auto& r : s.robots) {
        r.yaw_rate = 0.5;
        r.velocity = 0.1 * heading_vector(r.heading);
    }
    const Controls zero{};
    const ChainState n = step(s, zero, TerrainParams{}, m, 0.005);
    for (const auto& r : n.robots) {
        EXPECT_GT(r.heading, -kPi);
        EXPECT_LE(r.heading, kPi);
        const double v = r.forward_speed();
        EXPECT_NEAR(r.omega_left, (v - 0.5 * r.yaw_rate * m.body.wheel_separation) / m.body.wheel_radius, 1e-12);
        EXPECT_NEAR(r.omega_right, (v + 0.5 * r.yaw_rate * m.body.wheel_separation) / m.body.wheel_radius, 1e-12);
    }
}

TEST(Step, BitIdenticalRepeats) {
    std::mt19937_64 gen(5);
    const ChainModel m;
    const ChainState s = random_chain(gen, 100.0);
    Controls c;
    for (int i = 0; i < kRobots; ++i) c[i] = {0.1 * i, -0.05 * i};
    TerrainParams p = draw_terrain(8);
    ChainState a = s, b = s;
    for (int k = 0; k < 500; ++k) {
        a = step(a, c, p, m, 0.005);
        b = step(b, c, p, m, 0.005);
    }
    for (int i = 0; i < kRobots; ++i) {
        EXPECT_EQ(a.robots[i].position.x, b.robots[i].position.x);
        EXPECT_EQ(a.robots[i].position.y, b.robots[i].position.y);
        EXPECT_EQ(a.robots[i].heading, b.robots[i].heading);
    }
}

TEST(Step, RejectsBadInput) {
    const ChainModel m;
    const ChainState s = straight_chain({0, 0}, 0.0, m.body, 5.0);
    Controls c{};
    c[2].left = std::nan("");
    EXPECT_THROW(step(s, c, TerrainParams{}, m, 0.005), std::invalid_argument);
    const Controls zero{};
    EXPECT_THROW(step(s, zero, TerrainParams{}, m, 0.0), std::invalid_argument);
}

TEST(Step, FlagsDivergence) {
    ChainModel m;
    ChainState s = straight_chain({0, 0}, 0.0, m.body, 5.0);
    for (auto& r : s.robots) r.velocity = {20.0, 0.0};
    const Controls zero{};
    EXPECT_THROW(step(s, zero, TerrainParams{}, m, 0.005), DivergenceError);
}

TEST(Step, StuckOnBlockedSlope) {
    // A robot on ground steeper than the block slope cannot drive.
    ChainModel m;
    m.coupling.enabled = false;
    TerrainParams p;
    p.amplitude = {1.5, 0.0, 0.0};
    p.frequency = {2.5, 0.0, 0.0};
    p.vertical_scale = 1.5;
    ChainState s = straight_chain({0.0, 0.0}, 0.0, m.body, 0.0);
    ASSERT_GE(slope_deg_at(p, 0.0, 0.0), 70.0);
    StepDiagnostics diag;
    Controls c;
    for (auto& t : c) t = {1.0, 1.0};
    step(s, c, p, m, 0.005, {}, &diag);
    EXPECT_EQ(diag.applied_drive[0], 0.0);
}
