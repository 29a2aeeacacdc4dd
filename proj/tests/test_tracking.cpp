#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <vector>

#include "mrsafe/tracking.hpp"

using namespace mrsafe;
constexpr double kPi = std::numbers::pi;

TEST(Bearing, Examples) {
    EXPECT_NEAR(bearing_angle({0, 0}, {1, 1}), kPi / 4, 1e-15);
    EXPECT_NEAR(bearing_angle({0, 0}, {1, -1}), -kPi / 4, 1e-15);
    EXPECT_NEAR(bearing_angle({0, 0}, {-1, 0}), kPi, 1e-15);
    EXPECT_NEAR(bearing_angle({2, 3}, {2, 4}), kPi / 2, 1e-15);
    EXPECT_THROW(bearing_angle({1, 1}, {1, 1}), InputError);
}

TEST(Bearing, LocalFrame) {
    // Neighbour dead ahead, to the left and to the right of a robot facing +y.
    const Pose robot{0, 0, kPi / 2};
    EXPECT_NEAR(local_bearing(robot, {0, 2}), 0.0, 1e-15);
    EXPECT_NEAR(local_bearing(robot, {-1, 0}), kPi / 2, 1e-15);
    EXPECT_NEAR(local_bearing(robot, {1, 0}), -kPi / 2, 1e-15);
    EXPECT_NEAR(std::abs(local_bearing(robot, {0, -1})), kPi, 1e-15);
}

TEST(EscapeSign, Examples) {
    const std::vector<double> a{kPi / 4}, b{kPi / 4, -kPi / 6}, c{0.0};
    EXPECT_EQ(escape_sign(a), -1);
    EXPECT_EQ(escape_sign(b), 1);
    EXPECT_EQ(escape_sign(c), -1);
    EXPECT_THROW(escape_sign(std::vector<double>{}), InputError);
}

TEST(EscapeSign, PermutationInvariant) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_int_distribution<int> len(1, 8);
    for (int k = 0; k < 2000; ++k) {
        std::vector<double> b(static_cast<std::size_t>(len(rng)));
        for (auto& x : b) x = ang(rng);
        const int g = escape_sign(b);
        for (int p = 0; p < 5; ++p) {
            std::shuffle(b.begin(), b.end(), rng);
            ASSERT_EQ(escape_sign(b), g);
        }
    }
}

TEST(RotationQ, Examples) {
    Mat3 expected;
    expected << 1, 0, 0, 0, 1, 0, 0, 0, 0;
    EXPECT_EQ(rotation_Q(1, 0.0), expected);
    const Mat3 Q = rotation_Q(1, deg2rad(68.0));
    expected << 0.374607, -0.927184, 0, 0.927184, 0.374607, 0, 0, 0, 0;
    EXPECT_LT((Q - expected).cwiseAbs().maxCoeff(), 5e-7);
    const Mat3 Qm = rotation_Q(-1, deg2rad(68.0));
    EXPECT_DOUBLE_EQ(Qm(0, 1), -Q(0, 1));
    EXPECT_DOUBLE_EQ(Qm(1, 0), -Q(1, 0));
    EXPECT_DOUBLE_EQ(Qm(0, 0), Q(0, 0));
}

TEST(RotationQ, BlockIsProperRotation) {
    for (int g : {-1, 1})
        for (double q = 0.0; q <= kPi; q += kPi / 97) {
            const Mat3 Q = rotation_Q(g, q);
            const Mat2 R = Q.topLeftCorner<2, 2>();
            EXPECT_LT((R.transpose() * R - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
            EXPECT_EQ(Q.row(2), Eigen::RowVector3d::Zero());
            EXPECT_EQ(Q.col(2), Vec3::Zero());
        }
}

TEST(Zeta, Examples) {
    EXPECT_EQ(zeta(true, 2.0), 2.0);
    EXPECT_EQ(zeta(false, 2.0), 0.0);
    EXPECT_EQ(zeta(true, 0.0), 0.0);
}

namespace {

ReferenceSpec straight(double speed) {
    ReferenceSpec r;
    r.goal = {10.0 * speed, 0.0};
    r.duration = 10.0;
    return r;
}

}  // namespace

TEST(NominalAccel, OnReferenceKeepsFeedforwardOnly) {
    const RobotParams p;
    const ControlGains g;
    RobotState s;
    s.pose = {1, 2, 0.7};
    s.u = {3, 5};
    const auto m = build_kinematics(s.pose, s.u, p);
    ReferenceSample ref;
    ref.P_d << 1, 2, 0.7;
    ref.V_d = m.Gamma * s.u;
    ref.a_hat_d << 0.1, -0.2, 0.05;
    const auto cmd = nominal_accel(s, m, ref, g, 0.0, 1);
    EXPECT_LT((cmd.dzr - (ref.a_hat_d - m.Gamma_dot * s.u)).norm(), 1e-14);
    EXPECT_EQ(cmd.xi, Vec3::Zero());
    EXPECT_FALSE(cmd.zeta_active);
}

TEST(NominalAccel, AtRestOnLineStart) {
    const RobotParams p;
    const ControlGains g;
    RobotState s;
    const auto m = build_kinematics(s.pose, s.u, p);
    const auto ref = reference_at(straight(0.5), 0.0);
    const auto cmd = nominal_accel(s, m, ref, g, 0.0, 1);
    EXPECT_LT((cmd.dzr - Vec3(4.5, 0, 0)).norm(), 1e-12);

    // With the escape term: 9 V_d + 2 Q V_d.
    const auto esc = nominal_accel(s, m, ref, g, 2.0, 1);
    const Vec3 Vd(0.5, 0, 0);
    const Vec3 expected = 9.0 * Vd + 2.0 * Vec3(0.374607 * 0.5, 0.927184 * 0.5, 0.0);
    EXPECT_LT((esc.dzr - expected).norm(), 1e-6);
    EXPECT_TRUE(esc.zeta_active);
    EXPECT_EQ(esc.g, 1);
    EXPECT_LT((esc.dzr - 9.0 * Vd - 2.0 * rotation_Q(1, g.q) * Vd).norm(), 1e-12);
}

TEST(NominalAccel, HeadingErrorIsWrapped) {
    const RobotParams p;
    const ControlGains g;
    RobotState s;
    s.pose = {0, 0, kPi - 0.1};
    const auto m = build_kinematics(s.pose, s.u, p);
    ReferenceSample ref;
    ref.P_d << 0, 0, -kPi + 0.1;
    const auto cmd = nominal_accel(s, m, ref, g, 0.0, 1);
    EXPECT_NEAR(cmd.xi(2), -0.2, 1e-12);
    EXPECT_NEAR(cmd.dzr(2), g.kappa3 * g.kappa4 * 0.2, 1e-12);
}

// Planar double integrator driven by the law with Gamma = [I; 0]: the
// commanded acceleration is always realisable, so the composite error
// e = Gamma u - V_d + kappa3 xi must decay at rate kappa4 - zeta.
TEST(NominalAccel, CompositeErrorDecay) {
    ControlGains g;
    KinematicMatrices m;
    m.Gamma << 1, 0, 0, 1, 0, 0;
    m.Gamma_dot.setZero();
    m.A = Mat2::Identity();
    m.A_dot.setZero();
    m.Lambda.setZero();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    const double dt = 1e-3;
    for (double z : {0.0, 1.0, 2.0})
        for (int g_sign : {-1, 1})
            for (int trial = 0; trial < 5; ++trial) {
                RobotState s;
                s.pose = {u(rng), u(rng), 0.0};
                s.u = {u(rng), u(rng)};
                ReferenceSpec ref;
                ref.start = {0, 0};
                ref.goal = {3, 1.5};
                ref.duration = 6.0;
                const double heading = std::atan2(1.5, 3.0);
                s.pose.theta = heading;
                auto e_of = [&](double t) {
                    const auto r = reference_at(ref, t);
                    return (m.Gamma * s.u - r.V_d + g.kappa3 * tracking_error(s.pose, r)).norm();
                };
                const double e0 = e_of(0.0);
                for (int k = 1; k <= 4000; ++k) {
                    const double t = (k - 1) * dt;
                    const auto r = reference_at(ref, t);
                    const auto cmd = nominal_accel(s, m, r, g, z, g_sign);
                    const Vec2 udot = cmd.dzr.head<2>();
                    s.pose.x += s.u(0) * dt;
                    s.pose.y += s.u(1) * dt;
                    s.u += udot * dt;
                    const double tk = k * dt;
                    ASSERT_LE(e_of(tk), e0 * std::exp(-(g.kappa4 - z) * tk) + 10 * dt)
                        << "zeta " << z << " g " << g_sign << " t " << tk;
                }
            }
}

// Real robot driving straight behind a straight reference: wheels stay
// equal, Gamma u_dot = dzr is exactly realisable and the tracking error
// decays monotonically once the transient has passed.
TEST(NominalAccel, StraightLineErrorDecaysMonotonically) {
    const RobotParams p;
    const ControlGains g;
    ReferenceSpec ref;
    ref.goal = {10, 0};
    ref.duration = 20;
    RobotState s;
    s.pose = {-0.5, 0, 0};
    const double dt = 1e-3;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
        const double t = k * dt;
        const auto m = build_kinematics(s.pose, s.u, p);
        const auto r = reference_at(ref, t);
        const auto cmd = nominal_accel(s, m, r, g, 0.0, 1);
        const Vec2 udot = m.Gamma.colPivHouseholderQr().solve(cmd.dzr);
        ASSERT_LT((m.Gamma * udot - cmd.dzr).norm(), 1e-9);
        const double err = cmd.xi.norm();
        if (t > 1.0) ASSERT_LE(err, prev + 1e-12);
        prev = err;
        s = step(s, udot, dt, p);
    }
    EXPECT_LT(prev, 1e-3);
}
