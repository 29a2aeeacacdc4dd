#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "mrsafe/types.hpp"

namespace mrsafe {

/// Jacobians of the offset control point and heading with respect to the
/// wheel rates, plus their time derivatives along the current motion.
struct KinematicMatrices {
    Mat2 A;          // wheel rates -> control point velocity
    Vec2 Lambda;     // wheel rates -> heading rate
    Mat32 Gamma;     // [A; Lambda^T]
    Mat2 A_dot;      // dA/dtheta * theta_dot
    Mat32 Gamma_dot; // [A_dot; 0]
};

/// Planar-velocity Jacobian of the control point. Columns are (left, right)
/// wheels, so a faster right wheel turns the robot counter-clockwise.
inline Mat2 build_A(const Pose& pose, const RobotParams& params) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    const double half = params.wheel_radius / 2.0;
    const double k = params.wheel_radius * params.offset / params.axle_length;
    Mat2 A;
    A << half * c + k * s, half * c - k * s,
         half * s - k * c, half * s + k * c;
    return A;
}

/// Derivative of build_A with respect to theta.
inline Mat2 build_dA_dtheta(const Pose& pose, const RobotParams& params) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    const double half = params.wheel_radius / 2.0;
    const double k = params.wheel_radius * params.offset / params.axle_length;
    Mat2 dA;
    dA << -half * s + k * c, -half * s - k * c,
           half * c + k * s,  half * c - k * s;
    return dA;
}

inline Vec2 build_Lambda(const RobotParams& params) {
    const double r = params.wheel_radius / params.axle_length;
    return {-r, r};
}

inline KinematicMatrices build_kinematics(const Pose& pose, const Vec2& u, const RobotParams& params) {
    KinematicMatrices m;
    m.A = build_A(pose, params);
    m.Lambda = build_Lambda(params);
    m.Gamma.topRows<2>() = m.A;
    m.Gamma.row(2) = m.Lambda.transpose();
    const double theta_dot = m.Lambda.dot(u);
    m.A_dot = build_dA_dtheta(pose, params) * theta_dot;
    m.Gamma_dot.topRows<2>() = m.A_dot;
    m.Gamma_dot.row(2).setZero();
    return m;
}

struct UnicycleRates {
    double v = 0.0;  // [m/s]
    double w = 0.0;  // [rad/s]
};

inline UnicycleRates unicycle_rates(const Vec2& u, const RobotParams& params) {
    return {params.wheel_radius * (u(0) + u(1)) / 2.0,
            params.wheel_radius * (u(1) - u(0)) / params.axle_length};
}

/// Control-point velocity A(theta) u.
inline Vec2 planar_velocity(const RobotState& state, const RobotParams& params) {
    return build_A(state.pose, params) * state.u;
}

/// One explicit Euler step of the wheel-rate model. The pose advances with
/// the wheel rates held at the start of the step.
inline RobotState step(const RobotState& state, const Vec2& u_dot, double dt, const RobotParams& params,
                       const std::optional<std::pair<double, double>>& u_bounds = std::nullopt) {
    RobotState next = state;
    Mat32 Gamma;
    Gamma.topRows<2>() = build_A(state.pose, params);
    Gamma.row(2) = build_Lambda(params).transpose();
    const Vec3 rate = Gamma * state.u;
    next.pose.x += rate(0) * dt;
    next.pose.y += rate(1) * dt;
    next.pose.theta = wrap_angle(state.pose.theta + rate(2) * dt);
    next.u = state.u + u_dot * dt;
    if (u_bounds) {
        for (int k = 0; k < 2; ++k) next.u(k) = std::clamp(next.u(k), u_bounds->first, u_bounds->second);
    }
    return next;
}

/// Desired pose, pose rate and pose acceleration at one instant.
struct ReferenceSample {
    Vec3 P_d = Vec3::Zero();
    Vec3 V_d = Vec3::Zero();
    Vec3 a_hat_d = Vec3::Zero();
};

/// Samples a constant-speed polyline reference. After `duration` the
/// reference holds at the goal with zero velocity.
inline ReferenceSample reference_at(const ReferenceSpec& spec, double t) {
    ReferenceSample out;
    const auto pts = spec.path();
    const double length = spec.length();
    if (length <= 0.0) {
        out.P_d << pts.front(), spec.start_heading;
        return out;
    }
    const double speed = length / spec.duration;
    const bool moving = t < spec.duration;
    double s = moving ? speed * std::max(t, 0.0) : length;

    std::size_t seg = 0;
    double seg_len = 0.0;
    for (seg = 0; seg + 1 < pts.size(); ++seg) {
        seg_len = (pts[seg + 1] - pts[seg]).norm();
        if (s <= seg_len || seg + 2 == pts.size()) break;
        s -= seg_len;
    }
    // Skip degenerate trailing segments when picking a heading.
    std::size_t head_seg = seg;
    while (head_seg > 0 && (pts[head_seg + 1] - pts[head_seg]).norm() == 0.0) --head_seg;
    while (head_seg + 2 < pts.size() && (pts[head_seg + 1] - pts[head_seg]).norm() == 0.0) ++head_seg;
    const Vec2 dir = (pts[head_seg + 1] - pts[head_seg]).normalized();
    const Vec2 pos = seg_len > 0.0 ? Vec2(pts[seg] + (pts[seg + 1] - pts[seg]) * (std::min(s, seg_len) / seg_len))
                                   : pts[seg];
    out.P_d << pos, std::atan2(dir(1), dir(0));
    if (moving) out.V_d << dir * speed, 0.0;
    return out;
}

}  // namespace mrsafe
