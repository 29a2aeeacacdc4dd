#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

/// Angle of the vector from the robot to the obstacle, in (-pi, pi].
inline double bearing_angle(const Vec2& p_robot, const Vec2& p_obstacle) {
    const Vec2 rel = p_robot - p_obstacle;
    if (rel.squaredNorm() == 0.0) throw InputError("bearing_angle: coincident points");
    return wrap_angle(std::atan2(-rel(1), -rel(0)));
}

/// Bearing of a neighbour in the robot's body frame: positive on the left
/// of the heading, negative on the right.
inline double local_bearing(const Pose& robot, const Vec2& p_neighbor) {
    return wrap_angle(bearing_angle(robot.position(), p_neighbor) - robot.theta);
}

/// Escape direction: -1 (clockwise, turn right) when every neighbour sits at
/// a non-negative bearing, +1 otherwise.
inline int escape_sign(std::span<const double> bearings) {
    if (bearings.empty()) throw InputError("escape_sign: no neighbour bearings");
    const double lowest = *std::min_element(bearings.begin(), bearings.end());
    return lowest >= 0.0 ? -1 : 1;
}

/// Planar rotation by g*q embedded in a 3x3 matrix that leaves the heading
/// channel out.
inline Mat3 rotation_Q(int g, double q) {
    const double a = static_cast<double>(g) * q;
    Mat3 Q = Mat3::Zero();
    Q(0, 0) = std::cos(a);
    Q(0, 1) = -std::sin(a);
    Q(1, 0) = std::sin(a);
    Q(1, 1) = std::cos(a);
    return Q;
}

inline double zeta(bool any_multiplier_positive, double zeta_gain) {
    return any_multiplier_positive ? zeta_gain : 0.0;
}

/// Desired Gamma * u_dot of one robot together with the terms it was built from.
struct NominalCommand {
    Vec3 dzr = Vec3::Zero();
    Vec3 xi = Vec3::Zero();
    bool zeta_active = false;
    int g = 1;
    Mat3 Q = Mat3::Zero();
};

/// Tracking error P - P_d with the heading component wrapped.
inline Vec3 tracking_error(const Pose& pose, const ReferenceSample& ref) {
    return {pose.x - ref.P_d(0), pose.y - ref.P_d(1), wrap_angle(pose.theta - ref.P_d(2))};
}

/// Double-integrator tracking law with the deadlock-escape term
/// -zeta Q (Gamma u - V_d + kappa3 xi).
inline NominalCommand nominal_accel(const RobotState& state, const KinematicMatrices& mats, const ReferenceSample& ref,
                                    const ControlGains& gains, double zeta_value, int g) {
    NominalCommand cmd;
    cmd.xi = tracking_error(state.pose, ref);
    cmd.zeta_active = zeta_value > 0.0;
    cmd.g = g;
    cmd.Q = rotation_Q(g, gains.q);
    const Vec3 vel_err = mats.Gamma * state.u - ref.V_d;
    const Vec3 e = vel_err + gains.kappa3 * cmd.xi;
    cmd.dzr = ref.a_hat_d - mats.Gamma_dot * state.u - (gains.kappa3 + gains.kappa4) * vel_err -
              gains.kappa3 * gains.kappa4 * cmd.xi - zeta_value * (cmd.Q * e);
    return cmd;
}

}  // namespace mrsafe
