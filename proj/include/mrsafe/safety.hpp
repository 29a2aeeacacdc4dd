#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

/// Position of a robot after travelling `delta` metres along its heading.
inline Vec2 future_position(const Pose& pose, double delta) {
    return pose.position() + Vec2(std::cos(pose.theta), std::sin(pose.theta)) * delta;
}

/// Predictive safety matrix of a robot pair. `beta_ij` is the bearing of
/// robot j seen from robot i, so that for D = [delta_i, delta_j, |p_ij|]
/// the quadratic form D^T S D is the squared distance after both robots
/// advance by their deltas.
inline Mat3 safety_matrix(double theta_i, double theta_j, double beta_ij) {
    const double c_ij = std::cos(theta_i - theta_j);
    const double c_i = std::cos(beta_ij - theta_i);
    const double c_j = std::cos(beta_ij - theta_j);
    Mat3 S;
    S << 1.0, -c_ij, -c_i,
         -c_ij, 1.0, c_j,
         -c_i, c_j, 1.0;
    return S;
}

/// Smallest eigenvalue of a symmetric 3x3 matrix via the trigonometric
/// solution of the characteristic cubic.
inline double smallest_eigenvalue(const Mat3& S) {
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw InputError("smallest_eigenvalue: matrix is not symmetric");

    const double p1 = S(0, 1) * S(0, 1) + S(0, 2) * S(0, 2) + S(1, 2) * S(1, 2);
    if (p1 == 0.0) return S.diagonal().minCoeff();

    const double q = S.trace() / 3.0;
    const double p2 = (S(0, 0) - q) * (S(0, 0) - q) + (S(1, 1) - q) * (S(1, 1) - q) +
                      (S(2, 2) - q) * (S(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Mat3 B = (S - q * Mat3::Identity()) / p;
    const double r = std::clamp(B.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

/// Quantities from the predictive-safety derivation for one pair.
struct SafetyAnalysis {
    Mat3 S;
    double lambda_min = 0.0;
    Vec3 D;  // [delta_i, delta_j, |p_ij|]
};

inline SafetyAnalysis analyze_pair(const Pose& pi, const Pose& pj, double delta_i, double delta_j) {
    const Vec2 to_j = pj.position() - pi.position();
    SafetyAnalysis a;
    a.S = safety_matrix(pi.theta, pj.theta, std::atan2(to_j(1), to_j(0)));
    a.lambda_min = smallest_eigenvalue(a.S);
    a.D << delta_i, delta_j, to_j.norm();
    return a;
}

inline bool predictive_safe(double lambda, const Vec2& p_ij, double rho) {
    return lambda * p_ij.squaredNorm() >= rho * rho;
}

/// Pairwise barrier h = 2 lambda p^T v + kappa1 (lambda |p|^2 - rho^2).
inline double barrier_value(double lambda, const Vec2& p_ij, const Vec2& v_ij, double kappa1, double rho) {
    return 2.0 * lambda * p_ij.dot(v_ij) + kappa1 * (lambda * p_ij.squaredNorm() - rho * rho);
}

/// One linear inequality  coeffs . u_dot <= rhs  over the stacked wheel
/// accelerations. Only robot i's block, and robot j's block for robot
/// pairs, is nonzero.
struct ConstraintRow {
    enum class Kind { Robot, Obstacle };

    Kind kind = Kind::Robot;
    std::size_t i = 0;
    std::size_t j = 0;  // robot index or obstacle index, depending on kind
    Vec2 block_i = Vec2::Zero();
    Vec2 block_j = Vec2::Zero();
    double rhs = 0.0;
    double h = 0.0;

    bool involves(std::size_t robot) const { return i == robot || (kind == Kind::Robot && j == robot); }

    double dot(const Eigen::VectorXd& u_dot) const {
        double s = block_i.dot(u_dot.segment<2>(2 * i));
        if (kind == Kind::Robot) s += block_j.dot(u_dot.segment<2>(2 * j));
        return s;
    }

    Eigen::VectorXd dense(std::size_t num_robots) const {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(2 * num_robots);
        a.segment<2>(2 * i) = block_i;
        if (kind == Kind::Robot) a.segment<2>(2 * j) = block_j;
        return a;
    }
};

namespace detail {

inline ConstraintRow barrier_row(const Vec2& p, const Vec2& v, const Vec2& relative_drift, const ControlGains& g,
                                 double rho) {
    ConstraintRow row;
    const double lam = g.lambda;
    row.rhs = 2.0 * lam * (v.squaredNorm() + p.dot(relative_drift) + (g.kappa1 + g.kappa2) * p.dot(v)) +
              g.kappa1 * g.kappa2 * (lam * p.squaredNorm() - rho * rho);
    row.h = barrier_value(lam, p, v, g.kappa1, rho);
    return row;
}

}  // namespace detail

/// Barrier constraint between robots i and j. The states carry the
/// positions as perceived by the controller.
inline ConstraintRow pair_constraint_row(const RobotState& si, const RobotState& sj, const KinematicMatrices& mi,
                                         const KinematicMatrices& mj, const ControlGains& gains, double rho,
                                         std::size_t i, std::size_t j) {
    const Vec2 p = si.pose.position() - sj.pose.position();
    const Vec2 v = mi.A * si.u - mj.A * sj.u;
    const Vec2 drift = mi.A_dot * si.u - mj.A_dot * sj.u;
    ConstraintRow row = detail::barrier_row(p, v, drift, gains, rho);
    row.kind = ConstraintRow::Kind::Robot;
    row.i = i;
    row.j = j;
    const Vec2 w = -2.0 * gains.lambda * p;
    row.block_i = mi.A.transpose() * w;
    row.block_j = -(mj.A.transpose() * w);
    return row;
}

/// Barrier constraint between robot i and a constant-velocity obstacle;
/// the robot carries the whole avoidance effort.
inline ConstraintRow obstacle_constraint_row(const RobotState& si, const KinematicMatrices& mi, const Vec2& obs_position,
                                             const Vec2& obs_velocity, const ControlGains& gains, double rho,
                                             std::size_t i, std::size_t k) {
    const Vec2 p = si.pose.position() - obs_position;
    const Vec2 v = mi.A * si.u - obs_velocity;
    ConstraintRow row = detail::barrier_row(p, v, mi.A_dot * si.u, gains, rho);
    row.kind = ConstraintRow::Kind::Obstacle;
    row.i = i;
    row.j = k;
    row.block_i = mi.A.transpose() * (-2.0 * gains.lambda * p);
    return row;
}

/// Adds a measurement error drawn uniformly from the closed disk of radius r_m.
template <class Rng>
Vec2 perturb_measurement(const Vec2& position, double r_m, Rng& rng) {
    if (r_m <= 0.0) return position;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double radius = r_m * std::sqrt(unit(rng));
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    return position + radius * Vec2(std::cos(angle), std::sin(angle));
}

}  // namespace mrsafe
