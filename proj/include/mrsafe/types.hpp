#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mrsafe {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Thrown when a scenario document does not match the schema.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a parsed scenario violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown on invalid numerical input (asymmetric matrix, coincident points, ...).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w < 0.0) w += two_pi;
    w -= std::numbers::pi;
    // fmod maps +pi to -pi; the half-open interval keeps +pi.
    if (w <= -std::numbers::pi) w = std::numbers::pi;
    return w;
}

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct Pose {
    double x = 0.0;      // [m]
    double y = 0.0;      // [m]
    double theta = 0.0;  // [rad], (-pi, pi]

    Vec2 position() const { return {x, y}; }
    bool operator==(const Pose&) const = default;
};

/// Pose plus wheel angular rates u = (left, right) [rad/s].
struct RobotState {
    Pose pose;
    Vec2 u = Vec2::Zero();

    bool operator==(const RobotState& o) const { return pose == o.pose && u == o.u; }
};

/// Differential-drive geometry. body_radius is the enclosing disk used for
/// collision checks; wheel_radius enters the Jacobian.
struct RobotParams {
    double body_radius = 0.2;    // [m]
    double wheel_radius = 0.033; // [m]
    double axle_length = 0.16;   // [m]
    double offset = 0.08;        // [m] control point ahead of the axle midpoint

    bool operator==(const RobotParams&) const = default;
};

struct ControlGains {
    double kappa1 = 1.0;   // barrier position gain
    double kappa2 = 8.0;   // barrier class-K rate
    double kappa3 = 1.0;   // tracking position gain
    double kappa4 = 8.0;   // tracking velocity gain
    double lambda = 0.5;   // prediction window, (0, 1]
    double zeta_gain = 2.0;
    double q = deg2rad(68.0);  // escape attitude angle [rad], [0, pi]
    double theta_weight = 0.0;  // heading row weight in the QP objective

    bool operator==(const ControlGains&) const = default;
};

struct Obstacle {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();  // constant over a run
    double radius = 0.1;

    /// Position after t seconds of constant-velocity motion.
    Vec2 position_at(double t) const { return position + velocity * t; }
    bool operator==(const Obstacle& o) const {
        return position == o.position && velocity == o.velocity && radius == o.radius;
    }
};

enum class ReferenceKind { Line, CircleAntipodal, Waypoints };

/// Desired path, traversed at constant speed (path length / duration).
/// For Line and CircleAntipodal the path is start -> goal; CircleAntipodal
/// derives the goal by reflecting the start through `center`.
struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::Line;
    Vec2 start = Vec2::Zero();
    Vec2 goal = Vec2::Zero();
    Vec2 center = Vec2::Zero();
    std::vector<Vec2> waypoints;  // Waypoints kind: intermediate points, goal excluded
    double duration = 1.0;        // [s]
    double start_heading = 0.0;   // [rad] desired heading when the path has zero length

    /// Full polyline from start to goal.
    std::vector<Vec2> path() const {
        std::vector<Vec2> pts{start};
        if (kind == ReferenceKind::Waypoints)
            pts.insert(pts.end(), waypoints.begin(), waypoints.end());
        pts.push_back(goal);
        return pts;
    }

    double length() const {
        const auto pts = path();
        double len = 0.0;
        for (std::size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
        return len;
    }

    bool operator==(const ReferenceSpec& o) const {
        return kind == o.kind && start == o.start && goal == o.goal && center == o.center &&
               waypoints == o.waypoints && duration == o.duration &&
               start_heading == o.start_heading;
    }
};

struct NoiseSpec {
    double r_m = 0.0;  // [m] bound on position measurement error
    bool enabled = false;

    bool operator==(const NoiseSpec&) const = default;
};

struct RobotSpec {
    RobotState initial;
    RobotParams params;
    ReferenceSpec reference;

    bool operator==(const RobotSpec&) const = default;
};

/// Deadlock-escape direction rule. Bearing is the normal mode; the fixed
/// sides exist for the left/right-hand rule comparison.
enum class EscapeRule { Bearing, Left, Right };

struct SafetyOptions {
    double inflate_rho = 0.0;         // [m] added to every rho (baseline comparison)
    bool noise_compensation = false;  // add r_m to every rho
    bool operator==(const SafetyOptions&) const = default;
};

struct ScenarioSpec {
    std::string name;
    std::vector<RobotSpec> robots;
    std::vector<Obstacle> obstacles;
    ControlGains gains;
    SafetyOptions safety;
    std::pair<double, double> udot_bounds{-20.0, 20.0};       // [rad/s^2]
    std::optional<std::pair<double, double>> u_bounds;        // [rad/s]
    double dt = 1e-3;
    double t_end = 1.0;
    double sensing_radius = std::numeric_limits<double>::infinity();
    NoiseSpec noise;
    std::uint64_t rng_seed = 1;
    EscapeRule escape_rule = EscapeRule::Bearing;
    bool zeta_fixed_point = false;

    std::size_t num_steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

    bool operator==(const ScenarioSpec&) const = default;
};

/// Safety threshold between two robots, including configured inflation.
inline double pair_rho(const ScenarioSpec& s, std::size_t i, std::size_t j) {
    double rho = s.robots[i].params.body_radius + s.robots[j].params.body_radius + s.safety.inflate_rho;
    if (s.safety.noise_compensation && s.noise.enabled) rho += s.noise.r_m;
    return rho;
}

inline double obstacle_rho(const ScenarioSpec& s, std::size_t i, std::size_t k) {
    double rho = s.robots[i].params.body_radius + s.obstacles[k].radius + s.safety.inflate_rho;
    if (s.safety.noise_compensation && s.noise.enabled) rho += s.noise.r_m;
    return rho;
}

}  // namespace mrsafe
