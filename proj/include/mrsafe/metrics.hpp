#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/sim.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

struct TrackingStats {
    double rmse = 0.0;
    double mae = 0.0;
    double std_dev = 0.0;
};

/// Distance to the goal under which a robot counts as arrived.
inline constexpr double kGoalTolerance = 0.15;

/// Statistics of the planar error |p - p_d| over t in [0, reference duration].
/// std_dev is the population standard deviation of the error samples.
inline TrackingStats tracking_stats(const SimLog& log, const ScenarioSpec& spec, std::size_t robot) {
    const double horizon = spec.robots[robot].reference.duration;
    std::vector<double> e;
    for (const auto& step : log.steps) {
        if (step.t > horizon + 1e-9) break;
        e.push_back(step.robots[robot].err_norm);
    }
    TrackingStats st;
    if (e.empty()) return st;
    const double n = static_cast<double>(e.size());
    double sum = 0.0, sum_sq = 0.0;
    for (double x : e) {
        sum += x;
        sum_sq += x * x;
    }
    st.mae = sum / n;
    st.rmse = std::sqrt(sum_sq / n);
    double dev = 0.0;
    for (double x : e) dev += (x - st.mae) * (x - st.mae);
    st.std_dev = std::sqrt(dev / n);
    return st;
}

/// Whether a robot's collision avoidance is engaged at a logged step.
inline bool avoidance_active(const RobotRecord& r) { return r.active_count > 0 || r.zeta > 0.0; }

/// Span from the first to the last step with avoidance engaged, inclusive:
/// last - first + dt. Zero if never engaged.
inline double intervention_time(const SimLog& log, std::size_t robot, double dt) {
    std::optional<double> first, last;
    for (const auto& step : log.steps) {
        if (!avoidance_active(step.robots[robot])) continue;
        if (!first) first = step.t;
        last = step.t;
    }
    return first ? (*last - *first + dt) : 0.0;
}

/// Planar control-point speed |A(theta) u| of a logged robot.
inline double logged_speed(const RobotRecord& r, const RobotParams& params) {
    return (build_A(r.pose, params) * r.u).norm();
}

struct ClearanceSmoothness {
    double min_clearance = std::numeric_limits<double>::infinity();  // min over t, pairs of distance - rho
    double min_speed = std::numeric_limits<double>::infinity();      // min |v| over t in (1 s, duration]
    double total_variation = 0.0;                                    // sum_t ||v(t+dt)| - |v(t)||, summed over robots
};

inline ClearanceSmoothness clearance_and_smoothness(const SimLog& log, const ScenarioSpec& spec) {
    ClearanceSmoothness out;
    const std::size_t N = spec.robots.size();
    std::vector<double> prev(N, std::numeric_limits<double>::quiet_NaN());
    for (const auto& logged : log.steps) {
        StepRecord filled;
        const bool missing = logged.pairs.empty() && (N > 1 || !spec.obstacles.empty());
        if (missing) {
            filled = logged;
            compute_pairs(filled, spec);
        }
        const StepRecord& step = missing ? filled : logged;
        for (const auto& pr : step.pairs) out.min_clearance = std::min(out.min_clearance, pr.distance - pr.rho);
        for (std::size_t r = 0; r < N; ++r) {
            const double v = logged_speed(step.robots[r], spec.robots[r].params);
            if (!std::isnan(prev[r])) out.total_variation += std::abs(v - prev[r]);
            prev[r] = v;
            if (step.t > 1.0 && step.t <= spec.robots[r].reference.duration + 1e-9)
                out.min_speed = std::min(out.min_speed, v);
        }
    }
    return out;
}

/// First time after which the robot stays within kGoalTolerance of its goal.
inline std::optional<double> goal_reach_time(const SimLog& log, const ScenarioSpec& spec, std::size_t robot) {
    const Vec2 goal = spec.robots[robot].reference.goal;
    std::optional<double> since;
    for (const auto& step : log.steps) {
        const bool inside = (step.robots[robot].pose.position() - goal).norm() <= kGoalTolerance;
        if (inside && !since) since = step.t;
        if (!inside) since.reset();
    }
    return since;
}

struct RobotMetrics {
    TrackingStats tracking;
    double intervention_time = 0.0;
    std::optional<double> goal_reach_time;
    double final_goal_distance = 0.0;
};

struct MetricReport {
    std::vector<RobotMetrics> robots;
    double min_clearance = 0.0;
    double min_speed_after_start = 0.0;
    double velocity_total_variation = 0.0;
    std::size_t goals_reached = 0;
    std::size_t collisions = 0;       // logged instants with an overlapping pair
    std::size_t fallback_count = 0;   // steps solved by the braking fallback
    double min_h = 0.0;               // min over t and pairs of the barrier value
};

inline MetricReport compute_metrics(const SimLog& log, const ScenarioSpec& spec) {
    MetricReport rep;
    const double dt = spec.dt;
    for (std::size_t r = 0; r < spec.robots.size(); ++r) {
        RobotMetrics m;
        m.tracking = tracking_stats(log, spec, r);
        m.intervention_time = intervention_time(log, r, dt);
        m.goal_reach_time = goal_reach_time(log, spec, r);
        if (!log.steps.empty())
            m.final_goal_distance = (log.steps.back().robots[r].pose.position() - spec.robots[r].reference.goal).norm();
        if (m.goal_reach_time) ++rep.goals_reached;
        rep.robots.push_back(m);
    }
    const auto cs = clearance_and_smoothness(log, spec);
    rep.min_clearance = std::isfinite(cs.min_clearance) ? cs.min_clearance : 0.0;
    rep.min_speed_after_start = std::isfinite(cs.min_speed) ? cs.min_speed : 0.0;
    rep.velocity_total_variation = cs.total_variation;
    rep.collisions = audit_collisions(log, spec).size();
    rep.fallback_count = log.fallback_count();
    double min_h = std::numeric_limits<double>::infinity();
    for (const auto& step : log.steps)
        for (const auto& rr : step.robots) min_h = std::min(min_h, rr.h_min);
    rep.min_h = std::isfinite(min_h) ? min_h : 0.0;
    return rep;
}

inline nlohmann::json metrics_to_json(const MetricReport& rep) {
    nlohmann::json j;
    j["min_clearance"] = rep.min_clearance;
    j["min_speed_after_start"] = rep.min_speed_after_start;
    j["velocity_total_variation"] = rep.velocity_total_variation;
    j["goals_reached"] = rep.goals_reached;
    j["collisions"] = rep.collisions;
    j["fallback_count"] = rep.fallback_count;
    j["min_h"] = rep.min_h;
    j["robots"] = nlohmann::json::array();
    for (const auto& m : rep.robots) {
        nlohmann::json r;
        r["rmse"] = m.tracking.rmse;
        r["mae"] = m.tracking.mae;
        r["std_dev"] = m.tracking.std_dev;
        r["intervention_time"] = m.intervention_time;
        r["goal_reach_time"] = m.goal_reach_time ? nlohmann::json(*m.goal_reach_time) : nlohmann::json(nullptr);
        r["final_goal_distance"] = m.final_goal_distance;
        j["robots"].push_back(r);
    }
    return j;
}

inline std::string metrics_table(const MetricReport& rep) {
    std::ostringstream out;
    char line[160];
    out << "robot      rmse       mae   std_dev  interv[s]   goal[s]\n";
    for (std::size_t r = 0; r < rep.robots.size(); ++r) {
        const auto& m = rep.robots[r];
        char goal[32];
        if (m.goal_reach_time) std::snprintf(goal, sizeof goal, "%9.3f", *m.goal_reach_time);
        else std::snprintf(goal, sizeof goal, "%9s", "-");
        std::snprintf(line, sizeof line, "%5zu %9.4f %9.4f %9.4f %10.3f %s\n", r, m.tracking.rmse, m.tracking.mae,
                      m.tracking.std_dev, m.intervention_time, goal);
        out << line;
    }
    std::snprintf(line, sizeof line,
                  "min clearance %.4f m | min speed %.4f m/s | speed TV %.4f m/s | goals %zu/%zu | collisions %zu | "
                  "fallbacks %zu\n",
                  rep.min_clearance, rep.min_speed_after_start, rep.velocity_total_variation, rep.goals_reached,
                  rep.robots.size(), rep.collisions, rep.fallback_count);
    out << line;
    return out.str();
}

}  // namespace mrsafe
