#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/qp.hpp"
#include "mrsafe/safety.hpp"
#include "mrsafe/tracking.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

/// Multipliers at or below this value count as inactive.
inline constexpr double kMultiplierTol = 1e-9;

struct RobotRecord {
    Pose pose;
    Vec2 u = Vec2::Zero();
    Vec2 u_dot = Vec2::Zero();
    Vec3 xi = Vec3::Zero();
    Vec2 p_ref = Vec2::Zero();
    double err_norm = 0.0;  // planar |p - p_d|
    double h_min = std::numeric_limits<double>::infinity();
    int active_count = 0;
    double zeta = 0.0;
    int g = 0;  // 0 when the robot had no neighbour to take a bearing on
};

struct PairRecord {
    ConstraintRow::Kind kind = ConstraintRow::Kind::Robot;
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
    double rho = 0.0;  // physical threshold, never inflated
    double h = 0.0;    // barrier value on true states with the controller's rho
};

struct StepRecord {
    double t = 0.0;
    std::vector<RobotRecord> robots;
    std::vector<Vec2> obstacles;
    std::vector<PairRecord> pairs;
    QPStatus status = QPStatus::Optimal;
    int iterations = 0;
    bool fallback = false;
};

struct SimLog {
    std::vector<StepRecord> steps;

    std::size_t fallback_count() const {
        return static_cast<std::size_t>(
            std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) { return s.fallback; }));
    }
};

struct CollisionEvent {
    double t = 0.0;
    ConstraintRow::Kind kind = ConstraintRow::Kind::Robot;
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
    double deficit = 0.0;
};

/// Fills step.pairs (every robot pair and robot-obstacle pair) and each
/// robot's h_min from the recorded true states.
inline void compute_pairs(StepRecord& step, const ScenarioSpec& spec) {
    const std::size_t N = step.robots.size();
    step.pairs.clear();
    std::vector<Vec2> vel(N);
    for (std::size_t r = 0; r < N; ++r) {
        vel[r] = build_A(step.robots[r].pose, spec.robots[r].params) * step.robots[r].u;
        step.robots[r].h_min = std::numeric_limits<double>::infinity();
    }
    const double lam = spec.gains.lambda;
    const double k1 = spec.gains.kappa1;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            PairRecord pr;
            pr.kind = ConstraintRow::Kind::Robot;
            pr.i = i;
            pr.j = j;
            const Vec2 p = step.robots[i].pose.position() - step.robots[j].pose.position();
            pr.distance = p.norm();
            pr.rho = spec.robots[i].params.body_radius + spec.robots[j].params.body_radius;
            pr.h = barrier_value(lam, p, vel[i] - vel[j], k1, pair_rho(spec, i, j));
            step.robots[i].h_min = std::min(step.robots[i].h_min, pr.h);
            step.robots[j].h_min = std::min(step.robots[j].h_min, pr.h);
            step.pairs.push_back(pr);
        }
        for (std::size_t k = 0; k < spec.obstacles.size(); ++k) {
            PairRecord pr;
            pr.kind = ConstraintRow::Kind::Obstacle;
            pr.i = i;
            pr.j = k;
            const Vec2 obs = k < step.obstacles.size() ? step.obstacles[k] : spec.obstacles[k].position_at(step.t);
            const Vec2 p = step.robots[i].pose.position() - obs;
            pr.distance = p.norm();
            pr.rho = spec.robots[i].params.body_radius + spec.obstacles[k].radius;
            pr.h = barrier_value(lam, p, vel[i] - spec.obstacles[k].velocity, k1, obstacle_rho(spec, i, k));
            step.robots[i].h_min = std::min(step.robots[i].h_min, pr.h);
            step.pairs.push_back(pr);
        }
    }
}

/// Closed-loop simulator. Each step: perceive neighbours, build kinematic
/// matrices and barrier rows, compute the nominal commands, solve the
/// stacked QP and integrate.
class Simulator {
public:
    explicit Simulator(const ScenarioSpec& spec) : spec_(spec) {}

    SimLog run() const {
        const ScenarioSpec& s = spec_;
        const std::size_t N = s.robots.size();
        const std::size_t K = s.num_steps();

        std::vector<RobotState> states(N);
        for (std::size_t r = 0; r < N; ++r) states[r] = s.robots[r].initial;

        std::mt19937_64 rng(s.rng_seed);
        const double r_m = s.noise.enabled ? s.noise.r_m : 0.0;

        // Neighbours whose barrier rows carried a positive multiplier in the
        // previous solve, per robot: (kind, index).
        std::vector<std::vector<std::pair<ConstraintRow::Kind, std::size_t>>> engaged(N);

        SimLog log;
        log.steps.reserve(K + 1);
        for (std::size_t k = 0; k <= K; ++k) {
            const double t = static_cast<double>(k) * s.dt;
            StepRecord rec;
            try {
                rec = control_step(states, engaged, rng, r_m, t);
            } catch (const std::exception& e) {
                throw NumericalError("step " + std::to_string(k) + " (t=" + std::to_string(t) + "): " + e.what());
            }
            if (k < K) {
                for (std::size_t r = 0; r < N; ++r)
                    states[r] = step(states[r], rec.robots[r].u_dot, s.dt, s.robots[r].params, s.u_bounds);
            }
            log.steps.push_back(std::move(rec));
        }
        return log;
    }

private:
    using Neighbor = std::pair<ConstraintRow::Kind, std::size_t>;

    StepRecord control_step(const std::vector<RobotState>& states, std::vector<std::vector<Neighbor>>& engaged,
                            std::mt19937_64& rng, double r_m, double t) const {
        const ScenarioSpec& s = spec_;
        const std::size_t N = states.size();
        const std::size_t n_obs = s.obstacles.size();

        StepRecord rec;
        rec.t = t;
        rec.obstacles.resize(n_obs);
        for (std::size_t o = 0; o < n_obs; ++o) rec.obstacles[o] = s.obstacles[o].position_at(t);

        // Perceived positions: seen[i][j] for robots, seen_obs[i][o] for obstacles.
        std::vector<std::vector<Vec2>> seen(N, std::vector<Vec2>(N));
        std::vector<std::vector<Vec2>> seen_obs(N, std::vector<Vec2>(n_obs));
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < N; ++j)
                seen[i][j] = j == i ? states[j].pose.position()
                                    : perturb_measurement(states[j].pose.position(), r_m, rng);
            for (std::size_t o = 0; o < n_obs; ++o) seen_obs[i][o] = perturb_measurement(rec.obstacles[o], r_m, rng);
        }

        std::vector<KinematicMatrices> mats(N);
        for (std::size_t r = 0; r < N; ++r) mats[r] = build_kinematics(states[r].pose, states[r].u, s.robots[r].params);

        std::vector<ConstraintRow> rows;
        std::vector<std::vector<Neighbor>> in_range(N);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = i + 1; j < N; ++j) {
                if ((seen[i][j] - states[i].pose.position()).norm() > s.sensing_radius) continue;
                RobotState sj = states[j];
                sj.pose.x = seen[i][j](0);
                sj.pose.y = seen[i][j](1);
                rows.push_back(pair_constraint_row(states[i], sj, mats[i], mats[j], s.gains, pair_rho(s, i, j), i, j));
                in_range[i].push_back({ConstraintRow::Kind::Robot, j});
                in_range[j].push_back({ConstraintRow::Kind::Robot, i});
            }
            for (std::size_t o = 0; o < n_obs; ++o) {
                if ((seen_obs[i][o] - states[i].pose.position()).norm() > s.sensing_radius) continue;
                rows.push_back(obstacle_constraint_row(states[i], mats[i], seen_obs[i][o], s.obstacles[o].velocity,
                                                       s.gains, obstacle_rho(s, i, o), i, o));
                in_range[i].push_back({ConstraintRow::Kind::Obstacle, o});
            }
        }

        std::vector<int> g(N, 0);
        for (std::size_t i = 0; i < N; ++i) g[i] = escape_direction(i, states[i].pose, engaged[i], in_range[i], seen, seen_obs);

        std::vector<ReferenceSample> refs(N);
        for (std::size_t r = 0; r < N; ++r) refs[r] = reference_at(s.robots[r].reference, t);

        auto nominals = [&](const std::vector<std::vector<Neighbor>>& eng) {
            std::vector<NominalCommand> cmds(N);
            for (std::size_t r = 0; r < N; ++r) {
                const double z = zeta(!eng[r].empty(), s.gains.zeta_gain);
                cmds[r] = nominal_accel(states[r], mats[r], refs[r], s.gains, z, g[r] == 0 ? 1 : g[r]);
            }
            return cmds;
        };

        std::vector<NominalCommand> cmds = nominals(engaged);
        QPProblem problem = assemble(cmds, mats, rows, s.udot_bounds, s.gains.theta_weight);
        QPSolution sol = solve(problem);
        if (s.zeta_fixed_point && sol.status == QPStatus::Optimal) {
            cmds = nominals(engaged_from(rows, sol, N));
            problem = assemble(cmds, mats, rows, s.udot_bounds, s.gains.theta_weight);
            sol = solve(problem);
        }

        Eigen::VectorXd u_dot;
        rec.status = sol.status;
        rec.iterations = sol.iterations;
        if (sol.status == QPStatus::Optimal) {
            u_dot = sol.z;
            engaged = engaged_from(rows, sol, N);
        } else {
            u_dot = fallback_brake(states, s.udot_bounds, s.dt);
            rec.fallback = true;
            for (auto& e : engaged) e.clear();
        }

        rec.robots.resize(N);
        for (std::size_t r = 0; r < N; ++r) {
            RobotRecord& rr = rec.robots[r];
            rr.pose = states[r].pose;
            rr.u = states[r].u;
            rr.u_dot = u_dot.segment<2>(static_cast<Eigen::Index>(2 * r));
            rr.xi = cmds[r].xi;
            rr.p_ref = refs[r].P_d.head<2>();
            rr.err_norm = cmds[r].xi.head<2>().norm();
            rr.zeta = cmds[r].zeta_active ? s.gains.zeta_gain : 0.0;
            rr.g = g[r];
        }
        if (sol.status == QPStatus::Optimal) {
            for (std::size_t k = 0; k < rows.size(); ++k) {
                if (sol.row_multipliers(static_cast<Eigen::Index>(k)) <= kMultiplierTol) continue;
                rec.robots[rows[k].i].active_count++;
                if (rows[k].kind == ConstraintRow::Kind::Robot) rec.robots[rows[k].j].active_count++;
            }
        }
        compute_pairs(rec, s);
        return rec;
    }

    static std::vector<std::vector<Neighbor>> engaged_from(const std::vector<ConstraintRow>& rows,
                                                          const QPSolution& sol, std::size_t N) {
        std::vector<std::vector<Neighbor>> out(N);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (sol.row_multipliers(static_cast<Eigen::Index>(k)) <= kMultiplierTol) continue;
            const ConstraintRow& row = rows[k];
            out[row.i].push_back({row.kind, row.j});
            if (row.kind == ConstraintRow::Kind::Robot) out[row.j].push_back({ConstraintRow::Kind::Robot, row.i});
        }
        return out;
    }

    int escape_direction(std::size_t i, const Pose& pose, const std::vector<Neighbor>& engaged,
                         const std::vector<Neighbor>& in_range, const std::vector<std::vector<Vec2>>& seen,
                         const std::vector<std::vector<Vec2>>& seen_obs) const {
        switch (spec_.escape_rule) {
            case EscapeRule::Left: return 1;
            case EscapeRule::Right: return -1;
            case EscapeRule::Bearing: break;
        }
        const auto& pool = engaged.empty() ? in_range : engaged;
        std::vector<double> bearings;
        bearings.reserve(pool.size());
        for (const auto& [kind, idx] : pool) {
            const Vec2 target = kind == ConstraintRow::Kind::Robot ? seen[i][idx] : seen_obs[i][idx];
            if ((target - pose.position()).squaredNorm() == 0.0) continue;
            bearings.push_back(local_bearing(pose, target));
        }
        return bearings.empty() ? 0 : escape_sign(bearings);
    }

    ScenarioSpec spec_;
};

inline SimLog run(const ScenarioSpec& spec) { return Simulator(spec).run(); }

/// Every logged instant where a pair's centre distance is below the
/// physical threshold r_i + r_j (or r_i + r_obs). Steps without pair
/// records are evaluated from their robot poses.
inline std::vector<CollisionEvent> audit_collisions(const SimLog& log, const ScenarioSpec& spec) {
    std::vector<CollisionEvent> events;
    for (const auto& logged : log.steps) {
        StepRecord filled;
        const bool missing = logged.pairs.empty() && (logged.robots.size() > 1 || !spec.obstacles.empty());
        if (missing) {
            filled = logged;
            compute_pairs(filled, spec);
        }
        const StepRecord& step = missing ? filled : logged;
        for (const auto& pr : step.pairs) {
            if (pr.distance < pr.rho)
                events.push_back({step.t, pr.kind, pr.i, pr.j, pr.distance, pr.rho - pr.distance});
        }
    }
    return events;
}

}  // namespace mrsafe
