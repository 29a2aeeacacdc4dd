#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mrsafe/kinematics.hpp"
#include "mrsafe/safety.hpp"
#include "mrsafe/tracking.hpp"
#include "mrsafe/types.hpp"

namespace mrsafe {

/// Raised when the solver exceeds its iteration budget or meets a
/// numerically singular system.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// minimize 1/2 z^T H z + f^T z  subject to  lb <= z <= ub,  A z <= b.
/// Infinite bounds are ignored.
struct QPProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;
    Eigen::MatrixXd A;  // one row per inequality
    Eigen::VectorXd b;

    Eigen::Index size() const { return H.rows(); }
    Eigen::Index num_rows() const { return A.rows(); }

    double objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(H * z) + f.dot(z); }

    /// Problem with no bounds and no rows.
    static QPProblem unconstrained(Eigen::MatrixXd H, Eigen::VectorXd f) {
        QPProblem p;
        const auto n = H.rows();
        p.H = std::move(H);
        p.f = std::move(f);
        p.lb = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
        p.ub = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
        p.A.resize(0, n);
        p.b.resize(0);
        return p;
    }
};

enum class QPStatus { Optimal, Infeasible };

inline const char* to_string(QPStatus s) { return s == QPStatus::Optimal ? "optimal" : "infeasible"; }

struct QPSolution {
    QPStatus status = QPStatus::Optimal;
    Eigen::VectorXd z;
    Eigen::VectorXd row_multipliers;  // one per row of A, >= 0
    Eigen::VectorXd lb_multipliers;   // one per variable, >= 0
    Eigen::VectorXd ub_multipliers;
    int iterations = 0;
};

/// Dual active-set solver (Goldfarb-Idnani). It starts from the
/// unconstrained minimiser and repeatedly adds the most violated
/// constraint, dropping active constraints whose multipliers would turn
/// negative. Each constraint is handled as a generic half-space a^T z <= b;
/// bounds map to +-e_k rows after the general rows.
class ActiveSetSolver {
public:
    QPSolution solve(const QPProblem& p) const {
        const Eigen::Index n = p.size();
        const Eigen::Index m = p.num_rows();
        if (p.f.size() != n || p.lb.size() != n || p.ub.size() != n || p.A.cols() != n || p.b.size() != m)
            throw InputError("QPProblem: inconsistent dimensions");

        Eigen::LLT<Eigen::MatrixXd> llt(p.H);
        if (llt.info() != Eigen::Success) throw InputError("QPProblem: Hessian is not positive definite");

        // Constraint catalogue: 0..m-1 rows, then upper bounds, then lower bounds.
        const Eigen::Index total = m + 2 * n;
        auto finite = [&](Eigen::Index k) {
            if (k < m) return std::isfinite(p.b(k));
            if (k < m + n) return std::isfinite(p.ub(k - m));
            return std::isfinite(p.lb(k - m - n));
        };
        auto normal = [&](Eigen::Index k) -> Eigen::VectorXd {
            if (k < m) return p.A.row(k).transpose();
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
            if (k < m + n) e(k - m) = 1.0;
            else e(k - m - n) = -1.0;
            return e;
        };
        auto bound = [&](Eigen::Index k) {
            if (k < m) return p.b(k);
            if (k < m + n) return p.ub(k - m);
            return -p.lb(k - m - n);
        };
        auto slack = [&](Eigen::Index k, const Eigen::VectorXd& x) {
            if (k < m) return p.A.row(k).dot(x) - p.b(k);
            if (k < m + n) return x(k - m) - p.ub(k - m);
            return p.lb(k - m - n) - x(k - m - n);
        };
        auto scale = [&](Eigen::Index k, const Eigen::VectorXd& x) {
            const double a_norm = k < m ? p.A.row(k).lpNorm<1>() : 1.0;
            return 1.0 + std::abs(bound(k)) + a_norm * x.lpNorm<Eigen::Infinity>();
        };

        QPSolution sol;
        Eigen::VectorXd x = -llt.solve(p.f);
        std::vector<Eigen::Index> active;
        std::vector<double> mu;
        std::vector<bool> is_active(static_cast<std::size_t>(total), false);
        const int max_iter = 50 * static_cast<int>(n + m);
        int iter = 0;

        for (;;) {
            // Most violated constraint; strict comparison keeps the lowest index on ties.
            Eigen::Index pick = -1;
            double worst = 0.0;
            for (Eigen::Index k = 0; k < total; ++k) {
                if (is_active[static_cast<std::size_t>(k)] || !finite(k)) continue;
                const double s = slack(k, x);
                if (s <= kFeasTol * scale(k, x)) continue;
                const double a_norm = k < m ? p.A.row(k).norm() : 1.0;
                const double v = s / std::max(a_norm, 1e-300);
                if (v > worst) {
                    worst = v;
                    pick = k;
                }
            }
            if (pick < 0) break;

            const Eigen::VectorXd a_p = normal(pick);
            double mu_p = 0.0;
            for (;;) {
                if (++iter > max_iter) {
                    std::ostringstream msg;
                    msg << "active-set iteration cap (" << max_iter << ") reached; n=" << n << " rows=" << m
                        << " active=" << active.size();
                    throw NumericalError(msg.str());
                }
                const auto q = static_cast<Eigen::Index>(active.size());
                Eigen::MatrixXd N(n, q);
                for (Eigen::Index c = 0; c < q; ++c) N.col(c) = normal(active[static_cast<std::size_t>(c)]);

                const Eigen::VectorXd Hinv_a = llt.solve(a_p);
                Eigen::VectorXd r = Eigen::VectorXd::Zero(q);
                Eigen::VectorXd dx = -Hinv_a;
                if (q > 0) {
                    const Eigen::MatrixXd Hinv_N = llt.solve(N);
                    const Eigen::MatrixXd M = N.transpose() * Hinv_N;
                    r = M.ldlt().solve(N.transpose() * Hinv_a);
                    dx += Hinv_N * r;
                }
                const double curvature = -a_p.dot(dx);
                const bool dependent = curvature <= 1e-13 * std::max(a_p.dot(Hinv_a), 1e-300);

                // Largest dual step keeping active multipliers non-negative.
                double t_dual = std::numeric_limits<double>::infinity();
                Eigen::Index block = -1;
                for (Eigen::Index c = 0; c < q; ++c) {
                    if (r(c) > 1e-14) {
                        const double t = mu[static_cast<std::size_t>(c)] / r(c);
                        if (t < t_dual) {
                            t_dual = t;
                            block = c;
                        }
                    }
                }

                if (dependent) {
                    if (block < 0) {
                        sol.status = QPStatus::Infeasible;
                        sol.iterations = iter;
                        return sol;
                    }
                    for (Eigen::Index c = 0; c < q; ++c) mu[static_cast<std::size_t>(c)] -= t_dual * r(c);
                    mu_p += t_dual;
                    drop(active, mu, is_active, block);
                    continue;
                }

                const double t_primal = slack(pick, x) / curvature;
                const double t = std::min(t_primal, t_dual);
                x += t * dx;
                for (Eigen::Index c = 0; c < q; ++c) mu[static_cast<std::size_t>(c)] -= t * r(c);
                mu_p += t;
                if (t_primal <= t_dual) {
                    active.push_back(pick);
                    mu.push_back(mu_p);
                    is_active[static_cast<std::size_t>(pick)] = true;
                    break;
                }
                drop(active, mu, is_active, block);
            }
        }

        sol.status = QPStatus::Optimal;
        sol.z = x;
        sol.iterations = iter;
        sol.row_multipliers = Eigen::VectorXd::Zero(m);
        sol.ub_multipliers = Eigen::VectorXd::Zero(n);
        sol.lb_multipliers = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < active.size(); ++c) {
            const Eigen::Index k = active[c];
            const double v = std::max(mu[c], 0.0);
            if (k < m) sol.row_multipliers(k) = v;
            else if (k < m + n) sol.ub_multipliers(k - m) = v;
            else sol.lb_multipliers(k - m - n) = v;
        }
        return sol;
    }

private:
    static constexpr double kFeasTol = 1e-12;

    static void drop(std::vector<Eigen::Index>& active, std::vector<double>& mu, std::vector<bool>& is_active,
                     Eigen::Index c) {
        const auto idx = static_cast<std::size_t>(c);
        is_active[static_cast<std::size_t>(active[idx])] = false;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(idx));
        mu.erase(mu.begin() + static_cast<std::ptrdiff_t>(idx));
    }
};

inline QPSolution solve(const QPProblem& p) { return ActiveSetSolver{}.solve(p); }

/// Stacks the per-robot tracking objectives and all barrier rows into one
/// problem over u_dot in R^{2N}. theta_weight scales the heading row of each
/// residual Gamma u_dot - dzr; 1 gives the plain least-squares objective.
inline QPProblem assemble(std::span<const NominalCommand> nominals, std::span<const KinematicMatrices> mats,
                          std::span<const ConstraintRow> rows, std::pair<double, double> udot_bounds,
                          double theta_weight = 1.0) {
    const std::size_t N = nominals.size();
    if (N == 0 || mats.size() != N) throw InputError("assemble: need one nominal command and matrix set per robot");
    const auto n = static_cast<Eigen::Index>(2 * N);
    QPProblem p;
    p.H = Eigen::MatrixXd::Zero(n, n);
    p.f = Eigen::VectorXd::Zero(n);
    for (std::size_t r = 0; r < N; ++r) {
        Eigen::Matrix<double, 3, 2> G = mats[r].Gamma;
        G.row(2) *= theta_weight;
        Vec3 dz = nominals[r].dzr;
        dz(2) *= theta_weight;
        const Mat2 block = G.transpose() * G;
        if (block.determinant() <= 1e-18)
            throw NumericalError("assemble: singular Hessian block for robot " + std::to_string(r));
        const auto o = static_cast<Eigen::Index>(2 * r);
        p.H.block<2, 2>(o, o) = block;
        p.f.segment<2>(o) = -(G.transpose() * dz);
    }
    p.lb = Eigen::VectorXd::Constant(n, udot_bounds.first);
    p.ub = Eigen::VectorXd::Constant(n, udot_bounds.second);
    p.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
    p.b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        p.A.row(kk) = rows[k].dense(N).transpose();
        p.b(kk) = rows[k].rhs;
    }
    return p;
}

/// Maximal deceleration toward zero wheel speed, used when the QP has no
/// feasible point.
inline Eigen::VectorXd fallback_brake(std::span<const RobotState> states, std::pair<double, double> udot_bounds,
                                      double dt) {
    Eigen::VectorXd u_dot(static_cast<Eigen::Index>(2 * states.size()));
    for (std::size_t r = 0; r < states.size(); ++r)
        for (int k = 0; k < 2; ++k)
            u_dot(static_cast<Eigen::Index>(2 * r) + k) =
                std::clamp(-states[r].u(k) / dt, udot_bounds.first, udot_bounds.second);
    return u_dot;
}

}  // namespace mrsafe
