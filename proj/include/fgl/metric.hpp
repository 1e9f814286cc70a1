#pragma once

#include "fgl/graph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgl {

/// Thrown when the Gershgorin set {m_ii >= r_i + eps_g, sum m_ii <= C} is
/// empty for the current off-diagonal radii, i.e. C is too small.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LearnConfig {
    double trace_bound = 3.0;        // C
    double step_size = 0.0;          // PG step t; 0 selects the default heuristic
    double gershgorin_margin = 0.0;  // eps_g; 0 selects 1e-6 * C
    double ball_margin = 0.0;        // eps_b; 0 selects 1e-6
    int max_outer_iters = 20;
    int max_pg_iters = 100;
    double objective_tol = 1e-9;
    double edge_subsample_rate = 1.0;
    uint64_t rng_seed = 0;
    std::string trace_path;          // per-stage trace records when non-empty

    double eps_g() const { return gershgorin_margin > 0 ? gershgorin_margin : 1e-6 * trace_bound; }
    double eps_b() const { return ball_margin > 0 ? ball_margin : 1e-6; }
    void validate() const;
};

/// Smallest-eigenvalue certificate for M_{2,2} (Schur complement guard).
struct SchurGuard {
    double theta_min = 0.0;
    int iterations_used = 0;
};

/// GLR objective: sum over edges of exp(-g^T M g) * d.
double glr_objective(const Eigen::MatrixXd& metric, const EdgeSet& edges);

/// Gradient of the GLR objective w.r.t. the diagonal of M, holding the
/// off-diagonal part fixed. Entry k = -sum exp(-sum_l m_l g(l)^2) g(k)^2 dt,
/// with dt = exp(-g^T M' g) d. All entries are <= 0.
Eigen::VectorXd grad_diagonal(const Eigen::VectorXd& diag, const EdgeSet& edges,
                              const Eigen::MatrixXd& offdiag_part);

/// Projection of a diagonal candidate onto the Gershgorin/trace polytope
/// {v_i >= r_i + eps_g, sum v_i <= C}: entrywise clamp, then a bisected
/// uniform shift when the trace bound is active. Throws infeasible_error
/// when the set is empty.
Eigen::VectorXd project_diagonal(const Eigen::VectorXd& v, const Eigen::VectorXd& offdiag_radii,
                                 double trace_bound, double eps_g);

/// One diagonal stage: projected gradient on the diagonal of `metric` with
/// a monotone step-halving safeguard. Off-diagonals are untouched.
Eigen::MatrixXd optimize_diagonal(const Eigen::MatrixXd& metric, const EdgeSet& edges,
                                  const LearnConfig& config);

/// Smallest eigenvalue of a symmetric PD matrix via LOBPCG (dense matvec).
/// Dimensions <= 3 use a dense eigensolve directly. Throws std::runtime_error
/// on non-convergence or a non-positive estimate.
SchurGuard schur_guard(const Eigen::MatrixXd& m22, double tol = 1e-10);

/// Gradient of the off-diagonal partial objective
///   F(M21) = sum exp(-2 g(1) M21^T g(2)) dt
/// where dt folds the fixed diagonal blocks. `g1` / `g2` are the per-edge
/// split of g (first entry vs rest; one column of g2 per edge) and `dt` the
/// per-edge constants.
Eigen::VectorXd grad_offdiagonal(const Eigen::VectorXd& m21, const Eigen::VectorXd& g1,
                                 const Eigen::MatrixXd& g2, const Eigen::VectorXd& dt);

/// Projection onto the ball ||v|| <= (1 - eps_b) * sqrt(theta_min * m11)
/// that keeps the Schur complement of M_{2,2} positive.
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double theta_min, double m11,
                             double eps_b);

/// One off-diagonal stage: cyclic block descent over rows, each row/column
/// permuted to the leading position, guarded by schur_guard and projected
/// onto the norm ball. Metric stays symmetric and PD.
Eigen::MatrixXd optimize_offdiagonal(const Eigen::MatrixXd& metric, const EdgeSet& edges,
                                     const LearnConfig& config);

/// Full alternation: initializes M = diag(C/K) and alternates diagonal and
/// off-diagonal stages, adopting a stage only if the objective strictly
/// decreases, until neither stage improves by more than objective_tol.
/// With edge_subsample_rate < 1 the stages see a seeded edge subset.
/// `feature_dim` sizes the initialization when `edges` is empty.
Eigen::MatrixXd learn_metric(const EdgeSet& edges, const LearnConfig& config,
                             Eigen::Index feature_dim = 1);

/// Diagonal-only variant of learn_metric (the "Diagonal" ablation).
Eigen::MatrixXd learn_metric_diagonal_only(const EdgeSet& edges, const LearnConfig& config,
                                           Eigen::Index feature_dim = 1);

} // namespace fgl
