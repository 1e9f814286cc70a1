#include "fgl/metric.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace fgl {

void LearnConfig::validate() const {
    if (trace_bound <= 0) throw std::invalid_argument("trace_bound must be positive");
    if (edge_subsample_rate <= 0 || edge_subsample_rate > 1) {
        throw std::invalid_argument("edge_subsample_rate must be in (0, 1]");
    }
    if (max_outer_iters < 0 || max_pg_iters < 1) {
        throw std::invalid_argument("iteration caps must be positive");
    }
    if (objective_tol <= 0) throw std::invalid_argument("objective_tol must be positive");
}

double glr_objective(const Eigen::MatrixXd& metric, const EdgeSet& edges) {
    double sum = 0.0;
    for (const auto& e : edges.edges) {
        sum += std::exp(-e.g.dot(metric * e.g)) * e.d;
    }
    return sum;
}

Eigen::VectorXd grad_diagonal(const Eigen::VectorXd& diag, const EdgeSet& edges,
                              const Eigen::MatrixXd& offdiag_part) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(diag.size());
    for (const auto& e : edges.edges) {
        double dt = std::exp(-e.g.dot(offdiag_part * e.g)) * e.d;
        Eigen::VectorXd g2 = e.g.cwiseAbs2();
        grad -= std::exp(-diag.dot(g2)) * dt * g2;
    }
    return grad;
}

Eigen::VectorXd project_diagonal(const Eigen::VectorXd& v, const Eigen::VectorXd& offdiag_radii,
                                 double trace_bound, double eps_g) {
    const Eigen::Index k = v.size();
    Eigen::VectorXd floor = offdiag_radii.array() + eps_g;
    if (floor.sum() > trace_bound + 1e-12) {
        throw infeasible_error(
            "trace bound too small for current off-diagonal Gershgorin radii");
    }
    Eigen::VectorXd clamped = v.cwiseMax(floor);
    if (clamped.sum() <= trace_bound) return clamped;

    // Bisect alpha on the non-increasing map alpha -> 1^T max(v - alpha, floor).
    double lo = 0.0, hi = v.maxCoeff();
    for (int iter = 0; iter < 200; ++iter) {
        double alpha = 0.5 * (lo + hi);
        double sum = (v.array() - alpha).max(floor.array()).sum();
        if (sum > trace_bound) {
            lo = alpha;
        } else {
            hi = alpha;
        }
    }
    Eigen::VectorXd result = (v.array() - hi).max(floor.array());
    (void)k;
    return result;
}

namespace {

Eigen::VectorXd gershgorin_radii(const Eigen::MatrixXd& metric) {
    Eigen::VectorXd radii = metric.cwiseAbs().rowwise().sum();
    radii -= metric.diagonal().cwiseAbs();
    return radii;
}

// Default step heuristic; scale-aware so one PG step changes the exponent
// by order unity.
double default_step(const EdgeSet& edges) {
    double max_gnorm2 = 0.0;
    double sum_d = 0.0;
    for (const auto& e : edges.edges) {
        max_gnorm2 = std::max(max_gnorm2, e.g.squaredNorm());
        sum_d += e.d;
    }
    return 0.1 / (max_gnorm2 * sum_d + 1.0);
}

struct StageTracer {
    std::ofstream out;
    explicit StageTracer(const std::string& path) {
        if (!path.empty()) out.open(path, std::ios::app);
    }
    void record(const char* stage, int row, double before, double after, bool adopted) {
        if (!out.is_open()) return;
        out << "stage=" << stage << " row=" << row << " objective_before=" << before
            << " objective_after=" << after << " adopted=" << (adopted ? 1 : 0) << '\n';
    }
};

} // namespace

Eigen::MatrixXd optimize_diagonal(const Eigen::MatrixXd& metric, const EdgeSet& edges,
                                  const LearnConfig& config) {
    const Eigen::Index k = metric.rows();
    if (edges.empty()) return metric;

    Eigen::MatrixXd offdiag = metric;
    offdiag.diagonal().setZero();
    Eigen::VectorXd radii = gershgorin_radii(metric);
    Eigen::VectorXd m = metric.diagonal();

    auto objective = [&](const Eigen::VectorXd& diag) {
        double sum = 0.0;
        for (const auto& e : edges.edges) {
            double dt = std::exp(-e.g.dot(offdiag * e.g)) * e.d;
            sum += std::exp(-diag.dot(e.g.cwiseAbs2())) * dt;
        }
        return sum;
    };

    // Re-project the incoming diagonal in case off-diagonal growth moved
    // the Gershgorin floor; throws infeasible_error when the set is empty.
    m = project_diagonal(m, radii, config.trace_bound, config.eps_g());

    double t = config.step_size > 0 ? config.step_size : default_step(edges);
    double obj = objective(m);
    for (int l = 0; l < config.max_pg_iters; ++l) {
        Eigen::VectorXd grad = grad_diagonal(m, edges, offdiag);
        Eigen::VectorXd cand =
            project_diagonal(m - t * grad, radii, config.trace_bound, config.eps_g());
        double cand_obj = objective(cand);
        if (cand_obj > obj) {
            t *= 0.5; // reject the step, retry smaller
            if (t < 1e-16) break;
            continue;
        }
        double gain = obj - cand_obj;
        m = std::move(cand);
        obj = cand_obj;
        if (gain < config.objective_tol) break;
    }

    Eigen::MatrixXd result = metric;
    result.diagonal() = m;
    (void)k;
    return result;
}

SchurGuard schur_guard(const Eigen::MatrixXd& m22, double tol) {
    const Eigen::Index n = m22.rows();
    if (n != m22.cols()) throw std::invalid_argument("schur_guard: matrix must be square");
    if ((m22 - m22.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m22.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("schur_guard: matrix must be symmetric");
    }

    SchurGuard guard;
    if (n <= 3) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m22);
        guard.theta_min = es.eigenvalues().minCoeff();
        guard.iterations_used = 0;
    } else {
        // Block LOBPCG: Rayleigh-Ritz over span{X, R, P} with a small block,
        // which stays robust when the smallest eigenvalues are clustered.
        const double scale = std::max(m22.cwiseAbs().maxCoeff(), 1e-300);
        const Eigen::Index block = std::min<Eigen::Index>(4, n);

        // Deterministic pseudo-random start block.
        std::mt19937_64 rng(12345);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd x(n, block);
        for (Eigen::Index j = 0; j < block; ++j)
            for (Eigen::Index i = 0; i < n; ++i) x(i, j) = gauss(rng);
        {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
            x = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
        }

        // Orthonormal basis of the columns of `cols`, dropping dependent ones.
        auto orth = [&](const Eigen::MatrixXd& cols) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
            qr.setThreshold(1e-12);
            Eigen::Index rank = qr.rank();
            return Eigen::MatrixXd(qr.householderQ() *
                                   Eigen::MatrixXd::Identity(n, std::max<Eigen::Index>(rank, 1)));
        };

        Eigen::MatrixXd p(n, 0);
        double theta = 0.0;
        const int max_iters = 5000;
        int iter = 0;
        bool converged = false;
        for (; iter < max_iters; ++iter) {
            Eigen::MatrixXd ax = m22 * x;
            Eigen::VectorXd lambda(block);
            for (Eigen::Index j = 0; j < block; ++j) lambda[j] = x.col(j).dot(ax.col(j));
            theta = lambda[0];
            Eigen::MatrixXd r = ax - x * lambda.asDiagonal();
            if (r.col(0).norm() <= std::max(tol, 1e-12) * scale) {
                converged = true;
                break;
            }

            Eigen::MatrixXd basis(n, x.cols() + r.cols() + p.cols());
            basis << x, r, p;
            Eigen::MatrixXd s = orth(basis);
            Eigen::MatrixXd reduced = s.transpose() * m22 * s;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
            Eigen::Index take = std::min<Eigen::Index>(block, s.cols());
            Eigen::MatrixXd y = es.eigenvectors().leftCols(take);
            Eigen::MatrixXd x_new = s * y;
            Eigen::MatrixXd step = x_new - x * (x.transpose() * x_new);
            p = step.colwise().norm().maxCoeff() > 1e-14 ? orth(step) : Eigen::MatrixXd(n, 0);
            x = x_new;
            if (take < block) {
                // Basis collapsed to the full space: the Ritz values are exact.
                theta = es.eigenvalues()[0];
                converged = true;
                ++iter;
                break;
            }
        }
        guard.theta_min = theta;
        guard.iterations_used = iter;
        if (!converged) {
            throw std::runtime_error("schur_guard: LOBPCG failed to converge; best estimate " +
                                     std::to_string(theta));
        }
    }
    if (guard.theta_min <= 0) {
        throw std::runtime_error("schur_guard: matrix is not positive definite (theta_min = " +
                                 std::to_string(guard.theta_min) + ")");
    }
    return guard;
}

Eigen::VectorXd grad_offdiagonal(const Eigen::VectorXd& m21, const Eigen::VectorXd& g1,
                                 const Eigen::MatrixXd& g2, const Eigen::VectorXd& dt) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m21.size());
    for (Eigen::Index e = 0; e < g1.size(); ++e) {
        double expo = std::exp(-2.0 * g1[e] * g2.col(e).dot(m21)) * dt[e];
        grad -= 2.0 * g1[e] * expo * g2.col(e);
    }
    return grad;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double theta_min, double m11,
                             double eps_b) {
    double radius = (1.0 - eps_b) * std::sqrt(theta_min * m11);
    Eigen::VectorXd out = v;
    // Rescale until inside; repeating makes the projection bitwise idempotent
    // even when rounding leaves the first rescale a few ulp outside.
    for (double norm = out.norm(); norm > radius; norm = out.norm()) {
        out *= radius / norm;
    }
    return out;
}

Eigen::MatrixXd optimize_offdiagonal(const Eigen::MatrixXd& metric, const EdgeSet& edges,
                                     const LearnConfig& config) {
    const Eigen::Index k = metric.rows();
    if (k <= 1 || edges.empty()) return metric;

    Eigen::MatrixXd m = metric;
    const Eigen::Index n_edges = static_cast<Eigen::Index>(edges.edges.size());
    double t0 = config.step_size > 0 ? config.step_size : default_step(edges);

    for (Eigen::Index row = 0; row < k; ++row) {
        // Permutation placing `row` first, remaining rows in order.
        std::vector<Eigen::Index> perm;
        perm.reserve(k);
        perm.push_back(row);
        for (Eigen::Index i = 0; i < k; ++i) {
            if (i != row) perm.push_back(i);
        }
        Eigen::MatrixXd mp(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) mp(i, j) = m(perm[i], perm[j]);

        double m11 = mp(0, 0);
        Eigen::MatrixXd m22 = mp.block(1, 1, k - 1, k - 1);
        Eigen::VectorXd m21 = mp.col(0).tail(k - 1);
        SchurGuard guard = schur_guard(m22);

        // Per-edge split of g (one column per edge) and the folded constants dt.
        Eigen::VectorXd g1(n_edges), dt(n_edges);
        Eigen::MatrixXd g2(k - 1, n_edges);
        for (Eigen::Index e = 0; e < n_edges; ++e) {
            const auto& edge = edges.edges[e];
            g1[e] = edge.g[row];
            Eigen::Index c = 0;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (i != row) g2(c++, e) = edge.g[i];
            }
            dt[e] = std::exp(-g1[e] * g1[e] * m11 - g2.col(e).dot(m22 * g2.col(e))) * edge.d;
        }

        auto partial_objective = [&](const Eigen::VectorXd& v) {
            double sum = 0.0;
            for (Eigen::Index e = 0; e < n_edges; ++e) {
                sum += std::exp(-2.0 * g1[e] * g2.col(e).dot(v)) * dt[e];
            }
            return sum;
        };

        double t = t0;
        double obj = partial_objective(m21);
        for (int l = 0; l < config.max_pg_iters; ++l) {
            Eigen::VectorXd grad = grad_offdiagonal(m21, g1, g2, dt);
            Eigen::VectorXd cand = project_ball(m21 - t * grad, guard.theta_min, m11,
                                                config.eps_b());
            double cand_obj = partial_objective(cand);
            if (cand_obj > obj) {
                t *= 0.5;
                if (t < 1e-16) break;
                continue;
            }
            double gain = obj - cand_obj;
            m21 = std::move(cand);
            obj = cand_obj;
            if (gain < config.objective_tol) break;
        }

        for (Eigen::Index i = 0; i < k - 1; ++i) {
            m(perm[i + 1], row) = m21[i];
            m(row, perm[i + 1]) = m21[i];
        }
    }
    return m;
}

namespace {

EdgeSet subsample_edges(const EdgeSet& edges, double rate, uint64_t seed) {
    if (rate >= 1.0) return edges;
    const auto total = edges.edges.size();
    auto keep = std::max<size_t>(1, static_cast<size_t>(std::floor(rate * total)));
    std::vector<size_t> order(total);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    EdgeSet sub;
    sub.node_count = edges.node_count;
    sub.edges.reserve(keep);
    for (auto i : order) sub.edges.push_back(edges.edges[i]);
    return sub;
}

Eigen::MatrixXd learn_metric_impl(const EdgeSet& edges, const LearnConfig& config,
                                  bool with_offdiagonal) {
    config.validate();
    if (edges.empty()) {
        throw std::invalid_argument("learn_metric: edge set is empty");
    }
    const Eigen::Index k = edges.feature_dim();
    Eigen::MatrixXd m =
        Eigen::MatrixXd::Identity(k, k) * (config.trace_bound / static_cast<double>(k));

    EdgeSet train = subsample_edges(edges, config.edge_subsample_rate, config.rng_seed);
    StageTracer tracer(config.trace_path);

    double obj = glr_objective(m, train);
    for (int outer = 0; outer < config.max_outer_iters; ++outer) {
        bool improved = false;

        // The diagonal polytope can become empty after the off-diagonal stage
        // grows the Gershgorin radii beyond the trace budget; the current
        // metric is still PD (ball constraint), so the stage is just skipped.
        Eigen::VectorXd floor = m.cwiseAbs().rowwise().sum() - m.diagonal().cwiseAbs();
        bool diagonal_feasible =
            (floor.array() + config.eps_g()).sum() <= config.trace_bound + 1e-12;
        if (diagonal_feasible) {
            Eigen::MatrixXd cand = optimize_diagonal(m, train, config);
            double cand_obj = glr_objective(cand, train);
            bool adopted = cand_obj < obj - config.objective_tol;
            tracer.record("diagonal", -1, obj, cand_obj, adopted);
            if (adopted) {
                m = std::move(cand);
                obj = cand_obj;
                improved = true;
            }
        } else {
            tracer.record("diagonal-skipped", -1, obj, obj, false);
        }

        if (with_offdiagonal && k > 1) {
            Eigen::MatrixXd cand = optimize_offdiagonal(m, train, config);
            double cand_obj = glr_objective(cand, train);
            bool adopted = cand_obj < obj - config.objective_tol;
            tracer.record("offdiagonal", -1, obj, cand_obj, adopted);
            if (adopted) {
                m = std::move(cand);
                obj = cand_obj;
                improved = true;
            }
        }
        if (!improved) break;
    }
    // Learning may have seen a subset; the reported objective covers all edges.
    tracer.record("final", -1, obj, glr_objective(m, edges), false);
    return m;
}

} // namespace

Eigen::MatrixXd learn_metric(const EdgeSet& edges, const LearnConfig& config,
                             Eigen::Index feature_dim) {
    if (edges.empty()) {
        return Eigen::MatrixXd::Identity(feature_dim, feature_dim) *
               (config.trace_bound / static_cast<double>(feature_dim));
    }
    return learn_metric_impl(edges, config, /*with_offdiagonal=*/true);
}

Eigen::MatrixXd learn_metric_diagonal_only(const EdgeSet& edges, const LearnConfig& config,
                                           Eigen::Index feature_dim) {
    if (edges.empty()) {
        return Eigen::MatrixXd::Identity(feature_dim, feature_dim) *
               (config.trace_bound / static_cast<double>(feature_dim));
    }
    return learn_metric_impl(edges, config, /*with_offdiagonal=*/false);
}

} // namespace fgl
