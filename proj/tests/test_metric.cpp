#include "fgl/metric.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace {

fgl::EdgeSet single_edge(const Eigen::VectorXd& g, double d) {
    fgl::EdgeSet edges;
    edges.node_count = 2;
    fgl::CorrespondenceEdge e;
    e.a = 0;
    e.b = 1;
    e.g = g;
    e.d = d;
    edges.edges.push_back(e);
    return edges;
}

// Feature-difference fixture with two edge populations in a 2-D feature
// space: pairs whose components agree (g = (a, a), small d) and pairs whose
// components oppose (g = (a, -a), large d). A diagonal metric cannot
// separate them; a negative off-diagonal can.
fgl::EdgeSet velocity_fixture(Eigen::Index pairs = 40, uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    fgl::EdgeSet edges;
    edges.node_count = 4 * pairs;
    Eigen::Index node = 0;
    for (Eigen::Index i = 0; i < pairs; ++i) {
        double a = amp(rng);
        fgl::CorrespondenceEdge same;
        same.a = node++;
        same.b = node++;
        same.g = Eigen::Vector2d(a, a);
        same.d = 0.05;
        edges.edges.push_back(same);

        fgl::CorrespondenceEdge opposite;
        opposite.a = node++;
        opposite.b = node++;
        opposite.g = Eigen::Vector2d(a, -a);
        opposite.d = 5.0;
        edges.edges.push_back(opposite);
    }
    return edges;
}

// Best diagonal metric on the Gershgorin-feasible simplex by grid search.
double best_diagonal_objective(const fgl::EdgeSet& edges, double trace_bound,
                               int levels_per_entry = 60) {
    const Eigen::Index k = edges.feature_dim();
    REQUIRE(k == 2); // grid search oracle is written for the 2-D fixture
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= levels_per_entry; ++i) {
        double m0 = trace_bound * i / levels_per_entry;
        for (int j = 0; i + j <= levels_per_entry; ++j) {
            double m1 = trace_bound * j / levels_per_entry;
            Eigen::MatrixXd m = Eigen::Vector2d(m0, m1).asDiagonal();
            best = std::min(best, oracle::naive_glr(m, edges));
        }
    }
    return best;
}

} // namespace

TEST_CASE("glr objective basics") {
    fgl::EdgeSet empty;
    CHECK(fgl::glr_objective(Eigen::MatrixXd::Identity(2, 2), empty) == 0.0);

    Eigen::VectorXd g = Eigen::VectorXd::Zero(4);
    g[0] = 1.0;
    auto edges = single_edge(g, 2.0);
    CHECK(fgl::glr_objective(Eigen::MatrixXd::Identity(4, 4), edges) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("glr objective matches the naive per-edge oracle") {
    auto edges = oracle::random_edges(5, 10, 42);
    Eigen::MatrixXd m = oracle::random_spd(5, 43);
    CHECK(fgl::glr_objective(m, edges) ==
          doctest::Approx(oracle::naive_glr(m, edges)).epsilon(1e-12));
    CHECK(fgl::glr_objective(m, edges) <= edges.total_d() + 1e-12);
    CHECK(fgl::glr_objective(m, edges) > 0.0);
}

TEST_CASE("diagonal gradient basics") {
    fgl::EdgeSet empty;
    Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
    CHECK(fgl::grad_diagonal(zero3, empty, Eigen::MatrixXd::Zero(3, 3)).isZero());

    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    g[0] = 1.0;
    auto edges = single_edge(g, 1.0);
    Eigen::VectorXd grad = fgl::grad_diagonal(zero3, edges, Eigen::MatrixXd::Zero(3, 3));
    CHECK(grad[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(grad[1] == 0.0);
    CHECK(grad[2] == 0.0);
}

TEST_CASE("diagonal gradient matches finite differences") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto edges = oracle::random_edges(4, 25, 500 + seed);
        Eigen::MatrixXd base = oracle::random_spd(4, 600 + seed);
        Eigen::MatrixXd offdiag = base;
        offdiag.diagonal().setZero();

        std::mt19937_64 rng(700 + seed);
        std::uniform_real_distribution<double> uni(0.2, 1.5);
        Eigen::VectorXd diag(4);
        for (int i = 0; i < 4; ++i) diag[i] = uni(rng);

        Eigen::VectorXd analytic = fgl::grad_diagonal(diag, edges, offdiag);
        auto objective = [&](const Eigen::VectorXd& d) {
            Eigen::MatrixXd m = offdiag;
            m.diagonal() = d;
            return oracle::naive_glr(m, edges);
        };
        Eigen::VectorXd numeric = oracle::finite_difference(objective, diag);
        CHECK((analytic - numeric).norm() / numeric.norm() < 1e-5);
        CHECK((analytic.array() <= 0.0).all());
    }
}

TEST_CASE("project_diagonal leaves interior points unchanged") {
    Eigen::VectorXd v(3);
    v << 0.5, 0.7, 0.6;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd out = fgl::project_diagonal(v, r, 3.0, 1e-8);
    CHECK(out == v);
}

TEST_CASE("project_diagonal trace shift") {
    Eigen::VectorXd v(2);
    v << 3.0, 3.0;
    Eigen::VectorXd out = fgl::project_diagonal(v, Eigen::VectorXd::Zero(2), 2.0, 0.0);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("project_diagonal clamp only") {
    Eigen::VectorXd v(2), r(2);
    v << 0.1, 1.0;
    r << 0.5, 0.0;
    Eigen::VectorXd out = fgl::project_diagonal(v, r, 10.0, 0.0);
    CHECK(out[0] == doctest::Approx(0.5));
    CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("project_diagonal is idempotent and detects infeasibility") {
    std::mt19937_64 rng(900);
    std::uniform_real_distribution<double> uni(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd v(4), r(4);
        for (int i = 0; i < 4; ++i) v[i] = uni(rng) - 0.5, r[i] = 0.3 * uni(rng);
        if (r.sum() + 4 * 1e-6 > 3.0) continue;
        Eigen::VectorXd once = fgl::project_diagonal(v, r, 3.0, 1e-6);
        Eigen::VectorXd twice = fgl::project_diagonal(once, r, 3.0, 1e-6);
        CHECK(once == twice); // bitwise idempotence
        CHECK(once.sum() <= 3.0 + 1e-9);
        for (int i = 0; i < 4; ++i) CHECK(once[i] >= r[i] + 1e-6 - 1e-12);
    }

    Eigen::VectorXd r_big(2);
    r_big << 2.0, 2.0;
    CHECK_THROWS_AS(fgl::project_diagonal(Eigen::VectorXd::Ones(2), r_big, 3.0, 1e-6),
                    fgl::infeasible_error);
}

TEST_CASE("optimize_diagonal is a no-op without edges") {
    fgl::LearnConfig config;
    Eigen::MatrixXd m = Eigen::Vector3d(1.0, 0.9, 1.1).asDiagonal();
    fgl::EdgeSet empty;
    Eigen::MatrixXd out = fgl::optimize_diagonal(m, empty, config);
    CHECK(out.isApprox(m, 1e-12));
}

TEST_CASE("optimize_diagonal shifts mass to the active feature") {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    g[0] = 1.0;
    auto edges = single_edge(g, 1.0);
    fgl::LearnConfig config;
    config.trace_bound = 2.0;
    config.max_pg_iters = 5000;
    Eigen::MatrixXd m = Eigen::Vector2d(1.0, 1.0).asDiagonal();
    Eigen::MatrixXd out = fgl::optimize_diagonal(m, edges, config);
    // Only feature 0 matters; all trace budget migrates there.
    CHECK(out(0, 0) == doctest::Approx(2.0 - config.eps_g()).epsilon(1e-4));
    CHECK(out(1, 1) == doctest::Approx(config.eps_g()).epsilon(1e-3));

    // Against a 1-D grid search over feasible diagonals (m0 + m1 = C).
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 2000; ++i) {
        double m0 = 2.0 * i / 2000.0;
        best = std::min(best, std::exp(-m0));
    }
    CHECK(fgl::glr_objective(out, edges) == doctest::Approx(best).epsilon(1e-4));
}

TEST_CASE("optimize_diagonal never increases the objective") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto edges = oracle::random_edges(4, 30, 1000 + seed);
        fgl::LearnConfig config;
        config.max_pg_iters = 50;
        Eigen::MatrixXd m =
            Eigen::MatrixXd::Identity(4, 4) * (config.trace_bound / 4.0);
        double before = fgl::glr_objective(m, edges);
        Eigen::MatrixXd out = fgl::optimize_diagonal(m, edges, config);
        CHECK(fgl::glr_objective(out, edges) <= before + 1e-12);
    }
}

TEST_CASE("schur_guard on diagonal matrices") {
    auto id = fgl::schur_guard(Eigen::MatrixXd::Identity(4, 4));
    CHECK(id.theta_min == doctest::Approx(1.0).epsilon(1e-10));

    Eigen::MatrixXd d = Eigen::Vector3d(2, 3, 7).asDiagonal();
    CHECK(fgl::schur_guard(d).theta_min == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("schur_guard matches dense eigensolve on random SPD matrices") {
    for (Eigen::Index n : {2, 3, 5, 10, 25, 50}) {
        for (uint64_t seed = 0; seed < 3; ++seed) {
            Eigen::MatrixXd m = oracle::random_spd(n, 2000 + 10 * n + seed);
            double expected = oracle::min_eigenvalue(m);
            auto guard = fgl::schur_guard(m);
            CHECK(std::abs(guard.theta_min - expected) / expected < 1e-8);
        }
    }
}

TEST_CASE("schur_guard rejects non-PD input") {
    Eigen::MatrixXd indef = Eigen::Vector2d(1.0, -0.5).asDiagonal();
    CHECK_THROWS_AS(fgl::schur_guard(indef), std::runtime_error);
}

TEST_CASE("off-diagonal gradient basics") {
    Eigen::VectorXd m21 = Eigen::VectorXd::Zero(3);

    // g(1) = 0 on every edge annihilates the gradient.
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(4);
    Eigen::MatrixXd g2 = Eigen::MatrixXd::Random(3, 4);
    Eigen::VectorXd dt = Eigen::VectorXd::Ones(4);
    CHECK(fgl::grad_offdiagonal(m21, g1, g2, dt).isZero());

    // Single edge g(1)=1, g(2)=e1, dt=1 at M21 = 0.
    Eigen::VectorXd one(1);
    one << 1.0;
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
    e1(0, 0) = 1.0;
    Eigen::VectorXd grad = fgl::grad_offdiagonal(m21, one, e1, Eigen::VectorXd::Ones(1));
    CHECK(grad[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(grad[1] == 0.0);
    CHECK(grad[2] == 0.0);
}

TEST_CASE("off-diagonal gradient matches finite differences") {
    std::mt19937_64 rng(3000);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.1, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index edges = 20, dim = 4;
        Eigen::VectorXd g1(edges), dt(edges);
        Eigen::MatrixXd g2(dim, edges);
        for (Eigen::Index e = 0; e < edges; ++e) {
            g1[e] = gauss(rng);
            dt[e] = uni(rng);
            for (Eigen::Index i = 0; i < dim; ++i) g2(i, e) = gauss(rng);
        }
        Eigen::VectorXd m21(dim);
        for (Eigen::Index i = 0; i < dim; ++i) m21[i] = 0.3 * gauss(rng);

        auto partial = [&](const Eigen::VectorXd& v) {
            double sum = 0.0;
            for (Eigen::Index e = 0; e < edges; ++e)
                sum += std::exp(-2.0 * g1[e] * v.dot(g2.col(e))) * dt[e];
            return sum;
        };
        Eigen::VectorXd analytic = fgl::grad_offdiagonal(m21, g1, g2, dt);
        Eigen::VectorXd numeric = oracle::finite_difference(partial, m21);
        CHECK((analytic - numeric).norm() / numeric.norm() < 1e-5);
    }
}

TEST_CASE("project_ball basics") {
    CHECK(fgl::project_ball(Eigen::VectorXd::Zero(3), 1.0, 1.0, 0.0).isZero());

    Eigen::VectorXd v(2);
    v << 3.0, 4.0;
    Eigen::VectorXd out = fgl::project_ball(v, 1.0, 1.0, 0.0);
    CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("project_ball preserves direction and is idempotent") {
    std::mt19937_64 rng(3100);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::VectorXd v(5);
        for (int i = 0; i < 5; ++i) v[i] = 3.0 * gauss(rng);
        double theta = 0.4, m11 = 1.2, eps_b = 1e-6;
        double rho = (1.0 - eps_b) * std::sqrt(theta * m11);
        Eigen::VectorXd out = fgl::project_ball(v, theta, m11, eps_b);
        if (v.norm() <= rho) {
            CHECK(out == v);
        } else {
            CHECK(out.norm() == doctest::Approx(rho).epsilon(1e-12));
            CHECK(out.normalized().isApprox(v.normalized(), 1e-12));
        }
        CHECK(fgl::project_ball(out, theta, m11, eps_b) == out);
    }
}

TEST_CASE("optimize_offdiagonal is a no-op for K=1") {
    auto edges = oracle::random_edges(1, 10, 3200);
    fgl::LearnConfig config;
    Eigen::MatrixXd m(1, 1);
    m << 2.0;
    CHECK(fgl::optimize_offdiagonal(m, edges, config) == m);
}

TEST_CASE("optimize_offdiagonal keeps zeros for axis-aligned features") {
    // Every g along e2: the g(1)*g(2) products vanish for every row choice.
    fgl::EdgeSet edges;
    edges.node_count = 20;
    for (int i = 0; i < 10; ++i) {
        fgl::CorrespondenceEdge e;
        e.a = 2 * i;
        e.b = 2 * i + 1;
        e.g = Eigen::Vector3d(0.0, 1.0 + 0.1 * i, 0.0);
        e.d = 1.0;
        edges.edges.push_back(e);
    }
    fgl::LearnConfig config;
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd out = fgl::optimize_offdiagonal(m, edges, config);
    CHECK(out.isApprox(m, 1e-14));
}

TEST_CASE("optimize_offdiagonal keeps the metric symmetric PD and lowers the objective") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto edges = oracle::random_edges(5, 40, 3300 + seed);
        fgl::LearnConfig config;
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(5, 5) * (config.trace_bound / 5.0);
        double before = fgl::glr_objective(m, edges);
        Eigen::MatrixXd out = fgl::optimize_offdiagonal(m, edges, config);
        CHECK((out - out.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(oracle::min_eigenvalue(out) > 0.0);
        CHECK(out.trace() <= config.trace_bound + 1e-9);
        CHECK(fgl::glr_objective(out, edges) <= before + 1e-12);
    }
}

TEST_CASE("velocity fixture: off-diagonal beats any diagonal metric") {
    auto edges = velocity_fixture();
    fgl::LearnConfig config;
    config.trace_bound = 3.0;

    Eigen::MatrixXd learned = fgl::learn_metric(edges, config);
    double full = fgl::glr_objective(learned, edges);
    double diag_best = best_diagonal_objective(edges, config.trace_bound);

    CHECK(learned(0, 1) < 0.0); // suppresses opposing-component pairs
    CHECK(learned(0, 1) == learned(1, 0));
    CHECK(full < diag_best);
    CHECK(full <= 0.9 * diag_best);

    Eigen::MatrixXd diag_only = fgl::learn_metric_diagonal_only(edges, config);
    CHECK(fgl::glr_objective(diag_only, edges) >= full);
}

TEST_CASE("learn_metric returns the initialization on empty edges") {
    fgl::EdgeSet empty;
    fgl::LearnConfig config;
    config.trace_bound = 3.0;
    Eigen::MatrixXd m = fgl::learn_metric(empty, config, 6);
    CHECK(m.rows() == 6);
    CHECK(m.isApprox(Eigen::MatrixXd::Identity(6, 6) * 0.5, 1e-15));
}

TEST_CASE("learn_metric invariants on random instances") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto edges = oracle::random_edges(4, 60, 4000 + seed);
        fgl::LearnConfig config;
        Eigen::MatrixXd m = fgl::learn_metric(edges, config);
        CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(oracle::min_eigenvalue(m) > 0.0);
        CHECK(m.trace() <= config.trace_bound + 1e-9);
        Eigen::MatrixXd init =
            Eigen::MatrixXd::Identity(4, 4) * (config.trace_bound / 4.0);
        CHECK(fgl::glr_objective(m, edges) <= fgl::glr_objective(init, edges) + 1e-12);
        CHECK(fgl::glr_objective(m, edges) >= 0.0);
    }
}

TEST_CASE("learn_metric trace records strictly decreasing adopted objectives") {
    auto edges = oracle::random_edges(3, 50, 5000);
    fgl::LearnConfig config;
    config.trace_path = "learn_trace_test.txt";
    fgl::learn_metric(edges, config);

    std::ifstream in(config.trace_path);
    REQUIRE(in.good());
    std::string line;
    double last_adopted = std::numeric_limits<double>::infinity();
    int adopted_count = 0;
    while (std::getline(in, line)) {
        if (line.find("adopted=1") == std::string::npos) continue;
        auto pos = line.find("objective_after=");
        REQUIRE(pos != std::string::npos);
        double value = std::stod(line.substr(pos + 16));
        CHECK(value < last_adopted);
        CHECK(value >= 0.0);
        last_adopted = value;
        ++adopted_count;
    }
    CHECK(adopted_count >= 1);
    in.close();
    std::remove(config.trace_path.c_str());
}

TEST_CASE("learn_metric with edge subsampling still reports the full objective") {
    auto edges = oracle::random_edges(4, 100, 6000);
    fgl::LearnConfig config;
    config.edge_subsample_rate = 0.3;
    config.rng_seed = 9;
    Eigen::MatrixXd m1 = fgl::learn_metric(edges, config);
    Eigen::MatrixXd m2 = fgl::learn_metric(edges, config);
    CHECK(m1 == m2); // deterministic under a fixed seed
    CHECK(oracle::min_eigenvalue(m1) > 0.0);
    CHECK(m1.trace() <= config.trace_bound + 1e-9);
}

TEST_CASE("learn_metric approaches the vanilla full-matrix PG reference") {
    // The Gershgorin/ball relaxation restricts the reachable set, so exact
    // parity only holds when the unconstrained optimum stays away from the
    // boundary of the positive-definite cone. Tight parity is checked on
    // such instances; a looser regression bound guards the rest (the known
    // worst case of the relaxation is documented with the acceptance gate).
    for (uint64_t seed = 0; seed < 3; ++seed) {
        auto edges = oracle::random_edges(4, 80, 7000 + seed);
        fgl::LearnConfig config;
        config.max_outer_iters = 40;
        config.max_pg_iters = 300;
        Eigen::MatrixXd ours = fgl::learn_metric(edges, config);
        Eigen::MatrixXd reference = oracle::vanilla_pg(edges, config.trace_bound);
        double f_ours = oracle::naive_glr(ours, edges);
        double f_ref = oracle::naive_glr(reference, edges);
        // Tight parity only when the reference is strictly diagonally
        // dominant: there the relaxed off-diagonal ball contains it.
        double dominance = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < reference.rows(); ++i) {
            double margin = reference(i, i) - (reference.row(i).cwiseAbs().sum() -
                                               std::abs(reference(i, i)));
            dominance = std::min(dominance, margin);
        }
        double bound = dominance > 0.0 ? 1.01 : 1.05;
        CHECK(f_ours <= f_ref * bound + 1e-12);
    }
}

TEST_CASE("LearnConfig validation") {
    fgl::LearnConfig bad;
    bad.trace_bound = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = fgl::LearnConfig{};
    bad.edge_subsample_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = fgl::LearnConfig{};
    bad.edge_subsample_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    fgl::LearnConfig{}.validate();
}
