#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "pdmpnet/linearize.hpp"
#include "pdmpnet/simulate.hpp"
#include "support.hpp"

using namespace pdmpnet;
using testing::vec;

namespace {

LinearProgram make_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    LinearProgram lp;
    lp.A = A;
    lp.b = b;
    lp.c = c;
    return lp;
}

/// Optimal value of min c·x, Ax = b, x ≥ 0 by enumerating every basis.
double vertex_enumeration(const LinearProgram& lp) {
    const int m = static_cast<int>(lp.A.rows()), n = static_cast<int>(lp.A.cols());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<std::size_t>(m));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == m) {
            Eigen::MatrixXd B(m, m);
            for (int i = 0; i < m; ++i) B.col(i) = lp.A.col(pick[static_cast<std::size_t>(i)]);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
            if (lu.rank() < m) return;
            const Eigen::VectorXd xb = lu.solve(lp.b);
            if (xb.minCoeff() < -1e-12) return;
            double obj = 0.0;
            for (int i = 0; i < m; ++i) obj += lp.c(pick[static_cast<std::size_t>(i)]) * xb(i);
            best = std::min(best, obj);
            return;
        }
        for (int j = start; j < n; ++j) {
            pick[static_cast<std::size_t>(depth)] = j;
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

std::shared_ptr<const DiscreteControlSet> controls_for(std::shared_ptr<const Dynamics> m, double dx, double h,
                                                       int n_a) {
    auto grid = std::make_shared<Grid>(m->network_ptr(), dx);
    return std::make_shared<DiscreteControlSet>(m, grid, h, n_a);
}

/// Value of one stationary policy of the scheme's decision process, from an
/// explicit dense linear system.
Eigen::VectorXd evaluate_policy(const DiscreteControlSet& cs, const std::vector<int>& policy) {
    const int n = cs.num_states(), modes = cs.num_modes();
    const double delta = cs.dynamics().discount(), h = cs.h();
    const double beta = std::exp(-delta * h), wh = (1.0 - beta) / delta;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd r(n);
    for (int s = 0; s < n; ++s) {
        const int node = s / modes, g = s % modes;
        const Action& a = cs.actions(node, g).at(static_cast<std::size_t>(policy[static_cast<std::size_t>(s)]));
        const double p = a.rate * h;
        r(s) = wh * a.cost;
        M(s, cs.state(a.foot.n0, g)) -= beta * (1.0 - p) * a.foot.w0;
        M(s, cs.state(a.foot.n1, g)) -= beta * (1.0 - p) * a.foot.w1;
        for (int g2 = 0; g2 < modes; ++g2) M(s, cs.state(node, g2)) -= beta * p * a.q[static_cast<std::size_t>(g2)];
    }
    return M.partialPivLu().solve(r);
}

}  // namespace

TEST_CASE("simplex: trivial programs") {
    const auto one = solve_lp(make_lp(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)));
    CHECK(one.status == "optimal");
    CHECK(one.objective == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.primal(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.dual_objective == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd A(1, 2);
    A << 1, 1;
    CHECK_THROWS_AS(solve_lp(make_lp(A, Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Ones(2))), Infeasible);
    A << 1, -1;
    Eigen::VectorXd c(2);
    c << -1, 0;
    CHECK_THROWS_AS(solve_lp(make_lp(A, Eigen::VectorXd::Zero(1), c)), Unbounded);
}

TEST_CASE("simplex: small transport problem matches vertex enumeration") {
    Eigen::MatrixXd A(3, 6);
    // supplies 0.6 / 0.4 at two sources, demands 0.3 / 0.3 / 0.4 (one row dropped as redundant)
    A << 1, 1, 1, 0, 0, 0,
         0, 0, 0, 1, 1, 1,
         1, 0, 0, 1, 0, 0;
    Eigen::VectorXd b(3), c(6);
    b << 0.6, 0.4, 0.3;
    c << 4, 1, 3, 2, 5, 1;
    Eigen::MatrixXd A2(4, 6);
    A2 << A, (Eigen::RowVectorXd(6) << 0, 1, 0, 0, 1, 0).finished();
    Eigen::VectorXd b2(4);
    b2 << b, 0.3;
    const auto lp = make_lp(A2, b2, c);
    const auto sol = solve_lp(lp);
    CHECK(sol.objective == doctest::Approx(vertex_enumeration(lp)).epsilon(1e-12));
    CHECK(std::abs(sol.objective - sol.dual_objective) <= 1e-10);
    CHECK(sol.primal_residual <= 1e-12);
    CHECK(sol.dual_infeasibility <= 1e-12);
}

TEST_CASE("simplex: a cycling-prone degenerate program terminates at the optimum") {
    // A classic degenerate program on which the most-negative-reduced-cost
    // rule cycles without an anti-cycling safeguard.
    Eigen::MatrixXd A(3, 7);
    A << 0.25, -60, -0.04, 9, 1, 0, 0,
         0.5, -90, -0.02, 3, 0, 1, 0,
         0, 0, 1, 0, 0, 0, 1;
    Eigen::VectorXd b(3), c(7);
    b << 0, 0, 1;
    c << -0.75, 150, -0.02, 6, 0, 0, 0;
    const auto lp = make_lp(A, b, c);
    const auto sol = solve_lp(lp);
    CHECK(sol.objective == doctest::Approx(-0.05).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(vertex_enumeration(lp)).epsilon(1e-12));
    CHECK(std::abs(sol.objective - sol.dual_objective) <= 1e-12);
}

TEST_CASE("simplex: random feasible programs satisfy strong duality") {
    RngStream rng(4, 0);
    for (int t = 0; t < 30; ++t) {
        const int m = 3, n = 7;
        Eigen::MatrixXd A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1, 1);
        Eigen::VectorXd x0(n), c(n);
        for (int j = 0; j < n; ++j) {
            x0(j) = rng.uniform(0, 1);
            c(j) = rng.uniform(0.1, 1);  // positive costs keep the program bounded
        }
        const auto lp = make_lp(A, A * x0, c);
        const auto sol = solve_lp(lp);
        CHECK(sol.objective == doctest::Approx(vertex_enumeration(lp)).epsilon(1e-9));
        CHECK(std::abs(sol.objective - sol.dual_objective) <= 1e-9);
        CHECK(sol.complementary_slackness <= 1e-9);
    }
}

TEST_CASE("bump kernel: unit mass and exact derivative of affine inputs") {
    const auto& k = bump_kernel();
    CHECK(k.mass() == doctest::Approx(1.0).epsilon(1e-12));
    double first = 0.0, dmass = 0.0;
    for (std::size_t i = 0; i < k.nodes.size(); ++i) {
        first += k.dweights[i] * k.nodes[i];
        dmass += k.dweights[i];
    }
    CHECK(first == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(dmass) <= 1e-12);
}

TEST_CASE("mollification reproduces affine fields along a line") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto xnet = extend(m->network_ptr(), 0.2);
    auto grid = std::make_shared<Grid>(xnet, 0.05);
    auto v = std::make_shared<ValueField>(grid, 4, 0.0);
    for (int n = 0; n < grid->num_nodes(); ++n) {
        const auto s = line_coordinate(*xnet, grid->point(n), 1);
        for (int g = 0; g < 4; ++g) (*v)(n, g) = 2.0 + 0.5 * s.value_or(0.0) + 0.1 * g;
    }
    const MollifiedField f(v, 1, 0.1);
    for (double s : {0.0, 0.05, 0.33, 0.9, 1.0})
        for (int g = 0; g < 4; ++g) {
            CHECK(f.value(s, g) == doctest::Approx(2.0 + 0.5 * s + 0.1 * g).epsilon(1e-12));
            CHECK(f.slope(s, g) == doctest::Approx(0.5).epsilon(1e-10));
        }
    CHECK_THROWS_AS(mollify_edgewise(v, 0.3), MarginViolated);
}

TEST_CASE("constant test functions: subsolution residual by hand") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.1, 0.05, 5);
    // For w ≡ c the residual is δc − l at every discrete control.
    double min_cost = kInf;
    for (int n = 0; n < cs->grid().num_nodes(); ++n)
        for (int g = 0; g < 4; ++g)
            for (const auto& a : cs->actions(n, g)) min_cost = std::min(min_cost, a.cost);
    CHECK(check_subsolution(*cs, ConstantTestFunction(0.0)).max_violation == 0.0);
    const auto chk = check_subsolution(*cs, ConstantTestFunction(10.0));
    CHECK(chk.max_violation == doctest::Approx(10.0 - min_cost).epsilon(1e-12));
    CHECK(chk.witness_node >= 0);
}

TEST_CASE("planted violation: the solved value plus one is detected") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.05, 0.025, 9);
    const ValueField v = solve_value(*cs);
    const auto raised = check_subsolution(*cs, GridTestFunction(v, 1.0));
    CHECK(raised.max_violation >= 0.9);
    const auto json = raised.to_json();
    CHECK(json.contains("max_violation"));
}

TEST_CASE("assembled subsolution is continuous at the junction") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    const double dx = 0.05, h = 0.025, eps = 0.2;
    auto cs = controls_for(m, dx, h, 5);
    const ValueField v = solve_value(*cs);
    const auto sc = shaking_scales(*m, eps);
    const double rho = std::min(sc.rho_ext, eps);
    auto ext = solve_value_extended(shake(extend_dynamics(*m, extend(m->network_ptr(), eps)), rho), dx, h, 5);
    const double width = rho;
    const auto diag = subsolution_diagnostics(ext.restricted, v, width);
    const auto w = assemble_subsolution(mollify_edgewise(std::make_shared<ValueField>(ext.extended), width), *m, diag);
    CHECK(w.correction() == doctest::Approx(4.0 * m->constants().lambda_bound / m->discount() * diag.omega()));
    for (int g = 0; g < 4; ++g)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(w.value(NetworkPoint::on(j, 1e-7), g) - w.value(NetworkPoint::junction(), g)) <= 1e-5);
}

TEST_CASE("occupation LP value equals delta times the solver value") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.2, 0.1, 5);
    const ValueField v = solve_value(*cs);
    const auto rep = duality_report(cs, v, {{NetworkPoint::junction(), 0}, {NetworkPoint::on(1, 0.4), 3}});
    REQUIRE(rep.rows.size() == 2);
    for (const auto& r : rep.rows) {
        CHECK(r.gap_primal_dual <= 1e-8);
        CHECK(r.gap_value <= 1e-8);
        CHECK(r.dual_violation <= 1e-9);
    }
    CHECK(rep.to_csv().rfind("edge,coord,mode,delta_v,primal,dual", 0) == 0);
    CHECK(rep.to_json()[0].contains("certificate"));
}

TEST_CASE("occupation LP agrees with exhaustive policy enumeration on a five-node grid") {
    testing::LineOptions o;
    o.rate = 1.3;
    auto m = testing::line_model(o);
    auto cs = controls_for(m, 0.5, 0.25, 1);
    REQUIRE(cs->grid().num_nodes() == 5);
    const int n = cs->num_states();
    std::vector<int> sizes;
    long total = 1;
    for (int s = 0; s < n; ++s) {
        sizes.push_back(static_cast<int>(cs->actions(s / 2, s % 2).size()));
        total *= sizes.back();
    }
    REQUIRE(total <= 20000);
    std::vector<int> pol(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd best = Eigen::VectorXd::Constant(n, kInf);
    for (long k = 0; k < total; ++k) {
        long rest = k;
        for (int s = 0; s < n; ++s) {
            pol[static_cast<std::size_t>(s)] = static_cast<int>(rest % sizes[static_cast<std::size_t>(s)]);
            rest /= sizes[static_cast<std::size_t>(s)];
        }
        best = best.cwiseMin(evaluate_policy(*cs, pol));
    }
    const ValueField v = solve_value(*cs);
    const double delta = m->discount();
    std::vector<std::pair<NetworkPoint, int>> pts;
    for (int node = 0; node < 5; ++node) pts.push_back({cs->grid().point(node), node % 2});
    const auto rep = duality_report(cs, v, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int s = cs->state(static_cast<int>(i), pts[i].second);
        CHECK(rep.rows[i].primal == doctest::Approx(delta * best(s)).epsilon(1e-9));
        CHECK(std::abs(rep.rows[i].primal - delta * best(s)) <= 1e-8);
        CHECK(std::abs(v.data()[static_cast<std::size_t>(s)] - best(s)) <= 1e-8);
    }
}

TEST_CASE("duality report refuses a value from another scheme") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.2, 0.1, 5);
    auto other = controls_for(m, 0.2, 0.05, 5);
    const ValueField v = solve_value(*other);
    CHECK_THROWS_AS(duality_report(cs, v, {{NetworkPoint::junction(), 0}}), SchemeMismatch);
}

TEST_CASE("simulated occupation measures are feasible for the LP") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.1, 0.05, 5);
    const ValueField v = solve_value(*cs);
    const NetworkPoint x = NetworkPoint::on(0, 0.5);
    const auto lp = build_occupation_lp(cs, x, 3);
    const auto mu = mc_occupation(cs, x, 3, greedy_policy(cs, v), 200, 20.0, 5);
    CHECK(mu.mass + mu.deficit == doctest::Approx(1.0).epsilon(1e-9));
    const auto fr = occupation_feasibility(lp, mu);
    CHECK(fr.feasible());
}

TEST_CASE("adjoint identity on hand-solvable test functions") {
    // Static two-mode chain flipping at rate λ: with φ(x, γ) = γ the identity
    // Σ μ(λ(φ(γ') − φ(γ)) − δ(φ − φ(start))) = 0 holds exactly in expectation.
    testing::LineOptions o;
    o.speed = 0.0;
    o.rate = 1.2;
    auto m = testing::line_model(o);
    auto cs = controls_for(m, 0.25, 0.1, 3);
    ValueField modes(cs->grid_ptr(), 2);
    for (int n = 0; n < cs->grid().num_nodes(); ++n) modes(n, 1) = 1.0;
    const GridTestFunction phi(modes);
    const ConstantTestFunction one(1.0);
    const Policy rest = Policy::from_schedule(Schedule::constant(Control(vec({0.0}))));
    const auto mu = mc_occupation(cs, NetworkPoint::on(0, 0.5), 0, rest, 2000, 25.0, 8, 0.01);
    const auto res = adjoint_identity_check(mu, {&one, &phi}, {1.0, 1.0});
    REQUIRE(res.size() == 2);
    CHECK(res[0].residual == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(res[1].residual) <= res[1].tolerance());
}

TEST_CASE("Perron bound for a constant subsolution") {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.2, 0.1, 5);
    const ValueField v = solve_value(*cs);
    double min_cost = kInf;
    for (int n = 0; n < cs->grid().num_nodes(); ++n)
        for (int g = 0; g < 4; ++g)
            for (const auto& a : cs->actions(n, g)) min_cost = std::min(min_cost, a.cost);
    const ConstantTestFunction w(min_cost / m->discount());
    REQUIRE(check_subsolution(*cs, w).max_violation <= 0.0);
    const auto rep = duality_report(cs, v, {{NetworkPoint::junction(), 1}, {NetworkPoint::on(2, 0.6), 2}});
    for (const auto& r : rep.rows) CHECK(m->discount() * w.value(r.x, r.mode) <= r.dual + 1e-12);
}

TEST_CASE("occupation LP stays well conditioned on a finer grid") {
    // Away from the junction this program used to drive the basis singular.
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto cs = controls_for(m, 0.05, 0.025, 5);
    const ValueField v = solve_value(*cs);
    const auto rep = duality_report(cs, v, {{NetworkPoint::on(0, 0.5), 0}, {NetworkPoint::on(2, 0.8), 2}});
    for (const auto& r : rep.rows) {
        CHECK(std::isfinite(r.primal));
        CHECK(r.gap_primal_dual <= 1e-8);
        CHECK(r.gap_value <= 1e-8);
    }
}
