#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "awarenet/allocation.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace awarenet;

namespace {

Graph k2() { return generate({GraphKind::complete, 2, 0.0, 1, 0}); }
Graph k3() { return generate({GraphKind::complete, 3, 0.0, 1, 0}); }

// the canonical K3 instance: beta = delta = 1, r = 1/4, kappa in [0,1],
// fitted unit ceiling cost; optimum is kappa = 1/2 on every node by symmetry
struct Canonical {
    Graph g = k3();
    SaisParams params = SaisParams::homogeneous(3, 1.0, 1.0, 0.0, 0.25);
    CostModel cost = fit_cost_params({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, params);
    SdpInstance inst = assemble_sdp(g, params, cost);
};

}  // namespace

TEST_CASE("cost fit reproduces the published homogeneous model") {
    const SaisParams p = SaisParams::homogeneous(1, 7.4e-3, 1.0 / 7.0, 0.0, 0.5);
    const CostModel m = fit_cost_params({1.0}, {0.0}, {0.024}, p);
    CHECK(m.s[0] == doctest::Approx(0.5 * (7.4e-3 + 0.024) / 0.024).epsilon(1e-14));
    CHECK(m.s[0] == doctest::Approx(0.6541666666666667).epsilon(1e-12));
    CHECK(m.c[0] == 0.0);
    CHECK(eval_cost(m, p, 0, 0.024) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_cost(m, p, 0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eval_cost(m, p, 0, 0.012) == doctest::Approx(0.8092783505154639).epsilon(1e-10));
}

TEST_CASE("fitted endpoints hold for random models") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const double beta = testsupport::uniform(rng, 0.05, 2.0);
        const double delta = testsupport::uniform(rng, 0.3, 2.0);
        const double r = testsupport::uniform(rng, 0.05, 0.95);
        const double lo = testsupport::uniform(rng, 0.0, 0.5);
        const double hi = lo + testsupport::uniform(rng, 0.01, 2.0);
        const double cbar = testsupport::uniform(rng, 0.1, 5.0);
        const SaisParams p = SaisParams::homogeneous(1, beta, delta, 0.0, r);
        const CostModel m = fit_cost_params({cbar}, {lo}, {hi}, p);

        CHECK(eval_cost(m, p, 0, lo) == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(eval_cost(m, p, 0, hi) == doctest::Approx(cbar).epsilon(1e-10));
        // nondecreasing on a 100-point grid
        double prev = -1e-12;
        for (int k = 0; k < 100; ++k) {
            const double kap = lo + (hi - lo) * k / 99.0;
            const double f = eval_cost(m, p, 0, kap);
            CHECK(f >= prev - 1e-12);
            prev = f;
        }
    }
}

TEST_CASE("degenerate kappa range is rejected") {
    const SaisParams p = SaisParams::homogeneous(1, 1.0, 1.0, 0.0, 0.5);
    CHECK_THROWS_AS(fit_cost_params({1.0}, {0.3}, {0.3}, p), std::invalid_argument);
}

TEST_CASE("cost evaluation outside the box is a domain error") {
    const SaisParams p = SaisParams::homogeneous(1, 1.0, 1.0, 0.0, 0.5);
    const CostModel m = fit_cost_params({1.0}, {0.1}, {0.9}, p);
    CHECK_THROWS_AS(eval_cost(m, p, 0, 0.05), std::domain_error);
    CHECK_THROWS_AS(eval_cost(m, p, 0, 0.95), std::domain_error);
}

TEST_CASE("slope flag for the narrower published condition") {
    // r small makes s < C_bar/2 while the general condition still holds
    const SaisParams p = SaisParams::homogeneous(1, 1.0, 1.0, 0.0, 0.1);
    const CostModel m = fit_cost_params({1.0}, {0.0}, {1.0}, p);
    CHECK(m.s[0] == doctest::Approx(0.2));
    CHECK(m.half_cbar_slope_violations() == std::vector<std::size_t>{0});
}

TEST_CASE("diagonal transform y(kappa)") {
    CHECK(y_from_kappa(1.0, 1.0, 0.25, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y_from_kappa(1.0, 1.0, 0.25, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(kappa_from_y(1.0, 1.0, 0.25, 2.0) == doctest::Approx(0.5).epsilon(1e-14));

    SUBCASE("round trip on random valid targets") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 1000; ++trial) {
            const double beta = testsupport::uniform(rng, 0.05, 2.0);
            const double delta = testsupport::uniform(rng, 0.3, 2.0);
            const double r = testsupport::uniform(rng, 0.05, 0.95);
            const double kappa = testsupport::uniform(rng, 0.0, 3.0);
            const double y = y_from_kappa(beta, delta, r, kappa);
            CHECK(y > delta / beta - 1e-12);
            CHECK(y < delta / (r * beta));
            CHECK(kappa_from_y(beta, delta, r, y) == doctest::Approx(kappa).epsilon(1e-9));
        }
    }
    SUBCASE("strictly increasing in kappa") {
        double prev = -1.0;
        for (int k = 0; k <= 50; ++k) {
            const double y = y_from_kappa(0.7, 1.3, 0.4, 0.1 * k);
            CHECK(y > prev);
            prev = y;
        }
    }
    SUBCASE("target outside the attainable range") {
        try {
            kappa_from_y(1.0, 1.0, 0.5, 2.0);  // attainable range is (1, 2) open
            FAIL("expected InfeasibleTargetError");
        } catch (const InfeasibleTargetError& e) {
            CHECK(e.attainable_low == doctest::Approx(1.0));
            CHECK(e.attainable_high == doctest::Approx(2.0));
        }
        CHECK_THROWS_AS(kappa_from_y(1.0, 1.0, 0.5, 0.5), InfeasibleTargetError);
    }
}

TEST_CASE("Charnes-Cooper change of variables") {
    SUBCASE("kappa = 0") {
        const auto cc = charnes_cooper(0.8, 0.4, 0.0);
        CHECK(cc.u == 0.0);
        CHECK(cc.w == doctest::Approx(1.0 / 0.32).epsilon(1e-14));
    }
    SUBCASE("worked point beta = delta = 1, r = 1/4, kappa = 1/2") {
        const auto cc = charnes_cooper(1.0, 0.25, 0.5);
        CHECK(cc.u == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
        CHECK(cc.w == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
        CHECK(0.25 * 1.0 * cc.w + 0.25 * cc.u == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("round trip and normalization identity on random points") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 1000; ++trial) {
            const double beta = testsupport::uniform(rng, 0.05, 2.0);
            const double r = testsupport::uniform(rng, 0.05, 0.95);
            const double kappa = testsupport::uniform(rng, 0.0, 3.0);
            const auto cc = charnes_cooper(beta, r, kappa);
            CHECK(std::fabs(r * beta * cc.w + r * cc.u - 1.0) <= 1e-12);
            CHECK(std::fabs(recover_kappa(cc.u, cc.w) - kappa) <= 1e-12 * (1.0 + kappa));
        }
    }
    SUBCASE("singular transform") {
        CHECK_THROWS_AS(recover_kappa(1.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(recover_kappa(1.0, -0.5), std::invalid_argument);
    }
}

TEST_CASE("sdp assembly") {
    SUBCASE("K3 homogeneous diagonals") {
        const Canonical c;
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(c.inst.F_diag[i] == doctest::Approx(0.25));
            CHECK(c.inst.G_diag[i] == doctest::Approx(1.0));
            CHECK(c.inst.diag0[i] == doctest::Approx(1.0));
            CHECK(c.inst.diag1[i] == doctest::Approx(0.75));
        }
        // reduced diagonal identity y(u) = diag0 + diag1 u at a probe point
        const auto cc = charnes_cooper(1.0, 0.25, 0.37);
        CHECK(c.inst.diag0[0] + c.inst.diag1[0] * cc.u ==
              doctest::Approx(y_from_kappa(1.0, 1.0, 0.25, 0.37)).epsilon(1e-12));
    }
    SUBCASE("single node") {
        const Graph g = generate({GraphKind::path, 1, 0.0, 1, 0});
        const SaisParams p = SaisParams::homogeneous(1, 1.0, 1.0, 0.0, 0.5);
        const CostModel m = fit_cost_params({1.0}, {0.0}, {1.0}, p);
        const SdpInstance inst = assemble_sdp(g, p, m);
        CHECK(inst.size() == 1);
        const AllocationResult res = solve_allocation(inst);
        CHECK(res.status == AllocationStatus::optimal);
        CHECK(res.kappa_star[0] == 0.0);
        CHECK(res.total_cost == doctest::Approx(0.0));
    }
}

TEST_CASE("empty graph allocates the cost floor") {
    const Graph g = generate({GraphKind::erdos_renyi, 4, 0.0, 1, 0});
    const SaisParams p = SaisParams::homogeneous(4, 1.0, 1.0, 0.0, 0.5);
    const CostModel m = fit_cost_params({1.0, 1.0, 1.0, 1.0}, {0.1, 0.1, 0.1, 0.1},
                                        {1.0, 1.0, 1.0, 1.0}, p);
    const AllocationResult res = solve_allocation(assemble_sdp(g, p, m));
    CHECK(res.status == AllocationStatus::optimal);
    for (double k : res.kappa_star) CHECK(k == doctest::Approx(0.1));
    CHECK(res.total_cost == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.margin < 0.0);

    const AllocationResult oracle = oracle_grid_solve(g, p, m, 51);
    for (double k : oracle.kappa_star) CHECK(k == doctest::Approx(0.1));
}

TEST_CASE("canonical K3 instance solves to kappa = 1/2") {
    const Canonical c;
    const AllocationResult res = solve_allocation(c.inst);
    REQUIRE(res.status == AllocationStatus::marginal);  // optimum sits on the boundary
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::fabs(res.kappa_star[i] - 0.5) <= 1e-4);
        CHECK(std::fabs(res.y_star[i] - 2.0) <= 2e-4);
    }
    CHECK(std::fabs(res.margin) <= 1e-6);           // certificate closes
    CHECK(res.total_cost == doctest::Approx(2.0).epsilon(1e-4));  // 3 * f(1/2) = 3 * 2/3
    CHECK(res.identity_residual_max <= 1e-12);

    SUBCASE("grid oracle agrees") {
        const AllocationResult oracle = oracle_grid_solve(c.g, c.params, c.cost, 201);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(oracle.kappa_star[i] - 0.5) <= 0.005);
        CHECK(std::fabs(oracle.total_cost - res.total_cost) <= 0.01);
    }
}

TEST_CASE("insufficient reduction factor makes the instance infeasible") {
    const SaisParams p = SaisParams::homogeneous(3, 1.0, 1.0, 0.0, 0.5);
    const CostModel m = fit_cost_params({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, p);
    const SdpInstance inst = assemble_sdp(k3(), p, m);
    const AllocationResult res = solve_allocation(inst);
    CHECK(res.status == AllocationStatus::infeasible);
    CHECK(res.psd_lambda > 0.0);  // lambda1(A - diag y_upper) = 2 - 1.5
    CHECK(res.psd_lambda == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::isnan(res.total_cost));

    const AllocationResult oracle = oracle_grid_solve(k3(), p, m, 101);
    CHECK(oracle.status == AllocationStatus::infeasible);
}

TEST_CASE("solver matches the grid oracle on tiny instances") {
    struct Case {
        Graph g;
        double r;
    };
    std::vector<Case> cases;
    cases.push_back({k2(), 0.25});
    cases.push_back({k3(), 0.25});
    cases.push_back({generate({GraphKind::star, 4, 0.0, 1, 0}), 0.25});
    cases.push_back({generate({GraphKind::path, 3, 0.0, 1, 0}), 0.3});

    for (const Case& tc : cases) {
        const std::size_t n = tc.g.num_nodes();
        const SaisParams p = SaisParams::homogeneous(n, 1.0, 1.0, 0.0, tc.r);
        const CostModel m = fit_cost_params(std::vector<double>(n, 1.0), std::vector<double>(n, 0.0),
                                            std::vector<double>(n, 1.0), p);
        const SdpInstance inst = assemble_sdp(tc.g, p, m);
        const AllocationResult solved = solve_allocation(inst);
        const std::size_t grid_points = 101;
        const AllocationResult oracle = oracle_grid_solve(tc.g, p, m, grid_points);
        REQUIRE(solved.status != AllocationStatus::infeasible);
        REQUIRE(oracle.status == AllocationStatus::optimal);

        double max_slope = 0.0;
        const double resolution = 1.0 / static_cast<double>(grid_points - 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k + 1 < grid_points; ++k) {
                const double f0 = eval_cost(m, p, i, resolution * k);
                const double f1 = eval_cost(m, p, i, resolution * (k + 1));
                max_slope = std::max(max_slope, (f1 - f0) / resolution);
            }
        const double band = resolution * static_cast<double>(n) * max_slope + 1e-9;
        CHECK(std::fabs(solved.total_cost - oracle.total_cost) <= band);
        CHECK(oracle.total_cost >= solved.total_cost - 1e-6);  // grid point is feasible, solver is a bound
    }
}

TEST_CASE("reduced and full forms agree") {
    const Canonical c;
    SolveOptions full, reduced;
    full.form = SolveForm::full;
    full.tol = 1e-9;
    reduced.form = SolveForm::reduced;
    reduced.tol = 1e-9;
    const AllocationResult a = solve_allocation(c.inst, full);
    const AllocationResult b = solve_allocation(c.inst, reduced);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(a.kappa_star[i] - b.kappa_star[i]) <= 1e-6);

    const Graph g = testsupport::random_connected_er(12, 0.3, 61);
    const SaisParams p = testsupport::random_params(g, 4, 1.1, 1.3);
    const CostModel m = testsupport::headroom_cost(g, p);
    const SdpInstance inst = assemble_sdp(g, p, m);
    const AllocationResult ra = solve_allocation(inst, full);
    const AllocationResult rb = solve_allocation(inst, reduced);
    REQUIRE(ra.status != AllocationStatus::infeasible);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::fabs(ra.kappa_star[i] - rb.kappa_star[i]) <= 1e-6);
}

TEST_CASE("epsilon backoff yields a strictly negative certified margin") {
    const Canonical c;
    SolveOptions opt;
    opt.margin_target = 0.05;
    const AllocationResult res = solve_allocation(c.inst, opt);
    REQUIRE(res.status == AllocationStatus::marginal);
    CHECK(res.psd_lambda <= -0.05 + 1e-6);
    CHECK(res.margin < -1e-3);  // genuine die-out guarantee
    const AllocationResult plain = solve_allocation(c.inst);
    CHECK(res.total_cost > plain.total_cost);
}

TEST_CASE("box bounds and boundary activity on random feasible instances") {
    for (std::uint64_t seed : {3ull, 8ull, 15ull}) {
        const Graph g = testsupport::random_connected_er(15, 0.25, 700 + seed);
        const SaisParams p = testsupport::random_params(g, seed, 1.1, 1.35);
        const CostModel m = testsupport::headroom_cost(g, p);
        const SdpInstance inst = assemble_sdp(g, p, m);
        const AllocationResult res = solve_allocation(inst);
        REQUIRE(res.status == AllocationStatus::marginal);
        for (std::size_t i = 0; i < 15; ++i) {
            CHECK(res.kappa_star[i] >= m.kappa_lower[i] - 1e-9);
            CHECK(res.kappa_star[i] <= m.kappa_upper[i] + 1e-9);
        }
        CHECK(std::fabs(res.margin) <= 1e-6);
        CHECK(res.identity_residual_max <= 1e-12);

        // pushing every node to kappa_upper can only improve the margin
        const double margin_up = certify(g, p, m.kappa_upper);
        CHECK(margin_up <= res.margin + 1e-9);
    }
}

TEST_CASE("super-threshold instances certify positive margin at the cost floor") {
    const Graph g = testsupport::random_connected_er(15, 0.25, 41);
    const SaisParams p = testsupport::random_params(g, 12, 1.2, 1.4);
    const CostModel m = testsupport::headroom_cost(g, p);
    CHECK(certify(g, p, m.kappa_lower) > 0.0);
}

TEST_CASE("degenerate isolated nodes stay at the cost floor") {
    const Graph g = Graph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}});  // node 4 isolated
    const SaisParams p = SaisParams::homogeneous(5, 1.0, 1.0, 0.0, 0.25);
    const CostModel m = fit_cost_params(std::vector<double>(5, 1.0), std::vector<double>(5, 0.0),
                                        std::vector<double>(5, 2.0), p);
    const AllocationResult res = solve_allocation(assemble_sdp(g, p, m));
    REQUIRE(res.status != AllocationStatus::infeasible);
    CHECK(res.kappa_star[4] <= 1e-9);
}

TEST_CASE("round cap failure carries the best iterate") {
    const Canonical c;
    SolveOptions opt;
    opt.max_rounds = 0;  // force the cap before any round runs
    try {
        solve_allocation(c.inst, opt);
        FAIL("expected AllocationSolveError");
    } catch (const AllocationSolveError& e) {
        CHECK(e.best_iterate.cut_rounds == 0);
    }
}

TEST_CASE("diagonal-condition equivalence on random instances") {
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t n = 5 + seed % 26;
        const Graph g = generate({GraphKind::erdos_renyi, n, 0.25, 1, 4000 + seed});
        std::mt19937_64 rng(seed);
        SaisParams p;
        for (std::size_t i = 0; i < n; ++i) {
            p.beta.push_back(testsupport::uniform(rng, 0.1, 0.8));
            p.delta.push_back(testsupport::uniform(rng, 0.4, 1.5));
            p.kappa.push_back(testsupport::uniform(rng, 0.0, 1.0));
            p.r.push_back(testsupport::uniform(rng, 0.15, 0.85));
        }
        const double margin = spectral_margin(g, p).margin;

        Matrix shifted = g.dense_adjacency();
        const std::vector<double> y = stability_diagonal(p);
        for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= y[i];
        const double lambda_diag = testsupport::jacobi_lambda_max(shifted);

        if (std::fabs(margin) > 1e-8 && std::fabs(lambda_diag) > 1e-8) {
            CHECK((margin > 0) == (lambda_diag > 0));
            ++checked;
        }
    }
    CHECK(checked >= 40);
}
