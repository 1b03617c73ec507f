#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "awarenet/sais.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace awarenet;

namespace {

Graph k2() { return generate({GraphKind::complete, 2, 0.0, 1, 0}); }
Graph k3() { return generate({GraphKind::complete, 3, 0.0, 1, 0}); }

StateVector random_state(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    StateVector s = StateVector::zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.p[i] = testsupport::uniform(rng, 0.0, 0.5);
        s.q[i] = testsupport::uniform(rng, 0.0, 0.5);
    }
    return s;
}

}  // namespace

TEST_CASE("parameter validation") {
    SaisParams p = SaisParams::homogeneous(2, 1.0, 1.0, 0.0, 0.5);
    CHECK_NOTHROW(p.validate(2));
    CHECK_THROWS_AS(p.validate(3), std::invalid_argument);
    p.r[0] = 1.0;
    CHECK_THROWS_AS(p.validate(2), std::invalid_argument);
    p.r[0] = 0.5;
    p.beta[1] = 0.0;
    CHECK_THROWS_AS(p.validate(2), std::invalid_argument);
    p.beta[1] = 1.0;
    p.kappa[0] = -0.1;
    CHECK_THROWS_AS(p.validate(2), std::invalid_argument);
}

TEST_CASE("stability matrix of K2 at the marginal SIS point") {
    const Matrix m = build_stability_matrix(k2(), SaisParams::homogeneous(2, 1.0, 1.0, 0.0, 0.5));
    CHECK(m(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m(1, 1) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("stability matrix of an edgeless graph is -MD") {
    const Graph g = generate({GraphKind::erdos_renyi, 3, 0.0, 1, 0});
    REQUIRE(g.num_edges() == 0);
    SaisParams p = SaisParams::homogeneous(3, 2.0, 3.0, 1.0, 0.4);
    const Matrix m = build_stability_matrix(g, p);
    for (std::size_t i = 0; i < 3; ++i) {
        const double kb = p.kappa_bar(i);
        CHECK(m(i, i) == doctest::Approx(-(kb + p.r[i]) * p.delta[i]).epsilon(1e-15));
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) CHECK(m(i, j) == 0.0);
    }
}

TEST_CASE("single isolated node always dies out") {
    const Graph g = generate({GraphKind::path, 1, 0.0, 1, 0});
    const SaisParams p = SaisParams::homogeneous(1, 2.0, 3.0, 1.0, 0.4);
    const Matrix m = build_stability_matrix(g, p);
    CHECK(m(0, 0) == doctest::Approx(-(0.5 + 0.4) * 3.0).epsilon(1e-15));
    const StabilityReport rep = spectral_margin(g, p);
    CHECK(rep.die_out);
    CHECK(rep.margin < 0.0);
}

TEST_CASE("K2 marginal case: margin 0 reported as no die-out") {
    const StabilityReport rep = spectral_margin(k2(), SaisParams::homogeneous(2, 1.0, 1.0, 0.0, 0.5));
    CHECK(std::fabs(rep.margin) <= 1e-12);
    CHECK_FALSE(rep.die_out);
}

TEST_CASE("kappa = 0 reduces the diagonal threshold to delta/beta") {
    const Graph g = generate({GraphKind::erdos_renyi, 6, 0.4, 1, 5});
    SaisParams p = SaisParams::homogeneous(6, 0.3, 0.9, 0.0, 0.35);
    p.beta = {0.2, 0.3, 0.25, 0.4, 0.31, 0.22};
    p.delta = {0.9, 1.1, 0.8, 1.3, 1.0, 0.95};
    const StabilityReport rep = spectral_margin(g, p);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(rep.diag_threshold[i] == doctest::Approx(p.delta[i] / p.beta[i]).epsilon(1e-14));
}

TEST_CASE("K3 with y(kappa) = lambda1 sits exactly on the boundary") {
    const StabilityReport rep = spectral_margin(k3(), SaisParams::homogeneous(3, 1.0, 1.0, 0.5, 0.25));
    CHECK(std::fabs(rep.margin) <= 1e-10);
    CHECK(rep.diag_threshold[0] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("symmetric similar form matches the nonsymmetric product spectrum") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const Graph g = generate({GraphKind::erdos_renyi, 40, 0.15, 1, seed});
        std::mt19937_64 rng(seed * 77);
        SaisParams p;
        for (std::size_t i = 0; i < 40; ++i) {
            p.beta.push_back(testsupport::uniform(rng, 0.1, 0.6));
            p.delta.push_back(testsupport::uniform(rng, 0.5, 1.5));
            p.kappa.push_back(testsupport::uniform(rng, 0.0, 0.8));
            p.r.push_back(testsupport::uniform(rng, 0.2, 0.8));
        }
        const double sym = spectral_margin(g, p).margin;
        const double nonsym = testsupport::nonsymmetric_lambda_max(build_stability_matrix(g, p));
        CHECK(std::fabs(sym - nonsym) <= 1e-8);
    }
}

TEST_CASE("SIS reduction: die-out iff lambda1(A) < delta/beta for kappa = 0") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Graph g = testsupport::random_connected_er(20, 0.2, 900 + seed);
        std::mt19937_64 rng(seed);
        const double beta = testsupport::uniform(rng, 0.05, 0.5);
        const double delta = testsupport::uniform(rng, 0.4, 1.4);
        const double r = testsupport::uniform(rng, 0.2, 0.8);
        const SaisParams p = SaisParams::homogeneous(20, beta, delta, 0.0, r);

        const double lambda1 = largest_eigenvalue(g.dense_adjacency(), 1e-10).lambda1;
        const StabilityReport rep = spectral_margin(g, p);
        CHECK(rep.die_out == (lambda1 < delta / beta));
        // margin = r (beta lambda1 - delta) in the homogeneous SIS reduction
        CHECK(rep.margin == doctest::Approx(r * (beta * lambda1 - delta)).epsilon(1e-9));
    }
}

TEST_CASE("epidemic threshold reductions") {
    SUBCASE("kappa = 0 homogeneous gives delta/(beta lambda1)") {
        const Graph g = testsupport::random_connected_er(25, 0.2, 42);
        const SaisParams p = SaisParams::homogeneous(25, 0.37, 1.21, 0.0, 0.33);
        const double lambda1 = largest_eigenvalue(g.dense_adjacency(), 1e-10).lambda1;
        const ThetaReport rep = epidemic_threshold_theta(g, p);
        CHECK(rep.theta_c == doctest::Approx(1.21 / (0.37 * lambda1)).epsilon(1e-10));
    }
    SUBCASE("star with 4 leaves, beta_bar = delta = 1, kappa = 0 gives 1/2") {
        const Graph g = generate({GraphKind::star, 5, 0.0, 1, 0});
        const ThetaReport rep = epidemic_threshold_theta(g, SaisParams::homogeneous(5, 1.0, 1.0, 0.0, 0.5));
        CHECK(rep.theta_c == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("single node reports the no-transmission sentinel") {
        const Graph g = generate({GraphKind::path, 1, 0.0, 1, 0});
        const ThetaReport rep = epidemic_threshold_theta(g, SaisParams::homogeneous(1, 1.0, 1.0, 0.0, 0.5));
        CHECK(rep.no_transmission);
        CHECK(std::isinf(rep.theta_c));
    }
    SUBCASE("disconnected input is flagged") {
        const Graph g = Graph::from_edges(4, {{0, 1}, {2, 3}});
        const ThetaReport rep = epidemic_threshold_theta(g, SaisParams::homogeneous(4, 1.0, 1.0, 0.0, 0.5));
        CHECK_FALSE(rep.connected);
    }
}

TEST_CASE("margin crosses zero exactly at theta_c under the fixed-kappa_bar scan") {
    const Graph g = testsupport::random_connected_er(18, 0.25, 77);
    std::mt19937_64 rng(7);
    SaisParams base;
    for (std::size_t i = 0; i < 18; ++i) {
        base.beta.push_back(testsupport::uniform(rng, 0.2, 0.5));
        base.delta.push_back(testsupport::uniform(rng, 0.6, 1.4));
        base.kappa.push_back(testsupport::uniform(rng, 0.0, 0.4));
        base.r.push_back(testsupport::uniform(rng, 0.25, 0.7));
    }
    const ThetaReport rep = epidemic_threshold_theta(g, base);
    const double theta_b =
        testsupport::bisect_margin_zero(g, base, rep.theta_c * 0.2, rep.theta_c * 5.0);
    CHECK(std::fabs(theta_b - rep.theta_c) <= 1e-6);
    // kappa_bar is preserved by the scan
    const SaisParams scaled = scale_infection(base, 3.7);
    for (std::size_t i = 0; i < 18; ++i)
        CHECK(scaled.kappa_bar(i) == doctest::Approx(base.kappa_bar(i)).epsilon(1e-14));
}

TEST_CASE("disease-free state is an equilibrium of the mean field") {
    const Graph g = testsupport::random_connected_er(12, 0.3, 9);
    const SaisParams p = SaisParams::homogeneous(12, 0.8, 0.9, 0.3, 0.4);
    const Trajectory traj = integrate_mean_field(g, p, StateVector::zero(12), 5.0, 0.01);
    for (const auto& ps : traj.p_samples)
        for (double v : ps) CHECK(v == 0.0);
    for (const auto& qs : traj.q_samples)
        for (double v : qs) CHECK(v == 0.0);
}

TEST_CASE("isolated node decays exponentially") {
    const Graph g = generate({GraphKind::path, 1, 0.0, 1, 0});
    const SaisParams p = SaisParams::homogeneous(1, 1.0, 0.7, 0.0, 0.5);
    StateVector init = StateVector::zero(1);
    init.p[0] = 0.5;
    const double dt = default_mean_field_dt(g, p);
    const Trajectory traj = integrate_mean_field(g, p, init, 2.0, dt, 1 << 20);
    const double expected = 0.5 * std::exp(-0.7 * traj.final_state.t);
    CHECK(std::fabs(traj.final_state.p[0] - expected) <= 1e-7);
}

TEST_CASE("marginal K2 instance decays monotonically") {
    StateVector init = StateVector::zero(2);
    init.p[0] = 0.5;
    const SaisParams p = SaisParams::homogeneous(2, 1.0, 1.0, 0.0, 0.5);
    const Trajectory traj = integrate_mean_field(k2(), p, init, 50.0, 0.005, 100);
    double prev = 1.0;
    for (const auto& ps : traj.p_samples) {
        const double mx = std::max(ps[0], ps[1]);
        CHECK(mx <= prev + 1e-12);
        prev = mx;
    }
}

TEST_CASE("integration agrees with a dt/10 reference run") {
    const Graph g = testsupport::random_connected_er(10, 0.35, 4);
    const SaisParams p = SaisParams::homogeneous(10, 0.35, 0.8, 0.25, 0.45);
    const StateVector init = random_state(10, 21);
    const double dt = default_mean_field_dt(g, p);
    const Trajectory coarse = integrate_mean_field(g, p, init, 10.0, dt, 1 << 20);
    const Trajectory fine = integrate_mean_field(g, p, init, 10.0, dt / 10.0, 1 << 20);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(std::fabs(coarse.final_state.p[i] - fine.final_state.p[i]) <= 1e-8);
        CHECK(std::fabs(coarse.final_state.q[i] - fine.final_state.q[i]) <= 1e-8);
    }
}

TEST_CASE("forward invariance within the clamp tolerance") {
    const Graph g = testsupport::random_connected_er(15, 0.3, 6);
    const SaisParams p = SaisParams::homogeneous(15, 0.5, 0.7, 0.6, 0.3);
    const Trajectory traj =
        integrate_mean_field(g, p, random_state(15, 3), 30.0, default_mean_field_dt(g, p), 1000);
    CHECK(traj.max_preclamp_violation <= 1e-9);
}

TEST_CASE("gross instability raises an error suggesting smaller dt") {
    StateVector init = StateVector::zero(3);
    init.p = {0.9, 0.8, 0.7};
    const SaisParams p = SaisParams::homogeneous(3, 2.0, 1.0, 0.5, 0.5);
    CHECK_THROWS_AS(integrate_mean_field(k3(), p, init, 50.0, 5.0), IntegrationInstabilityError);
}

TEST_CASE("record stride subsamples but keeps the terminal state") {
    const SaisParams p = SaisParams::homogeneous(2, 0.5, 1.0, 0.0, 0.5);
    StateVector init = StateVector::zero(2);
    init.p[0] = 0.3;
    const Trajectory dense_run = integrate_mean_field(k2(), p, init, 1.0, 0.01, 1);
    const Trajectory strided = integrate_mean_field(k2(), p, init, 1.0, 0.01, 10);
    CHECK(dense_run.times.size() == 101);
    CHECK(strided.times.size() == 11);
    CHECK(dense_run.final_state.p[0] == doctest::Approx(strided.final_state.p[0]).epsilon(1e-15));
}

TEST_CASE("equilibrium residual") {
    const SaisParams p = SaisParams::homogeneous(3, 1.2, 1.0, 0.3, 0.3);
    SUBCASE("healthy state has exactly zero residual") {
        const auto res = equilibrium_residual(k3(), p, {0.0, 0.0, 0.0});
        for (double v : res) CHECK(v == 0.0);
    }
    SUBCASE("long super-threshold run lands on the endemic equilibrium") {
        StateVector init = StateVector::zero(3);
        init.p = {0.4, 0.3, 0.2};
        const double dt = default_mean_field_dt(k3(), p);
        const Trajectory traj = integrate_mean_field(k3(), p, init, 1e4, dt, 1 << 30);
        const auto res = equilibrium_residual(k3(), p, traj.final_state.p);
        for (double v : res) CHECK(std::fabs(v) <= 1e-6);
        CHECK(traj.final_state.p[0] > 0.05);  // genuinely endemic, not the healthy state
    }
    SUBCASE("generic point is not an equilibrium") {
        const auto res = equilibrium_residual(k3(), p, {0.3, 0.1, 0.25});
        double mx = 0.0;
        for (double v : res) mx = std::max(mx, std::fabs(v));
        CHECK(mx > 1e-3);
    }
    SUBCASE("p = 1 is singular") {
        CHECK_THROWS_AS(equilibrium_residual(k3(), p, {1.0, 0.0, 0.0}), std::invalid_argument);
    }
}

TEST_CASE("sub-threshold instances drive the mean field to extinction") {
    std::size_t tested = 0;
    for (std::uint64_t seed = 0; seed < 6 && tested < 3; ++seed) {
        const Graph g = testsupport::random_connected_er(30, 0.15, 500 + seed);
        const SaisParams p = testsupport::random_params(g, 300 + seed, 0.55, 0.9);
        const StabilityReport rep = spectral_margin(g, p);
        if (rep.margin >= -0.01) continue;
        ++tested;
        double delta_min = p.delta[0];
        for (double d : p.delta) delta_min = std::min(delta_min, d);
        const Trajectory traj = integrate_mean_field(g, p, random_state(30, seed), 100.0 / delta_min,
                                                     default_mean_field_dt(g, p), 1 << 30);
        double pmax = 0.0;
        for (double v : traj.final_state.p) pmax = std::max(pmax, v);
        CHECK(pmax < 1e-3);
    }
    CHECK(tested >= 3);
}

TEST_CASE("trajectory CSV format") {
    const SaisParams p = SaisParams::homogeneous(2, 0.5, 1.0, 0.1, 0.5);
    StateVector init = StateVector::zero(2);
    init.p[0] = 0.25;
    const Trajectory traj = integrate_mean_field(k2(), p, init, 0.05, 0.01);
    std::ostringstream out;
    write_trajectory_csv(traj, out);
    std::istringstream lines(out.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,p_0,p_1,q_0,q_1");
    std::string first;
    std::getline(lines, first);
    CHECK(first.substr(0, 7) == "0,0.25,");
}

TEST_CASE("init state is validated") {
    const SaisParams p = SaisParams::homogeneous(2, 0.5, 1.0, 0.1, 0.5);
    StateVector bad = StateVector::zero(2);
    bad.p[0] = 0.7;
    bad.q[0] = 0.7;
    CHECK_THROWS_AS(integrate_mean_field(k2(), p, bad, 1.0, 0.01), std::invalid_argument);
}
