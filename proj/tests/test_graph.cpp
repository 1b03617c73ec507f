#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "awarenet/graph.hpp"

using namespace awarenet;

TEST_CASE("edge list parses a path") {
    std::istringstream in("0 1\n1 2");
    const Graph g = load_edge_list(in);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 2);
    CHECK(g.degree(2) == 1);
}

TEST_CASE("duplicate edges collapse") {
    std::istringstream in("0 1\n1 0\n");
    const Graph g = load_edge_list(in);
    CHECK(g.num_nodes() == 2);
    CHECK(g.num_edges() == 1);
}

TEST_CASE("self-loop is rejected with its line number") {
    std::istringstream in("0 0");
    try {
        load_edge_list(in);
        FAIL("expected EdgeListParseError");
    } catch (const EdgeListParseError& e) {
        CHECK(e.line_number == 1);
    }
}

TEST_CASE("malformed tokens are rejected with line numbers") {
    std::istringstream bad_int("0 1\n2 x\n");
    try {
        load_edge_list(bad_int);
        FAIL("expected EdgeListParseError");
    } catch (const EdgeListParseError& e) {
        CHECK(e.line_number == 2);
    }

    std::istringstream lonely("0 1\n3\n");
    CHECK_THROWS_AS(load_edge_list(lonely), EdgeListParseError);

    std::istringstream trailing("0 1 2\n");
    CHECK_THROWS_AS(load_edge_list(trailing), EdgeListParseError);
}

TEST_CASE("comments and blank lines are skipped") {
    std::istringstream in("# contact list\n\n0 1  # inline note\n\n1 2\n");
    const Graph g = load_edge_list(in);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 2);
}

TEST_CASE("export is canonical and round-trips bit-identically") {
    GraphSpec spec;
    spec.kind = GraphKind::erdos_renyi;
    spec.n = 20;
    spec.p = 0.3;
    spec.seed = 11;
    const Graph g = generate(spec);

    std::ostringstream first;
    write_edge_list(g, first);
    std::istringstream back(first.str());
    const Graph g2 = load_edge_list(back);
    std::ostringstream second;
    write_edge_list(g2, second);
    CHECK(first.str() == second.str());
    CHECK(g2.num_edges() == g.num_edges());
}

TEST_CASE("star generator degrees") {
    const Graph g = generate({GraphKind::star, 5, 0.0, 1, 0});
    CHECK(g.degree(0) == 4);
    for (std::uint32_t v = 1; v < 5; ++v) CHECK(g.degree(v) == 1);
}

TEST_CASE("complete graph edge count") {
    const Graph g = generate({GraphKind::complete, 3, 0.0, 1, 0});
    CHECK(g.num_edges() == 3);
}

TEST_CASE("seeded generators are deterministic") {
    const GraphSpec er{GraphKind::erdos_renyi, 20, 0.5, 1, 7};
    CHECK(generate(er).edge_list() == generate(er).edge_list());

    const GraphSpec pa{GraphKind::preferential_attachment, 40, 0.0, 2, 99};
    CHECK(generate(pa).edge_list() == generate(pa).edge_list());
}

TEST_CASE("preferential attachment gives every late node at least m0 edges") {
    const Graph g = generate({GraphKind::preferential_attachment, 60, 0.0, 3, 4});
    for (std::uint32_t v = 4; v < 60; ++v) CHECK(g.degree(v) >= 3);
}

TEST_CASE("generator parameter validation") {
    CHECK_THROWS_AS(generate({GraphKind::erdos_renyi, 5, 1.5, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate({GraphKind::erdos_renyi, 5, -0.1, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate({GraphKind::preferential_attachment, 5, 0.0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate({GraphKind::cycle, 2, 0.0, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate({GraphKind::path, 0, 0.0, 1, 0}), std::invalid_argument);
}

TEST_CASE("adjacency symmetry and zero diagonal hold exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const Graph g = generate({GraphKind::erdos_renyi, 25, 0.2, 1, seed});
        const Matrix a = g.dense_adjacency();
        std::size_t degree_sum = 0;
        for (std::size_t i = 0; i < 25; ++i) {
            CHECK(a(i, i) == 0.0);
            degree_sum += g.degree(static_cast<std::uint32_t>(i));
            for (std::size_t j = 0; j < 25; ++j) {
                CHECK(a(i, j) == a(j, i));
                CHECK((a(i, j) == 0.0 || a(i, j) == 1.0));
            }
        }
        CHECK(degree_sum == 2 * g.num_edges());
    }
}

TEST_CASE("connectivity detection") {
    CHECK(generate({GraphKind::path, 6, 0.0, 1, 0}).connected());
    // two disjoint edges
    const Graph g = Graph::from_edges(4, {{0, 1}, {2, 3}});
    CHECK_FALSE(g.connected());
    CHECK(generate({GraphKind::path, 1, 0.0, 1, 0}).connected());
}
