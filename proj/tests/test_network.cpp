#include <doctest.h>

#include <cmath>
#include <limits>

#include "pdmpnet/grid.hpp"
#include "pdmpnet/rng.hpp"
#include "support.hpp"

using namespace pdmpnet;
using testing::vec;

namespace {

std::shared_ptr<const StarNetwork> three_roads() {
    return StarNetwork::make({vec({0, 1}), vec({1, 0}), vec({-1, 0})});
}

NetworkPoint random_point(const Network& net, RngStream& rng) {
    const int j = rng.index(net.num_edges());
    return net.canonical(NetworkPoint::on(j, rng.uniform() * net.length(j)));
}

}  // namespace

TEST_CASE("make_network orders antipode-free edges first and pairs antipodes") {
    auto net = three_roads();
    CHECK(net->num_edges() == 3);
    CHECK(net->antipode_free_count() == 1);
    CHECK(net->antipode(0) == -1);
    CHECK(net->antipode(1) == 2);
    CHECK(net->antipode(2) == 1);
    CHECK((net->direction(0) - vec({0, 1})).norm() < 1e-12);

    // Input order with the antipode-free edge last is reordered.
    auto reordered = StarNetwork::make({vec({1, 0}), vec({-1, 0}), vec({0, 2})});
    CHECK((reordered->direction(0) - vec({0, 1})).norm() < 1e-12);
    CHECK(reordered->antipode(1) == 2);
}

TEST_CASE("make_network on a line has no antipode-free edge") {
    auto net = StarNetwork::make({vec({1, 0}), vec({-1, 0})});
    CHECK(net->num_edges() == 2);
    CHECK(net->antipode_free_count() == 0);
    CHECK(net->antipode(0) == 1);
}

TEST_CASE("make_network rejects degenerate input") {
    CHECK_THROWS_AS(StarNetwork::make({vec({1, 0}), vec({1, 0})}), DuplicateDirection);
    CHECK_THROWS_AS(StarNetwork::make({vec({1, 0}), vec({2, 0})}), DuplicateDirection);
    CHECK_THROWS_AS(StarNetwork::make({vec({1, 0}), vec({0, 1, 0})}), BadDimension);
    CHECK_THROWS_AS(StarNetwork::make({vec({1, 0})}), BadDimension);
    CHECK_THROWS_AS(StarNetwork::make({vec({1, 0}), vec({0, 0})}), BadDimension);
}

TEST_CASE("geodesic distance examples") {
    CHECK(geodesic_distance(NetworkPoint::on(0, 0.3), NetworkPoint::on(0, 0.8)) == doctest::Approx(0.5));
    CHECK(geodesic_distance(NetworkPoint::on(0, 0.3), NetworkPoint::on(1, 0.4)) == doctest::Approx(0.7));
    CHECK(geodesic_distance(NetworkPoint::junction(), NetworkPoint::junction()) == 0.0);
    CHECK(geodesic_distance(NetworkPoint::on(2, 1e-13), NetworkPoint::junction()) == 0.0);
}

TEST_CASE("geodesic distance is a metric on random triples") {
    auto net = three_roads();
    RngStream rng(3, 0);
    for (int i = 0; i < 2000; ++i) {
        const auto p = random_point(*net, rng), q = random_point(*net, rng), r = random_point(*net, rng);
        CHECK(geodesic_distance(p, p) == 0.0);
        CHECK(geodesic_distance(p, q) == geodesic_distance(q, p));
        CHECK(geodesic_distance(p, r) <= geodesic_distance(p, q) + geodesic_distance(q, r) + 1e-15);
        if (!(p == q)) CHECK(geodesic_distance(p, q) > 0.0);
    }
}

TEST_CASE("junction canonicalization") {
    const auto p = NetworkPoint::on(1, 5e-13);
    CHECK(p.is_junction());
    CHECK(p.coord == 0.0);
    auto net = three_roads();
    const auto q = net->canonical(NetworkPoint::on(0, 1.0 - 1e-13));
    CHECK(q.coord == 1.0);
}

TEST_CASE("project_to_network examples") {
    auto net = three_roads();
    const auto a = project_to_network(vec({0, 0.5}), *net);
    CHECK(a.edge == 0);
    CHECK(a.coord == doctest::Approx(0.5));
    const auto b = project_to_network(vec({0, 1.2}), *net);
    CHECK(b.edge == 0);
    CHECK(b.coord == 1.0);
    // Equidistant from the rays of e_1 and e_2: the lowest edge index wins.
    const auto c = project_to_network(vec({0.5, 0.5}), *net);
    CHECK(c.edge == 0);
    CHECK(c.coord == doctest::Approx(0.5));
}

TEST_CASE("project_to_network agrees with a dense brute-force search") {
    auto net = three_roads();
    RngStream rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        const Vec y = vec({rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < net->num_edges(); ++j)
            for (int k = 0; k <= 20000; ++k)
                best = std::min(best, (y - net->embed(net->canonical(NetworkPoint::on(j, k / 20000.0)))).norm());
        const auto p = project_to_network(y, *net);
        CHECK((y - net->embed(p)).norm() <= best + 1e-12);
        CHECK((y - net->embed(p)).norm() >= best - 1e-4);
    }
}

TEST_CASE("project_to_network is the identity on the network") {
    auto net = three_roads();
    RngStream rng(6, 0);
    for (int i = 0; i < 500; ++i) {
        const auto p = random_point(*net, rng);
        const auto q = project_to_network(net->embed(p), *net);
        CHECK(q.edge == p.edge);
        CHECK(q.coord == doctest::Approx(p.coord).epsilon(1e-12));
    }
}

TEST_CASE("grid points are located at themselves") {
    auto grid = std::make_shared<Grid>(three_roads(), 0.05);
    for (int n = 0; n < grid->num_nodes(); ++n) {
        CHECK(grid->find(grid->point(n)) == n);
        const auto st = grid->locate(grid->point(n));
        const double own = (st.n0 == n ? st.w0 : 0.0) + (st.n1 == n ? st.w1 : 0.0);
        CHECK(own == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("tangent cones") {
    auto net = three_roads();
    const auto interior = tangent_cone(*net, NetworkPoint::on(1, 0.5));
    REQUIRE(interior.size() == 2);
    CHECK((interior[0] + interior[1]).norm() < 1e-12);
    CHECK(std::abs(std::abs(interior[0](0)) - 1.0) < 1e-12);
    const auto end = tangent_cone(*net, NetworkPoint::on(0, 1.0));
    REQUIRE(end.size() == 1);
    CHECK((end[0] - vec({0, -1})).norm() < 1e-12);
    const auto o = tangent_cone(*net, NetworkPoint::junction());
    REQUIRE(o.size() == 3);
    for (int j = 0; j < 3; ++j) CHECK((o[static_cast<std::size_t>(j)] - net->direction(j)).norm() < 1e-12);
}

TEST_CASE("extend adds fictive edges and prolongations") {
    auto net = three_roads();
    auto x = extend(net, 0.1);
    CHECK(x->num_edges() == 4);
    CHECK(x->num_base_edges() == 3);
    for (int j = 0; j < 3; ++j) CHECK(x->length(j) == doctest::Approx(1.1));
    CHECK(x->is_fictive(3));
    CHECK(x->source_edge(3) == 0);
    CHECK(x->length(3) == doctest::Approx(0.1));
    CHECK((x->direction(3) + net->direction(0)).norm() < 1e-12);
    // e_2 and e_3 form one line: a point at −0.05 on the line of e_2 is 0.05·e_3.
    const auto p = point_on_line(*x, 1, -0.05);
    REQUIRE(p.has_value());
    CHECK(p->edge == 2);
    CHECK(line_coordinate(*x, NetworkPoint::on(3, 0.05), 0).value() == doctest::Approx(-0.05));
    CHECK(x->in_base(NetworkPoint::on(1, 1.0)));
    CHECK_FALSE(x->in_base(NetworkPoint::on(1, 1.05)));
    CHECK_FALSE(x->in_base(NetworkPoint::on(3, 0.05)));
}

TEST_CASE("extend rejects bad epsilon and round-trips") {
    auto net = three_roads();
    CHECK_THROWS_AS(extend(net, 0.0), BadEpsilon);
    CHECK_THROWS_AS(extend(net, 1.0), BadEpsilon);
    auto x = extend(net, 0.2);
    const Network& back = *x->restrict();
    REQUIRE(back.num_edges() == net->num_edges());
    for (int j = 0; j < net->num_edges(); ++j) {
        CHECK(back.direction(j) == net->direction(j));
        CHECK(back.length(j) == net->length(j));
        CHECK(back.antipode(j) == net->antipode(j));
    }
}
