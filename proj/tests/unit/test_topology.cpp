#include <doctest.h>

#include "nodal/extraction.hpp"
#include "nodal/knots.hpp"
#include "nodal/realization.hpp"
#include "nodal/topology.hpp"

#include "synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace nodal;
using namespace nodal::synthetic;

namespace {

constexpr double kPi = std::numbers::pi;

GridSpec grid(double R, double h, double padding) { return cube_grid(R, h, padding); }

}  // namespace

TEST_CASE("Alexander polynomials of standard diagrams") {
    // Trefoil: O1 U2 O3 U1 O2 U3, all crossings of one sign.
    const std::vector<std::pair<int, bool>> tre = {{0, true}, {1, false}, {2, true}, {0, false}, {1, true}, {2, false}};
    CHECK(alexander_from_gauss(tre, {1, 1, 1}) == std::vector<long long>{1, -1, 1});
    CHECK(alexander_from_gauss(tre, {-1, -1, -1}) == std::vector<long long>{1, -1, 1});
    // Figure-eight: O1 U2 O3 U4 O2 U1 O4 U3 with two crossings of each sign.
    const std::vector<std::pair<int, bool>> fig = {{0, true}, {1, false}, {2, true}, {3, false},
                                                   {1, true}, {0, false}, {3, true}, {2, false}};
    CHECK(alexander_from_gauss(fig, {-1, -1, 1, 1}) == std::vector<long long>{1, -3, 1});
    // A single kink is trivial.
    CHECK(alexander_from_gauss({{0, true}, {0, false}}, {1}) == std::vector<long long>{1});
    CHECK(alexander_from_gauss({}, {}) == std::vector<long long>{1});
}

TEST_CASE("table lookup") {
    CHECK(knot_label_for({1}, 0) == "unknot");
    CHECK(knot_label_for({1, -1, 1}, 3) == "3_1");
    CHECK(knot_label_for({1, -1, 1}, 2) == "unknown");
    CHECK(knot_label_for({1, -2, 3, -2, 1}, 6) == "composite");
    CHECK(knot_label_for({5, -11, 5}, 30) == "unknown");
    for (const auto& e : knot_table()) {
        const auto& a = e.alexander;
        CHECK(std::equal(a.begin(), a.end(), a.rbegin()));
    }
}

TEST_CASE("golden curves classify under rigid motions, scaling and re-indexing") {
    struct Golden {
        ComponentGeometry curve;
        const char* label;
        long long det;
    };
    const std::vector<Golden> golden = {{ellipse(), "unknot", 1}, {trefoil(), "3_1", 3}, {figure_eight(), "4_1", 5}};
    std::mt19937_64 rng(2024);
    for (const auto& g : golden) {
        const KnotResult base = knot_classify(g.curve);
        CHECK(base.label == g.label);
        CHECK(base.invariants.determinant == g.det);
        CHECK_FALSE(base.fault);
        for (int k = 0; k < 20; ++k) {
            const KnotResult r = knot_classify(transformed(g.curve, rng));
            CHECK(r.label == g.label);
            CHECK(r.invariants.determinant == g.det);
            CHECK(r.invariants.alexander == base.invariants.alexander);
        }
    }
}

TEST_CASE("simplification keeps the determinant") {
    for (const auto& c : {trefoil(120), figure_eight(120), ellipse(60)}) {
        const KnotResult raw = knot_classify(c, false);
        const KnotResult simple = knot_classify(c, true);
        CHECK(raw.invariants.determinant == simple.invariants.determinant);
        CHECK(raw.invariants.alexander == simple.invariants.alexander);
        CHECK(simple.simplified_vertices < 120);
    }
}

TEST_CASE("total curvature") {
    ComponentGeometry hexagon;
    hexagon.dim = 2;
    hexagon.closed = true;
    for (int k = 0; k <= 6; ++k) hexagon.vertices.emplace_back(std::cos(kPi * (k % 6) / 3), std::sin(kPi * (k % 6) / 3), 0.0);
    CHECK(total_curvature(hexagon) == doctest::Approx(2 * kPi));

    // Figure-eight-shaped planar polygon (self-crossing).
    ComponentGeometry bow;
    bow.dim = 2;
    bow.closed = true;
    bow.vertices = {{0, 0, 0}, {1, 1, 0}, {1, -1, 0}, {-1, 1, 0}, {-1, -1, 0}, {0, 0, 0}};
    CHECK(total_curvature(bow) >= 2 * kPi);

    CHECK(total_curvature(trefoil()) > 4 * kPi);

    ComponentGeometry line;
    line.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(total_curvature(line), DegenerateError);
}

TEST_CASE("Betti numbers of implicit surfaces") {
    auto sphere = unit_sphere();
    auto ex = extract_hypersurface(*sphere, grid(1.2, 0.05, 0.1));
    REQUIRE(ex.components.size() == 1);
    CHECK(betti_surface(ex.components[0]) == std::array<long, 3>{1, 0, 1});
    CHECK(willmore_energy(ex.components[0], *sphere) == doctest::Approx(4 * kPi).epsilon(0.05));

    auto torus = ring_torus();
    ex = extract_hypersurface(*torus, grid(1.4, 0.05, 0.1));
    REQUIRE(ex.components.size() == 1);
    CHECK(betti_surface(ex.components[0]) == std::array<long, 3>{1, 2, 1});

    auto genus2 = genus_two();
    ex = extract_hypersurface(*genus2, grid(1.2, 0.02, 0.1));
    REQUIRE(ex.components.size() == 1);
    const auto& mesh = ex.components[0];
    CHECK(euler_characteristic(mesh) == -2);
    CHECK(betti_surface(mesh) == std::array<long, 3>{1, 4, 1});
}

TEST_CASE("census arithmetic") {
    auto record = [](const char* label, bool closed, bool touches) {
        ComponentRecord r;
        r.geometry.dim = 3;
        r.geometry.closed = closed;
        r.geometry.touches_boundary = touches;
        r.geometry.vertices = {Eigen::Vector3d::Zero()};
        r.knot_label = label;
        r.betti = {1, closed ? 1 : 0};
        return r;
    };
    const auto one = census({record("unknot", true, false), record("not_applicable", false, true)}, 3, 2);
    CHECK(one.N == 1);
    CHECK(one.N_star == 2);

    const auto empty = census({}, 3, 2);
    CHECK(empty.N == 0);
    CHECK_FALSE(empty.mu_defined);

    const auto mix = census({record("unknot", true, false), record("unknot", true, false), record("unknot", true, false),
                             record("3_1", true, false)}, 3, 2);
    CHECK(mix.mu.at("unknot") == doctest::Approx(0.75));
    CHECK(mix.mu.at("3_1") == doctest::Approx(0.25));
    CHECK(mix.betti_sums == std::vector<long>{4, 4});
    std::size_t total = 0;
    for (const auto& [k, c] : mix.class_counts) total += c;
    CHECK(total == mix.N);
}

TEST_CASE("window census on a single circle") {
    auto f = std::make_shared<AnalyticField>(2, 1, [](const Point& x, int order) {
        FieldJet jet;
        jet.value = Eigen::VectorXd::Constant(1, x.squaredNorm() - 0.25);
        if (order >= 1) jet.grad = 2 * x.transpose();
        return jet;
    });
    const WindowReport rep = window_census(*f, 6.0, 2.0, 0.5, 0.05);
    CHECK(rep.N == 1);
    CHECK(rep.left > 0.0);
    CHECK(rep.left <= 1.0);
    CHECK(rep.right >= 1.0);
    CHECK(rep.pass);
    CHECK(rep.betti == std::vector<long>{1, 1});
    CHECK(rep.betti_pass);

    // Windows of side 4 containing the whole circle: centres within 1.5 of the origin per axis.
    CHECK(rep.left == doctest::Approx(9.0 / 16.0));

    auto none = std::make_shared<AnalyticField>(2, 1, [](const Point& x, int order) {
        FieldJet jet;
        jet.value = Eigen::VectorXd::Constant(1, 1.0 + x.squaredNorm());
        if (order >= 1) jet.grad = 2 * x.transpose();
        return jet;
    });
    const WindowReport zero = window_census(*none, 6.0, 2.0, 0.5, 0.1);
    CHECK(zero.N == 0);
    CHECK(zero.left == 0.0);
    CHECK(zero.right == 0.0);
    CHECK(zero.pass);
}

TEST_CASE("window census on a Bargmann-Fock sample") {
    KernelSpec spec;
    spec.n = 2;
    spec.domain_half_width = 10.5;
    const auto field = sample_field(spec, 17);
    const WindowReport rep = window_census(field, 6.0, 2.0, 0.5, 0.1);
    CHECK(rep.pass);
    CHECK(rep.betti_pass);
    CHECK(rep.N > 0);
}
