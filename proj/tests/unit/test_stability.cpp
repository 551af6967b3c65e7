#include <doctest.h>

#include "nodal/extraction.hpp"
#include "nodal/realization.hpp"

#include <cmath>
#include <random>

using namespace nodal;

namespace {

GridSpec cube(double R, double h, double padding, const Point& center = Point()) {
    GridSpec g;
    g.R = R;
    g.h = h;
    g.padding = padding;
    g.center = center;
    return g;
}

std::size_t inside_count(const Field& field, const GridSpec& grid, double R, const Point& center = Point()) {
    ExtractOptions options;
    options.project_vertices = false;
    const auto rep = extract_zero_set(field, grid, options);
    return classify_against_cube(rep.components, R, center).inside.size();
}

}  // namespace

TEST_CASE("refinement stability: halving h rarely changes the inside count") {
    SUBCASE("Bargmann-Fock n = 2 on C_6") {
        KernelSpec spec;
        spec.model = Model::BargmannFock;
        spec.n = 2;
        spec.m = 1;
        spec.domain_half_width = 8.0;
        int changed = 0;
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const auto f = sample_field(spec, seed);
            changed += inside_count(f, cube(6, 0.1, 1), 6) != inside_count(f, cube(6, 0.05, 1), 6);
        }
        CHECK(changed <= 2);  // 5% of 50
    }
    SUBCASE("arithmetic waves n = 3, L^2 = 9 on one period") {
        // BF has unit gradient variance per axis; here it is (2 pi)^2 L^2 / 3, so
        // h = 0.1 in those units is about 1/109. 1/72 -> 1/144 is coarser still.
        KernelSpec spec;
        spec.model = Model::TorusArithmetic;
        spec.n = 3;
        spec.m = 2;
        spec.lattice_norm = 9;
        const Point c = Point::Constant(3, 0.5);
        int changed = 0;
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const auto f = sample_field(spec, seed);
            changed += inside_count(f, cube(0.5, 1.0 / 72, 0, c), 0.5, c) != inside_count(f, cube(0.5, 1.0 / 144, 0, c), 0.5, c);
        }
        CHECK(changed <= 2);
    }
}

TEST_CASE("perturbation stability: inside C_{R-1} persists in C_R under small C1 noise") {
    KernelSpec spec;
    spec.model = Model::BerryMono;
    spec.n = 2;
    spec.m = 1;
    spec.waves = 256;
    const double R = 6.0, h = 0.05, delta = 1e-3;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int held = 0;
    for (std::uint64_t trial = 1; trial <= 50; ++trial) {
        const auto f = sample_field(spec, trial);
        // G = cos(k.x + phase) / (1 + |k|) has C1 norm at most 1.
        Point k(2);
        k << 4.0 * U(rng) - 2.0, 4.0 * U(rng) - 2.0;
        const double phase = 2.0 * M_PI * U(rng);
        const double scale = delta / (1.0 + k.norm());
        const AnalyticField g(2, 1, [&f, k, phase, scale](const Point& x, int order) {
            FieldJet jet = f.eval(x, order);
            const double arg = k.dot(x) + phase;
            jet.value(0) += scale * std::cos(arg);
            if (order >= 1) jet.grad.row(0) -= scale * std::sin(arg) * k.transpose();
            if (order >= 2) jet.hess[0] -= scale * std::cos(arg) * k * k.transpose();
            return jet;
        });
        held += inside_count(g, cube(R, h, 1), R) >= inside_count(f, cube(R - 1, h, 1), R - 1);
    }
    CHECK(held == 50);
}
