#include <doctest.h>

#include "nodal/covariance.hpp"
#include "nodal/realization.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

using namespace nodal;

namespace {

KernelSpec make_spec(Model model, int n, int m) {
    KernelSpec spec;
    spec.model = model;
    spec.n = n;
    spec.m = m;
    if (model == Model::BargmannFock) spec.domain_half_width = 3.0;
    if (model == Model::TorusArithmetic) spec.lattice_norm = n == 2 ? 5 : 9;
    if (model == Model::Kostlan) spec.degree = 6;
    if (model == Model::BerryMono || model == Model::BlackBody) spec.waves = 64;
    return spec;
}

Point sample_point(const KernelSpec& spec, double a, double b, double c = 0.3) {
    Point x(spec.n);
    if (spec.n == 2) x << a, b;
    else x << a, b, c;
    if (spec.model == Model::Kostlan) x.normalize();
    return x;
}

std::vector<Model> all_models() {
    return {Model::BargmannFock, Model::BlackBody, Model::BerryMono, Model::TorusArithmetic, Model::Kostlan};
}

}  // namespace

TEST_CASE("lattice sphere sizes") {
    CHECK(lattice_sphere(2, 1).size() == 4);
    CHECK(lattice_sphere(2, 5).size() == 8);
    CHECK(lattice_sphere(2, 25).size() == 12);
    CHECK(lattice_sphere(3, 1).size() == 6);
    CHECK(lattice_sphere(3, 9).size() == 30);
    CHECK(lattice_sphere(3, 7).empty());
}

TEST_CASE("sampling is deterministic and seed dependent") {
    for (const Model model : all_models()) {
        const KernelSpec spec = make_spec(model, 3, 2);
        const auto a = sample_field(spec, 11);
        const auto b = sample_field(spec, 11);
        const auto c = sample_field(spec, 12);
        CHECK(a.coefficients() == b.coefficients());
        CHECK(a.coefficients() != c.coefficients());
        CHECK(a.coefficients().size() == coefficient_count(spec));
    }
}

TEST_CASE("raising the Bargmann-Fock degree keeps existing coefficients") {
    KernelSpec low = make_spec(Model::BargmannFock, 2, 1);
    low.bf_degree = 40;
    KernelSpec high = low;
    high.bf_degree = 50;
    const auto a = sample_field(low, 3);
    const auto b = sample_field(high, 3);
    for (int j1 = 0; j1 <= 40; ++j1) {
        for (int j0 = 0; j0 <= 40; ++j0) {
            REQUIRE(a.coefficients()[j0 + 41 * j1] == b.coefficients()[j0 + 51 * j1]);
        }
    }
}

TEST_CASE("jets agree with central differences") {
    const double h = 1e-5;
    for (const Model model : all_models()) {
        for (int n = 2; n <= 3; ++n) {
            const KernelSpec spec = make_spec(model, n, n - 1);
            const auto field = sample_field(spec, 5);
            // Kostlan jets are ambient, so any point of R^n works for this check.
            Point x = sample_point(spec, 0.31, -0.22, 0.17);
            const FieldJet jet = field.eval(x, 2);
            for (int i = 0; i < n; ++i) {
                Point xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                const FieldJet p = field.eval(xp, 1);
                const FieldJet q = field.eval(xm, 1);
                for (int c = 0; c < spec.m; ++c) {
                    const double fd = (p.value(c) - q.value(c)) / (2 * h);
                    CHECK(jet.grad(c, i) == doctest::Approx(fd).epsilon(1e-6).scale(10));
                    for (int j = 0; j < n; ++j) {
                        const double fd2 = (p.grad(c, j) - q.grad(c, j)) / (2 * h);
                        CHECK(jet.hess[c](i, j) == doctest::Approx(fd2).epsilon(1e-5).scale(100));
                    }
                }
            }
        }
    }
}

TEST_CASE("grid evaluation matches pointwise evaluation") {
    for (const Model model : all_models()) {
        for (int n = 2; n <= 3; ++n) {
            const KernelSpec spec = make_spec(model, n, n - 1);
            const auto field = sample_field(spec, 9);
            GridAxes axes;
            for (int a = 0; a < n; ++a) axes.coords.push_back({-0.7 + 0.1 * a, -0.2, 0.05, 0.4, 0.9});
            const GridValues grid = field.eval_grid(axes, 1);
            for (std::size_t p = 0; p < axes.point_count(); p += 7) {
                const FieldJet jet = field.eval(axes.point(p), 1);
                for (int c = 0; c < spec.m; ++c) {
                    CHECK(grid.value[c][p] == doctest::Approx(jet.value(c)).epsilon(1e-10).scale(1));
                    for (int i = 0; i < n; ++i) {
                        CHECK(grid.grad[c * n + i][p] == doctest::Approx(jet.grad(c, i)).epsilon(1e-10).scale(1));
                    }
                }
            }
        }
    }
}

TEST_CASE("Bargmann-Fock refuses points outside the certified cube") {
    const KernelSpec spec = make_spec(Model::BargmannFock, 2, 1);
    const auto field = sample_field(spec, 1);
    Point x(2);
    x << 3.5, 0.0;
    CHECK_THROWS_AS(field.eval(x, 0), DomainError);
    GridAxes axes{{{-4.0, 0.0}, {0.0, 1.0}}};
    CHECK_THROWS_AS(field.eval_grid(axes, 0), DomainError);
}

TEST_CASE("coefficient sidecar round trips exactly") {
    const KernelSpec spec = make_spec(Model::BerryMono, 3, 2);
    const auto field = sample_field(spec, 77);
    const auto path = (std::filesystem::temp_directory_path() / "nodal_sidecar_test.bin").string();
    write_coefficients(path, field);
    const auto back = read_coefficients(path, spec);
    CHECK(back.seed() == 77);
    CHECK(back.coefficients() == field.coefficients());
    KernelSpec other = spec;
    other.waves = 65;
    CHECK_THROWS_AS(read_coefficients(path, other), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("kernel derivatives agree with differences of the kernel") {
    const double h = 1e-5;
    for (const Model model : all_models()) {
        for (int n = 2; n <= 3; ++n) {
            KernelSpec spec = make_spec(model, n, 1);
            const ScalarKernel k(spec);
            const Point x = sample_point(spec, 0.4, 0.1, -0.2);
            const Point y = sample_point(spec, -0.1, 0.35, 0.25);
            for (int i = 0; i < n; ++i) {
                const std::vector<int> a{i};
                Point xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                const double fd = (k.value(xp, y) - k.value(xm, y)) / (2 * h);
                CHECK(k.derivative(x, y, a, {}) == doctest::Approx(fd).epsilon(1e-6).scale(1));
                for (int j = 0; j < n; ++j) {
                    const std::vector<int> b{j};
                    const double fd2 = (k.derivative(xp, y, {}, b) - k.derivative(xm, y, {}, b)) / (2 * h);
                    CHECK(k.derivative(x, y, a, b) == doctest::Approx(fd2).epsilon(1e-6).scale(1));
                    const std::vector<int> ab{i, j};
                    for (int l = 0; l < n; ++l) {
                        const std::vector<int> c{l};
                        const double fd3 = (k.derivative(xp, y, std::vector<int>{j}, c) -
                                            k.derivative(xm, y, std::vector<int>{j}, c)) / (2 * h);
                        CHECK(k.derivative(x, y, ab, c) == doctest::Approx(fd3).epsilon(1e-5).scale(1));
                    }
                }
            }
        }
    }
}

TEST_CASE("empirical covariance matches the kernel") {
    // Monte Carlo over seeds; tolerance of five standard errors of a product of
    // unit-variance Gaussians.
    const int seeds = 3000;
    const double tol = 5.0 * std::sqrt(2.0 / seeds);
    for (const Model model : all_models()) {
        KernelSpec spec = make_spec(model, 2, 1);
        const Point x = sample_point(spec, 0.2, -0.3);
        const Point y = sample_point(spec, 0.7, 0.1);
        double xx = 0, xy = 0, yy = 0;
        for (int s = 0; s < seeds; ++s) {
            const auto f = sample_field(spec, static_cast<std::uint64_t>(s));
            const double a = f.eval(x, 0).value(0);
            const double b = f.eval(y, 0).value(0);
            xx += a * a;
            xy += a * b;
            yy += b * b;
        }
        const ScalarKernel k(spec);
        CHECK(std::abs(xx / seeds - k.value(x, x)) < tol * k.value(x, x));
        CHECK(std::abs(xy / seeds - k.value(x, y)) < tol * std::sqrt(k.value(x, x) * k.value(y, y)));
        CHECK(std::abs(yy / seeds - k.value(y, y)) < tol * k.value(y, y));
    }
}

TEST_CASE("closed-form kernels") {
    KernelSpec bf = make_spec(Model::BargmannFock, 3, 1);
    const ScalarKernel kbf(bf);
    Point x(3), y(3);
    x << 0.3, -0.1, 0.2;
    y << -0.4, 0.5, 0.0;
    CHECK(kbf.value(x, y) == doctest::Approx(std::exp(-0.5 * (x - y).squaredNorm())).epsilon(1e-13));

    // Berry in R^2 is J_0(|z|), in R^3 sin|z|/|z|.
    KernelSpec berry2 = make_spec(Model::BerryMono, 2, 1);
    const Point z2 = Point::Constant(2, 0.9);
    CHECK(ScalarKernel(berry2).value(z2, Point::Zero(2)) == doctest::Approx(std::cyl_bessel_j(0.0, z2.norm())).epsilon(1e-12));
    KernelSpec berry3 = make_spec(Model::BerryMono, 3, 1);
    const double r = (x - y).norm();
    CHECK(ScalarKernel(berry3).value(x, y) == doctest::Approx(std::sin(r) / r).epsilon(1e-12));

    KernelSpec torus = make_spec(Model::TorusArithmetic, 2, 1);
    const ScalarKernel kt(torus);
    double direct = 0.0;
    for (const auto& l : lattice_sphere(2, 5)) direct += std::cos(2 * std::numbers::pi * (l[0] * (x(0) - y(0)) + l[1] * (x(1) - y(1))));
    CHECK(kt.value(x.head(2), y.head(2)) == doctest::Approx(direct).epsilon(1e-13));

    KernelSpec kostlan = make_spec(Model::Kostlan, 3, 1);
    CHECK(ScalarKernel(kostlan).value(x, y) == doctest::Approx(std::pow(x.dot(y), 6)).epsilon(1e-13));
}

TEST_CASE("black-body kernel agrees with its closed form") {
    KernelSpec spec = make_spec(Model::BlackBody, 3, 1);
    const ScalarKernel k(spec);
    for (const double r : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        Point z = Point::Zero(3);
        z(0) = r;
        CHECK(k.value(z, Point::Zero(3)) == doctest::Approx(black_body_closed_form(r)).epsilon(1e-7));
    }
    CHECK(k.value(Point::Zero(3), Point::Zero(3)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("characteristic wavelengths") {
    CHECK(characteristic_wavelength(make_spec(Model::BerryMono, 3, 1)) == doctest::Approx(2 * std::numbers::pi));
    CHECK(characteristic_wavelength(make_spec(Model::BargmannFock, 2, 1)) == doctest::Approx(std::numbers::pi * std::sqrt(2.0)));
    KernelSpec torus = make_spec(Model::TorusArithmetic, 3, 1);
    CHECK(second_spectral_moment(torus) == doctest::Approx(4 * std::numbers::pi * std::numbers::pi * 9));
    KernelSpec kostlan = make_spec(Model::Kostlan, 3, 1);
    CHECK(second_spectral_moment(kostlan) == doctest::Approx(2.0 * 6));
}

TEST_CASE("spec validation and config round trip") {
    KernelSpec bad = make_spec(Model::TorusArithmetic, 3, 1);
    bad.lattice_norm = 7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    KernelSpec codim = make_spec(Model::BerryMono, 2, 2);
    CHECK_THROWS_AS(codim.validate(), ConfigError);
    KernelSpec spec = make_spec(Model::BlackBody, 3, 2);
    const KernelSpec back = KernelSpec::from_config(spec.to_config());
    CHECK(back.hash() == spec.hash());
}
