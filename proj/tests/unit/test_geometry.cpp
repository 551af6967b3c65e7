#include <doctest.h>

#include "nodal/geometry.hpp"
#include "nodal/realization.hpp"

#include <cmath>
#include <random>

using namespace nodal;

namespace {

// Smallest eigenvalue of a symmetric 1x1 or 2x2 matrix from its characteristic polynomial.
double char_poly_min_eig(const Matrix& A) {
    if (A.rows() == 1) return A(0, 0);
    const double tr = A(0, 0) + A(1, 1);
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    return 0.5 * (tr - std::sqrt(std::max(tr * tr - 4 * det, 0.0)));
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix M(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (const double v : row) M(i, j++) = v;
        ++i;
    }
    return M;
}

}  // namespace

TEST_CASE("point frame of coordinate rows") {
    const PointFrame f = point_frame(rows({{1, 0, 0}, {0, 1, 0}}));
    CHECK_FALSE(f.degenerate);
    CHECK(f.lambda_min == doctest::Approx(1.0));
    CHECK(f.gram.isApprox(Matrix::Identity(2, 2)));
    REQUIRE(f.tangent_basis.cols() == 1);
    CHECK(std::abs(f.tangent_basis(2, 0)) == doctest::Approx(1.0));
}

TEST_CASE("rank deficient gradient is degenerate") {
    const PointFrame f = point_frame(rows({{1, 0, 0}, {1, 0, 0}}));
    CHECK(f.degenerate);
    CHECK(f.lambda_min < 1e-12);
    CHECK(f.tangent_basis.size() == 0);
    CHECK_FALSE(mean_curvature(f, {Matrix::Zero(3, 3), Matrix::Zero(3, 3)}).valid);
}

TEST_CASE("random frames: eigen oracle and tangent annihilation") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 2;
        const int m = 1 + (trial / 2) % (n - 1);
        Matrix g(m, n);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        const PointFrame f = point_frame(g);
        REQUIRE_FALSE(f.degenerate);
        CHECK(f.lambda_min * f.lambda_min == doctest::Approx(char_poly_min_eig(g * g.transpose())).epsilon(1e-10));
        CHECK((g * f.tangent_basis).norm() <= 1e-10 * g.norm());
        CHECK((f.tangent_basis.transpose() * f.tangent_basis).isApprox(Matrix::Identity(n - m, n - m), 1e-12));
    }
}

TEST_CASE("mean curvature of round examples") {
    // f = 1 - x^2 - y^2 at (1, 0).
    const auto circle = mean_curvature(point_frame(rows({{-2, 0}})), {-2 * Matrix::Identity(2, 2)});
    CHECK(circle.mean_curvature_norm == doctest::Approx(1.0));
    CHECK(willmore_integrand(circle, 2, 1) == doctest::Approx(1.0));

    // f = 1 - |x|^2 on the unit sphere.
    Point p(3);
    p << 0.48, -0.6, 0.64;
    const auto sphere = mean_curvature(point_frame(-2 * p.transpose()), {-2 * Matrix::Identity(3, 3)});
    CHECK(sphere.mean_curvature_norm == doctest::Approx(2.0));
    CHECK(willmore_integrand(sphere, 3, 1) == doctest::Approx(1.0));

    // F = (x1, 1 - x2^2 - x3^2) at (0, 1, 0): unit circle in the x2 x3 plane.
    Matrix h2 = Matrix::Zero(3, 3);
    h2(1, 1) = h2(2, 2) = -2;
    const auto loop = mean_curvature(point_frame(rows({{1, 0, 0}, {0, -2, 0}})), {Matrix::Zero(3, 3), h2});
    CHECK(loop.mean_curvature_norm == doctest::Approx(1.0));
    CHECK(willmore_integrand(loop, 3, 2) == doctest::Approx(1.0));
}

TEST_CASE("ellipse curvature") {
    // x^2/a^2 + y^2/b^2 = 1 at (a cos t, b sin t): kappa = ab / (a^2 sin^2 t + b^2 cos^2 t)^{3/2}.
    const double a = 2.0, b = 0.7;
    for (const double t : {0.0, 0.4, 1.1, 2.5}) {
        Eigen::RowVectorXd g(2);
        g << 2 * std::cos(t) / a, 2 * std::sin(t) / b;
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 2 / (a * a);
        h(1, 1) = 2 / (b * b);
        const double kappa = a * b / std::pow(a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t), 1.5);
        const auto s = mean_curvature(point_frame(g), {h});
        CHECK(willmore_integrand(s, 2, 1) == doctest::Approx(kappa).epsilon(1e-12));
    }
}

TEST_CASE("general and scalar routes agree; bound chain holds") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + trial % 2;
        const int m = n == 2 ? 1 : 1 + (trial / 2) % 2;
        Matrix g(m, n);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        std::vector<Matrix> hess;
        for (int a = 0; a < m; ++a) {
            Matrix h(n, n);
            for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
            hess.push_back(h + h.transpose());
        }
        const auto s = mean_curvature(point_frame(g), hess);
        REQUIRE(s.valid);
        const double H2 = s.mean_curvature_norm * s.mean_curvature_norm;
        if (m == 1) {
            const double scalar = scalar_mean_curvature(g.row(0), hess[0]);
            CHECK(std::abs(H2 - scalar * scalar) <= 1e-8 * std::max(1.0, H2));
        }
        CHECK(H2 <= (n - m) * s.sff_norm_sq * (1 + 1e-12) + 1e-12);
        CHECK(s.sff_norm_sq <= s.sff_bound);
        CHECK(H2 <= s.sff_bound);
    }
}

TEST_CASE("sampled field points satisfy the bound chain") {
    KernelSpec spec;
    spec.model = Model::BerryMono;
    spec.n = 3;
    spec.m = 2;
    spec.waves = 64;
    const auto field = sample_field(spec, 2);
    Point x(3);
    x << 0.1, 0.2, 0.3;
    const auto s = curvature_at(field, x);
    REQUIRE(s.valid);
    CHECK(s.mean_curvature_norm * s.mean_curvature_norm <= s.sff_bound);
}
