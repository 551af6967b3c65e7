#pragma once

#include "nodal/kernel_spec.hpp"
#include "nodal/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace nodal {

// Normalized radial law of |xi| for the random-wave models, with a
// quadrature rule for expectations and an inverse CDF for sampling.
// BerryMono is the point mass at 1.
class RadialSpectrum {
public:
    RadialSpectrum() = default;
    static RadialSpectrum for_spec(const KernelSpec& spec);

    bool is_atom() const { return nodes_.size() == 1; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    // E[|xi|^p].
    double moment(double p) const;
    // Radius with CDF value u in (0, 1).
    double quantile(double u) const;

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> cdf_radius_;
    std::vector<double> cdf_value_;
};

// The scalar kernel k(x, y) shared by the i.i.d. components of a field,
// with analytic mixed derivatives d_x^alpha d_y^beta k for |alpha|+|beta| <= 4.
// Index lists hold coordinate indices, so {0, 0} is d^2/dx_1^2.
//
// No domain checks here: Kostlan is evaluated as the ambient homogeneous
// kernel <x,y>^d, which is what conditioning in an off-sphere chart needs.
class ScalarKernel {
public:
    explicit ScalarKernel(const KernelSpec& spec);

    const KernelSpec& spec() const { return spec_; }
    int dim() const { return spec_.n; }

    double value(const Point& x, const Point& y) const;
    double derivative(const Point& x, const Point& y, std::span<const int> alpha,
                      std::span<const int> beta) const;

    // Stationary models only: d^gamma k evaluated at the lag z = x - y.
    double lag_derivative(const Point& z, std::span<const int> gamma) const;

    // Isotropic models only: derivatives g^(j)(u), j = 0..4, of the profile
    // k(z) = g(|z|^2) at u = |z|^2. Entries above max_order are left at zero.
    std::array<double, 5> radial_jet(double u, int max_order = 4) const;

    const RadialSpectrum& spectrum() const { return spectrum_; }

private:
    KernelSpec spec_;
    RadialSpectrum spectrum_;
    std::vector<std::vector<int>> lattice_;
};

struct CovarianceMatrixValue {
    Matrix K;
    Point x;
    Point y;
};

// m x m covariance of (F(x), F(y)). Throws DomainError for points outside the
// model's domain (Kostlan needs unit vectors, Bargmann-Fock the certified cube).
CovarianceMatrixValue covariance(const KernelSpec& spec, const Point& x, const Point& y);

// K(x + u/L, x + v/L). For Kostlan, u and v are coordinates in an orthonormal
// basis of the tangent plane at x and the offsets go through the exponential map.
CovarianceMatrixValue rescaled_covariance(const KernelSpec& spec, const Point& x, const Point& u,
                                          const Point& v, double scale);

// Orthonormal basis (as columns) of the tangent plane of S^{n-1} at the unit vector x.
Matrix sphere_tangent_basis(const Point& x);

// exp_x(w) on the unit sphere for a tangent vector w.
Point sphere_exp(const Point& x, const Point& w);

// Closed form of the unit-variance black-body kernel in R^3,
// 15/pi^4 * (1/r^4 - pi^3 cosh(pi r) / (r sinh^3(pi r))). Accurate for r >= 0.1.
double black_body_closed_form(double r);

// Second spectral moment E|xi|^2 = -2 n g'(0) / g(0).
double second_spectral_moment(const KernelSpec& spec);

// 2 pi / sqrt(second spectral moment).
double characteristic_wavelength(const KernelSpec& spec);

void check_domain(const KernelSpec& spec, const Point& x);

}  // namespace nodal
