#include "nodal/covariance.hpp"

#include "nodal/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;

// Profile derivatives of the unit-frequency random wave B_n(|z|) = G(|z|^2):
// G^(j)(s) = (-1/2)^j Gamma(n/2) 2^nu J_{nu+j}(sqrt s) / sqrt(s)^{nu+j}.
double wave_profile_derivative(int n, int j, double s) {
    const double nu = 0.5 * n - 1.0;
    const double norm = std::tgamma(0.5 * n) * std::pow(2.0, nu);
    return std::pow(-0.5, j) * norm * bessel_ratio(nu + j, std::sqrt(std::max(s, 0.0)));
}

// d^gamma g(|z|^2): sum over partitions of gamma into singletons {i} -> 2 z_i
// and pairs {i, j} -> 2 delta_ij, weighted by g^(#blocks).
double radial_partition_sum(const std::array<double, 5>& g, const Point& z,
                            std::vector<int>& rest, int blocks, double factor) {
    if (factor == 0.0) return 0.0;
    if (rest.empty()) return factor * g[static_cast<std::size_t>(blocks)];
    const int first = rest.front();
    std::vector<int> tail(rest.begin() + 1, rest.end());
    double total = radial_partition_sum(g, z, tail, blocks + 1, factor * 2.0 * z(first));
    for (std::size_t k = 0; k < tail.size(); ++k) {
        if (tail[k] != first) continue;
        std::vector<int> remaining;
        remaining.reserve(tail.size() - 1);
        for (std::size_t q = 0; q < tail.size(); ++q) {
            if (q != k) remaining.push_back(tail[q]);
        }
        total += radial_partition_sum(g, z, remaining, blocks + 1, factor * 2.0);
    }
    return total;
}

// d_x^alpha d_y^beta h(<x,y>): sum over partial matchings of beta into alpha.
// Matched pairs contribute delta_ik, unmatched alpha indices y_i and unmatched
// beta indices x_k; h is differentiated once per alpha index and once per
// unmatched beta index.
double dot_kernel_sum(int degree, double s, const Point& x, const Point& y,
                      std::span<const int> alpha, std::span<const int> beta,
                      std::vector<bool>& used, std::size_t b, int order, double factor) {
    if (factor == 0.0) return 0.0;
    if (b == beta.size()) {
        double f = factor;
        const int total = static_cast<int>(alpha.size()) + order;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (!used[i]) f *= y(alpha[i]);
        }
        if (total > degree) return 0.0;
        double falling = 1.0;
        for (int k = 0; k < total; ++k) falling *= (degree - k);
        return f * falling * std::pow(s, degree - total);
    }
    const int k = beta[b];
    // beta index hits h: contributes x_k.
    double sum = dot_kernel_sum(degree, s, x, y, alpha, beta, used, b + 1, order + 1, factor * x(k));
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (used[i] || alpha[i] != k) continue;
        used[i] = true;
        sum += dot_kernel_sum(degree, s, x, y, alpha, beta, used, b + 1, order, factor);
        used[i] = false;
    }
    return sum;
}

}  // namespace

// ---------------------------------------------------------------------------

RadialSpectrum RadialSpectrum::for_spec(const KernelSpec& spec) {
    RadialSpectrum out;
    if (spec.model == Model::BerryMono) {
        out.nodes_ = {1.0};
        out.weights_ = {1.0};
        out.cdf_radius_ = {1.0, 1.0};
        out.cdf_value_ = {0.0, 1.0};
        return out;
    }
    if (!spec.radial_spectral()) return out;

    const int n = spec.n;
    double lo = 0.0;
    double hi = 50.0;
    if (spec.model == Model::CustomSpectral) {
        lo = spec.spectral_table.front().first;
        hi = spec.spectral_table.back().first;
    }
    auto density = [&](double r) {
        if (spec.model == Model::BlackBody) {
            if (r <= 0.0) return 0.0;
            return std::pow(r, n) / std::expm1(r);
        }
        const auto& table = spec.spectral_table;
        auto it = std::upper_bound(table.begin(), table.end(), r,
                                   [](double v, const auto& row) { return v < row.first; });
        if (it == table.begin()) return std::pow(r, n - 1) * table.front().second;
        if (it == table.end()) return std::pow(r, n - 1) * table.back().second;
        const auto& [r1, s1] = *it;
        const auto& [r0, s0] = *(it - 1);
        const double t = (r - r0) / (r1 - r0);
        return std::pow(r, n - 1) * ((1.0 - t) * s0 + t * s1);
    };

    const int panels = std::max(8, static_cast<int>(std::ceil((hi - lo) / 0.25)));
    const GaussRule rule = composite_gauss(lo, hi, panels, 8);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double w = rule.weights[i] * density(rule.nodes[i]);
        out.nodes_.push_back(rule.nodes[i]);
        out.weights_.push_back(w);
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("spectral density has zero mass");
    for (auto& w : out.weights_) w /= total;

    // Tabulated CDF by the trapezoid rule on a fine uniform mesh.
    const int steps = 20000;
    const double dr = (hi - lo) / steps;
    out.cdf_radius_.push_back(lo);
    out.cdf_value_.push_back(0.0);
    double acc = 0.0;
    double prev = density(lo);
    for (int i = 1; i <= steps; ++i) {
        const double r = lo + i * dr;
        const double cur = density(r);
        acc += 0.5 * (prev + cur) * dr;
        prev = cur;
        out.cdf_radius_.push_back(r);
        out.cdf_value_.push_back(acc);
    }
    for (auto& c : out.cdf_value_) c /= acc;
    return out;
}

double RadialSpectrum::moment(double p) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * std::pow(nodes_[i], p);
    return sum;
}

double RadialSpectrum::quantile(double u) const {
    if (cdf_value_.empty()) return 1.0;
    const auto it = std::lower_bound(cdf_value_.begin(), cdf_value_.end(), u);
    if (it == cdf_value_.begin()) return cdf_radius_.front();
    if (it == cdf_value_.end()) return cdf_radius_.back();
    const auto k = static_cast<std::size_t>(it - cdf_value_.begin());
    const double c0 = cdf_value_[k - 1];
    const double c1 = cdf_value_[k];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return cdf_radius_[k - 1] + t * (cdf_radius_[k] - cdf_radius_[k - 1]);
}

// ---------------------------------------------------------------------------

ScalarKernel::ScalarKernel(const KernelSpec& spec) : spec_(spec) {
    spec_.validate();
    spectrum_ = RadialSpectrum::for_spec(spec_);
    if (spec_.model == Model::TorusArithmetic) lattice_ = lattice_sphere(spec_.n, spec_.lattice_norm);
}

std::array<double, 5> ScalarKernel::radial_jet(double u, int max_order) const {
    const auto count = static_cast<std::size_t>(std::clamp(max_order, 0, 4) + 1);
    std::array<double, 5> g{};
    switch (spec_.model) {
        case Model::BargmannFock: {
            const double e = spec_.variance * std::exp(-0.5 * u);
            double c = 1.0;
            for (std::size_t j = 0; j < 5; ++j) {
                g[j] = c * e;
                c *= -0.5;
            }
            return g;
        }
        case Model::BerryMono:
        case Model::BlackBody:
        case Model::CustomSpectral: {
            const auto& nodes = spectrum_.nodes();
            const auto& weights = spectrum_.weights();
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const double r2 = nodes[i] * nodes[i];
                double scale = weights[i];
                for (std::size_t j = 0; j < count; ++j) {
                    g[j] += scale * wave_profile_derivative(spec_.n, static_cast<int>(j), r2 * u);
                    scale *= r2;
                }
            }
            for (auto& v : g) v *= spec_.variance;
            return g;
        }
        default:
            throw ConfigError("radial_jet: model " + model_name(spec_.model) + " is not isotropic");
    }
}

double ScalarKernel::lag_derivative(const Point& z, std::span<const int> gamma) const {
    if (spec_.model == Model::TorusArithmetic) {
        const int order = static_cast<int>(gamma.size());
        const double scale = std::pow(2.0 * kPi, order);
        double sum = 0.0;
        for (const auto& lambda : lattice_) {
            double phase = 0.0;
            double mono = 1.0;
            for (int i = 0; i < spec_.n; ++i) phase += lambda[static_cast<std::size_t>(i)] * z(i);
            for (const int g : gamma) mono *= lambda[static_cast<std::size_t>(g)];
            sum += mono * std::cos(2.0 * kPi * phase + 0.5 * kPi * order);
        }
        return scale * sum;
    }
    if (!spec_.isotropic()) throw ConfigError("lag_derivative needs a stationary model");
    const auto g = radial_jet(z.squaredNorm(), static_cast<int>(gamma.size()));
    std::vector<int> rest(gamma.begin(), gamma.end());
    return radial_partition_sum(g, z, rest, 0, 1.0);
}

double ScalarKernel::derivative(const Point& x, const Point& y, std::span<const int> alpha,
                                std::span<const int> beta) const {
    if (spec_.model == Model::Kostlan) {
        std::vector<bool> used(alpha.size(), false);
        return dot_kernel_sum(spec_.degree, x.dot(y), x, y, alpha, beta, used, 0, 0, 1.0);
    }
    std::vector<int> gamma(alpha.begin(), alpha.end());
    gamma.insert(gamma.end(), beta.begin(), beta.end());
    const double sign = (beta.size() % 2 == 0) ? 1.0 : -1.0;
    return sign * lag_derivative(x - y, gamma);
}

double ScalarKernel::value(const Point& x, const Point& y) const {
    return derivative(x, y, {}, {});
}

// ---------------------------------------------------------------------------

void check_domain(const KernelSpec& spec, const Point& x) {
    const int dim = spec.n;
    if (x.size() != dim) {
        throw DomainError("point has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim));
    }
    if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
    if (spec.model == Model::Kostlan && std::abs(x.norm() - 1.0) > 1e-9) {
        throw DomainError("Kostlan points must lie on the unit sphere");
    }
    if (spec.model == Model::BargmannFock &&
        x.cwiseAbs().maxCoeff() > spec.domain_half_width * (1.0 + 1e-12)) {
        throw DomainError("point outside the certified Bargmann-Fock cube of half width " +
                          format_double(spec.domain_half_width));
    }
}

CovarianceMatrixValue covariance(const KernelSpec& spec, const Point& x, const Point& y) {
    check_domain(spec, x);
    check_domain(spec, y);
    const ScalarKernel kernel(spec);
    const double k = kernel.value(x, y);
    return {Matrix::Identity(spec.m, spec.m) * k, x, y};
}

Matrix sphere_tangent_basis(const Point& x) {
    const auto n = x.size();
    Matrix basis(n, n - 1);
    std::vector<Point> accepted{x.normalized()};
    int col = 0;
    for (Eigen::Index axis = 0; axis < n && col < n - 1; ++axis) {
        Point v = Point::Unit(n, axis);
        for (const auto& a : accepted) v -= v.dot(a) * a;
        if (v.norm() < 1e-6) continue;
        v.normalize();
        accepted.push_back(v);
        basis.col(col++) = v;
    }
    return basis;
}

Point sphere_exp(const Point& x, const Point& w) {
    const double t = w.norm();
    if (t == 0.0) return x;
    return std::cos(t) * x + std::sin(t) * (w / t);
}

CovarianceMatrixValue rescaled_covariance(const KernelSpec& spec, const Point& x, const Point& u,
                                          const Point& v, double scale) {
    if (!(scale > 0.0)) throw DomainError("rescaling parameter must be positive");
    if (spec.model == Model::Kostlan) {
        check_domain(spec, x);
        if (u.size() != spec.n - 1 || v.size() != spec.n - 1) {
            throw DomainError("Kostlan offsets are tangent coordinates of dimension n-1");
        }
        const Matrix basis = sphere_tangent_basis(x);
        const Point p = sphere_exp(x, basis * u / scale);
        const Point q = sphere_exp(x, basis * v / scale);
        return covariance(spec, p.normalized(), q.normalized());
    }
    return covariance(spec, x + u / scale, x + v / scale);
}

double black_body_closed_form(double r) {
    const double pr = kPi * r;
    const double sh = std::sinh(pr);
    return 15.0 / std::pow(kPi, 4) *
           (1.0 / std::pow(r, 4) - std::pow(kPi, 3) * std::cosh(pr) / (r * sh * sh * sh));
}

double second_spectral_moment(const KernelSpec& spec) {
    switch (spec.model) {
        case Model::TorusArithmetic:
            return 4.0 * kPi * kPi * spec.lattice_norm;
        case Model::Kostlan:
            return static_cast<double>(spec.n - 1) * spec.degree;
        default: {
            const ScalarKernel kernel(spec);
            const auto g = kernel.radial_jet(0.0, 1);
            return -2.0 * spec.n * g[1] / g[0];
        }
    }
}

double characteristic_wavelength(const KernelSpec& spec) {
    return 2.0 * kPi / std::sqrt(second_spectral_moment(spec));
}

}  // namespace nodal
