#pragma once

#include "nodal/extraction.hpp"
#include "nodal/field.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>

// Synthetic curves and implicit surfaces shared by the unit and acceptance tests.
namespace nodal::synthetic {

inline ComponentGeometry closed_curve(const std::function<Eigen::Vector3d(double)>& c, int count) {
    ComponentGeometry g;
    g.dim = 3;
    g.closed = true;
    for (int k = 0; k < count; ++k) g.vertices.push_back(c(2 * std::numbers::pi * k / count));
    g.vertices.push_back(g.vertices.front());
    return g;
}

inline ComponentGeometry trefoil(int count = 600) {
    return closed_curve([](double t) {
        return Eigen::Vector3d((2 + std::cos(3 * t)) * std::cos(2 * t), (2 + std::cos(3 * t)) * std::sin(2 * t), std::sin(3 * t));
    }, count);
}

inline ComponentGeometry figure_eight(int count = 600) {
    return closed_curve([](double t) {
        return Eigen::Vector3d((2 + std::cos(2 * t)) * std::cos(3 * t), (2 + std::cos(2 * t)) * std::sin(3 * t), std::sin(4 * t));
    }, count);
}

inline ComponentGeometry ellipse(int count = 200) {
    return closed_curve([](double t) { return Eigen::Vector3d(2 * std::cos(t), std::sin(t), 0.1 * std::sin(t)); }, count);
}

inline ComponentGeometry transformed(const ComponentGeometry& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    q.normalize();
    const double scale = std::exp(std::log(0.1) + uni(rng) * std::log(100.0));
    const Eigen::Vector3d shift(normal(rng) * 5, normal(rng) * 5, normal(rng) * 5);
    std::vector<Eigen::Vector3d> open(g.vertices.begin(), g.vertices.end() - 1);
    std::rotate(open.begin(), open.begin() + static_cast<std::ptrdiff_t>(rng() % open.size()), open.end());
    ComponentGeometry out = g;
    out.vertices.clear();
    for (const auto& v : open) out.vertices.push_back(scale * (q * v) + shift);
    out.vertices.push_back(out.vertices.front());
    return out;
}

inline std::shared_ptr<AnalyticField> implicit(std::function<double(const Eigen::Vector3d&)> f) {
    // Central-difference jets are enough for topology.
    return std::make_shared<AnalyticField>(3, 1, [f](const Point& x, int order) {
        const Eigen::Vector3d p = x;
        FieldJet jet;
        jet.value = Eigen::VectorXd::Constant(1, f(p));
        if (order >= 1) {
            jet.grad.resize(1, 3);
            const double e = 1e-6;
            for (int i = 0; i < 3; ++i) {
                jet.grad(0, i) = (f(p + e * Eigen::Vector3d::Unit(i)) - f(p - e * Eigen::Vector3d::Unit(i))) / (2 * e);
            }
        }
        if (order >= 2) {
            Matrix H(3, 3);
            const double e = 1e-4;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const Eigen::Vector3d a = e * Eigen::Vector3d::Unit(i), b = e * Eigen::Vector3d::Unit(j);
                    H(i, j) = (f(p + a + b) - f(p + a - b) - f(p - a + b) + f(p - a - b)) / (4 * e * e);
                }
            }
            jet.hess = {H};
        }
        return jet;
    });
}

inline std::shared_ptr<AnalyticField> unit_sphere() {
    return implicit([](const Eigen::Vector3d& x) { return 1.0 - x.squaredNorm(); });
}

// Tube of radius 0.3 around the unit circle.
inline std::shared_ptr<AnalyticField> ring_torus() {
    return implicit([](const Eigen::Vector3d& x) {
        const double rho = std::hypot(x(0), x(1)) - 1.0;
        return rho * rho + x(2) * x(2) - 0.09;
    });
}

// Thickened lemniscate: a neighbourhood of a wedge of two circles.
inline std::shared_ptr<AnalyticField> genus_two() {
    return implicit([](const Eigen::Vector3d& x) {
        const double r2 = x(0) * x(0) + x(1) * x(1);
        const double g = r2 * r2 - (x(0) * x(0) - x(1) * x(1));
        return g * g + x(2) * x(2) - 0.15 * 0.15;
    });
}

inline GridSpec cube_grid(double R, double h, double padding) {
    GridSpec g;
    g.R = R;
    g.h = h;
    g.padding = padding;
    return g;
}

}  // namespace nodal::synthetic
