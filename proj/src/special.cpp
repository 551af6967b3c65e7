#include "nodal/special.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace nodal {

double bessel_ratio(double mu, double r) {
    r = std::abs(r);
    if (r < 5.0) {
        const double q = 0.25 * r * r;
        double term = 1.0 / (std::pow(2.0, mu) * std::tgamma(mu + 1.0));
        double sum = term;
        for (int j = 1; j < 80; ++j) {
            term *= -q / (static_cast<double>(j) * (mu + j));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
        }
        return sum;
    }
    return std::cyl_bessel_j(mu, r) / std::pow(r, mu);
}

double sphere_volume(int k) {
    const double half = 0.5 * (k + 1);
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

GaussRule gauss_legendre(int order) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    const std::lock_guard lock(mutex);
    if (const auto it = cache.find(order); it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    cache.emplace(order, rule);
    return rule;
}

GaussRule composite_gauss(double a, double b, int panels, int order) {
    const GaussRule base = gauss_legendre(order);
    GaussRule rule;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            rule.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
            rule.weights.push_back(0.5 * width * base.weights[i]);
        }
    }
    return rule;
}

}  // namespace nodal
