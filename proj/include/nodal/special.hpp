#pragma once

#include <vector>

namespace nodal {

// J_mu(r) / r^mu, finite at r = 0 (power series below r = 5).
double bessel_ratio(double mu, double r);

// |S^{k}|, the volume of the unit k-sphere in R^{k+1}.
double sphere_volume(int k);

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int order);

// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
GaussRule composite_gauss(double a, double b, int panels, int order);

}  // namespace nodal
