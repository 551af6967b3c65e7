#pragma once

#include "nodal/field.hpp"
#include "nodal/types.hpp"

#include <vector>

namespace nodal {

// Below this smallest singular value of grad F a point is treated as critical.
inline constexpr double kDegenerateThreshold = 1e-12;

// Local frame of Z(F) at a point.
struct PointFrame {
    Point x;
    Matrix grad;           // m x n
    Matrix gram;           // A = grad grad^T
    Matrix tangent_basis;  // n x (n - m), orthonormal columns spanning ker grad; empty when degenerate
    double lambda_min = 0.0;
    bool degenerate = true;
};

struct CurvatureSummary {
    bool valid = false;               // false at degenerate points (values are NaN)
    double mean_curvature_norm = 0.0;  // |H|
    double sff_norm_sq = 0.0;          // |II|^2 over the orthonormal tangent basis
    // C(n,m) |det A|^{-1} |grad F|^{2(m-1)} |hess F|^2 with the crude explicit
    // constant C(n,m) = (n-m) m n^4 (Frobenius norms throughout). Bounds both
    // |II|^2 and |H|^2.
    double sff_bound = 0.0;
};

double sff_constant(int n, int m);

PointFrame point_frame(const Matrix& grad, const Point& x = Point());

// |H|^2 = sum_ab tr_T(hess f_a) A^{ab} tr_T(hess f_b) with tr_T over the tangent basis.
CurvatureSummary mean_curvature(const PointFrame& frame, const std::vector<Matrix>& hess);

// Hypersurface route: |div(grad f / |grad f|)| = |lap f / |grad f| - grad f^T hess f grad f / |grad f|^3|.
double scalar_mean_curvature(const Eigen::RowVectorXd& grad, const Matrix& hess);

// |H / (n - m)|^{n - m}; zero for an invalid summary.
double willmore_integrand(const CurvatureSummary& summary, int n, int m);

// Convenience: frame and curvature of Z(F) at x from a second-order jet.
CurvatureSummary curvature_at(const Field& field, const Point& x);

}  // namespace nodal
