#include "nodal/geometry.hpp"

#include <cmath>
#include <limits>

namespace nodal {

double sff_constant(int n, int m) { return static_cast<double>(n - m) * m * std::pow(n, 4); }

PointFrame point_frame(const Matrix& grad, const Point& x) {
    PointFrame frame;
    frame.x = x;
    frame.grad = grad;
    frame.gram = grad * grad.transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(frame.gram, Eigen::EigenvaluesOnly);
    frame.lambda_min = std::sqrt(std::max(eig.eigenvalues()(0), 0.0));
    frame.degenerate = !(frame.lambda_min >= kDegenerateThreshold);
    if (frame.degenerate) return frame;

    // Orthonormalize the gradient rows, then complete with coordinate vectors.
    const int n = static_cast<int>(grad.cols());
    const int m = static_cast<int>(grad.rows());
    std::vector<Point> basis;
    auto absorb = [&](Point v) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const Point& b : basis) v -= b.dot(v) * b;
        }
        const double norm = v.norm();
        if (norm < 1e-8) return false;
        basis.push_back(v / norm);
        return true;
    };
    for (int a = 0; a < m; ++a) absorb(grad.row(a).transpose());
    const auto normal_count = basis.size();
    for (int i = 0; i < n && static_cast<int>(basis.size()) < n; ++i) absorb(Point::Unit(n, i));
    frame.tangent_basis.resize(n, n - static_cast<int>(normal_count));
    for (std::size_t k = normal_count; k < basis.size(); ++k) {
        frame.tangent_basis.col(static_cast<Eigen::Index>(k - normal_count)) = basis[k];
    }
    return frame;
}

CurvatureSummary mean_curvature(const PointFrame& frame, const std::vector<Matrix>& hess) {
    CurvatureSummary out;
    if (frame.degenerate) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.mean_curvature_norm = nan;
        out.sff_norm_sq = nan;
        out.sff_bound = nan;
        return out;
    }
    const int n = static_cast<int>(frame.grad.cols());
    const int m = static_cast<int>(frame.grad.rows());
    const Matrix& T = frame.tangent_basis;
    const Matrix inv = frame.gram.inverse();

    Eigen::VectorXd trace(m);
    std::vector<Matrix> restricted;
    double hess_sq = 0.0;
    for (int a = 0; a < m; ++a) {
        restricted.push_back(T.transpose() * hess[static_cast<std::size_t>(a)] * T);
        trace(a) = restricted.back().trace();
        hess_sq += hess[static_cast<std::size_t>(a)].squaredNorm();
    }
    double sff = 0.0;
    const auto k = T.cols();
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            Eigen::VectorXd h(m);
            for (int a = 0; a < m; ++a) h(a) = restricted[static_cast<std::size_t>(a)](i, j);
            sff += h.dot(inv * h);
        }
    }
    out.valid = true;
    out.mean_curvature_norm = std::sqrt(std::max(trace.dot(inv * trace), 0.0));
    out.sff_norm_sq = sff;
    out.sff_bound = sff_constant(n, m) / std::abs(frame.gram.determinant()) *
                    std::pow(frame.grad.squaredNorm(), m - 1) * hess_sq;
    return out;
}

double scalar_mean_curvature(const Eigen::RowVectorXd& grad, const Matrix& hess) {
    const double g = grad.norm();
    return std::abs(hess.trace() / g - (grad * hess * grad.transpose())(0, 0) / (g * g * g));
}

double willmore_integrand(const CurvatureSummary& summary, int n, int m) {
    if (!summary.valid) return 0.0;
    return std::pow(summary.mean_curvature_norm / (n - m), n - m);
}

CurvatureSummary curvature_at(const Field& field, const Point& x) {
    const FieldJet jet = field.eval(x, 2);
    return mean_curvature(point_frame(jet.grad, x), jet.hess);
}

}  // namespace nodal
