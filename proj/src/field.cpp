#include "nodal/field.hpp"

namespace nodal {

std::size_t GridAxes::point_count() const {
    std::size_t count = 1;
    for (const auto& axis : coords) count *= axis.size();
    return coords.empty() ? 0 : count;
}

Point GridAxes::point(std::size_t index) const {
    Point p(dim());
    for (int a = 0; a < dim(); ++a) {
        const auto& axis = coords[static_cast<std::size_t>(a)];
        p(a) = axis[index % axis.size()];
        index /= axis.size();
    }
    return p;
}

GridValues Field::eval_grid(const GridAxes& axes, int order) const {
    const int n = dim();
    const int m = codim();
    const std::size_t count = axes.point_count();
    GridValues out;
    out.value.assign(static_cast<std::size_t>(m), std::vector<double>(count));
    if (order >= 1) out.grad.assign(static_cast<std::size_t>(m * n), std::vector<double>(count));
    for (std::size_t p = 0; p < count; ++p) {
        const FieldJet jet = eval(axes.point(p), order >= 1 ? 1 : 0);
        for (int a = 0; a < m; ++a) {
            out.value[static_cast<std::size_t>(a)][p] = jet.value(a);
            if (order >= 1) {
                for (int i = 0; i < n; ++i) {
                    out.grad[static_cast<std::size_t>(a * n + i)][p] = jet.grad(a, i);
                }
            }
        }
    }
    return out;
}

PerturbedField::PerturbedField(std::shared_ptr<const Field> base,
                               std::shared_ptr<const Field> perturbation, double delta)
    : base_(std::move(base)), perturbation_(std::move(perturbation)), delta_(delta) {
    if (base_->dim() != perturbation_->dim() || base_->codim() != perturbation_->codim()) {
        throw ConfigError("perturbation shape does not match the base field");
    }
}

FieldJet PerturbedField::eval(const Point& x, int order) const {
    FieldJet jet = base_->eval(x, order);
    const FieldJet extra = perturbation_->eval(x, order);
    jet.value += delta_ * extra.value;
    if (order >= 1) jet.grad += delta_ * extra.grad;
    if (order >= 2) {
        for (std::size_t a = 0; a < jet.hess.size(); ++a) jet.hess[a] += delta_ * extra.hess[a];
    }
    return jet;
}

GridValues PerturbedField::eval_grid(const GridAxes& axes, int order) const {
    GridValues out = base_->eval_grid(axes, order);
    const GridValues extra = perturbation_->eval_grid(axes, order);
    auto add = [&](auto& dst, const auto& src) {
        for (std::size_t c = 0; c < dst.size(); ++c) {
            for (std::size_t p = 0; p < dst[c].size(); ++p) dst[c][p] += delta_ * src[c][p];
        }
    };
    add(out.value, extra.value);
    add(out.grad, extra.grad);
    return out;
}

FieldJet quadric_jet(const Point& x, int order, double c, const Point& b, const Matrix& A) {
    FieldJet jet;
    jet.value = Eigen::VectorXd::Constant(1, c + b.dot(x) + x.dot(A * x));
    if (order >= 1) jet.grad = (b + (A + A.transpose()) * x).transpose();
    if (order >= 2) jet.hess = {A + A.transpose()};
    return jet;
}

}  // namespace nodal
