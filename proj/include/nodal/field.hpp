#pragma once

#include "nodal/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace nodal {

// Sample coordinates of a tensor-product grid, one vector per axis.
// Grid point (i0, i1, i2) has linear index i0 + G0 * (i1 + G1 * i2).
struct GridAxes {
    std::vector<std::vector<double>> coords;

    int dim() const { return static_cast<int>(coords.size()); }
    std::size_t size(int axis) const { return coords[static_cast<std::size_t>(axis)].size(); }
    std::size_t point_count() const;
    Point point(std::size_t index) const;
};

// Field samples on a grid. value[a][p] is component a at point p; when
// gradients were requested, grad[a * n + i][p] is d f_a / d x_i.
struct GridValues {
    std::vector<std::vector<double>> value;
    std::vector<std::vector<double>> grad;
};

// An R^m-valued C^2 field on (a region of) R^n.
class Field {
public:
    virtual ~Field() = default;

    virtual int dim() const = 0;
    virtual int codim() const = 0;

    // order 0: value only; 1: adds the gradient; 2: adds the Hessians.
    virtual FieldJet eval(const Point& x, int order) const = 0;

    // Batched evaluation with order 0 or 1. The default loops over eval().
    virtual GridValues eval_grid(const GridAxes& axes, int order) const;
};

// A field given by a closed-form jet function; used for synthetic geometry.
class AnalyticField final : public Field {
public:
    using JetFn = std::function<FieldJet(const Point&, int)>;

    AnalyticField(int n, int m, JetFn fn) : n_(n), m_(m), fn_(std::move(fn)) {}

    int dim() const override { return n_; }
    int codim() const override { return m_; }
    FieldJet eval(const Point& x, int order) const override { return fn_(x, order); }

private:
    int n_;
    int m_;
    JetFn fn_;
};

// base + delta * perturbation.
class PerturbedField final : public Field {
public:
    PerturbedField(std::shared_ptr<const Field> base, std::shared_ptr<const Field> perturbation,
                   double delta);

    int dim() const override { return base_->dim(); }
    int codim() const override { return base_->codim(); }
    FieldJet eval(const Point& x, int order) const override;
    GridValues eval_grid(const GridAxes& axes, int order) const override;

private:
    std::shared_ptr<const Field> base_;
    std::shared_ptr<const Field> perturbation_;
    double delta_;
};

// Scalar polynomial fields of degree <= 2 in closed form, for tests and examples.
// quadric(c, b, A) is c + b.x + x^T A x.
FieldJet quadric_jet(const Point& x, int order, double c, const Point& b, const Matrix& A);

}  // namespace nodal
