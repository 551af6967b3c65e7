#include "nodal/realization.hpp"

#include "nodal/covariance.hpp"
#include "nodal/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::uint64_t kTagBargmannFock = 0x4246000000000000ULL;
constexpr std::uint64_t kTagTorus = 0x5441000000000000ULL;
constexpr std::uint64_t kTagWaves = 0x5756000000000000ULL;
constexpr std::uint64_t kTagKostlan = 0x4b53000000000000ULL;

std::uint64_t model_tag(Model model, int component) {
    std::uint64_t base = kTagWaves;
    switch (model) {
        case Model::BargmannFock: base = kTagBargmannFock; break;
        case Model::TorusArithmetic: base = kTagTorus; break;
        case Model::Kostlan: base = kTagKostlan; break;
        case Model::BerryMono: base = kTagWaves | 0x1; break;
        case Model::BlackBody: base = kTagWaves | 0x2; break;
        case Model::CustomSpectral: base = kTagWaves | 0x3; break;
    }
    return base + (static_cast<std::uint64_t>(component) << 8);
}

std::uint64_t encode_multi_index(const int* j, int n) {
    std::uint64_t code = 0;
    for (int a = n - 1; a >= 0; --a) code = code * 4096 + static_cast<std::uint64_t>(j[a]);
    return code;
}

FieldJet empty_jet(int n, int m, int order) {
    FieldJet jet;
    jet.value = Eigen::VectorXd::Zero(m);
    if (order >= 1) jet.grad = Matrix::Zero(m, n);
    if (order >= 2) jet.hess.assign(static_cast<std::size_t>(m), Matrix::Zero(n, n));
    return jet;
}

// Scaled Hermite-type functions phi_j(t) = exp(-t^2/2) t^j / sqrt(j!) and
// their first two derivatives, j = 0..D.
struct AxisBasis {
    Eigen::VectorXd d[3];
};

AxisBasis axis_basis(double t, int degree, int order) {
    const int top = degree + 2;
    Eigen::VectorXd phi(top + 1);
    phi(0) = std::exp(-0.5 * t * t);
    for (int j = 1; j <= top; ++j) phi(j) = phi(j - 1) * t / std::sqrt(static_cast<double>(j));
    AxisBasis basis;
    basis.d[0] = phi.head(degree + 1);
    if (order >= 1) {
        Eigen::VectorXd dphi(degree + 2);
        for (int j = 0; j <= degree + 1; ++j) {
            const double down = j > 0 ? std::sqrt(static_cast<double>(j)) * phi(j - 1) : 0.0;
            dphi(j) = down - std::sqrt(static_cast<double>(j + 1)) * phi(j + 1);
        }
        basis.d[1] = dphi.head(degree + 1);
        if (order >= 2) {
            Eigen::VectorXd ddphi(degree + 1);
            for (int j = 0; j <= degree; ++j) {
                const double down = j > 0 ? std::sqrt(static_cast<double>(j)) * dphi(j - 1) : 0.0;
                ddphi(j) = down - std::sqrt(static_cast<double>(j + 1)) * dphi(j + 1);
            }
            basis.d[2] = ddphi;
        }
    }
    return basis;
}

// Multi-index with given derivative counts per axis, e.g. {1,0,1} -> d/dx0 d/dx2.
void store_derivative(FieldJet& jet, int component, const int* counts, int n, double v) {
    int total = 0;
    int first = -1;
    int second = -1;
    for (int a = 0; a < n; ++a) {
        total += counts[a];
        for (int k = 0; k < counts[a]; ++k) {
            if (first < 0) first = a;
            else second = a;
        }
    }
    if (total == 0) jet.value(component) = v;
    else if (total == 1) jet.grad(component, first) = v;
    else {
        jet.hess[static_cast<std::size_t>(component)](first, second) = v;
        jet.hess[static_cast<std::size_t>(component)](second, first) = v;
    }
}

}  // namespace

namespace detail {

class ModelEvaluator {
public:
    ModelEvaluator(KernelSpec spec, std::uint64_t seed, std::vector<double> coefficients)
        : spec_(std::move(spec)), seed_(seed), coefficients_(std::move(coefficients)) {}
    virtual ~ModelEvaluator() = default;

    virtual FieldJet eval(const Point& x, int order) const = 0;
    virtual GridValues eval_grid(const GridAxes& axes, int order) const = 0;
    virtual int truncation_degree() const { return 0; }

    const KernelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& coefficients() const { return coefficients_; }

protected:
    GridValues allocate(const GridAxes& axes, int order) const {
        GridValues out;
        const std::size_t count = axes.point_count();
        out.value.assign(static_cast<std::size_t>(spec_.m), std::vector<double>(count, 0.0));
        if (order >= 1) {
            out.grad.assign(static_cast<std::size_t>(spec_.m * spec_.n),
                            std::vector<double>(count, 0.0));
        }
        return out;
    }

    KernelSpec spec_;
    std::uint64_t seed_;
    std::vector<double> coefficients_;
};

// ---------------------------------------------------------------------------
// Bargmann-Fock: f(x) = sum_J a_J prod_i phi_{j_i}(x_i), tensor truncation j_i <= D.

class BargmannFockEvaluator final : public ModelEvaluator {
public:
    BargmannFockEvaluator(KernelSpec spec, std::uint64_t seed, std::vector<double> coefficients)
        : ModelEvaluator(std::move(spec), seed, std::move(coefficients)) {
        degree_ = spec_.bf_degree > 0 ? spec_.bf_degree : bargmann_fock_degree(spec_.domain_half_width);
    }

    static std::vector<double> draw(const KernelSpec& spec, std::uint64_t seed) {
        const int degree = spec.bf_degree > 0 ? spec.bf_degree : bargmann_fock_degree(spec.domain_half_width);
        const auto side = static_cast<std::size_t>(degree + 1);
        std::size_t block = 1;
        for (int a = 0; a < spec.n; ++a) block *= side;
        std::vector<double> coef(block * static_cast<std::size_t>(spec.m));
        const double scale = std::sqrt(spec.variance);
        int j[3] = {0, 0, 0};
        for (int c = 0; c < spec.m; ++c) {
            const std::uint64_t tag = model_tag(spec.model, c);
            for (std::size_t idx = 0; idx < block; ++idx) {
                std::size_t rest = idx;
                for (int a = 0; a < spec.n; ++a) {
                    j[a] = static_cast<int>(rest % side);
                    rest /= side;
                }
                coef[c * block + idx] = scale * counter_normal(seed, tag, encode_multi_index(j, spec.n));
            }
        }
        return coef;
    }

    int truncation_degree() const override { return degree_; }

    FieldJet eval(const Point& x, int order) const override {
        check_domain(spec_, x);
        const int n = spec_.n;
        const int m = spec_.m;
        const int side = degree_ + 1;
        std::vector<AxisBasis> basis;
        for (int a = 0; a < n; ++a) basis.push_back(axis_basis(x(a), degree_, order));

        FieldJet jet = empty_jet(n, m, order);
        const std::size_t block = coefficients_.size() / static_cast<std::size_t>(m);
        for (int c = 0; c < m; ++c) {
            const double* data = coefficients_.data() + c * block;
            if (n == 2) {
                const Eigen::Map<const Matrix> A(data, side, side);
                for (int qy = 0; qy <= order; ++qy) {
                    const Eigen::VectorXd u = A * basis[1].d[qy];
                    for (int qx = 0; qx + qy <= order; ++qx) {
                        const int counts[2] = {qx, qy};
                        store_derivative(jet, c, counts, 2, basis[0].d[qx].dot(u));
                    }
                }
            } else {
                const Eigen::Map<const Matrix> A(data, side * side, side);
                for (int qz = 0; qz <= order; ++qz) {
                    const Eigen::VectorXd flat = A * basis[2].d[qz];
                    const Eigen::Map<const Matrix> B(flat.data(), side, side);
                    for (int qy = 0; qy + qz <= order; ++qy) {
                        const Eigen::VectorXd u = B * basis[1].d[qy];
                        for (int qx = 0; qx + qy + qz <= order; ++qx) {
                            const int counts[3] = {qx, qy, qz};
                            store_derivative(jet, c, counts, 3, basis[0].d[qx].dot(u));
                        }
                    }
                }
            }
        }
        return jet;
    }

    GridValues eval_grid(const GridAxes& axes, int order) const override {
        const int n = spec_.n;
        const int side = degree_ + 1;
        for (int a = 0; a < n; ++a) {
            for (const double t : axes.coords[static_cast<std::size_t>(a)]) {
                if (std::abs(t) > spec_.domain_half_width * (1.0 + 1e-12)) {
                    throw DomainError("grid leaves the certified Bargmann-Fock cube");
                }
            }
        }
        order = std::min(order, 1);
        // Phi[a][q] is G_a x (D+1): row i holds the q-th derivative basis at coords[a][i].
        std::vector<std::array<Matrix, 2>> phi(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            const auto& coords = axes.coords[static_cast<std::size_t>(a)];
            for (int q = 0; q <= order; ++q) phi[a][q].resize(static_cast<Eigen::Index>(coords.size()), side);
            for (std::size_t i = 0; i < coords.size(); ++i) {
                const AxisBasis b = axis_basis(coords[i], degree_, order);
                for (int q = 0; q <= order; ++q) phi[a][q].row(static_cast<Eigen::Index>(i)) = b.d[q].transpose();
            }
        }

        GridValues out = allocate(axes, order);
        const std::size_t block = coefficients_.size() / static_cast<std::size_t>(spec_.m);
        auto emit = [&](int c, int deriv_axis, const Matrix& v) {
            auto& dst = deriv_axis < 0 ? out.value[static_cast<std::size_t>(c)]
                                       : out.grad[static_cast<std::size_t>(c * n + deriv_axis)];
            std::memcpy(dst.data(), v.data(), dst.size() * sizeof(double));
        };
        for (int c = 0; c < spec_.m; ++c) {
            const double* data = coefficients_.data() + c * block;
            // Derivative patterns: value, then d/dx_a for each axis.
            for (int pattern = -1; pattern < (order >= 1 ? n : 0); ++pattern) {
                auto q = [&](int axis) { return axis == pattern ? 1 : 0; };
                if (n == 2) {
                    const Eigen::Map<const Matrix> A(data, side, side);
                    const Matrix v = phi[0][q(0)] * A * phi[1][q(1)].transpose();
                    emit(c, pattern, v);
                } else {
                    const Eigen::Map<const Matrix> A(data, side, side * side);
                    const Matrix t = phi[0][q(0)] * A;  // G0 x (D+1)^2, columns j1 + (D+1) j2
                    const auto g0 = t.rows();
                    const auto g1 = phi[1][0].rows();
                    Matrix u(g0 * g1, side);
                    for (int j2 = 0; j2 < side; ++j2) {
                        const Matrix slab = t.middleCols(j2 * side, side) * phi[1][q(1)].transpose();
                        u.col(j2) = Eigen::Map<const Eigen::VectorXd>(slab.data(), g0 * g1);
                    }
                    const Matrix v = u * phi[2][q(2)].transpose();
                    emit(c, pattern, v);
                }
            }
        }
        return out;
    }

private:
    int degree_ = 0;
};

// ---------------------------------------------------------------------------
// Complex arithmetic random wave F = sum_lambda (xi + i eta) exp(2 pi i <lambda, x>).

class TorusEvaluator final : public ModelEvaluator {
public:
    TorusEvaluator(KernelSpec spec, std::uint64_t seed, std::vector<double> coefficients)
        : ModelEvaluator(std::move(spec), seed, std::move(coefficients)),
          lattice_(lattice_sphere(spec_.n, spec_.lattice_norm)) {}

    static std::vector<double> draw(const KernelSpec& spec, std::uint64_t seed) {
        const auto count = lattice_sphere(spec.n, spec.lattice_norm).size();
        std::vector<double> coef(2 * count);
        const std::uint64_t tag = model_tag(spec.model, 0);
        for (std::size_t i = 0; i < 2 * count; ++i) coef[i] = counter_normal(seed, tag, i);
        return coef;
    }

    FieldJet eval(const Point& x, int order) const override {
        check_domain(spec_, x);
        const int n = spec_.n;
        FieldJet jet = empty_jet(n, spec_.m, order);
        const std::size_t count = lattice_.size();
        for (std::size_t l = 0; l < count; ++l) {
            const auto& lambda = lattice_[l];
            double theta = 0.0;
            for (int a = 0; a < n; ++a) theta += lambda[static_cast<std::size_t>(a)] * x(a);
            theta *= 2.0 * kPi;
            const std::complex<double> w =
                std::complex<double>(coefficients_[l], coefficients_[count + l]) * std::polar(1.0, theta);
            add(jet, w, 0, nullptr);
            if (order >= 1) {
                for (int a = 0; a < n; ++a) {
                    const double k = 2.0 * kPi * lambda[static_cast<std::size_t>(a)];
                    add(jet, w * std::complex<double>(0.0, k), 1, &a);
                    if (order >= 2) {
                        for (int b = a; b < n; ++b) {
                            const double k2 = 2.0 * kPi * lambda[static_cast<std::size_t>(b)];
                            const int ab[2] = {a, b};
                            add(jet, -w * k * k2, 2, ab);
                        }
                    }
                }
            }
        }
        return jet;
    }

    GridValues eval_grid(const GridAxes& axes, int order) const override {
        const int n = spec_.n;
        order = std::min(order, 1);
        GridValues out = allocate(axes, order);
        const std::size_t count = lattice_.size();
        // Per axis and lattice point, exp(2 pi i lambda_a t) along the axis.
        std::vector<std::vector<std::complex<double>>> phase(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            const auto& coords = axes.coords[static_cast<std::size_t>(a)];
            auto& table = phase[static_cast<std::size_t>(a)];
            table.resize(coords.size() * count);
            for (std::size_t i = 0; i < coords.size(); ++i) {
                for (std::size_t l = 0; l < count; ++l) {
                    table[i * count + l] =
                        std::polar(1.0, 2.0 * kPi * lattice_[l][static_cast<std::size_t>(a)] * coords[i]);
                }
            }
        }
        std::vector<std::complex<double>> partial(count);
        const std::size_t g0 = axes.size(0);
        const std::size_t outer = axes.point_count() / g0;
        for (std::size_t o = 0; o < outer; ++o) {
            std::size_t rest = o;
            for (std::size_t l = 0; l < count; ++l) partial[l] = {coefficients_[l], coefficients_[count + l]};
            for (int a = 1; a < n; ++a) {
                const std::size_t i = rest % axes.size(a);
                rest /= axes.size(a);
                const auto& table = phase[static_cast<std::size_t>(a)];
                for (std::size_t l = 0; l < count; ++l) partial[l] *= table[i * count + l];
            }
            for (std::size_t i0 = 0; i0 < g0; ++i0) {
                const std::size_t p = o * g0 + i0;
                std::complex<double> sum = 0.0;
                std::complex<double> grad[3] = {0.0, 0.0, 0.0};
                for (std::size_t l = 0; l < count; ++l) {
                    const std::complex<double> w = partial[l] * phase[0][i0 * count + l];
                    sum += w;
                    if (order >= 1) {
                        for (int a = 0; a < n; ++a) {
                            grad[a] += w * std::complex<double>(0.0, 2.0 * kPi * lattice_[l][static_cast<std::size_t>(a)]);
                        }
                    }
                }
                out.value[0][p] = sum.real();
                if (spec_.m == 2) out.value[1][p] = sum.imag();
                if (order >= 1) {
                    for (int a = 0; a < n; ++a) {
                        out.grad[static_cast<std::size_t>(a)][p] = grad[a].real();
                        if (spec_.m == 2) out.grad[static_cast<std::size_t>(n + a)][p] = grad[a].imag();
                    }
                }
            }
        }
        return out;
    }

private:
    void add(FieldJet& jet, std::complex<double> w, int order, const int* idx) const {
        const double parts[2] = {w.real(), w.imag()};
        for (int c = 0; c < spec_.m; ++c) {
            if (order == 0) jet.value(c) += parts[c];
            else if (order == 1) jet.grad(c, idx[0]) += parts[c];
            else {
                auto& h = jet.hess[static_cast<std::size_t>(c)];
                h(idx[0], idx[1]) += parts[c];
                if (idx[0] != idx[1]) h(idx[1], idx[0]) += parts[c];
            }
        }
    }

    std::vector<std::vector<int>> lattice_;
};

// ---------------------------------------------------------------------------
// Random waves sqrt(2 var / N) sum_k cos(<x, xi_k> + phi_k), xi_k from the spectral measure.

class WaveEvaluator final : public ModelEvaluator {
public:
    WaveEvaluator(KernelSpec spec, std::uint64_t seed, std::vector<double> coefficients)
        : ModelEvaluator(std::move(spec), seed, std::move(coefficients)) {
        amplitude_ = std::sqrt(2.0 * spec_.variance / spec_.waves);
    }

    static std::vector<double> draw(const KernelSpec& spec, std::uint64_t seed) {
        const RadialSpectrum spectrum = RadialSpectrum::for_spec(spec);
        const int n = spec.n;
        const auto stride = static_cast<std::size_t>(n + 1);
        std::vector<double> coef(static_cast<std::size_t>(spec.m) * spec.waves * stride);
        for (int c = 0; c < spec.m; ++c) {
            const std::uint64_t tag = model_tag(spec.model, c);
            for (int k = 0; k < spec.waves; ++k) {
                CounterRng rng(seed, tag, static_cast<std::uint64_t>(k));
                double dir[3] = {0.0, 0.0, 0.0};
                double norm = 0.0;
                while (norm < 1e-12) {
                    norm = 0.0;
                    for (int a = 0; a < n; ++a) {
                        dir[a] = rng.normal();
                        norm += dir[a] * dir[a];
                    }
                }
                norm = std::sqrt(norm);
                const double radius = spectrum.is_atom() ? spectrum.nodes().front() : spectrum.quantile(rng.uniform());
                double* slot = coef.data() + (static_cast<std::size_t>(c) * spec.waves + k) * stride;
                for (int a = 0; a < n; ++a) slot[a] = radius * dir[a] / norm;
                slot[n] = 2.0 * kPi * rng.uniform();
            }
        }
        return coef;
    }

    FieldJet eval(const Point& x, int order) const override {
        check_domain(spec_, x);
        const int n = spec_.n;
        FieldJet jet = empty_jet(n, spec_.m, order);
        const auto stride = static_cast<std::size_t>(n + 1);
        for (int c = 0; c < spec_.m; ++c) {
            for (int k = 0; k < spec_.waves; ++k) {
                const double* w = coefficients_.data() + (static_cast<std::size_t>(c) * spec_.waves + k) * stride;
                double theta = w[n];
                for (int a = 0; a < n; ++a) theta += w[a] * x(a);
                const double cs = std::cos(theta);
                jet.value(c) += cs;
                if (order >= 1) {
                    const double sn = std::sin(theta);
                    for (int a = 0; a < n; ++a) {
                        jet.grad(c, a) -= sn * w[a];
                        if (order >= 2) {
                            for (int b = 0; b < n; ++b) jet.hess[static_cast<std::size_t>(c)](a, b) -= cs * w[a] * w[b];
                        }
                    }
                }
            }
            jet.value(c) *= amplitude_;
            if (order >= 1) jet.grad.row(c) *= amplitude_;
            if (order >= 2) jet.hess[static_cast<std::size_t>(c)] *= amplitude_;
        }
        return jet;
    }

    GridValues eval_grid(const GridAxes& axes, int order) const override {
        const int n = spec_.n;
        order = std::min(order, 1);
        GridValues out = allocate(axes, order);
        const auto waves = static_cast<std::size_t>(spec_.waves);
        const auto stride = static_cast<std::size_t>(n + 1);
        const std::size_t g0 = axes.size(0);
        const std::size_t outer = axes.point_count() / g0;

        std::vector<double> ex_re(g0 * waves), ex_im(g0 * waves);
        std::vector<double> p_re(waves), p_im(waves);
        std::vector<double> xi(static_cast<std::size_t>(n) * waves);
        for (int c = 0; c < spec_.m; ++c) {
            const double* base = coefficients_.data() + static_cast<std::size_t>(c) * waves * stride;
            for (std::size_t k = 0; k < waves; ++k) {
                for (int a = 0; a < n; ++a) xi[a * waves + k] = base[k * stride + a];
            }
            const auto& x0 = axes.coords[0];
            for (std::size_t i = 0; i < g0; ++i) {
                for (std::size_t k = 0; k < waves; ++k) {
                    const double t = xi[k] * x0[i];
                    ex_re[i * waves + k] = std::cos(t);
                    ex_im[i * waves + k] = std::sin(t);
                }
            }
            for (std::size_t o = 0; o < outer; ++o) {
                // Phase of the outer coordinates plus the wave phase.
                std::size_t rest = o;
                std::size_t idx[3] = {0, 0, 0};
                for (int a = 1; a < n; ++a) {
                    idx[a] = rest % axes.size(a);
                    rest /= axes.size(a);
                }
                for (std::size_t k = 0; k < waves; ++k) {
                    double theta = base[k * stride + n];
                    for (int a = 1; a < n; ++a) theta += xi[a * waves + k] * axes.coords[static_cast<std::size_t>(a)][idx[a]];
                    p_re[k] = std::cos(theta);
                    p_im[k] = std::sin(theta);
                }
                for (std::size_t i0 = 0; i0 < g0; ++i0) {
                    const double* er = ex_re.data() + i0 * waves;
                    const double* ei = ex_im.data() + i0 * waves;
                    double sum = 0.0;
                    for (std::size_t k = 0; k < waves; ++k) sum += p_re[k] * er[k] - p_im[k] * ei[k];
                    const std::size_t p = o * g0 + i0;
                    out.value[static_cast<std::size_t>(c)][p] = amplitude_ * sum;
                    if (order >= 1) {
                        for (int a = 0; a < n; ++a) {
                            const double* xa = xi.data() + a * waves;
                            double g = 0.0;
                            for (std::size_t k = 0; k < waves; ++k) g -= (p_re[k] * ei[k] + p_im[k] * er[k]) * xa[k];
                            out.grad[static_cast<std::size_t>(c * n + a)][p] = amplitude_ * g;
                        }
                    }
                }
            }
        }
        return out;
    }

private:
    double amplitude_ = 1.0;
};

// ---------------------------------------------------------------------------
// Kostlan: R_d(x) = sum_{|J| = d} sqrt(multinomial(d; J)) a_J x^J, ambient evaluation.

class KostlanEvaluator final : public ModelEvaluator {
public:
    KostlanEvaluator(KernelSpec spec, std::uint64_t seed, std::vector<double> coefficients)
        : ModelEvaluator(std::move(spec), seed, std::move(coefficients)) {
        monomials_ = monomials(spec_.n, spec_.degree);
        for (const auto& j : monomials_) {
            double log_multinomial = std::lgamma(spec_.degree + 1.0);
            for (const int e : j) log_multinomial -= std::lgamma(e + 1.0);
            weights_.push_back(std::exp(0.5 * log_multinomial));
        }
    }

    static std::vector<std::array<int, 3>> monomials(int n, int degree) {
        std::vector<std::array<int, 3>> out;
        if (n == 2) {
            for (int a = degree; a >= 0; --a) out.push_back({a, degree - a, 0});
        } else {
            for (int a = degree; a >= 0; --a) {
                for (int b = degree - a; b >= 0; --b) out.push_back({a, b, degree - a - b});
            }
        }
        return out;
    }

    static std::vector<double> draw(const KernelSpec& spec, std::uint64_t seed) {
        const auto list = monomials(spec.n, spec.degree);
        std::vector<double> coef(list.size() * static_cast<std::size_t>(spec.m));
        for (int c = 0; c < spec.m; ++c) {
            const std::uint64_t tag = model_tag(spec.model, c);
            for (std::size_t i = 0; i < list.size(); ++i) {
                coef[c * list.size() + i] = counter_normal(seed, tag, encode_multi_index(list[i].data(), spec.n));
            }
        }
        return coef;
    }

    FieldJet eval(const Point& x, int order) const override {
        const int n = spec_.n;
        if (x.size() != n) throw DomainError("Kostlan point has the wrong dimension");
        const int d = spec_.degree;
        std::vector<std::vector<double>> pw(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d + 1), 1.0));
        for (int a = 0; a < n; ++a) {
            for (int k = 1; k <= d; ++k) pw[a][k] = pw[a][k - 1] * x(a);
        }
        auto power = [&](int a, int e) { return e < 0 ? 0.0 : pw[a][static_cast<std::size_t>(e)]; };
        FieldJet jet = empty_jet(n, spec_.m, order);
        const std::size_t count = monomials_.size();
        for (int c = 0; c < spec_.m; ++c) {
            for (std::size_t i = 0; i < count; ++i) {
                const auto& j = monomials_[i];
                const double coef = weights_[i] * coefficients_[c * count + i];
                double mono = coef;
                for (int a = 0; a < n; ++a) mono *= power(a, j[a]);
                jet.value(c) += mono;
                if (order >= 1) {
                    for (int a = 0; a < n; ++a) {
                        if (j[a] == 0) continue;
                        double g = coef * j[a];
                        for (int b = 0; b < n; ++b) g *= power(b, j[b] - (b == a ? 1 : 0));
                        jet.grad(c, a) += g;
                    }
                }
                if (order >= 2) {
                    for (int a = 0; a < n; ++a) {
                        for (int b = a; b < n; ++b) {
                            double h = coef;
                            if (a == b) {
                                if (j[a] < 2) continue;
                                h *= j[a] * (j[a] - 1.0);
                            } else {
                                if (j[a] < 1 || j[b] < 1) continue;
                                h *= static_cast<double>(j[a]) * j[b];
                            }
                            for (int q = 0; q < n; ++q) {
                                const int drop = (q == a) + (q == b);
                                h *= power(q, j[q] - drop);
                            }
                            auto& H = jet.hess[static_cast<std::size_t>(c)];
                            H(a, b) += h;
                            if (a != b) H(b, a) += h;
                        }
                    }
                }
            }
        }
        return jet;
    }

    GridValues eval_grid(const GridAxes& axes, int order) const override {
        const int n = spec_.n;
        const std::size_t count = axes.point_count();
        GridValues out = allocate(axes, order);
        for (std::size_t p = 0; p < count; ++p) {
            const FieldJet jet = eval(axes.point(p), std::min(order, 1));
            for (int c = 0; c < spec_.m; ++c) {
                out.value[static_cast<std::size_t>(c)][p] = jet.value(c);
                if (order >= 1) {
                    for (int a = 0; a < n; ++a) out.grad[static_cast<std::size_t>(c * n + a)][p] = jet.grad(c, a);
                }
            }
        }
        return out;
    }

private:
    std::vector<std::array<int, 3>> monomials_;
    std::vector<double> weights_;
};

}  // namespace detail

// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const detail::ModelEvaluator> make_evaluator(const KernelSpec& spec, std::uint64_t seed,
                                                             std::vector<double> coef) {
    switch (spec.model) {
        case Model::BargmannFock:
            return std::make_shared<detail::BargmannFockEvaluator>(spec, seed, std::move(coef));
        case Model::TorusArithmetic:
            return std::make_shared<detail::TorusEvaluator>(spec, seed, std::move(coef));
        case Model::Kostlan:
            return std::make_shared<detail::KostlanEvaluator>(spec, seed, std::move(coef));
        default:
            return std::make_shared<detail::WaveEvaluator>(spec, seed, std::move(coef));
    }
}

}  // namespace

FieldRealization::FieldRealization(std::shared_ptr<const detail::ModelEvaluator> impl)
    : impl_(std::move(impl)) {}

const KernelSpec& FieldRealization::spec() const { return impl_->spec(); }
std::uint64_t FieldRealization::seed() const { return impl_->seed(); }
const std::vector<double>& FieldRealization::coefficients() const { return impl_->coefficients(); }
int FieldRealization::dim() const { return impl_->spec().n; }
int FieldRealization::codim() const { return impl_->spec().m; }
int FieldRealization::truncation_degree() const { return impl_->truncation_degree(); }

FieldJet FieldRealization::eval(const Point& x, int order) const {
    if (order < 0 || order > 2) throw ConfigError("eval order must be 0, 1 or 2");
    return impl_->eval(x, order);
}

GridValues FieldRealization::eval_grid(const GridAxes& axes, int order) const {
    if (axes.dim() != dim()) throw DomainError("grid dimension does not match the field");
    return impl_->eval_grid(axes, order);
}

std::size_t coefficient_count(const KernelSpec& spec) {
    switch (spec.model) {
        case Model::BargmannFock: {
            const int degree = spec.bf_degree > 0 ? spec.bf_degree : bargmann_fock_degree(spec.domain_half_width);
            std::size_t block = 1;
            for (int a = 0; a < spec.n; ++a) block *= static_cast<std::size_t>(degree + 1);
            return block * static_cast<std::size_t>(spec.m);
        }
        case Model::TorusArithmetic:
            return 2 * lattice_sphere(spec.n, spec.lattice_norm).size();
        case Model::Kostlan:
            return detail::KostlanEvaluator::monomials(spec.n, spec.degree).size() * static_cast<std::size_t>(spec.m);
        default:
            return static_cast<std::size_t>(spec.m) * spec.waves * static_cast<std::size_t>(spec.n + 1);
    }
}

FieldRealization FieldRealization::from_coefficients(const KernelSpec& spec, std::uint64_t seed,
                                                     std::vector<double> coefficients) {
    spec.validate();
    if (coefficients.size() != coefficient_count(spec)) {
        throw ConfigError("coefficient vector has " + std::to_string(coefficients.size()) +
                          " entries, spec needs " + std::to_string(coefficient_count(spec)));
    }
    return FieldRealization(make_evaluator(spec, seed, std::move(coefficients)));
}

FieldRealization sample_field(const KernelSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<double> coef;
    switch (spec.model) {
        case Model::BargmannFock: coef = detail::BargmannFockEvaluator::draw(spec, seed); break;
        case Model::TorusArithmetic: coef = detail::TorusEvaluator::draw(spec, seed); break;
        case Model::Kostlan: coef = detail::KostlanEvaluator::draw(spec, seed); break;
        default: coef = detail::WaveEvaluator::draw(spec, seed); break;
    }
    return FieldRealization(make_evaluator(spec, seed, std::move(coef)));
}

// ---------------------------------------------------------------------------

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("truncated coefficient file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

}  // namespace

void write_coefficients(const std::string& path, const FieldRealization& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    put_u64(out, field.spec().hash());
    put_u64(out, field.seed());
    put_u64(out, field.coefficients().size());
    for (const double c : field.coefficients()) put_u64(out, std::bit_cast<std::uint64_t>(c));
}

FieldRealization read_coefficients(const std::string& path, const KernelSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    const std::uint64_t hash = get_u64(in);
    if (hash != spec.hash()) throw ConfigError("coefficient file " + path + " was written for another spec");
    const std::uint64_t seed = get_u64(in);
    const std::uint64_t count = get_u64(in);
    std::vector<double> coef(count);
    for (auto& c : coef) c = std::bit_cast<double>(get_u64(in));
    return FieldRealization::from_coefficients(spec, seed, std::move(coef));
}

}  // namespace nodal
