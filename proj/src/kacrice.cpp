#include "nodal/kacrice.hpp"

#include "nodal/covariance.hpp"
#include "nodal/extraction.hpp"
#include "nodal/geometry.hpp"
#include "nodal/realization.hpp"
#include "nodal/special.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kTagKacRice = 0x4b52000000000000ULL;
constexpr std::uint64_t kTagSphere = 0x5350000000000000ULL;

struct RunningStats {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double half_width() const { return n > 1 ? 1.96 * std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

void require_stationary(const KernelSpec& spec, const char* op) {
    if (!spec.stationary()) throw ConfigError(std::string(op) + " needs a stationary model");
}

Point origin(const KernelSpec& spec) { return Point::Zero(spec.n); }

double gaussian_density_at_zero(const Matrix& cov) {
    const double det = cov.determinant();
    if (!(det > 0.0)) throw DegenerateError("covariance of F is singular");
    return std::pow(2.0 * kPi, -0.5 * static_cast<double>(cov.rows())) / std::sqrt(det);
}

}  // namespace

// ---------------------------------------------------------------------------

JointGaussianModel JointGaussianModel::build(const KernelSpec& spec, std::vector<Point> points,
                                             std::vector<GaussianVariable> variables) {
    spec.validate();
    JointGaussianModel model;
    model.spec = spec;
    model.points = std::move(points);
    model.variables = std::move(variables);
    const ScalarKernel kernel(spec);
    const auto N = static_cast<Eigen::Index>(model.variables.size());
    model.cov = Matrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& u = model.variables[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i; j < N; ++j) {
            const auto& v = model.variables[static_cast<std::size_t>(j)];
            if (u.component != v.component) continue;
            const double c = kernel.derivative(model.points[static_cast<std::size_t>(u.point)],
                                               model.points[static_cast<std::size_t>(v.point)], u.derivative, v.derivative);
            model.cov(i, j) = c;
            model.cov(j, i) = c;
        }
    }
    return model;
}

JointGaussianModel JointGaussianModel::one_point(const KernelSpec& spec, const Point& x, bool with_hessian) {
    const int n = spec.n;
    const int m = spec.m;
    std::vector<GaussianVariable> vars;
    for (int a = 0; a < m; ++a) vars.push_back({a, 0, {}});
    for (int a = 0; a < m; ++a) {
        for (int i = 0; i < n; ++i) vars.push_back({a, 0, {i}});
    }
    if (with_hessian) {
        for (int a = 0; a < m; ++a) {
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) vars.push_back({a, 0, {i, j}});
            }
        }
    }
    return build(spec, {x}, std::move(vars));
}

JointGaussianModel JointGaussianModel::two_point_scalar(const KernelSpec& spec, const Point& x, const Point& y) {
    std::vector<GaussianVariable> vars = {{0, 0, {}}, {0, 1, {}}};
    for (int p = 0; p < 2; ++p) {
        for (int i = 0; i < spec.n; ++i) vars.push_back({0, p, {i}});
    }
    return build(spec, {x, y}, std::move(vars));
}

Eigen::VectorXd ConditionedGaussian::sample(CounterRng& rng) const {
    Eigen::VectorXd z(sqrt_cov.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return sqrt_cov * z;
}

ConditionedGaussian condition_on_zero(const JointGaussianModel& model, int conditioned) {
    const auto N = model.cov.rows();
    const auto c = static_cast<Eigen::Index>(conditioned);
    if (c <= 0 || c > N) throw ConfigError("conditioning block out of range");
    const Matrix Scc = model.cov.topLeftCorner(c, c);
    const Matrix Src = model.cov.bottomLeftCorner(N - c, c);
    const Matrix Srr = model.cov.bottomRightCorner(N - c, N - c);
    const Eigen::LDLT<Matrix> ldlt(Scc);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
        throw DegenerateError("covariance of the conditioning block is singular");
    }
    ConditionedGaussian out;
    out.regression = ldlt.solve(Src.transpose()).transpose();
    out.cov = Srr - out.regression * Src.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    if (out.cov.rows() == 0) {
        out.sqrt_cov = out.cov;
        return out;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(out.cov);
    Eigen::VectorXd values = eig.eigenvalues();
    const double scale = std::max(1.0, values.maxCoeff());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < 0.0) {
            if (values(i) < -1e-12 * scale) throw DegenerateError("conditioned covariance is not positive semidefinite");
            values(i) = 0.0;
        }
    }
    out.sqrt_cov = eig.eigenvectors() * values.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    return out;
}

std::string method_name(EstimateMethod method) {
    switch (method) {
        case EstimateMethod::ClosedForm: return "closed_form";
        case EstimateMethod::Quadrature: return "quadrature";
        case EstimateMethod::MonteCarlo: return "monte_carlo";
    }
    return "monte_carlo";
}

std::string to_json(const MomentEstimate& e) {
    nlohmann::json j;
    j["operation"] = e.operation;
    j["spec_hash"] = hex64(e.spec_hash);
    j["parameters"] = e.parameters;
    j["value"] = e.value;
    j["half_width"] = e.half_width;
    j["samples"] = e.samples;
    j["method"] = method_name(e.method);
    if (!e.rungs.empty()) j["rungs"] = e.rungs;
    return j.dump();
}

// ---------------------------------------------------------------------------

MomentEstimate first_moment_density(const KernelSpec& spec, KacRiceWeight weight, std::size_t samples,
                                    std::uint64_t seed) {
    require_stationary(spec, "first_moment_density");
    if (samples < 1000) throw ConfigError("first_moment_density needs at least 1000 samples");
    const int n = spec.n;
    const int m = spec.m;
    const bool willmore = weight == KacRiceWeight::Willmore;
    const JointGaussianModel model = JointGaussianModel::one_point(spec, origin(spec), willmore);
    const double density = gaussian_density_at_zero(model.cov.topLeftCorner(m, m));
    const ConditionedGaussian cond = condition_on_zero(model, m);

    const auto& levels = cutoff_levels();
    std::vector<RunningStats> rungs(willmore ? levels.size() : 1);
    CounterRng rng(seed, kTagKacRice | static_cast<std::uint64_t>(willmore), spec.hash());
    Matrix grad(m, n);
    std::vector<Matrix> hess(static_cast<std::size_t>(m), Matrix(n, n));
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::VectorXd w = cond.sample(rng);
        for (int a = 0; a < m; ++a) {
            for (int i = 0; i < n; ++i) grad(a, i) = w(a * n + i);
        }
        const double sqrt_det = std::sqrt(std::max((grad * grad.transpose()).determinant(), 0.0));
        if (!willmore) {
            rungs[0].add(density * sqrt_det);
            continue;
        }
        Eigen::Index k = m * n;
        for (int a = 0; a < m; ++a) {
            auto& H = hess[static_cast<std::size_t>(a)];
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    H(i, j) = H(j, i) = w(k++);
                }
            }
        }
        const PointFrame frame = point_frame(grad);
        const CurvatureSummary summary = mean_curvature(frame, hess);
        const double base = density * willmore_integrand(summary, n, m) * sqrt_det;
        const double norm = w.norm();
        for (std::size_t q = 0; q < levels.size(); ++q) {
            const double Q = levels[q];
            const double cut = std::clamp(Q * frame.lambda_min - 1.0, 0.0, 1.0) * std::clamp(Q - norm, 0.0, 1.0);
            rungs[q].add(cut > 0.0 ? base * cut : 0.0);
        }
    }
    MomentEstimate e;
    e.operation = willmore ? "first_moment_density_willmore" : "first_moment_density_volume";
    e.spec_hash = spec.hash();
    e.parameters = {{"n", n}, {"m", m}, {"seed", static_cast<double>(seed)}};
    e.value = rungs.back().mean;
    e.half_width = rungs.back().half_width();
    e.samples = samples;
    e.method = EstimateMethod::MonteCarlo;
    if (willmore) {
        for (const auto& r : rungs) e.rungs.push_back(r.mean);
    }
    return e;
}

// ---------------------------------------------------------------------------

namespace {

// Directions on S^{n-1} with weights summing to |S^{n-1}|.
void sphere_rule(int n, int nodes, std::vector<Point>& dirs, std::vector<double>& weights) {
    dirs.clear();
    weights.clear();
    if (n == 2) {
        const GaussRule g = composite_gauss(0.0, 2.0 * kPi, 4 * nodes / 8 + 1, 8);
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            Point d(2);
            d << std::cos(g.nodes[k]), std::sin(g.nodes[k]);
            dirs.push_back(d);
            weights.push_back(g.weights[k]);
        }
        return;
    }
    const GaussRule gt = composite_gauss(0.0, kPi, nodes / 8 + 1, 8);
    const GaussRule gp = composite_gauss(0.0, 2.0 * kPi, 2 * nodes / 8 + 1, 8);
    for (std::size_t a = 0; a < gt.nodes.size(); ++a) {
        for (std::size_t b = 0; b < gp.nodes.size(); ++b) {
            const double t = gt.nodes[a], p = gp.nodes[b];
            Point d(3);
            d << std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t);
            dirs.push_back(d);
            weights.push_back(gt.weights[a] * gp.weights[b] * std::sin(t));
        }
    }
}

double box_weight(const Point& z, double R) {
    double w = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) w *= std::max(0.0, 2.0 * R - std::abs(z(i)));
    return w;
}

}  // namespace

MomentEstimate second_moment_volume(const KernelSpec& spec, double R, const QuadratureSpec& quad) {
    require_stationary(spec, "second_moment_volume");
    const int n = spec.n;
    const int m = spec.m;
    const double r_max = 2.0 * R * std::sqrt(static_cast<double>(n));
    const GaussRule radial = composite_gauss(quad.h_diag, r_max, quad.radial_panels, quad.radial_order);

    std::vector<Point> dirs;
    std::vector<double> dir_weights;
    sphere_rule(n, quad.angular_nodes, dirs, dir_weights);

    // Lags: isotropic models need one direction per radius.
    struct Lag {
        Point z;
        double weight;  // quadrature weight * r^{n-1} * box weight (angular sum folded in)
    };
    std::vector<Lag> lags;
    for (std::size_t k = 0; k < radial.nodes.size(); ++k) {
        const double r = radial.nodes[k];
        const double rw = radial.weights[k] * std::pow(r, n - 1);
        if (spec.isotropic()) {
            double angular = 0.0;
            for (std::size_t d = 0; d < dirs.size(); ++d) angular += dir_weights[d] * box_weight(r * dirs[d], R);
            if (angular > 0.0) lags.push_back({r * Point::Unit(n, 0), rw * angular});
        } else {
            for (std::size_t d = 0; d < dirs.size(); ++d) {
                const double bw = box_weight(r * dirs[d], R);
                if (bw > 0.0) lags.push_back({r * dirs[d], rw * dir_weights[d] * bw});
            }
        }
    }

    // Per lag: density of (f(x), f(y)) at 0 and the conditioned gradient law.
    const Point x0 = origin(spec);
    std::vector<double> density(lags.size());
    std::vector<ConditionedGaussian> cond(lags.size());
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const JointGaussianModel model = JointGaussianModel::two_point_scalar(spec, x0, x0 + lags[k].z);
        const Matrix lambda = model.cov.topLeftCorner(2, 2);
        if (!(lambda.determinant() > 1e-14 * lambda.squaredNorm())) {
            throw DegenerateError("two-point covariance is singular at lag |z| = " + format_double(lags[k].z.norm()));
        }
        density[k] = std::pow(gaussian_density_at_zero(lambda), m);
        cond[k] = condition_on_zero(model, 2);
    }

    // Common random numbers: sample s uses the same normals at every lag, so
    // each s yields one estimate of the whole integral.
    const auto dim = static_cast<Eigen::Index>(2 * n);
    RunningStats stats;
    CounterRng rng(quad.seed, kTagKacRice | 0x10, spec.hash());
    std::vector<Eigen::VectorXd> normals(static_cast<std::size_t>(m), Eigen::VectorXd(dim));
    Matrix gx(m, n), gy(m, n);
    double near_diag_rho = 0.0;
    for (std::size_t s = 0; s < quad.mc_samples; ++s) {
        for (auto& z : normals) {
            for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
        }
        double integral = 0.0;
        for (std::size_t k = 0; k < lags.size(); ++k) {
            for (int a = 0; a < m; ++a) {
                const Eigen::VectorXd g = cond[k].sqrt_cov * normals[static_cast<std::size_t>(a)];
                gx.row(a) = g.head(n).transpose();
                gy.row(a) = g.tail(n).transpose();
            }
            const double jx = std::sqrt(std::max((gx * gx.transpose()).determinant(), 0.0));
            const double jy = std::sqrt(std::max((gy * gy.transpose()).determinant(), 0.0));
            integral += lags[k].weight * density[k] * jx * jy;
            if (k == 0) near_diag_rho += density[k] * jx * jy;
        }
        stats.add(integral);
    }
    near_diag_rho /= static_cast<double>(quad.mc_samples);

    // |z| < h_diag: rho_2(z) <= c |z|^{-m} with c = rho_2(r_0) r_0^m at the first node.
    const double r0 = lags.empty() ? quad.h_diag : lags.front().z.norm();
    const double c = near_diag_rho * std::pow(r0, m);
    const double majorant = c * sphere_volume(n - 1) * std::pow(quad.h_diag, n - m) / (n - m) * std::pow(2.0 * R, n);

    MomentEstimate e;
    e.operation = "second_moment_volume";
    e.spec_hash = spec.hash();
    e.parameters = {{"R", R}, {"h_diag", quad.h_diag}, {"near_diagonal", majorant}};
    e.value = stats.mean + majorant;
    e.half_width = stats.half_width() + 0.5 * majorant;
    e.samples = quad.mc_samples;
    e.method = EstimateMethod::Quadrature;
    return e;
}

// ---------------------------------------------------------------------------

MomentEstimate sphere_det_integral(int n, int m, double alpha, std::size_t samples, std::uint64_t seed) {
    if (!(n > m && m >= 1)) throw ConfigError("sphere_det_integral needs n > m >= 1");
    const double surface = std::pow(sphere_volume(n - 1), m);
    RunningStats stats;
    CounterRng rng(seed, kTagSphere, static_cast<std::uint64_t>(n * 16 + m));
    Matrix W(m, n);
    for (std::size_t s = 0; s < samples; ++s) {
        for (int a = 0; a < m; ++a) {
            for (int i = 0; i < n; ++i) W(a, i) = rng.normal();
            W.row(a).normalize();
        }
        const double det = m == 1 ? 1.0 : std::abs((W * W.transpose()).determinant());
        stats.add(alpha == 0.0 ? 1.0 : std::pow(det, alpha));
    }
    MomentEstimate e;
    e.operation = "sphere_det_integral";
    e.parameters = {{"n", n}, {"m", m}, {"alpha", alpha}, {"seed", static_cast<double>(seed)}};
    e.value = surface * stats.mean;
    e.half_width = surface * stats.half_width();
    e.samples = samples;
    e.method = EstimateMethod::MonteCarlo;
    return e;
}

double sphere_det_integral_exact_3_2(double alpha) {
    // det = 1 - u^2 with u = w_1 . w_2 uniform on [-1, 1].
    return std::pow(4.0 * kPi, 2) * 0.5 * std::sqrt(kPi) * std::tgamma(alpha + 1.0) / std::tgamma(alpha + 1.5);
}

// ---------------------------------------------------------------------------

SchurCheck two_point_schur_check(const KernelSpec& spec, const Point& x, const Point& y) {
    const Matrix Kxx = covariance(spec, x, x).K;
    const Matrix Kxy = covariance(spec, x, y).K;
    const Matrix Kyy = covariance(spec, y, y).K;
    const Eigen::LDLT<Matrix> ldlt(Kxx);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) throw DegenerateError("Cov(F(x)) is singular");
    Matrix schur = Kyy - Kxy.transpose() * ldlt.solve(Kxy);
    schur = 0.5 * (schur + schur.transpose());
    const JointGaussianModel jet = JointGaussianModel::one_point(spec, x, false);
    SchurCheck out;
    out.eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix>(schur, Eigen::EigenvaluesOnly).eigenvalues()(0);
    out.k1 = Eigen::SelfAdjointEigenSolver<Matrix>(jet.cov, Eigen::EigenvaluesOnly).eigenvalues()(0);
    out.bound = 0.5 * out.k1 * (x - y).squaredNorm();
    out.pass = out.eigenvalue >= out.bound - 1e-12 * std::max(1.0, Kxx.norm());
    return out;
}

std::vector<DecayPoint> ergodicity_decay(const KernelSpec& spec, const std::vector<double>& radii) {
    if (!spec.isotropic()) throw ConfigError("ergodicity_decay needs an isotropic model");
    const ScalarKernel kernel(spec);
    const int n = spec.n;
    std::vector<DecayPoint> out;
    for (const double R : radii) {
        if (!(R > 0.0)) throw ConfigError("radii must be positive");
        const GaussRule g = composite_gauss(0.0, R, std::max(16, static_cast<int>(std::ceil(8.0 * R))), 8);
        double integral = 0.0;
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            const double r = g.nodes[k];
            const double kv = kernel.value(r * Point::Unit(n, 0), Point::Zero(n));
            integral += g.weights[k] * std::pow(r, n - 1) * kv * kv;
        }
        out.push_back({R, spec.m * n / std::pow(R, n) * integral});
    }
    return out;
}

double log_log_slope(const std::vector<DecayPoint>& points) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double N = static_cast<double>(points.size());
    for (const auto& p : points) {
        const double x = std::log(p.R), y = std::log(p.value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

BulinskayaResult bulinskaya_probe(const KernelSpec& spec, double R, const std::vector<double>& tau,
                                  std::uint64_t first_seed, std::size_t seeds, double h) {
    for (const double t : tau) {
        if (!(t >= 0.0)) throw ConfigError("tau must be non-negative");
    }
    GridSpec grid;
    grid.R = R;
    grid.h = h;
    grid.padding = 0.0;
    const GridAxes axes = grid.axes(spec.n);
    const int n = spec.n, m = spec.m;
    BulinskayaResult out;
    out.tau = tau;
    out.probability.assign(tau.size(), 0.0);
    for (std::size_t s = 0; s < seeds; ++s) {
        const auto field = sample_field(spec, first_seed + s);
        const GridValues v = field.eval_grid(axes, 1);
        double best = std::numeric_limits<double>::infinity();
        Matrix G(m, n);
        for (std::size_t p = 0; p < axes.point_count(); ++p) {
            double f2 = 0.0;
            for (int a = 0; a < m; ++a) {
                f2 += v.value[static_cast<std::size_t>(a)][p] * v.value[static_cast<std::size_t>(a)][p];
                for (int i = 0; i < n; ++i) G(a, i) = v.grad[static_cast<std::size_t>(a * n + i)][p];
            }
            const double fn = std::sqrt(f2);
            if (fn >= best) continue;
            const Matrix A = G * G.transpose();
            const double lam = std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(A, Eigen::EigenvaluesOnly).eigenvalues()(0)));
            best = std::min(best, std::max(fn, lam));
        }
        out.grid_minimum.push_back(best);
        for (std::size_t t = 0; t < tau.size(); ++t) out.probability[t] += best < tau[t];
    }
    for (auto& p : out.probability) p /= static_cast<double>(seeds);
    return out;
}

double measure_k2(const KernelSpec& spec, double r_max, int samples) {
    require_stationary(spec, "measure_k2");
    const int n = spec.n, m = spec.m;
    Point dir = Point::Unit(n, 0);
    if (!spec.isotropic()) {
        // A fixed generic direction for the anisotropic torus kernel.
        dir = Point::LinSpaced(n, 1.0, static_cast<double>(n)).cwiseSqrt().normalized();
    }
    const ScalarKernel kernel(spec);
    const Point x = origin(spec);
    const double k0 = kernel.value(x, x);
    double best = 0.0;
    for (int k = 1; k <= samples; ++k) {
        const double r = r_max * k / samples;
        const double kr = kernel.value(x, x + r * dir);
        const double det = k0 * k0 - kr * kr;
        if (!(det > 0.0)) continue;
        const double p = std::pow(2.0 * kPi * std::sqrt(det), -m);
        best = std::max(best, p * std::min(std::pow(r, m), 1.0));
    }
    return best;
}

}  // namespace nodal
