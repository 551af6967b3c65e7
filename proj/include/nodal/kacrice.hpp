#pragma once

#include "nodal/kernel_spec.hpp"
#include "nodal/rng.hpp"
#include "nodal/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nodal {

// One coordinate of a jointly Gaussian vector: d^derivative f_component(points[point]).
struct GaussianVariable {
    int component = 0;
    int point = 0;
    std::vector<int> derivative;
};

// Centered Gaussian vector assembled from analytic kernel derivatives.
struct JointGaussianModel {
    KernelSpec spec;
    std::vector<Point> points;
    std::vector<GaussianVariable> variables;
    Matrix cov;

    static JointGaussianModel build(const KernelSpec& spec, std::vector<Point> points,
                                    std::vector<GaussianVariable> variables);

    // (F, grad F, hess F) at x. Layout: f_a at a; d_i f_a at m + a n + i;
    // d_ij f_a (i <= j) after that, per component in row-major upper-triangle order.
    static JointGaussianModel one_point(const KernelSpec& spec, const Point& x, bool with_hessian = true);

    // (F(x), F(y), grad F(x), grad F(y)) for the scalar kernel (one component).
    static JointGaussianModel two_point_scalar(const KernelSpec& spec, const Point& x, const Point& y);
};

// Law of the remaining coordinates given that the first `conditioned` are zero:
// mean zero, covariance cov = S_rr - regression * S_cr.
struct ConditionedGaussian {
    Matrix regression;  // S_rc S_cc^{-1}
    Matrix cov;
    Matrix sqrt_cov;    // symmetric square root

    Eigen::VectorXd sample(CounterRng& rng) const;
};

// Eigenvalues of the conditioned covariance in (-1e-12 * scale, 0) are clamped
// to zero, scale = max(1, largest eigenvalue); anything more negative throws.
ConditionedGaussian condition_on_zero(const JointGaussianModel& model, int conditioned);

enum class EstimateMethod { ClosedForm, Quadrature, MonteCarlo };
std::string method_name(EstimateMethod method);

struct MomentEstimate {
    std::string operation;
    std::uint64_t spec_hash = 0;
    std::map<std::string, double> parameters;
    double value = 0.0;
    double half_width = 0.0;  // 95% confidence
    std::size_t samples = 0;
    EstimateMethod method = EstimateMethod::MonteCarlo;
    std::vector<double> rungs;  // willmore weight: one value per cut-off level
};

// JSON record {operation, spec_hash, parameters, value, half_width, samples, method[, rungs]}.
std::string to_json(const MomentEstimate& estimate);

enum class KacRiceWeight { Volume, Willmore };

inline const std::vector<double>& cutoff_levels() {
    static const std::vector<double> levels = {1e1, 1e2, 1e3, 1e4};
    return levels;
}

// Expected (n-m)-volume of Z(F) per unit volume (volume weight), or the
// density of the integral of |H/(n-m)|^{n-m} over Z(F) (willmore weight,
// value = last cut-off rung). Monte Carlo over the conditioned jet law.
MomentEstimate first_moment_density(const KernelSpec& spec, KacRiceWeight weight, std::size_t samples,
                                    std::uint64_t seed = 1);

struct QuadratureSpec {
    int radial_panels = 24;
    int radial_order = 4;
    int angular_nodes = 24;
    std::size_t mc_samples = 20000;
    double h_diag = 1e-2;
    std::uint64_t seed = 1;
};

// E[vol(Z(F) cap C_R)^2] by quadrature over the lag z = x - y with weight
// prod_i (2R - |z_i|), the two-point Kac-Rice density by Monte Carlo at each
// node, and the lags below h_diag bounded by the |z|^{-m} majorant.
MomentEstimate second_moment_volume(const KernelSpec& spec, double R, const QuadratureSpec& quad = {});

// |S^{n-1}|^m times the mean of |det Gram(w_1..w_m)|^alpha over i.i.d. uniform w_i.
MomentEstimate sphere_det_integral(int n, int m, double alpha, std::size_t samples, std::uint64_t seed = 1);

// Exact value for n = 3, m = 2 (finite for alpha > -1).
double sphere_det_integral_exact_3_2(double alpha);

struct SchurCheck {
    double eigenvalue = 0.0;
    double bound = 0.0;
    double k1 = 0.0;
    bool pass = false;
};

// Smallest eigenvalue of Cov(F(y)) - Cov(F(y),F(x)) Cov(F(x))^{-1} Cov(F(x),F(y))
// against (k1/2)|x - y|^2, k1 the smallest eigenvalue of Cov(F(x), grad F(x)).
SchurCheck two_point_schur_check(const KernelSpec& spec, const Point& x, const Point& y);

struct DecayPoint {
    double R = 0.0;
    double value = 0.0;
};

// (1/|B_R|) integral over B_R of sum_{ab} k_ab(z)^2 = m n / R^n int_0^R r^{n-1} k(r)^2 dr.
// Isotropic models only.
std::vector<DecayPoint> ergodicity_decay(const KernelSpec& spec, const std::vector<double>& radii);

// Least-squares slope of log value against log R.
double log_log_slope(const std::vector<DecayPoint>& points);

struct BulinskayaResult {
    std::vector<double> tau;
    std::vector<double> probability;
    std::vector<double> grid_minimum;  // per seed
};

// Frequency over seeds of min over the grid on the closed cube of max(|F|, lambda_min(grad F)) < tau.
BulinskayaResult bulinskaya_probe(const KernelSpec& spec, double R, const std::vector<double>& tau,
                                  std::uint64_t first_seed, std::size_t seeds, double h);

// max over lags of p_{(F(x),F(y))}(0,0) min(|x-y|^m, 1), on a radial sample of the lag.
double measure_k2(const KernelSpec& spec, double r_max, int samples);

}  // namespace nodal
