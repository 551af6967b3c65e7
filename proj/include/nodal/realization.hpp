#pragma once

#include "nodal/field.hpp"
#include "nodal/kernel_spec.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nodal {

namespace detail {
class ModelEvaluator;
}

// One sampled field. Immutable; copies share the coefficient storage, and
// concurrent evaluation from several threads is safe.
//
// Coefficient layout (what the sidecar file stores):
//   BargmannFock      per component, a_J over the (D+1)^n tensor grid, j_0 fastest
//   TorusArithmetic   xi_lambda for every lattice point, then eta_lambda
//   random waves      per component and wave: (xi_1, ..., xi_n, phase)
//   Kostlan           per component, a_J over |J| = d in lexicographic order
class FieldRealization final : public Field {
public:
    const KernelSpec& spec() const;
    std::uint64_t seed() const;
    const std::vector<double>& coefficients() const;

    int dim() const override;
    int codim() const override;
    FieldJet eval(const Point& x, int order) const override;
    GridValues eval_grid(const GridAxes& axes, int order) const override;

    // Per-axis Bargmann-Fock degree D (0 for other models).
    int truncation_degree() const;

    // Rebuilds a realization from stored coefficients (exact replay).
    static FieldRealization from_coefficients(const KernelSpec& spec, std::uint64_t seed,
                                              std::vector<double> coefficients);

private:
    explicit FieldRealization(std::shared_ptr<const detail::ModelEvaluator> impl);
    std::shared_ptr<const detail::ModelEvaluator> impl_;

    friend FieldRealization sample_field(const KernelSpec& spec, std::uint64_t seed);
};

// Deterministic in (spec, seed). Coefficient j of the stream is a function of
// (seed, model, component, j) only.
FieldRealization sample_field(const KernelSpec& spec, std::uint64_t seed);

// Number of coefficients sample_field draws for `spec`.
std::size_t coefficient_count(const KernelSpec& spec);

// Binary sidecar: little-endian u64 spec hash, u64 seed, u64 count, then
// `count` little-endian IEEE-754 doubles.
void write_coefficients(const std::string& path, const FieldRealization& field);
FieldRealization read_coefficients(const std::string& path, const KernelSpec& spec);

}  // namespace nodal
