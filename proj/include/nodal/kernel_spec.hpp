#pragma once

#include "nodal/config.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nodal {

enum class Model { BargmannFock, BlackBody, BerryMono, TorusArithmetic, Kostlan, CustomSpectral };

std::string model_name(Model model);
Model parse_model(const std::string& name);

// Declarative description of an ensemble.
//
// Domains: TorusArithmetic lives on the flat torus [0,1)^n; Kostlan on the
// unit sphere S^{n-1} inside R^n (points are unit n-vectors); every other
// model on R^n, with the Bargmann-Fock truncation certified on the cube
// [-domain_half_width, domain_half_width]^n.
struct KernelSpec {
    Model model = Model::BargmannFock;
    int n = 2;
    int m = 1;

    // params.variance: k(0) for the Euclidean radial models.
    double variance = 1.0;
    // params.lattice_norm: the integer L^2 of the lattice sphere |lambda|^2 = L^2.
    int lattice_norm = 1;
    // params.degree: Kostlan degree d.
    int degree = 1;
    // params.table: tabulated radial spectral density, pairs (radius, density).
    std::vector<std::pair<double, double>> spectral_table;

    // truncation.degree: per-axis Bargmann-Fock degree, 0 selects it from the domain.
    int bf_degree = 0;
    // truncation.waves: wave count of the random-wave models.
    int waves = 4096;
    // truncation.radius: half width of the certified Bargmann-Fock cube.
    double domain_half_width = 10.0;

    // Throws ConfigError when the invariants fail.
    void validate() const;

    bool stationary() const { return model != Model::Kostlan; }
    bool isotropic() const { return stationary() && model != Model::TorusArithmetic; }
    bool euclidean() const { return isotropic(); }
    bool radial_spectral() const {
        return model == Model::BerryMono || model == Model::BlackBody ||
               model == Model::CustomSpectral;
    }

    KeyValueConfig to_config() const;
    static KernelSpec from_config(const KeyValueConfig& config);

    // Hash of the canonical serialization.
    std::uint64_t hash() const;
};

// Smallest per-axis degree D with Poisson(t^2) tail beyond D below `tail`,
// i.e. the neglected part of exp(t*t) = sum_j t^{2j}/j! relative to the whole.
int bargmann_fock_degree(double half_width, double tail = 1e-8);

// Complete, duplicate-free list of integer vectors with squared norm `norm`,
// in lexicographic order.
std::vector<std::vector<int>> lattice_sphere(int n, int norm);

}  // namespace nodal
