#pragma once

#include "nodal/extraction.hpp"

#include <string>
#include <vector>

namespace nodal {

// Labels: "unknot", the prime knots 3_1 ... 7_7, "composite", "unknown",
// and "not_applicable" for anything that is not a closed curve in R^3.
struct KnotInvariants {
    int crossings = 0;                   // crossings of the diagram that was used
    long long determinant = 0;           // |Delta(-1)|
    std::vector<long long> alexander;    // symmetric form, positive leading coefficient
};

struct KnotResult {
    std::string label = "not_applicable";
    KnotInvariants invariants;
    int simplified_vertices = 0;
    int attempts = 0;     // projection directions tried
    bool fault = false;   // no generic projection found, or an inconsistent polynomial
};

struct KnotTableEntry {
    const char* label;
    int crossing_number;
    std::vector<long long> alexander;
};

const std::vector<KnotTableEntry>& knot_table();

// Removes vertices whose triangle with its neighbours meets no other segment.
// Input and output are open vertex lists of a closed polygon (no repeated endpoint).
std::vector<Eigen::Vector3d> simplify_polygon(std::vector<Eigen::Vector3d> polygon);

// Alexander polynomial of a diagram given as a signed Gauss code: for each
// passage along the curve, (crossing id, over?). Crossing signs are indexed by id.
std::vector<long long> alexander_from_gauss(const std::vector<std::pair<int, bool>>& gauss,
                                            const std::vector<int>& signs);

// Full pipeline on a closed polyline in R^3. Simplification can be switched
// off to check that it leaves the invariants alone.
KnotResult knot_classify(const ComponentGeometry& curve, bool simplify = true);

// Lookup of a normalized polynomial; "unknown" when nothing fits within `crossings`.
std::string knot_label_for(const std::vector<long long>& alexander, int crossings);

}  // namespace nodal
