#pragma once

#include "nodal/extraction.hpp"
#include "nodal/field.hpp"
#include "nodal/knots.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nodal {

struct ComponentRecord {
    ComponentGeometry geometry;
    std::vector<long> betti;          // beta_0 .. beta_{n-m}
    double total_curvature = 0.0;     // closed polylines
    double willmore_energy = 0.0;     // closed meshes: integral of |H/2|^2
    std::string knot_label = "not_applicable";
    KnotInvariants invariants;
    bool fault = false;
};

// Census of a set of classified components (inside: closed and not touching).
struct CensusResult {
    std::size_t N = 0;
    std::size_t N_star = 0;
    std::vector<long> betti_sums;                    // over inside components
    std::map<std::string, std::size_t> class_counts;  // inside components by class
    std::map<std::string, double> mu;                 // class_counts / N
    bool mu_defined = false;
    std::size_t faults = 0;
};

// Betti numbers (1, 2g, 1) of a closed orientable triangle mesh. Throws
// DegenerateError for non-manifold meshes or odd Euler characteristic.
std::array<long, 3> betti_surface(const ComponentGeometry& mesh);
long euler_characteristic(const ComponentGeometry& mesh);

// Sum of exterior angles of a closed polyline.
double total_curvature(const ComponentGeometry& curve);

// Integral of |H/2|^2 over a mesh: |H| from the field jet at each vertex,
// weighted by a third of the area of the incident triangles.
double willmore_energy(const ComponentGeometry& mesh, const Field& field);

// Isotopy class key used by the census: the knot label for space curves,
// "genus_g" for closed surfaces, "circle" for closed plane curves.
std::string class_key(const ComponentRecord& record);

// Re-extracts a closed component on a local cubic grid with `cells` cells per
// axis, covering its bounding box plus the coarse step h, and returns the
// closed piece whose centroid is nearest the original one. Empty when the
// local grid finds no closed piece.
std::optional<ComponentGeometry> refine_closed_component(const Field& field, const ComponentGeometry& component,
                                                         double h, int cells = 48);

// Fills betti, curvature, Willmore energy (needs the field for meshes) and knot data.
ComponentRecord make_record(const ComponentGeometry& geometry, const Field* field = nullptr,
                            bool classify_knots = true);

// Deterministic: records are sorted by first vertex before reduction.
CensusResult census(std::vector<ComponentRecord> records, int n, int m);

// Sliding-window comparison of N(R) with (1/|C_r|) times the integral over
// C_{R-r} of N(x, r) (left) and over C_{R+r} of N*(x, r) (right), by midpoint
// sums on a lattice of spacing `stride`. The same left sum is formed for each
// Betti number. Passing allows one component of slack on each inequality.
struct WindowReport {
    double left = 0.0;
    double right = 0.0;
    std::size_t N = 0;
    std::vector<double> betti_left;
    std::vector<long> betti;
    bool pass = false;
    bool betti_pass = false;
    bool under_resolved = false;
    std::size_t faults = 0;
};

WindowReport window_census(const Field& field, double R, double r, double stride, double h);

// Same, on components already extracted over a cube containing C_{R+2r}.
WindowReport window_census(const std::vector<ComponentGeometry>& components, int n, int m, double R, double r,
                           double stride);

}  // namespace nodal
