#pragma once

#include "nodal/field.hpp"
#include "nodal/types.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace nodal {

inline constexpr int kMaxCellsPerAxis = 2048;

// Extraction grid over the cube C_{R + padding}(center). The requested cell
// size is rounded down so that a whole number of cells spans the cube.
struct GridSpec {
    double R = 1.0;
    double h = 0.1;
    double padding = 1.0;
    Point center;  // empty means the origin

    double half_width() const { return R + padding; }
    int cells() const;
    double step() const;
    Point origin(int n) const;  // center, or zeros when unset
    GridAxes axes(int n) const;
    void validate() const;
};

enum class GeometryKind { Polyline, Mesh };

// One connected component of the discretized zero set. Vertices are stored
// in R^3; curves in the plane have z = 0 and dim = 2.
struct ComponentGeometry {
    GeometryKind kind = GeometryKind::Polyline;
    int dim = 3;
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;  // meshes only
    bool closed = false;
    bool touches_boundary = false;
};

struct ExtractOptions {
    // Newton-project interpolated vertices onto Z(F) (m = 1), moving at most h/2.
    bool project_vertices = true;
};

struct ExtractionReport {
    std::vector<ComponentGeometry> components;
    double step = 0.0;
    std::size_t nudged = 0;             // exact grid zeros moved by +1e-12 on f_1
    std::size_t pierced_faces = 0;      // m = 2
    std::size_t refine_fallbacks = 0;   // piercings left at the bilinear estimate
    std::size_t traced_voxels = 0;      // voxels with more than one strand
    std::size_t conservation_violations = 0;
    std::size_t faults = 0;             // open arcs ending inside the grid, non-manifold edges
    bool under_resolved = false;
};

// m = 1: curves (n = 2, marching triangles) or triangle meshes (n = 3,
// marching tetrahedra on the six-tetrahedron split of each cube).
ExtractionReport extract_hypersurface(const Field& field, const GridSpec& grid,
                                      const ExtractOptions& options = {});

// n = 3, m = 2: curves through the faces where (f_1, f_2) winds, linked voxel by voxel.
ExtractionReport extract_nodal_curves(const Field& field, const GridSpec& grid,
                                      const ExtractOptions& options = {});

// Dispatches on the codimension.
ExtractionReport extract_zero_set(const Field& field, const GridSpec& grid,
                                  const ExtractOptions& options = {});

// inside: closed, every vertex in the open cube C_R(center). touching: meets
// the closed cube but not inside. Components missing the cube are dropped.
// The returned copies carry touches_boundary accordingly.
struct CubeSplit {
    std::vector<ComponentGeometry> inside;
    std::vector<ComponentGeometry> touching;
};
CubeSplit classify_against_cube(const std::vector<ComponentGeometry>& components, double R,
                                const Point& center = Point());

double polyline_length(const ComponentGeometry& curve);
// Length of the part of the polyline inside the closed cube C_R(center).
double length_in_cube(const ComponentGeometry& curve, double R, const Point& center = Point());
double mesh_area(const ComponentGeometry& mesh);
// Every edge borders exactly two faces.
bool is_closed_manifold(const ComponentGeometry& mesh);

// Line-based geometry file; the format is documented in the README.
void write_geometry(std::ostream& out, const std::vector<ComponentGeometry>& components);
std::vector<ComponentGeometry> read_geometry(std::istream& in);

}  // namespace nodal
