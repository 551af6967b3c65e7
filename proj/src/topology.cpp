#include "nodal/topology.hpp"

#include "nodal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace nodal {

long euler_characteristic(const ComponentGeometry& mesh) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) edges.emplace(std::minmax(t[k], t[(k + 1) % 3]));
    }
    return static_cast<long>(mesh.vertices.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(mesh.faces.size());
}

std::array<long, 3> betti_surface(const ComponentGeometry& mesh) {
    if (!is_closed_manifold(mesh)) throw DegenerateError("mesh is not a closed 2-manifold");
    const long chi = euler_characteristic(mesh);
    if (chi > 2 || (2 - chi) % 2 != 0) throw DegenerateError("Euler characteristic " + std::to_string(chi) + " is not 2 - 2g");
    return {1, 2 - chi, 1};
}

double total_curvature(const ComponentGeometry& curve) {
    std::vector<Eigen::Vector3d> pts;
    for (const auto& v : curve.vertices) {
        if (pts.empty() || (v - pts.back()).norm() > 0.0) pts.push_back(v);
    }
    while (pts.size() > 1 && (pts.front() - pts.back()).norm() == 0.0) pts.pop_back();
    if (pts.size() < 3) throw DegenerateError("total curvature needs at least 3 distinct vertices");
    const std::size_t V = pts.size();
    double total = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        const Eigen::Vector3d a = pts[i] - pts[(i + V - 1) % V];
        const Eigen::Vector3d b = pts[(i + 1) % V] - pts[i];
        total += std::atan2(a.cross(b).norm(), a.dot(b));
    }
    return total;
}

double willmore_energy(const ComponentGeometry& mesh, const Field& field) {
    const int n = field.dim();
    const int m = field.codim();
    std::vector<double> area(mesh.vertices.size(), 0.0);
    for (const auto& t : mesh.faces) {
        const auto& a = mesh.vertices[static_cast<std::size_t>(t[0])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(t[1])];
        const auto& c = mesh.vertices[static_cast<std::size_t>(t[2])];
        const double third = (b - a).cross(c - a).norm() / 6.0;
        for (const int v : t) area[static_cast<std::size_t>(v)] += third;
    }
    double total = 0.0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        if (area[v] == 0.0) continue;
        const auto summary = curvature_at(field, mesh.vertices[v].head(n));
        total += willmore_integrand(summary, n, m) * area[v];
    }
    return total;
}

std::optional<ComponentGeometry> refine_closed_component(const Field& field, const ComponentGeometry& component,
                                                         double h, int cells) {
    const int n = field.dim();
    if (component.vertices.empty() || cells < 4) return std::nullopt;
    Eigen::Vector3d lo = component.vertices.front(), hi = lo, centroid = Eigen::Vector3d::Zero();
    for (const auto& v : component.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
        centroid += v;
    }
    centroid /= static_cast<double>(component.vertices.size());
    GridSpec local;
    local.center = (0.5 * (lo + hi)).head(n);
    local.R = 0.5 * (hi - lo).head(n).maxCoeff() + h;
    local.padding = 0.0;
    local.h = 2.0 * local.R / cells;
    const ExtractionReport report = extract_zero_set(field, local);
    std::optional<ComponentGeometry> best;
    double best_distance = INFINITY;
    for (const auto& piece : report.components) {
        if (!piece.closed || piece.touches_boundary) continue;
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (const auto& v : piece.vertices) c += v;
        c /= static_cast<double>(piece.vertices.size());
        const double d = (c - centroid).norm();
        if (d < best_distance) {
            best_distance = d;
            best = piece;
        }
    }
    return best;
}

std::string class_key(const ComponentRecord& record) {
    const auto& g = record.geometry;
    if (g.kind == GeometryKind::Mesh) {
        return record.betti.size() == 3 ? "genus_" + std::to_string(record.betti[1] / 2) : "non_manifold";
    }
    if (g.dim == 2) return "circle";
    return record.knot_label;
}

ComponentRecord make_record(const ComponentGeometry& geometry, const Field* field, bool classify_knots) {
    ComponentRecord r;
    r.geometry = geometry;
    if (geometry.kind == GeometryKind::Polyline) {
        r.betti = {1, geometry.closed ? 1 : 0};
        if (!geometry.closed) return r;
        try {
            r.total_curvature = total_curvature(geometry);
        } catch (const DegenerateError&) {
            r.fault = true;
            return r;
        }
        if (geometry.dim == 3 && classify_knots) {
            const KnotResult k = knot_classify(geometry);
            r.knot_label = k.label;
            r.invariants = k.invariants;
            r.fault = k.fault;
        }
        return r;
    }
    if (!geometry.closed) {
        r.betti = {1};
        return r;
    }
    try {
        const auto b = betti_surface(geometry);
        r.betti = {b[0], b[1], b[2]};
    } catch (const DegenerateError&) {
        r.fault = true;
        r.betti = {1};
    }
    if (field) r.willmore_energy = willmore_energy(geometry, *field);
    return r;
}

CensusResult census(std::vector<ComponentRecord> records, int n, int m) {
    std::sort(records.begin(), records.end(), [](const ComponentRecord& a, const ComponentRecord& b) {
        const auto& va = a.geometry.vertices;
        const auto& vb = b.geometry.vertices;
        if (va.empty() || vb.empty()) return va.size() < vb.size();
        return std::lexicographical_compare(va.front().data(), va.front().data() + 3, vb.front().data(),
                                            vb.front().data() + 3);
    });
    CensusResult out;
    out.betti_sums.assign(static_cast<std::size_t>(n - m + 1), 0);
    for (const auto& r : records) {
        out.faults += r.fault;
        const bool inside = r.geometry.closed && !r.geometry.touches_boundary;
        if (r.geometry.touches_boundary) ++out.N_star;
        if (!inside) continue;
        ++out.N;
        ++out.N_star;
        for (std::size_t l = 0; l < out.betti_sums.size() && l < r.betti.size(); ++l) out.betti_sums[l] += r.betti[l];
        ++out.class_counts[class_key(r)];
    }
    out.mu_defined = out.N > 0;
    if (out.mu_defined) {
        for (const auto& [key, count] : out.class_counts) out.mu[key] = static_cast<double>(count) / out.N;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct WindowItem {
    const ComponentGeometry* g;
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    std::vector<long> betti;
};

}  // namespace

WindowReport window_census(const std::vector<ComponentGeometry>& components, int n, int m, double R, double r,
                           double stride) {
    if (!(r > 0.0) || !(r < R)) throw ConfigError("window census needs 0 < r < R");
    const double cells_left = 2.0 * (R - r) / stride;
    const double cells_right = 2.0 * (R + r) / stride;
    if (std::abs(cells_left - std::round(cells_left)) > 1e-9 || std::abs(cells_right - std::round(cells_right)) > 1e-9) {
        throw ConfigError("stride must divide 2(R - r) and 2(R + r)");
    }
    const int L = n - m;
    WindowReport rep;
    std::vector<WindowItem> items;
    for (const auto& g : components) {
        WindowItem it{&g, Eigen::Vector3d::Constant(1e300), Eigen::Vector3d::Constant(-1e300), {}};
        for (const auto& v : g.vertices) {
            it.lo = it.lo.cwiseMin(v);
            it.hi = it.hi.cwiseMax(v);
        }
        if (g.closed) {
            if (g.kind == GeometryKind::Polyline) {
                it.betti = {1, 1};
            } else {
                try {
                    const auto b = betti_surface(g);
                    it.betti = {b[0], b[1], b[2]};
                } catch (const DegenerateError&) {
                    ++rep.faults;
                    it.betti = {1, 0, 1};
                }
            }
        }
        items.push_back(std::move(it));
    }

    auto inside_open = [&](const WindowItem& it, const Eigen::VectorXd& c, double half) {
        if (!it.g->closed) return false;
        for (int i = 0; i < n; ++i) {
            if (!(it.lo(i) > c(i) - half && it.hi(i) < c(i) + half)) return false;
        }
        return true;
    };
    auto meets_closed = [&](const WindowItem& it, const Eigen::VectorXd& c, double half) {
        for (int i = 0; i < n; ++i) {
            if (it.hi(i) < c(i) - half || it.lo(i) > c(i) + half) return false;
        }
        const auto split = classify_against_cube({*it.g}, half, c);
        return !split.inside.empty() || !split.touching.empty();
    };

    rep.betti.assign(static_cast<std::size_t>(L + 1), 0);
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(n);
    for (const auto& it : items) {
        if (!inside_open(it, origin, R)) continue;
        ++rep.N;
        for (int l = 0; l <= L; ++l) rep.betti[static_cast<std::size_t>(l)] += it.betti[static_cast<std::size_t>(l)];
    }

    const double window_volume = std::pow(2.0 * r, n);
    const double cell_volume = std::pow(stride, n);
    rep.betti_left.assign(static_cast<std::size_t>(L + 1), 0.0);
    auto sweep = [&](double half_range, bool left) {
        const int cells = static_cast<int>(std::lround(2.0 * half_range / stride));
        long total = 1;
        for (int i = 0; i < n; ++i) total *= cells;
        double sum = 0.0;
        Eigen::VectorXd c(n);
        for (long k = 0; k < total; ++k) {
            long rest = k;
            for (int i = 0; i < n; ++i) {
                c(i) = -half_range + (static_cast<double>(rest % cells) + 0.5) * stride;
                rest /= cells;
            }
            for (const auto& it : items) {
                if (left) {
                    if (!inside_open(it, c, r)) continue;
                    sum += 1.0;
                    for (int l = 0; l <= L; ++l) {
                        rep.betti_left[static_cast<std::size_t>(l)] += it.betti[static_cast<std::size_t>(l)] * cell_volume / window_volume;
                    }
                } else if (meets_closed(it, c, r)) {
                    sum += 1.0;
                }
            }
        }
        return sum * cell_volume / window_volume;
    };
    rep.left = sweep(R - r, true);
    rep.right = sweep(R + r, false);
    rep.pass = rep.left <= rep.N + 1.0 && static_cast<double>(rep.N) <= rep.right + 1.0;
    rep.betti_pass = true;
    for (int l = 0; l <= L; ++l) {
        rep.betti_pass = rep.betti_pass && rep.betti_left[static_cast<std::size_t>(l)] <= rep.betti[static_cast<std::size_t>(l)] + 1.0;
    }
    return rep;
}

WindowReport window_census(const Field& field, double R, double r, double stride, double h) {
    GridSpec grid;
    grid.R = R + 2.0 * r;
    grid.h = h;
    grid.padding = h;
    const ExtractionReport ex = extract_zero_set(field, grid);
    WindowReport rep = window_census(ex.components, field.dim(), field.codim(), R, r, stride);
    rep.under_resolved = ex.under_resolved;
    rep.faults += ex.faults;
    return rep;
}

}  // namespace nodal
