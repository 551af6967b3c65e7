#include "nodal/extraction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace nodal {

namespace {

constexpr double kNudge = 1e-12;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Node lattice of the grid with strides and coordinates.
struct Lattice {
    int n = 0;
    std::array<std::size_t, 3> size{1, 1, 1};
    std::array<std::size_t, 3> stride{0, 0, 0};
    GridAxes axes;

    explicit Lattice(const GridAxes& a) : n(a.dim()), axes(a) {
        std::size_t s = 1;
        for (int i = 0; i < n; ++i) {
            size[i] = a.size(i);
            stride[i] = s;
            s *= size[i];
        }
    }
    std::size_t count() const { return size[0] * size[1] * size[2]; }
    std::array<std::size_t, 3> unpack(std::size_t p) const {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (int i = 0; i < n; ++i) {
            idx[i] = p % size[i];
            p /= size[i];
        }
        return idx;
    }
    std::size_t offset(unsigned bits) const {
        std::size_t o = 0;
        for (int i = 0; i < n; ++i) {
            if (bits & (1u << i)) o += stride[i];
        }
        return o;
    }
    Eigen::Vector3d position(std::size_t p) const {
        const auto idx = unpack(p);
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        for (int i = 0; i < n; ++i) x(i) = axes.coords[static_cast<std::size_t>(i)][idx[i]];
        return x;
    }
};

// Kuhn simplices of the unit cube: each is a chain of corner bitmasks
// 0 = o_0 < o_1 < ... < o_n = all ones obtained by adding axes in permuted order.
std::vector<std::vector<unsigned>> kuhn_simplices(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<unsigned>> out;
    do {
        std::vector<unsigned> chain{0u};
        unsigned bits = 0;
        for (const int axis : perm) {
            bits |= 1u << axis;
            chain.push_back(bits);
        }
        out.push_back(chain);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

Point to_point(const Eigen::Vector3d& v, int n) { return v.head(n); }

// Pulls an interpolated vertex onto f = 0 by Newton steps along the gradient.
Eigen::Vector3d project_vertex(const Field& field, const Eigen::Vector3d& v, double max_move) {
    const int n = field.dim();
    Point x = to_point(v, n);
    const Point start = x;
    FieldJet jet = field.eval(x, 1);
    const double f0 = std::abs(jet.value(0));
    for (int it = 0; it < 3; ++it) {
        const double g2 = jet.grad.squaredNorm();
        if (!(g2 > 0.0)) break;
        x -= (jet.value(0) / g2) * jet.grad.row(0).transpose();
        jet = field.eval(x, 1);
    }
    if (!(std::abs(jet.value(0)) <= f0) || (x - start).norm() > max_move) return v;
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    out.head(n) = x;
    return out;
}

GridValues sample_grid(const Field& field, const GridAxes& axes, std::size_t& nudged) {
    GridValues values = field.eval_grid(axes, 0);
    const std::size_t count = axes.point_count();
    for (std::size_t p = 0; p < count; ++p) {
        bool zero = true;
        for (const auto& comp : values.value) zero = zero && comp[p] == 0.0;
        if (zero) {
            values.value[0][p] += kNudge;
            ++nudged;
        }
    }
    return values;
}

// Coincident consecutive vertices (crossings next to a nudged grid zero) are
// kept once so that no zero-length segment carries a spurious turning angle.
void chain_polylines(const std::vector<std::vector<int>>& adjacency,
                                     const std::vector<Eigen::Vector3d>& vertices, int dim, double merge_tol,
                                     std::vector<ComponentGeometry>& out) {
    std::vector<bool> seen(vertices.size(), false);
    auto walk = [&](int start, bool closed) {
        ComponentGeometry curve;
        curve.kind = GeometryKind::Polyline;
        curve.dim = dim;
        curve.closed = closed;
        int prev = -1;
        int cur = start;
        while (cur >= 0 && !seen[static_cast<std::size_t>(cur)]) {
            seen[static_cast<std::size_t>(cur)] = true;
            const Eigen::Vector3d& v = vertices[static_cast<std::size_t>(cur)];
            if (curve.vertices.empty() || (v - curve.vertices.back()).norm() > merge_tol) curve.vertices.push_back(v);
            int next = -1;
            for (const int nb : adjacency[static_cast<std::size_t>(cur)]) {
                if (nb != prev && !seen[static_cast<std::size_t>(nb)]) {
                    next = nb;
                    break;
                }
            }
            prev = cur;
            cur = next;
        }
        if (closed) {
            if (curve.vertices.size() > 1 && (curve.vertices.back() - curve.vertices.front()).norm() <= merge_tol) {
                curve.vertices.pop_back();
            }
            curve.vertices.push_back(curve.vertices.front());
        }
        out.push_back(std::move(curve));
    };
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        if (!seen[v] && adjacency[v].size() == 1) walk(static_cast<int>(v), false);
    }
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        if (!seen[v] && !adjacency[v].empty()) walk(static_cast<int>(v), true);
    }
}

}  // namespace

// ---------------------------------------------------------------------------

int GridSpec::cells() const { return static_cast<int>(std::ceil(2.0 * half_width() / h - 1e-9)); }

double GridSpec::step() const { return 2.0 * half_width() / cells(); }

Point GridSpec::origin(int n) const { return center.size() == n ? center : Point(Point::Zero(n)); }

GridAxes GridSpec::axes(int n) const {
    validate();
    const int count = cells();
    const double s = step();
    const Point c = origin(n);
    GridAxes axes;
    for (int a = 0; a < n; ++a) {
        std::vector<double> coords(static_cast<std::size_t>(count + 1));
        for (int i = 0; i <= count; ++i) coords[static_cast<std::size_t>(i)] = c(a) - half_width() + i * s;
        coords.back() = c(a) + half_width();
        axes.coords.push_back(std::move(coords));
    }
    return axes;
}

void GridSpec::validate() const {
    if (!(R > 0.0) || !(h > 0.0) || !(padding >= 0.0)) throw ConfigError("grid needs R > 0, h > 0, padding >= 0");
    if (2.0 * half_width() / h > kMaxCellsPerAxis) {
        throw ConfigError("grid exceeds " + std::to_string(kMaxCellsPerAxis) + " cells per axis");
    }
}

// ---------------------------------------------------------------------------

ExtractionReport extract_hypersurface(const Field& field, const GridSpec& grid, const ExtractOptions& options) {
    if (field.codim() != 1) throw ConfigError("extract_hypersurface needs m = 1");
    const int n = field.dim();
    if (n != 2 && n != 3) throw ConfigError("extraction supports n = 2 and n = 3");
    ExtractionReport report;
    report.step = grid.step();
    const Lattice lat(grid.axes(n));
    const GridValues values = sample_grid(field, lat.axes, report.nudged);
    const auto& f = values.value[0];

    std::unordered_map<std::uint64_t, int> vertex_of_edge;
    std::vector<Eigen::Vector3d> vertices;
    auto edge_vertex = [&](std::size_t base, unsigned lo, unsigned hi) {
        const std::size_t a = base + lat.offset(lo);
        const std::size_t b = base + lat.offset(hi);
        const std::uint64_t key = static_cast<std::uint64_t>(a) * 8 + (lo ^ hi);
        const auto [it, inserted] = vertex_of_edge.try_emplace(key, static_cast<int>(vertices.size()));
        if (inserted) {
            const double t = f[a] / (f[a] - f[b]);
            vertices.push_back(lat.position(a) + t * (lat.position(b) - lat.position(a)));
        }
        return it->second;
    };

    const auto simplices = kuhn_simplices(n);
    const std::size_t cells = static_cast<std::size_t>(grid.cells());
    std::size_t cell_count = 1;
    for (int a = 0; a < n; ++a) cell_count *= cells;

    std::vector<std::array<int, 2>> segments;
    std::vector<std::array<int, 3>> faces;
    for (std::size_t c = 0; c < cell_count; ++c) {
        std::size_t rest = c;
        std::size_t base = 0;
        for (int a = 0; a < n; ++a) {
            base += (rest % cells) * lat.stride[a];
            rest /= cells;
        }
        for (const auto& chain : simplices) {
            std::array<bool, 4> pos{};
            int positives = 0;
            for (int k = 0; k <= n; ++k) {
                pos[k] = f[base + lat.offset(chain[k])] > 0.0;
                positives += pos[k];
            }
            if (positives == 0 || positives == n + 1) continue;
            if (n == 2) {
                // The lone vertex whose sign differs from the other two.
                int lone = 0;
                for (int k = 0; k < 3; ++k) {
                    if ((positives == 1) == pos[k]) lone = k;
                }
                std::array<int, 2> ends{};
                int e = 0;
                for (int k = 0; k < 3; ++k) {
                    if (k == lone) continue;
                    ends[e++] = edge_vertex(base, chain[std::min(k, lone)], chain[std::max(k, lone)]);
                }
                segments.push_back(ends);
            } else if (positives == 1 || positives == 3) {
                int lone = 0;
                for (int k = 0; k < 4; ++k) {
                    if ((positives == 1) == pos[k]) lone = k;
                }
                std::array<int, 3> tri{};
                int e = 0;
                for (int k = 0; k < 4; ++k) {
                    if (k == lone) continue;
                    tri[e++] = edge_vertex(base, chain[std::min(k, lone)], chain[std::max(k, lone)]);
                }
                faces.push_back(tri);
            } else {
                int p[2], q[2];
                int ip = 0, iq = 0;
                for (int k = 0; k < 4; ++k) (pos[k] ? p[ip++] : q[iq++]) = k;
                auto ev = [&](int i, int j) {
                    return edge_vertex(base, chain[std::min(i, j)], chain[std::max(i, j)]);
                };
                const int e0 = ev(p[0], q[0]);
                const int e1 = ev(p[0], q[1]);
                const int e2 = ev(p[1], q[1]);
                const int e3 = ev(p[1], q[0]);
                faces.push_back({e0, e1, e2});
                faces.push_back({e0, e2, e3});
            }
        }
    }

    if (options.project_vertices) {
        for (auto& v : vertices) v = project_vertex(field, v, 0.5 * report.step);
    }

    if (n == 2) {
        std::vector<std::vector<int>> adjacency(vertices.size());
        for (const auto& s : segments) {
            adjacency[static_cast<std::size_t>(s[0])].push_back(s[1]);
            adjacency[static_cast<std::size_t>(s[1])].push_back(s[0]);
        }
        chain_polylines(adjacency, vertices, 2, 1e-9 * report.step, report.components);
        for (auto& curve : report.components) curve.touches_boundary = !curve.closed;
        return report;
    }

    UnionFind uf(vertices.size());
    for (const auto& t : faces) {
        uf.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1]));
        uf.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[2]));
    }
    std::unordered_map<std::size_t, std::size_t> component_of_root;
    std::vector<int> local(vertices.size(), -1);
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        const std::size_t root = uf.find(v);
        auto [it, inserted] = component_of_root.try_emplace(root, report.components.size());
        if (inserted) {
            ComponentGeometry mesh;
            mesh.kind = GeometryKind::Mesh;
            mesh.dim = 3;
            report.components.push_back(std::move(mesh));
        }
        auto& mesh = report.components[it->second];
        local[v] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(vertices[v]);
    }
    for (const auto& t : faces) {
        auto& mesh = report.components[component_of_root[uf.find(static_cast<std::size_t>(t[0]))]];
        mesh.faces.push_back({local[static_cast<std::size_t>(t[0])], local[static_cast<std::size_t>(t[1])],
                              local[static_cast<std::size_t>(t[2])]});
    }
    for (auto& mesh : report.components) {
        std::unordered_map<std::uint64_t, int> uses;
        for (const auto& t : mesh.faces) {
            for (int k = 0; k < 3; ++k) {
                const auto a = static_cast<std::uint64_t>(std::min(t[k], t[(k + 1) % 3]));
                const auto b = static_cast<std::uint64_t>(std::max(t[k], t[(k + 1) % 3]));
                ++uses[(a << 32) | b];
            }
        }
        bool closed = true;
        for (const auto& [edge, count] : uses) {
            if (count > 2) ++report.faults;
            if (count != 2) closed = false;
        }
        mesh.closed = closed;
        mesh.touches_boundary = !closed;
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

struct Piercing {
    Eigen::Vector3d x;
    std::size_t face = 0;  // node * 3 + normal axis
    int next = -1;
    int prev = -1;
};

// Zero of the bilinear interpolant on the unit square, by damped Newton.
Eigen::Vector2d bilinear_zero(const std::array<Eigen::Vector2d, 4>& F) {
    // F[0] at (0,0), F[1] at (1,0), F[2] at (0,1), F[3] at (1,1).
    Eigen::Vector2d st(0.5, 0.5);
    for (int it = 0; it < 40; ++it) {
        const double s = st(0), t = st(1);
        const Eigen::Vector2d val = F[0] * (1 - s) * (1 - t) + F[1] * s * (1 - t) + F[2] * (1 - s) * t + F[3] * s * t;
        Eigen::Matrix2d J;
        J.col(0) = (F[1] - F[0]) * (1 - t) + (F[3] - F[2]) * t;
        J.col(1) = (F[2] - F[0]) * (1 - s) + (F[3] - F[1]) * s;
        if (std::abs(J.determinant()) < 1e-300) break;
        const Eigen::Vector2d step = J.partialPivLu().solve(val);
        st -= step;
        st = st.cwiseMax(0.0).cwiseMin(1.0);
        if (step.norm() < 1e-14) break;
    }
    return st;
}

class CurveLinker {
public:
    CurveLinker(const Field& field, const Lattice& lat, const GridValues& values, double step,
                ExtractionReport& report)
        : field_(field), lat_(lat), f1_(values.value[0]), f2_(values.value[1]), h_(step), report_(report) {}

    void run() {
        compute_edge_angles();
        compute_windings();
        link_voxels();
        assemble();
    }

private:
    // Angle increment of (f1, f2) along the edge p -> p + e_axis.
    void compute_edge_angles() {
        angle_.assign(lat_.count() * 3, 0.0);
        for (std::size_t p = 0; p < lat_.count(); ++p) {
            const auto idx = lat_.unpack(p);
            for (int a = 0; a < 3; ++a) {
                if (idx[a] + 1 >= lat_.size[a]) continue;
                const std::size_t q = p + lat_.stride[a];
                const double cross = f1_[p] * f2_[q] - f2_[p] * f1_[q];
                const double dot = f1_[p] * f1_[q] + f2_[p] * f2_[q];
                angle_[p * 3 + a] = std::atan2(cross, dot);
            }
        }
    }

    // Winding of the face with lower corner p and normal e_a, traversed
    // counterclockwise seen from +e_a; positive means the curve, oriented by
    // grad f1 x grad f2, crosses in the +e_a direction.
    void compute_windings() {
        winding_.assign(lat_.count() * 3, 0);
        for (std::size_t p = 0; p < lat_.count(); ++p) {
            const auto idx = lat_.unpack(p);
            for (int a = 0; a < 3; ++a) {
                const int b = (a + 1) % 3;
                const int c = (a + 2) % 3;
                if (idx[b] + 1 >= lat_.size[b] || idx[c] + 1 >= lat_.size[c]) continue;
                const double sum = angle_[p * 3 + b] + angle_[(p + lat_.stride[b]) * 3 + c] -
                                   angle_[(p + lat_.stride[c]) * 3 + b] - angle_[p * 3 + c];
                const auto w = static_cast<int>(std::lround(sum / kTwoPi));
                if (w == 0) continue;
                winding_[p * 3 + a] = static_cast<std::int8_t>(std::clamp(w, -2, 2));
                ++report_.pierced_faces;
                if (std::abs(w) > 1) report_.under_resolved = true;
                const Eigen::Vector3d x = refine(p, a);
                for (int k = 0; k < std::abs(w); ++k) {
                    first_piercing_.try_emplace(p * 3 + a, static_cast<int>(piercings_.size()));
                    piercings_.push_back({x, p * 3 + static_cast<std::size_t>(a)});
                }
            }
        }
    }

    Eigen::Vector3d refine(std::size_t p, int a) {
        const int b = (a + 1) % 3;
        const int c = (a + 2) % 3;
        const std::size_t corners[4] = {p, p + lat_.stride[b], p + lat_.stride[c], p + lat_.stride[b] + lat_.stride[c]};
        std::array<Eigen::Vector2d, 4> F;
        for (int k = 0; k < 4; ++k) F[k] = Eigen::Vector2d(f1_[corners[k]], f2_[corners[k]]);
        const Eigen::Vector2d st = bilinear_zero(F);
        const Eigen::Vector3d origin = lat_.position(p);
        const double hb = lat_.position(corners[1])(b) - origin(b);
        const double hc = lat_.position(corners[2])(c) - origin(c);
        Eigen::Vector3d guess = origin;
        guess(b) += st(0) * hb;
        guess(c) += st(1) * hc;

        Point x = guess;
        for (int it = 0; it < 20; ++it) {
            const FieldJet jet = field_.eval(x, 1);
            if (jet.value.norm() <= 1e-8) {
                const double s = (x(b) - origin(b)) / hb;
                const double t = (x(c) - origin(c)) / hc;
                if (s >= -1e-9 && s <= 1 + 1e-9 && t >= -1e-9 && t <= 1 + 1e-9) return x;
                break;
            }
            Eigen::Matrix2d J;
            J.col(0) = jet.grad.col(b);
            J.col(1) = jet.grad.col(c);
            if (std::abs(J.determinant()) < 1e-300) break;
            const Eigen::Vector2d d = J.partialPivLu().solve(jet.value);
            x(b) -= d(0);
            x(c) -= d(1);
            if (!x.allFinite()) break;
        }
        ++report_.refine_fallbacks;
        return guess;
    }

    void link_voxels() {
        const std::size_t g0 = lat_.size[0] - 1, g1 = lat_.size[1] - 1, g2 = lat_.size[2] - 1;
        for (std::size_t k = 0; k < g2; ++k) {
            for (std::size_t j = 0; j < g1; ++j) {
                for (std::size_t i = 0; i < g0; ++i) {
                    link_voxel(i * lat_.stride[0] + j * lat_.stride[1] + k * lat_.stride[2]);
                }
            }
        }
    }

    void link_voxel(std::size_t p) {
        std::vector<int> ins, outs;
        int flux = 0;
        for (int a = 0; a < 3; ++a) {
            for (int side = 0; side < 2; ++side) {
                const std::size_t face = (p + (side ? lat_.stride[a] : 0)) * 3 + a;
                const int w = winding_[face];
                if (w == 0) continue;
                const int outward = side ? w : -w;
                flux += outward;
                const int first = first_piercing_.at(face);
                for (int k = 0; k < std::abs(w); ++k) (outward > 0 ? outs : ins).push_back(first + k);
            }
        }
        if (flux != 0) ++report_.conservation_violations;
        if (ins.empty() || ins.size() != outs.size()) {
            if (ins.size() != outs.size()) report_.under_resolved = true;
            return;
        }
        if (ins.size() == 1) {
            connect(ins[0], outs[0]);
            return;
        }
        ++report_.traced_voxels;
        const Eigen::Vector3d lo = lat_.position(p);
        const Eigen::Vector3d hi = lat_.position(p + lat_.stride[0] + lat_.stride[1] + lat_.stride[2]);
        std::vector<bool> used(outs.size(), false);
        std::vector<int> unmatched;
        for (const int in : ins) {
            const int hit = trace(piercings_[static_cast<std::size_t>(in)].x, 1.0, lo, hi, outs, used);
            if (hit < 0) {
                unmatched.push_back(in);
                continue;
            }
            used[static_cast<std::size_t>(hit)] = true;
            connect(in, outs[static_cast<std::size_t>(hit)]);
        }
        if (unmatched.size() > 1) {
            // Backwards from the exits that are still free.
            std::vector<bool> taken(unmatched.size(), false);
            for (std::size_t o = 0; o < outs.size(); ++o) {
                if (used[o]) continue;
                const int hit = trace(piercings_[static_cast<std::size_t>(outs[o])].x, -1.0, lo, hi, unmatched, taken);
                if (hit < 0) continue;
                taken[static_cast<std::size_t>(hit)] = true;
                used[o] = true;
                connect(unmatched[static_cast<std::size_t>(hit)], outs[o]);
            }
            std::vector<int> rest;
            for (std::size_t u = 0; u < unmatched.size(); ++u) {
                if (!taken[u]) rest.push_back(unmatched[u]);
            }
            unmatched = std::move(rest);
        }
        if (unmatched.empty()) return;
        // A single strand left over has only one free exit.
        if (unmatched.size() > 1) report_.under_resolved = true;
        for (const int in : unmatched) {
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t o = 0; o < outs.size(); ++o) {
                if (used[o]) continue;
                const double d = (piercings_[static_cast<std::size_t>(outs[o])].x - piercings_[static_cast<std::size_t>(in)].x).norm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(o);
                }
            }
            used[static_cast<std::size_t>(best)] = true;
            connect(in, outs[static_cast<std::size_t>(best)]);
        }
    }

    void connect(int from, int to) {
        piercings_[static_cast<std::size_t>(from)].next = to;
        piercings_[static_cast<std::size_t>(to)].prev = from;
    }

    // Follows the curve from a piercing with predictor steps along
    // direction * (grad f1 x grad f2) and Newton corrections, and returns the
    // index into `outs` of the unused piercing nearest to where it leaves the voxel.
    int trace(Eigen::Vector3d x, double direction, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
              const std::vector<int>& outs, const std::vector<bool>& used) const {
        const double ds = direction * h_ / 8.0;
        const double slack = 1e-9 * h_;
        for (int step = 0; step < 400; ++step) {
            FieldJet jet = field_.eval(x, 1);
            const Eigen::Vector3d g1 = jet.grad.row(0).transpose();
            const Eigen::Vector3d g2 = jet.grad.row(1).transpose();
            Eigen::Vector3d t = g1.cross(g2);
            if (!(t.norm() > 0.0)) return -1;
            t.normalize();
            Eigen::Vector3d y = x + ds * t;
            for (int it = 0; it < 4; ++it) {
                jet = field_.eval(y, 1);
                const Matrix& J = jet.grad;
                const Eigen::Matrix2d JJt = J * J.transpose();
                if (std::abs(JJt.determinant()) < 1e-300) return -1;
                y -= J.transpose() * JJt.ldlt().solve(jet.value);
            }
            if (!y.allFinite() || (y - x).norm() > 2.0 * std::abs(ds)) return -1;
            const bool outside = ((y - lo).array() < -slack).any() || ((y - hi).array() > slack).any();
            if (outside) {
                // First box face crossed on the segment x -> y.
                double t_exit = 1.0;
                int axis = -1;
                int side = 0;
                for (int a = 0; a < 3; ++a) {
                    const double d = y(a) - x(a);
                    if (y(a) < lo(a) - slack && d < 0) {
                        const double ta = (lo(a) - x(a)) / d;
                        if (ta < t_exit) { t_exit = ta; axis = a; side = 0; }
                    }
                    if (y(a) > hi(a) + slack && d > 0) {
                        const double ta = (hi(a) - x(a)) / d;
                        if (ta < t_exit) { t_exit = ta; axis = a; side = 1; }
                    }
                }
                if (axis < 0) return -1;
                const Eigen::Vector3d exit = x + std::clamp(t_exit, 0.0, 1.0) * (y - x);
                int best = -1;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t o = 0; o < outs.size(); ++o) {
                    if (used[o]) continue;
                    const Piercing& q = piercings_[static_cast<std::size_t>(outs[o])];
                    if (static_cast<int>(q.face % 3) != axis) continue;
                    if (std::abs(q.x(axis) - (side ? hi(axis) : lo(axis))) > 1e-6 * h_) continue;
                    const double d = (q.x - exit).norm();
                    if (d < best_d) {
                        best_d = d;
                        best = static_cast<int>(o);
                    }
                }
                return best_d <= 0.5 * h_ ? best : -1;
            }
            x = y;
        }
        return -1;
    }

    void assemble() {
        std::vector<bool> seen(piercings_.size(), false);
        auto walk = [&](int start, bool closed) {
            ComponentGeometry curve;
            curve.kind = GeometryKind::Polyline;
            curve.dim = 3;
            curve.closed = closed;
            int cur = start;
            while (cur >= 0 && !seen[static_cast<std::size_t>(cur)]) {
                seen[static_cast<std::size_t>(cur)] = true;
                curve.vertices.push_back(piercings_[static_cast<std::size_t>(cur)].x);
                cur = piercings_[static_cast<std::size_t>(cur)].next;
            }
            if (closed) {
                curve.vertices.push_back(curve.vertices.front());
            } else {
                curve.touches_boundary = true;
                const std::size_t head = piercings_[static_cast<std::size_t>(start)].face;
                int tail = start;
                while (piercings_[static_cast<std::size_t>(tail)].next >= 0) tail = piercings_[static_cast<std::size_t>(tail)].next;
                if (!on_grid_boundary(head) || !on_grid_boundary(piercings_[static_cast<std::size_t>(tail)].face)) {
                    ++report_.faults;
                }
            }
            report_.components.push_back(std::move(curve));
        };
        for (std::size_t i = 0; i < piercings_.size(); ++i) {
            if (piercings_[i].prev < 0) walk(static_cast<int>(i), false);
        }
        for (std::size_t i = 0; i < piercings_.size(); ++i) {
            if (!seen[i]) walk(static_cast<int>(i), true);
        }
    }

    bool on_grid_boundary(std::size_t face) const {
        const auto idx = lat_.unpack(face / 3);
        const auto a = face % 3;
        return idx[a] == 0 || idx[a] + 1 == lat_.size[a];
    }

    const Field& field_;
    const Lattice& lat_;
    const std::vector<double>& f1_;
    const std::vector<double>& f2_;
    double h_;
    ExtractionReport& report_;
    std::vector<double> angle_;
    std::vector<std::int8_t> winding_;
    std::vector<Piercing> piercings_;
    std::unordered_map<std::size_t, int> first_piercing_;
};

}  // namespace

ExtractionReport extract_nodal_curves(const Field& field, const GridSpec& grid, const ExtractOptions&) {
    if (field.dim() != 3 || field.codim() != 2) throw ConfigError("extract_nodal_curves needs n = 3, m = 2");
    ExtractionReport report;
    report.step = grid.step();
    const Lattice lat(grid.axes(3));
    const GridValues values = sample_grid(field, lat.axes, report.nudged);
    CurveLinker(field, lat, values, report.step, report).run();
    return report;
}

ExtractionReport extract_zero_set(const Field& field, const GridSpec& grid, const ExtractOptions& options) {
    return field.codim() == 1 ? extract_hypersurface(field, grid, options) : extract_nodal_curves(field, grid, options);
}

// ---------------------------------------------------------------------------

namespace {

// Liang-Barsky clip of the segment a -> b against the box; returns [t0, t1] or t0 > t1 if empty.
std::pair<double, double> clip_segment(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& lo,
                                       const Eigen::Vector3d& hi, int dim) {
    double t0 = 0.0, t1 = 1.0;
    for (int i = 0; i < dim; ++i) {
        const double d = b(i) - a(i);
        if (d == 0.0) {
            if (a(i) < lo(i) || a(i) > hi(i)) return {1.0, 0.0};
            continue;
        }
        double ta = (lo(i) - a(i)) / d;
        double tb = (hi(i) - a(i)) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return {1.0, 0.0};
    }
    return {t0, t1};
}

Eigen::Vector3d lift(const Point& c, int dim) {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    if (c.size() >= dim) out.head(dim) = c.head(dim);
    return out;
}

std::vector<std::array<int, 2>> component_edges(const ComponentGeometry& g) {
    std::vector<std::array<int, 2>> edges;
    if (g.kind == GeometryKind::Polyline) {
        for (std::size_t i = 0; i + 1 < g.vertices.size(); ++i) edges.push_back({static_cast<int>(i), static_cast<int>(i + 1)});
    } else {
        for (const auto& t : g.faces) {
            for (int k = 0; k < 3; ++k) edges.push_back({t[k], t[(k + 1) % 3]});
        }
    }
    return edges;
}

}  // namespace

CubeSplit classify_against_cube(const std::vector<ComponentGeometry>& components, double R, const Point& center) {
    CubeSplit split;
    for (const auto& g : components) {
        const Eigen::Vector3d c = lift(center, g.dim);
        const Eigen::Vector3d lo = c - Eigen::Vector3d::Constant(R);
        const Eigen::Vector3d hi = c + Eigen::Vector3d::Constant(R);
        bool strictly_inside = true;
        for (const auto& v : g.vertices) {
            for (int i = 0; i < g.dim; ++i) {
                if (!(v(i) > lo(i) && v(i) < hi(i))) strictly_inside = false;
            }
        }
        if (g.closed && strictly_inside && !g.vertices.empty()) {
            ComponentGeometry copy = g;
            copy.touches_boundary = false;
            split.inside.push_back(std::move(copy));
            continue;
        }
        bool meets = false;
        for (const auto& v : g.vertices) {
            bool in = true;
            for (int i = 0; i < g.dim; ++i) in = in && v(i) >= lo(i) && v(i) <= hi(i);
            if (in) {
                meets = true;
                break;
            }
        }
        if (!meets) {
            for (const auto& e : component_edges(g)) {
                const auto [t0, t1] = clip_segment(g.vertices[static_cast<std::size_t>(e[0])],
                                                   g.vertices[static_cast<std::size_t>(e[1])], lo, hi, g.dim);
                if (t0 <= t1) {
                    meets = true;
                    break;
                }
            }
        }
        if (meets) {
            ComponentGeometry copy = g;
            copy.touches_boundary = true;
            split.touching.push_back(std::move(copy));
        }
    }
    return split;
}

double polyline_length(const ComponentGeometry& curve) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < curve.vertices.size(); ++i) total += (curve.vertices[i + 1] - curve.vertices[i]).norm();
    return total;
}

double length_in_cube(const ComponentGeometry& curve, double R, const Point& center) {
    const Eigen::Vector3d c = lift(center, curve.dim);
    const Eigen::Vector3d lo = c - Eigen::Vector3d::Constant(R);
    const Eigen::Vector3d hi = c + Eigen::Vector3d::Constant(R);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < curve.vertices.size(); ++i) {
        const auto [t0, t1] = clip_segment(curve.vertices[i], curve.vertices[i + 1], lo, hi, curve.dim);
        if (t0 < t1) total += (t1 - t0) * (curve.vertices[i + 1] - curve.vertices[i]).norm();
    }
    return total;
}

double mesh_area(const ComponentGeometry& mesh) {
    double total = 0.0;
    for (const auto& t : mesh.faces) {
        const auto& a = mesh.vertices[static_cast<std::size_t>(t[0])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(t[1])];
        const auto& c = mesh.vertices[static_cast<std::size_t>(t[2])];
        total += 0.5 * (b - a).cross(c - a).norm();
    }
    return total;
}

bool is_closed_manifold(const ComponentGeometry& mesh) {
    if (mesh.kind != GeometryKind::Mesh || mesh.faces.empty()) return false;
    std::unordered_map<std::uint64_t, int> uses;
    for (const auto& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const auto a = static_cast<std::uint64_t>(std::min(t[k], t[(k + 1) % 3]));
            const auto b = static_cast<std::uint64_t>(std::max(t[k], t[(k + 1) % 3]));
            ++uses[(a << 32) | b];
        }
    }
    return std::all_of(uses.begin(), uses.end(), [](const auto& e) { return e.second == 2; });
}

// ---------------------------------------------------------------------------

void write_geometry(std::ostream& out, const std::vector<ComponentGeometry>& components) {
    char buf[64];
    out << "nodal-geometry 1 " << components.size() << '\n';
    for (const auto& g : components) {
        const bool mesh = g.kind == GeometryKind::Mesh;
        out << (mesh ? "mesh " : "polyline ") << g.dim << ' ' << int(g.closed) << ' ' << int(g.touches_boundary) << ' '
            << g.vertices.size();
        if (mesh) out << ' ' << g.faces.size();
        out << '\n';
        for (const auto& v : g.vertices) {
            for (int i = 0; i < g.dim; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", v(i));
                out << (i ? " " : "") << buf;
            }
            out << '\n';
        }
        for (const auto& t : g.faces) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
}

std::vector<ComponentGeometry> read_geometry(std::istream& in) {
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    if (!(in >> magic >> version >> count) || magic != "nodal-geometry" || version != 1) {
        throw ConfigError("not a nodal-geometry v1 stream");
    }
    std::vector<ComponentGeometry> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::string kind;
        ComponentGeometry g;
        int closed = 0, touches = 0;
        std::size_t nv = 0, nf = 0;
        if (!(in >> kind >> g.dim >> closed >> touches >> nv)) throw ConfigError("truncated geometry header");
        if (kind == "mesh") {
            g.kind = GeometryKind::Mesh;
            if (!(in >> nf)) throw ConfigError("truncated geometry header");
        } else if (kind != "polyline") {
            throw ConfigError("unknown geometry kind " + kind);
        }
        if (g.dim < 2 || g.dim > 3) throw ConfigError("geometry dimension must be 2 or 3");
        g.closed = closed != 0;
        g.touches_boundary = touches != 0;
        g.vertices.assign(nv, Eigen::Vector3d::Zero());
        for (auto& v : g.vertices) {
            for (int i = 0; i < g.dim; ++i) {
                if (!(in >> v(i))) throw ConfigError("truncated vertex list");
            }
        }
        g.faces.resize(nf);
        for (auto& t : g.faces) {
            if (!(in >> t[0] >> t[1] >> t[2])) throw ConfigError("truncated face list");
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace nodal
