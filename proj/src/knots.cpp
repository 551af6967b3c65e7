#include "nodal/knots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nodal {

namespace {

// ---------------------------------------------------------------------------
// Modular arithmetic for the determinant of the Alexander matrix.

constexpr std::uint64_t kPrimes[2] = {2147483647ULL, 2147483629ULL};

std::uint64_t mod_pow(std::uint64_t b, std::uint64_t e, std::uint64_t p) {
    std::uint64_t r = 1;
    b %= p;
    while (e) {
        if (e & 1) r = r * b % p;
        b = b * b % p;
        e >>= 1;
    }
    return r;
}

std::uint64_t mod_inv(std::uint64_t a, std::uint64_t p) { return mod_pow(a, p - 2, p); }

std::uint64_t to_mod(long long v, std::uint64_t p) {
    const long long r = v % static_cast<long long>(p);
    return static_cast<std::uint64_t>(r < 0 ? r + static_cast<long long>(p) : r);
}

// det(A + t B) mod p.
std::uint64_t det_at(const std::vector<std::vector<long long>>& A, const std::vector<std::vector<long long>>& B,
                     std::uint64_t t, std::uint64_t p) {
    const std::size_t s = A.size();
    std::vector<std::vector<std::uint64_t>> M(s, std::vector<std::uint64_t>(s));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) M[i][j] = (to_mod(A[i][j], p) + to_mod(B[i][j], p) * t) % p;
    }
    std::uint64_t det = 1;
    for (std::size_t c = 0; c < s; ++c) {
        std::size_t pivot = c;
        while (pivot < s && M[pivot][c] == 0) ++pivot;
        if (pivot == s) return 0;
        if (pivot != c) {
            std::swap(M[pivot], M[c]);
            det = (p - det) % p;
        }
        det = det * M[c][c] % p;
        const std::uint64_t inv = mod_inv(M[c][c], p);
        for (std::size_t r = c + 1; r < s; ++r) {
            if (M[r][c] == 0) continue;
            const std::uint64_t f = M[r][c] * inv % p;
            for (std::size_t k = c; k < s; ++k) M[r][k] = (M[r][k] + (p - f) * M[c][k]) % p;
        }
    }
    return det;
}

// Coefficients (low to high) of the polynomial of degree < xs.size() through (xs, ys) mod p.
std::vector<std::uint64_t> interpolate(const std::vector<std::uint64_t>& xs, std::vector<std::uint64_t> ys,
                                       std::uint64_t p) {
    const std::size_t n = xs.size();
    // Newton divided differences.
    for (std::size_t k = 1; k < n; ++k) {
        for (std::size_t i = n - 1; i >= k; --i) {
            const std::uint64_t num = (ys[i] + p - ys[i - 1]) % p;
            const std::uint64_t den = (xs[i] + p - xs[i - k]) % p;
            ys[i] = num * mod_inv(den, p) % p;
        }
    }
    std::vector<std::uint64_t> coef(n, 0);
    for (std::size_t i = n; i-- > 0;) {
        // coef = coef * (t - xs[i]) + ys[i]
        std::vector<std::uint64_t> next(n, 0);
        for (std::size_t k = 0; k < n; ++k) {
            if (coef[k] == 0) continue;
            if (k + 1 < n) next[k + 1] = (next[k + 1] + coef[k]) % p;
            next[k] = (next[k] + (p - xs[i] % p) * coef[k]) % p;
        }
        next[0] = (next[0] + ys[i]) % p;
        coef = std::move(next);
    }
    return coef;
}

long long crt_symmetric(std::uint64_t a1, std::uint64_t a2) {
    const std::uint64_t p1 = kPrimes[0], p2 = kPrimes[1];
    const std::uint64_t k = ((a2 + p2 - a1 % p2) % p2) * mod_inv(p1 % p2, p2) % p2;
    const __int128 x = static_cast<__int128>(a1) + static_cast<__int128>(p1) * k;
    const __int128 m = static_cast<__int128>(p1) * p2;
    return static_cast<long long>(x > m / 2 ? x - m : x);
}

std::vector<long long> normalize(std::vector<long long> c) {
    while (!c.empty() && c.back() == 0) c.pop_back();
    std::size_t lead = 0;
    while (lead < c.size() && c[lead] == 0) ++lead;
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead));
    if (c.empty()) return c;
    if (c.back() < 0) {
        for (auto& v : c) v = -v;
    }
    return c;
}

std::vector<long long> multiply(const std::vector<long long>& a, const std::vector<long long>& b) {
    std::vector<long long> c(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

// ---------------------------------------------------------------------------
// Geometry helpers.

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a(0) * b(1) - a(1) * b(0); }

// Conservative: reports a hit for touching and for near-coplanar overlap.
bool segment_meets_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Eigen::Vector3d& a,
                            const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    constexpr double tol = 1e-9;
    const Eigen::Vector3d e1 = b - a, e2 = c - a, dir = q - p;
    const Eigen::Vector3d pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    const double scale = e1.norm() * e2.norm() * dir.norm();
    if (std::abs(det) <= 1e-12 * scale) {
        const Eigen::Vector3d normal = e1.cross(e2);
        const double nn = normal.norm();
        if (nn == 0.0) {
            // Degenerate triangle: only the bounding boxes can be compared.
            const Eigen::Vector3d lo = a.cwiseMin(b).cwiseMin(c), hi = a.cwiseMax(b).cwiseMax(c);
            return ((p.cwiseMin(q) - hi).array() <= tol).all() && ((lo - p.cwiseMax(q)).array() <= tol).all();
        }
        if (std::abs(normal.dot(p - a)) / nn > tol * (1.0 + e1.norm())) return false;
        const Eigen::Vector3d lo = a.cwiseMin(b).cwiseMin(c), hi = a.cwiseMax(b).cwiseMax(c);
        return ((p.cwiseMin(q) - hi).array() <= tol).all() && ((lo - p.cwiseMax(q)).array() <= tol).all();
    }
    const double inv = 1.0 / det;
    const Eigen::Vector3d tvec = p - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < -tol || u > 1 + tol) return false;
    const Eigen::Vector3d qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv;
    if (v < -tol || u + v > 1 + tol) return false;
    const double t = e2.dot(qvec) * inv;
    return t >= -tol && t <= 1 + tol;
}

struct Passage {
    std::size_t segment;
    double t;
    int crossing;
    bool over;
};

// Deterministic candidate viewing directions covering a hemisphere.
Eigen::Vector3d direction(int k) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (k + 0.5) / 60.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 0.7234 + k * golden;
    Eigen::Vector3d d(r * std::cos(phi), r * std::sin(phi), z);
    // Tilt away from the coordinate axes, which grid-built curves favour.
    const Eigen::Matrix3d tilt = (Eigen::AngleAxisd(0.3137, Eigen::Vector3d(1, 2, 3).normalized())).toRotationMatrix();
    return (tilt * d).normalized();
}

// Signed Gauss code of the projection along d, or false if the projection is not generic.
bool gauss_code(const std::vector<Eigen::Vector3d>& poly, const Eigen::Vector3d& d,
                std::vector<std::pair<int, bool>>& gauss, std::vector<int>& signs) {
    constexpr double kEndTol = 1e-6;
    constexpr double kAngleTol = 1e-6;
    constexpr double kHeightTol = 1e-9;
    const std::size_t V = poly.size();
    Eigen::Vector3d u = d.unitOrthogonal();
    Eigen::Vector3d w = d.cross(u);
    std::vector<Eigen::Vector2d> pr(V);
    std::vector<double> height(V);
    for (std::size_t i = 0; i < V; ++i) {
        pr[i] = Eigen::Vector2d(poly[i].dot(u), poly[i].dot(w));
        height[i] = poly[i].dot(d);
    }
    std::vector<Passage> passages;
    signs.clear();
    for (std::size_t i = 0; i < V; ++i) {
        const Eigen::Vector2d a0 = pr[i], a1 = pr[(i + 1) % V];
        const Eigen::Vector2d da = a1 - a0;
        for (std::size_t j = i + 1; j < V; ++j) {
            const Eigen::Vector2d b0 = pr[j], b1 = pr[(j + 1) % V];
            const Eigen::Vector2d db = b1 - b0;
            const bool adjacent = j == i + 1 || (i == 0 && j == V - 1);
            const double denom = cross2(da, db);
            const double scale = da.norm() * db.norm();
            if (adjacent) {
                // Reject folds where two consecutive edges overlap in projection.
                if (std::abs(denom) <= kAngleTol * scale && da.dot(db) < 0) return false;
                continue;
            }
            if (std::abs(denom) <= kAngleTol * scale) {
                // Parallel: reject if they overlap.
                const Eigen::Vector2d off = b0 - a0;
                if (std::abs(cross2(da, off)) <= kAngleTol * da.norm() * (off.norm() + 1e-300)) {
                    const double s0 = off.dot(da) / da.squaredNorm();
                    const double s1 = (b1 - a0).dot(da) / da.squaredNorm();
                    if (std::max(s0, s1) >= -kEndTol && std::min(s0, s1) <= 1 + kEndTol) return false;
                }
                continue;
            }
            const Eigen::Vector2d off = b0 - a0;
            const double t = cross2(off, db) / denom;
            const double s = cross2(off, da) / denom;
            if (t < -kEndTol || t > 1 + kEndTol || s < -kEndTol || s > 1 + kEndTol) continue;
            if (t < kEndTol || t > 1 - kEndTol || s < kEndTol || s > 1 - kEndTol) return false;
            const double ha = height[i] + t * (height[(i + 1) % V] - height[i]);
            const double hb = height[j] + s * (height[(j + 1) % V] - height[j]);
            if (std::abs(ha - hb) <= kHeightTol) return false;
            const int id = static_cast<int>(signs.size());
            const bool a_over = ha > hb;
            const Eigen::Vector2d over = a_over ? da : db;
            const Eigen::Vector2d under = a_over ? db : da;
            signs.push_back(cross2(over, under) > 0 ? 1 : -1);
            passages.push_back({i, t, id, a_over});
            passages.push_back({j, s, id, !a_over});
        }
    }
    std::sort(passages.begin(), passages.end(), [](const Passage& x, const Passage& y) {
        return x.segment != y.segment ? x.segment < y.segment : x.t < y.t;
    });
    gauss.clear();
    for (const auto& p : passages) gauss.emplace_back(p.crossing, p.over);
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<KnotTableEntry>& knot_table() {
    static const std::vector<KnotTableEntry> table = {
        {"3_1", 3, {1, -1, 1}},
        {"4_1", 4, {1, -3, 1}},
        {"5_1", 5, {1, -1, 1, -1, 1}},
        {"5_2", 5, {2, -3, 2}},
        {"6_1", 6, {2, -5, 2}},
        {"6_2", 6, {1, -3, 3, -3, 1}},
        {"6_3", 6, {1, -3, 5, -3, 1}},
        {"7_1", 7, {1, -1, 1, -1, 1, -1, 1}},
        {"7_2", 7, {3, -5, 3}},
        {"7_3", 7, {2, -3, 3, -3, 2}},
        {"7_4", 7, {4, -7, 4}},
        {"7_5", 7, {2, -4, 5, -4, 2}},
        {"7_6", 7, {1, -5, 7, -5, 1}},
        {"7_7", 7, {1, -5, 9, -5, 1}},
    };
    return table;
}

std::string knot_label_for(const std::vector<long long>& alexander, int crossings) {
    if (alexander == std::vector<long long>{1}) return "unknot";
    for (const auto& e : knot_table()) {
        if (e.alexander == alexander) return e.crossing_number <= crossings ? e.label : "unknown";
    }
    const auto& table = knot_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = i; j < table.size(); ++j) {
            if (table[i].crossing_number + table[j].crossing_number > crossings) continue;
            if (normalize(multiply(table[i].alexander, table[j].alexander)) == alexander) return "composite";
        }
    }
    return "unknown";
}

std::vector<Eigen::Vector3d> simplify_polygon(std::vector<Eigen::Vector3d> poly) {
    bool changed = true;
    while (changed && poly.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < poly.size() && poly.size() > 3;) {
            const std::size_t V = poly.size();
            const std::size_t prev = (i + V - 1) % V, next = (i + 1) % V;
            const std::size_t before = (prev + V - 1) % V;
            bool blocked = false;
            for (std::size_t j = 0; j < V && !blocked; ++j) {
                // Segment j runs from poly[j] to poly[j + 1]; skip those sharing a triangle vertex.
                if (j == prev || j == i || j == before || j == next) continue;
                blocked = segment_meets_triangle(poly[j], poly[(j + 1) % V], poly[prev], poly[i], poly[next]);
            }
            if (blocked) {
                ++i;
            } else {
                poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
            }
        }
    }
    return poly;
}

std::vector<long long> alexander_from_gauss(const std::vector<std::pair<int, bool>>& gauss,
                                            const std::vector<int>& signs) {
    const std::size_t n = signs.size();
    if (n == 0) return {1};
    if (gauss.size() != 2 * n) throw Error("Gauss code length does not match the crossing count");
    // Arc 0 contains the start; every under-passage ends the current arc.
    std::vector<int> over(n, -1), incoming(n, -1), outgoing(n, -1);
    std::size_t arc = 0;
    for (const auto& [c, is_over] : gauss) {
        const auto k = static_cast<std::size_t>(c);
        if (is_over) {
            over[k] = static_cast<int>(arc % n);
        } else {
            incoming[k] = static_cast<int>(arc % n);
            ++arc;
            outgoing[k] = static_cast<int>(arc % n);
        }
    }
    // Row c of the Alexander matrix is A[c] + t B[c].
    std::vector<std::vector<long long>> A(n, std::vector<long long>(n, 0)), B = A;
    for (std::size_t c = 0; c < n; ++c) {
        const auto o = static_cast<std::size_t>(over[c]);
        const auto i = static_cast<std::size_t>(incoming[c]);
        const auto l = static_cast<std::size_t>(outgoing[c]);
        A[c][o] += 1;
        B[c][o] -= 1;
        if (signs[c] > 0) {
            B[c][i] += 1;
            A[c][l] -= 1;
        } else {
            A[c][i] -= 1;
            B[c][l] += 1;
        }
    }
    for (auto* M : {&A, &B}) {
        M->pop_back();
        for (auto& row : *M) row.pop_back();
    }
    const std::size_t s = n - 1;
    if (s == 0) return {1};
    std::vector<std::uint64_t> xs(s + 1);
    for (std::size_t k = 0; k <= s; ++k) xs[k] = k + 2;
    std::vector<std::vector<std::uint64_t>> coef;
    for (const auto p : kPrimes) {
        std::vector<std::uint64_t> ys(s + 1);
        for (std::size_t k = 0; k <= s; ++k) ys[k] = det_at(A, B, xs[k], p);
        coef.push_back(interpolate(xs, ys, p));
    }
    std::vector<long long> poly(s + 1);
    for (std::size_t k = 0; k <= s; ++k) poly[k] = crt_symmetric(coef[0][k], coef[1][k]);
    return normalize(poly);
}

KnotResult knot_classify(const ComponentGeometry& curve, bool simplify) {
    KnotResult result;
    if (curve.kind != GeometryKind::Polyline || curve.dim != 3 || !curve.closed) return result;

    std::vector<Eigen::Vector3d> poly;
    for (const auto& v : curve.vertices) {
        if (poly.empty() || (v - poly.back()).norm() > 0.0) poly.push_back(v);
    }
    while (poly.size() > 1 && (poly.front() - poly.back()).norm() == 0.0) poly.pop_back();
    if (poly.size() < 3) throw DegenerateError("closed polyline has fewer than 3 distinct vertices");

    // Scale-free frame: centroid at the origin, unit bounding radius.
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& v : poly) centroid += v;
    centroid /= static_cast<double>(poly.size());
    double radius = 0.0;
    for (auto& v : poly) {
        v -= centroid;
        radius = std::max(radius, v.norm());
    }
    for (auto& v : poly) v /= radius;

    if (simplify) poly = simplify_polygon(std::move(poly));
    result.simplified_vertices = static_cast<int>(poly.size());

    std::vector<std::pair<int, bool>> gauss;
    std::vector<int> signs;
    bool generic = false;
    for (int k = 0; k < 50 && !generic; ++k) {
        ++result.attempts;
        generic = gauss_code(poly, direction(k), gauss, signs);
    }
    if (!generic) {
        result.label = "unknown";
        result.fault = true;
        return result;
    }
    result.invariants.crossings = static_cast<int>(signs.size());
    result.invariants.alexander = alexander_from_gauss(gauss, signs);
    const auto& a = result.invariants.alexander;
    long long at_one = 0, at_minus_one = 0, sign = 1;
    for (const long long c : a) {
        at_one += c;
        at_minus_one += sign * c;
        sign = -sign;
    }
    result.invariants.determinant = std::llabs(at_minus_one);
    if (std::llabs(at_one) != 1) {
        result.label = "unknown";
        result.fault = true;
        return result;
    }
    result.label = knot_label_for(a, result.invariants.crossings);
    return result;
}

}  // namespace nodal
