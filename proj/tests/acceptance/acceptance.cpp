// Acceptance gate: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only id[,id...]] [--expect-fail id[,id...]] [--work dir]
// A criterion listed in --expect-fail is still run at its full tolerance and
// reported as FAIL; it only stops counting towards the exit code.

#include "nodal/covariance.hpp"
#include "nodal/experiments.hpp"
#include "nodal/extraction.hpp"
#include "nodal/kacrice.hpp"
#include "nodal/knots.hpp"
#include "nodal/realization.hpp"
#include "nodal/topology.hpp"

#include "synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace nodal;
using namespace nodal::synthetic;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string f6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::set<std::string> split_list(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

fs::path g_work;

// Runs a scenario into the work directory; the outcome is cached per name.
const RunOutcome& scenario(const std::string& name, const std::function<ExperimentConfig()>& make) {
    static std::map<std::string, RunOutcome> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    ExperimentConfig cfg = make();
    cfg.output_dir = (g_work / name).string();
    return cache.emplace(name, run_experiment(cfg)).first->second;
}

const CheckResult* find_check(const RunOutcome& out, const std::string& name) {
    for (const auto& c : out.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

struct ComponentRow {
    std::string kind, cls, status;
    bool fault = false;
    double total_curvature = 0.0, willmore = 0.0;
};

std::vector<ComponentRow> read_components(const std::string& name) {
    std::ifstream in(g_work / name / "components.csv");
    std::vector<ComponentRow> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> col;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) col.push_back(cell);
        if (col.size() < 17) continue;
        ComponentRow r;
        r.kind = col[5];
        r.total_curvature = std::stod(col[8]);
        r.willmore = std::stod(col[9]);
        r.cls = col[10];
        r.status = col[11];
        r.fault = col[13] == "1";
        rows.push_back(r);
    }
    return rows;
}

bool nontrivial(const std::string& cls) { return cls != "unknot" && cls != "unknown" && cls != "not_applicable" && cls != "circle"; }

KernelSpec make_spec(Model model, int n, int m) {
    KernelSpec s;
    s.model = model;
    s.n = n;
    s.m = m;
    // Berry keeps the 4096-wave default, where the non-Gaussian correction is
    // below Monte Carlo noise. Black-body only feeds the curvature audits, which
    // hold for any smooth field, so it runs with fewer waves.
    if (model == Model::BlackBody) s.waves = 256;
    if (model == Model::TorusArithmetic) s.lattice_norm = n == 3 ? 9 : 5;
    if (model == Model::CustomSpectral) {
        // Gaussian radial profile on [0, 4].
        for (int i = 0; i <= 40; ++i) {
            const double r = 0.1 * i;
            s.spectral_table.push_back({r, std::exp(-0.5 * r * r)});
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Scenario factories

ExperimentConfig berry_batch() {
    ExperimentConfig c;
    c.scenario = Scenario::KacRiceVsEmpirical;
    c.spec = make_spec(Model::BerryMono, 3, 2);
    c.sweep = {3.0};
    c.R = 3.0;
    c.h = 0.25;
    c.padding = 1.0;
    c.seed_first = 1;
    c.seed_last = 500;
    return c;
}

ExperimentConfig torus_batch() {
    ExperimentConfig c;
    c.scenario = Scenario::KacRiceVsEmpirical;
    c.spec = make_spec(Model::TorusArithmetic, 3, 2);
    c.sweep = {0.5};
    c.h = 1.0 / 36.0;
    c.seed_first = 1;
    c.seed_last = 500;
    return c;
}

ExperimentConfig torus_knot_census() {
    ExperimentConfig c;
    c.scenario = Scenario::KnotCensus;
    c.spec = make_spec(Model::TorusArithmetic, 3, 2);
    c.sweep = {9, 17};
    c.h = 1.0 / 64.0;
    c.seed_first = 1;
    c.seed_last = 500;
    return c;
}

ExperimentConfig plane_curve_audit() {
    ExperimentConfig c;
    c.scenario = Scenario::WillmoreAudit;
    c.spec = make_spec(Model::BargmannFock, 2, 1);
    c.sweep = {6.0};
    c.h = 0.05;
    c.seed_first = 1;
    c.seed_last = 20;
    return c;
}

ExperimentConfig surface_audit() {
    ExperimentConfig c;
    c.scenario = Scenario::WillmoreAudit;
    c.spec = make_spec(Model::BlackBody, 3, 1);
    c.sweep = {2.5};
    c.h = 0.1;
    c.padding = 1.0;
    c.seed_first = 1;
    c.seed_last = 8;
    return c;
}

ExperimentConfig converge_batch() {
    ExperimentConfig c;
    c.scenario = Scenario::ConvergeNu;
    c.spec = make_spec(Model::BargmannFock, 2, 1);
    c.sweep = {4, 8, 16};
    c.h = 0.1;
    c.padding = 1.0;
    c.project_vertices = false;
    c.seed_first = 1;
    c.seed_last = 200;
    return c;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict kacrice_closed_form() {
    const auto e = first_moment_density(make_spec(Model::BargmannFock, 2, 1), KacRiceWeight::Volume, 1000000);
    const double rel = std::abs(e.value - 0.5) / 0.5;
    return {rel <= 0.005, "value " + f6(e.value) + " +- " + f6(e.half_width) + ", relative error " + f6(rel) + " <= 0.005"};
}

Verdict kacrice_vs_extraction() {
    bool pass = true;
    std::string detail;
    for (const auto& [name, make] : std::vector<std::pair<std::string, std::function<ExperimentConfig()>>>{
             {"berry_batch", berry_batch}, {"torus_batch", torus_batch}}) {
        const RunOutcome& out = scenario(name, make);
        for (const auto& c : out.checks) {
            if (c.name.rfind("volume_density", 0) != 0) continue;
            pass = pass && c.pass;
            detail += name + " rel.diff " + f6(c.value) + " <= " + f6(c.threshold) + "; ";
        }
        if (const auto* fr = find_check(out, "fault_rate")) detail += "fault rate " + f6(fr->value) + "; ";
    }
    return {pass, detail + "500 seeds each"};
}

Verdict fenchel_willmore_audit() {
    std::size_t curves = 0, curve_ok = 0, meshes = 0, mesh_ok = 0, artifacts = 0;
    double min_curve = INFINITY, min_mesh = INFINITY;
    scenario("berry_batch", berry_batch);
    scenario("torus_batch", torus_batch);
    scenario("plane_curve_audit", plane_curve_audit);
    const RunOutcome& surf = scenario("surface_audit", surface_audit);
    for (const char* name : {"berry_batch", "torus_batch", "plane_curve_audit", "surface_audit"}) {
        for (const auto& r : read_components(name)) {
            if (r.status != "ok") {
                ++artifacts;
                continue;
            }
            if (r.fault) continue;
            if (r.kind == "polyline") {
                ++curves;
                curve_ok += r.total_curvature >= 2 * kPi * 0.95;
                min_curve = std::min(min_curve, r.total_curvature / (2 * kPi));
            } else {
                ++meshes;
                mesh_ok += r.willmore >= 4 * kPi * 0.95;
                min_mesh = std::min(min_mesh, r.willmore / (4 * kPi));
            }
        }
    }
    const auto* circle = find_check(surf, "equality_circle");
    const auto* sphere = find_check(surf, "equality_sphere");
    const bool pass = curves > 0 && meshes > 0 && curve_ok == curves && mesh_ok == meshes && circle && circle->pass &&
                      sphere && sphere->pass;
    return {pass, "curves " + std::to_string(curve_ok) + "/" + std::to_string(curves) + " (min ratio " + f6(min_curve) +
                      "), surfaces " + std::to_string(mesh_ok) + "/" + std::to_string(meshes) + " (min ratio " +
                      f6(min_mesh) + ", " + std::to_string(artifacts) + " grid artifacts dropped), circle " +
                      (circle ? f6(circle->value) : "?") + ", sphere " + (sphere ? f6(sphere->value) : "?")};
}

Verdict fary_milnor() {
    scenario("berry_batch", berry_batch);
    scenario("torus_batch", torus_batch);
    scenario("torus_knot_census", torus_knot_census);
    std::size_t knots = 0, ok = 0, closed = 0;
    std::map<std::string, std::size_t> labels;
    for (const char* name : {"berry_batch", "torus_batch", "torus_knot_census"}) {
        for (const auto& r : read_components(name)) {
            if (r.kind != "polyline" || r.status != "ok") continue;
            ++closed;
            ++labels[r.cls];
            if (!nontrivial(r.cls)) continue;
            ++knots;
            ok += r.total_curvature >= 4 * kPi * 0.95;
        }
    }
    // Random fields at these scales rarely knot, so transformed synthetic
    // knots keep the bound exercised on curves that are known to be knotted.
    std::mt19937_64 rng(11);
    std::size_t synthetic = 0, synthetic_ok = 0;
    for (const auto& curve : {trefoil(), figure_eight()}) {
        for (int k = 0; k < 20; ++k) {
            const auto g = transformed(curve, rng);
            const KnotResult r = knot_classify(g);
            ++synthetic;
            synthetic_ok += nontrivial(r.label) && total_curvature(g) >= 4 * kPi * 0.95;
        }
    }
    std::string hist;
    for (const auto& [k, v] : labels) hist += k + ":" + std::to_string(v) + " ";
    return {ok == knots && synthetic_ok == synthetic,
            "census: " + std::to_string(ok) + "/" + std::to_string(knots) + " knotted components pass among " +
                std::to_string(closed) + " closed curves (" + hist + "); synthetic knots " +
                std::to_string(synthetic_ok) + "/" + std::to_string(synthetic)};
}

Verdict knot_golden() {
    struct Golden {
        ComponentGeometry curve;
        const char* label;
        long long det;
    };
    const std::vector<Golden> golden = {{ellipse(), "unknot", 1}, {trefoil(), "3_1", 3}, {figure_eight(), "4_1", 5}};
    std::mt19937_64 rng(7);
    std::size_t total = 0, ok = 0;
    for (const auto& g : golden) {
        for (int k = 0; k <= 20; ++k) {
            const KnotResult r = knot_classify(k == 0 ? g.curve : transformed(g.curve, rng));
            ++total;
            ok += r.label == g.label && r.invariants.determinant == g.det && !r.fault;
        }
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " curves labelled 0_1/3_1/4_1 with det 1/3/5"};
}

Verdict converge_nu() {
    const RunOutcome& out = scenario("converge_batch", converge_batch);
    bool pass = true;
    std::string detail;
    for (const char* name : {"nu_relative_gap", "deficit_slope", "single_seed_within_20pct"}) {
        const auto* c = find_check(out, name);
        if (!c) return {false, std::string("missing check ") + name};
        pass = pass && c->pass;
        detail += std::string(name) + " " + f6(c->value) + (c->pass ? " ok" : " FAILED") + "; ";
    }
    return {pass, detail + "200 seeds"};
}

Verdict sandwich() {
    std::size_t passed = 0, total = 0;
    std::string failures;
    for (Model model : {Model::BargmannFock, Model::BerryMono}) {
        KernelSpec spec = make_spec(model, 2, 1);
        spec.domain_half_width = 11.0;
        for (std::uint64_t seed = 1; seed <= 25; ++seed) {
            const auto field = sample_field(spec, seed);
            const WindowReport rep = window_census(field, 6.0, 2.0, 0.5, 0.1);
            ++total;
            if (rep.pass) {
                ++passed;
            } else {
                failures += model_name(model) + "#" + std::to_string(seed) + " ";
            }
        }
    }
    return {passed == total, std::to_string(passed) + "/" + std::to_string(total) + " realizations (R=6, r=2, stride 0.5) " + failures};
}

Verdict sphere_threshold() {
    const std::size_t samples = 10000000;
    std::vector<double> runs, ses;
    for (int r = 0; r < 10; ++r) {
        const auto e = sphere_det_integral(3, 2, -0.5, samples, 100 + static_cast<std::uint64_t>(r));
        runs.push_back(e.value);
        ses.push_back(e.half_width / 1.96);
    }
    double mean = 0.0, pooled = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        mean += runs[i] / runs.size();
        pooled += ses[i] * ses[i] / ses.size();
    }
    pooled = std::sqrt(pooled);
    // Largest deviation of a run from the grand mean. The raw range of ten
    // independent runs averages about 3.1 SE, so it is reported but not gated.
    double spread = 0.0;
    for (double v : runs) spread = std::max(spread, std::abs(v - mean));
    const double range = *std::max_element(runs.begin(), runs.end()) - *std::min_element(runs.begin(), runs.end());
    const bool stable = spread <= 3.0 * pooled;

    const std::vector<double> alphas = {-0.5, -0.6, -0.7, -0.8, -0.9, -0.95};
    std::vector<double> values;
    for (double a : alphas) values.push_back(sphere_det_integral(3, 2, a, samples, 1).value);
    bool monotone = true;
    for (std::size_t i = 1; i < values.size(); ++i) monotone = monotone && values[i] > values[i - 1];
    const double ratio = values.back() / values.front();
    return {stable && monotone && ratio >= 2.0,
            "alpha=-0.5 max deviation " + f6(spread / pooled) + " pooled SE (<= 3), range " + f6(range / pooled) + " SE; sweep to -0.95 " +
                (monotone ? "increasing" : "NOT increasing") + ", ratio " + f6(ratio) + " (>= 2)"};
}

Verdict schur_bound() {
    std::size_t pairs = 0, passed = 0;
    std::string failures;
    for (Model model : {Model::BargmannFock, Model::BlackBody, Model::BerryMono, Model::TorusArithmetic, Model::CustomSpectral}) {
        for (int n : {2, 3}) {
            const KernelSpec spec = make_spec(model, n, 1);
            CounterRng rng(11, 0x5343, spec.hash());
            std::size_t ok = 0;
            for (int k = 0; k < 100; ++k) {
                Point x(n), d(n);
                for (int i = 0; i < n; ++i) x(i) = 2.0 * rng.uniform() - 1.0;
                for (int i = 0; i < n; ++i) d(i) = rng.normal();
                d *= 0.5 * rng.uniform() / d.norm();
                ok += two_point_schur_check(spec, x, x + d).pass;
            }
            pairs += 100;
            passed += ok;
            if (ok != 100) failures += model_name(model) + "/n=" + std::to_string(n) + " ";
        }
    }
    return {passed == pairs, std::to_string(passed) + "/" + std::to_string(pairs) + " pairs with |x-y| <= 0.5 " + failures};
}

Verdict ergodicity() {
    bool pass = true;
    std::string detail;
    for (Model model : {Model::BargmannFock, Model::BlackBody, Model::BerryMono, Model::CustomSpectral}) {
        for (int n : {2, 3}) {
            const auto pts = ergodicity_decay(make_spec(model, n, 1), {2, 4, 8, 16});
            for (std::size_t i = 1; i < pts.size(); ++i) {
                if (!(pts[i].value < pts[i - 1].value)) {
                    pass = false;
                    detail += model_name(model) + "/n=" + std::to_string(n) + " not decreasing; ";
                }
            }
            if (model == Model::BargmannFock) {
                const double slope = log_log_slope(pts);
                pass = pass && std::abs(slope + n) <= 0.2;
                detail += "bargmann_fock n=" + std::to_string(n) + " slope " + f6(slope) + "; ";
            }
        }
    }
    return {pass, detail + "isotropic kernels decreasing over R in {2,4,8,16}"};
}

Verdict kostlan_limit() {
    std::vector<double> sups;
    std::string detail;
    double at200 = INFINITY;
    for (int d : {50, 100, 200, 400}) {
        const auto row = kostlan_local_limit(3, d);
        sups.push_back(row.sup_difference);
        if (d == 200) at200 = row.sup_difference;
        detail += "d=" + std::to_string(d) + ":" + f6(row.sup_difference) + " ";
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < sups.size(); ++i) decreasing = decreasing && sups[i] < sups[i - 1];
    return {decreasing && at200 <= 0.02, detail + (decreasing ? "decreasing" : "NOT decreasing")};
}

Verdict bulinskaya() {
    KernelSpec spec = make_spec(Model::BargmannFock, 2, 1);
    spec.domain_half_width = 5.0;
    const std::vector<double> tau = {0.0, 0.001, 0.003, 0.01, 0.03, 0.1};
    const auto b = bulinskaya_probe(spec, 4.0, tau, 1, 500, 0.05);
    bool monotone = true;
    std::string detail;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (i) monotone = monotone && b.probability[i] >= b.probability[i - 1];
        detail += f6(tau[i]) + ":" + f6(b.probability[i]) + " ";
    }
    return {monotone && b.probability[3] <= 0.05, detail + (monotone ? "monotone" : "NOT monotone")};
}

Verdict topology_golden() {
    struct Case {
        std::shared_ptr<AnalyticField> field;
        GridSpec grid;
        std::array<long, 3> betti;
        const char* name;
    };
    const std::vector<Case> cases = {
        {unit_sphere(), cube_grid(1.2, 0.05, 0.1), {1, 0, 1}, "sphere"},
        {ring_torus(), cube_grid(1.4, 0.05, 0.1), {1, 2, 1}, "torus"},
        {genus_two(), cube_grid(1.2, 0.02, 0.1), {1, 4, 1}, "genus-2"},
    };
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto ex = extract_hypersurface(*c.field, c.grid);
        std::array<long, 3> b = {-1, -1, -1};
        if (ex.components.size() == 1) b = betti_surface(ex.components[0]);
        pass = pass && b == c.betti;
        detail += std::string(c.name) + " (" + std::to_string(b[0]) + "," + std::to_string(b[1]) + "," +
                  std::to_string(b[2]) + ") ";
    }
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only, expect_fail;
    g_work = fs::temp_directory_path() / "nodal_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) only = split_list(argv[++i]);
        else if (a == "--expect-fail" && i + 1 < argc) expect_fail = split_list(argv[++i]);
        else if (a == "--work" && i + 1 < argc) g_work = argv[++i];
        else {
            std::fprintf(stderr, "unknown argument %s\n", a.c_str());
            return 2;
        }
    }
    fs::create_directories(g_work);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"kacrice_closed_form", kacrice_closed_form},
        {"kacrice_vs_extraction", kacrice_vs_extraction},
        {"fenchel_willmore_audit", fenchel_willmore_audit},
        {"fary_milnor", fary_milnor},
        {"knot_golden", knot_golden},
        {"converge_nu", converge_nu},
        {"sandwich", sandwich},
        {"sphere_threshold", sphere_threshold},
        {"schur_bound", schur_bound},
        {"ergodicity_decay", ergodicity},
        {"kostlan_local_limit", kostlan_limit},
        {"bulinskaya", bulinskaya},
        {"topology_golden", topology_golden},
    };
    int unexpected = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool expected = expect_fail.count(id) != 0;
        if (!v.pass && !expected) ++unexpected;
        if (v.pass && expected) ++unexpected;  // a listed deviation that now passes must be unlisted
        std::printf("%s %-24s %s (%.1fs)%s\n", v.pass ? "PASS" : "FAIL", id.c_str(), v.detail.c_str(), secs,
                    expected ? (v.pass ? " [listed as expected failure]" : " [expected failure]") : "");
        std::fflush(stdout);
    }
    return unexpected == 0 ? 0 : 1;
}
