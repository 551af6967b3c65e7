#include "nodal/experiments.hpp"

#include "nodal/covariance.hpp"
#include "nodal/extraction.hpp"
#include "nodal/field.hpp"
#include "nodal/kacrice.hpp"
#include "nodal/realization.hpp"
#include "nodal/special.hpp"
#include "nodal/topology.hpp"
#include "nodal/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace nodal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCurveSlack = 0.95;

const std::vector<std::pair<Scenario, const char*>>& scenario_names() {
    static const std::vector<std::pair<Scenario, const char*>> names = {
        {Scenario::ConvergeNu, "converge_nu"},
        {Scenario::KnotCensus, "knot_census"},
        {Scenario::BettiScaling, "betti_scaling"},
        {Scenario::WillmoreAudit, "willmore_audit"},
        {Scenario::KostlanLocalLimit, "kostlan_local_limit"},
        {Scenario::KacRiceVsEmpirical, "kacrice_vs_empirical"},
        {Scenario::Diagnostics, "diagnostics"},
    };
    return names;
}

std::string fmt(double v) { return format_double(v); }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a temporary sibling, then rename over the target.
void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
    }
    return true;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// 95% normal-approximation half width of the mean.
double ci_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<DecayPoint> pts;
    for (std::size_t i = 0; i < x.size(); ++i) pts.push_back({x[i], y[i]});
    return log_log_slope(pts);
}

bool is_knot_label(const std::string& label) {
    return label != "unknot" && label != "not_applicable" && label != "unknown";
}

}  // namespace

std::string scenario_name(Scenario scenario) {
    for (const auto& [s, name] : scenario_names()) {
        if (s == scenario) return name;
    }
    return "unknown";
}

Scenario parse_scenario(const std::string& name) {
    for (const auto& [s, n] : scenario_names()) {
        if (name == n) return s;
    }
    throw ConfigError("unknown scenario " + name);
}

std::vector<KnotFrequency> knot_frequencies(const std::vector<std::map<std::string, std::size_t>>& realizations) {
    std::map<std::string, std::size_t> counts;
    std::size_t N = 0;
    for (const auto& classes : realizations) {
        for (const auto& [label, count] : classes) {
            counts[label] += count;
            N += count;
        }
    }
    std::vector<KnotFrequency> rows;
    for (const auto& [label, count] : counts) {
        const auto [lo, hi] = wilson_interval(count, N);
        rows.push_back({label, count, N, N ? static_cast<double>(count) / static_cast<double>(N) : 0.0, lo, hi});
    }
    return rows;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t N) {
    if (N == 0) return {0.0, 1.0};
    const double z = 1.96;
    const double n = static_cast<double>(N);
    const double p = static_cast<double>(k) / n;
    const double denom = 1.0 + z * z / n;
    const double center = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Configuration

std::string ExperimentConfig::sweep_key() const {
    switch (scenario) {
        case Scenario::KostlanLocalLimit: return "d";
        case Scenario::KnotCensus: return spec.model == Model::TorusArithmetic ? "L" : "R";
        default: return "R";
    }
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& c) {
    ExperimentConfig e;
    const auto scenario = c.get("scenario");
    if (!scenario) throw ConfigError("missing key: scenario");
    e.scenario = parse_scenario(*scenario);
    e.spec = KernelSpec::from_config(c);
    const std::string key = e.sweep_key() + "_list";
    e.sweep = c.get_list(key);
    if (e.sweep.empty()) {
        if (e.scenario == Scenario::KnotCensus && e.spec.model == Model::TorusArithmetic) {
            e.sweep = {static_cast<double>(e.spec.lattice_norm)};
        } else if (e.scenario == Scenario::KostlanLocalLimit) {
            e.sweep = {50, 100, 200, 400};
        } else if (e.scenario == Scenario::Diagnostics) {
            e.sweep = {2, 4, 8, 16};
        } else if (e.spec.model == Model::TorusArithmetic) {
            e.sweep = {0.5};  // one period
        } else {
            e.sweep = {c.get_double("grid.R", e.R)};
        }
    }
    const auto seeds = parse_seed_range(c.get_string("seeds", "1"));
    e.seed_first = seeds.first;
    e.seed_last = seeds.second;
    e.h = c.get_double("grid.h", e.h);
    e.padding = c.get_double("grid.padding", e.padding);
    e.R = c.get_double("grid.R", e.R);
    e.output_dir = c.get_string("output_dir", e.output_dir);
    e.threads = static_cast<int>(c.get_int("threads", e.threads));
    e.project_vertices = c.get_int("extract.project", 1) != 0;
    e.refine_cells = static_cast<int>(c.get_int("refine.cells", e.refine_cells));
    e.kacrice_samples = static_cast<std::size_t>(c.get_int("kacrice.samples", static_cast<long long>(e.kacrice_samples)));
    e.tolerance = c.get_double("kacrice.tolerance", e.tolerance);
    e.sphere_samples = static_cast<std::size_t>(c.get_int("sphere.samples", static_cast<long long>(e.sphere_samples)));
    e.sphere_runs = static_cast<int>(c.get_int("sphere.runs", e.sphere_runs));
    e.bulinskaya_h = c.get_double("bulinskaya.h", e.bulinskaya_h);
    e.validate();
    return e;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

KeyValueConfig ExperimentConfig::to_config() const {
    KeyValueConfig c = spec.to_config();
    c.set("scenario", scenario_name(scenario));
    std::string list;
    for (std::size_t i = 0; i < sweep.size(); ++i) list += (i ? ", " : "") + fmt(sweep[i]);
    c.set(sweep_key() + "_list", list);
    c.set("seeds", std::to_string(seed_first) + ".." + std::to_string(seed_last));
    c.set("grid.h", fmt(h));
    c.set("grid.padding", fmt(padding));
    c.set("grid.R", fmt(R));
    c.set("extract.project", project_vertices ? "1" : "0");
    c.set("refine.cells", std::to_string(refine_cells));
    c.set("kacrice.samples", std::to_string(kacrice_samples));
    c.set("kacrice.tolerance", fmt(tolerance));
    c.set("sphere.samples", std::to_string(sphere_samples));
    c.set("sphere.runs", std::to_string(sphere_runs));
    c.set("bulinskaya.h", fmt(bulinskaya_h));
    return c;
}

// output_dir and threads do not change results and stay out of the hash.
std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_config().dump()); }

void ExperimentConfig::validate() const {
    spec.validate();
    if (seed_last < seed_first) throw ConfigError("seeds range is empty");
    if (sweep.empty()) throw ConfigError(sweep_key() + "_list is empty");
    if (!strictly_increasing(sweep)) throw ConfigError(sweep_key() + "_list must be strictly increasing");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(h > 0.0) || !(padding >= 0.0) || !(R > 0.0)) throw ConfigError("grid needs h > 0, padding >= 0, R > 0");
    if (refine_cells < 8) throw ConfigError("refine.cells must be >= 8");
    if (spec.model == Model::TorusArithmetic && sweep_key() == "R" && scenario != Scenario::Diagnostics &&
        sweep != std::vector<double>{0.5}) {
        throw ConfigError("torus runs cover one period: R_list must be 0.5 or omitted");
    }
    const bool extraction = scenario != Scenario::KostlanLocalLimit && scenario != Scenario::Diagnostics;
    if (extraction && spec.model == Model::Kostlan) throw ConfigError("extraction on the sphere is not supported");
    switch (scenario) {
        case Scenario::ConvergeNu:
        case Scenario::BettiScaling:
            if (!spec.stationary()) throw ConfigError(scenario_name(scenario) + " needs a stationary model");
            if (spec.model == Model::TorusArithmetic) throw ConfigError(scenario_name(scenario) + " sweeps R, which the torus lacks");
            break;
        case Scenario::KnotCensus:
            if (spec.n != 3 || spec.m != 2) throw ConfigError("knot_census needs n = 3, m = 2");
            if (spec.model != Model::TorusArithmetic && spec.model != Model::BerryMono) {
                throw ConfigError("knot_census needs torus_arithmetic or berry_mono");
            }
            break;
        case Scenario::KostlanLocalLimit:
            if (spec.model != Model::Kostlan) throw ConfigError("kostlan_local_limit needs the kostlan model");
            for (double d : sweep) {
                if (d < 1 || d != std::floor(d)) throw ConfigError("d_list entries must be positive integers");
            }
            break;
        case Scenario::KacRiceVsEmpirical:
            if (!spec.stationary()) throw ConfigError("kacrice_vs_empirical needs a stationary model");
            break;
        default: break;
    }
    if (sweep_key() == "L") {
        for (double L : sweep) {
            if (L < 1 || L != std::floor(L)) throw ConfigError("L_list entries must be positive integers");
        }
    }
}

KernelSpec ExperimentConfig::spec_for(double param) const {
    KernelSpec s = spec;
    const std::string key = sweep_key();
    if (key == "L") s.lattice_norm = static_cast<int>(param);
    if (key == "d") s.degree = static_cast<int>(param);
    if (s.model == Model::BargmannFock) {
        // The certified cube must hold the grid and the Newton corrections.
        s.domain_half_width = std::max(s.domain_half_width, cube_for(param) + padding + 1.0);
        s.bf_degree = 0;
    }
    return s;
}

double ExperimentConfig::cube_for(double param) const {
    if (spec.model == Model::TorusArithmetic) return 0.5;
    return sweep_key() == "R" ? param : R;
}

std::string render_checks_json(const std::vector<CheckResult>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}, {"detail", c.detail}});
    }
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Kostlan local limit

LocalLimitRow kostlan_local_limit(int n, int degree) {
    KernelSpec spec;
    spec.model = Model::Kostlan;
    spec.n = n;
    spec.m = 1;
    spec.degree = degree;
    const Point x = Point::Unit(n, n - 1);
    const int k = n - 1;
    std::vector<Point> offsets;
    const int steps = 16;
    if (k == 1) {
        for (int i = 0; i <= steps; ++i) offsets.push_back(Point::Constant(1, -2.0 + 0.25 * i));
    } else {
        for (int i = 0; i <= steps; ++i) {
            for (int j = 0; j <= steps; ++j) {
                Point u(2);
                u << -2.0 + 0.25 * i, -2.0 + 0.25 * j;
                if (u.norm() <= 2.0 + 1e-12) offsets.push_back(u);
            }
        }
    }
    LocalLimitRow row;
    row.degree = degree;
    const double L = std::sqrt(static_cast<double>(degree));
    for (std::size_t a = 0; a < offsets.size(); ++a) {
        for (std::size_t b = a; b < offsets.size(); ++b) {
            const double K = rescaled_covariance(spec, x, offsets[a], offsets[b], L).K(0, 0);
            const double diff = std::abs(K - std::exp(-0.5 * (offsets[a] - offsets[b]).squaredNorm()));
            row.sup_difference = std::max(row.sup_difference, diff);
            if (a == b) row.diagonal_difference = std::max(row.diagonal_difference, diff);
        }
    }
    return row;
}

// ---------------------------------------------------------------------------
// Cells

namespace {

struct Cell {
    double param;
    std::uint64_t seed;
};

std::string cell_name(const std::string& key, double param) { return key + "=" + fmt(param); }

GridSpec grid_for(const ExperimentConfig& cfg, double param) {
    GridSpec g;
    g.h = cfg.h;
    if (cfg.spec.model == Model::TorusArithmetic) {
        g.R = 0.5;
        g.padding = 0.0;
        g.center = Point::Constant(cfg.spec.n, 0.5);
    } else {
        g.R = cfg.cube_for(param);
        g.padding = cfg.padding;
    }
    return g;
}

json component_json(const ComponentRecord& r, int index, const std::string& status, bool refined) {
    const auto& g = r.geometry;
    const bool curve = g.kind == GeometryKind::Polyline;
    const std::string cls = class_key(r);
    json c;
    c["index"] = index;
    c["kind"] = curve ? "polyline" : "mesh";
    c["vertices"] = g.vertices.size();
    c["size"] = curve ? polyline_length(g) : mesh_area(g);
    c["total_curvature"] = r.total_curvature;
    c["willmore_energy"] = r.willmore_energy;
    c["class"] = cls;
    c["status"] = status;
    c["refined"] = refined;
    c["fault"] = r.fault;
    const bool audited = status == "ok" && !r.fault;
    c["fenchel_pass"] = !(audited && curve) || r.total_curvature >= 2.0 * kPi * kCurveSlack;
    c["fary_milnor_pass"] = !(audited && curve && is_knot_label(r.knot_label)) || r.total_curvature >= 4.0 * kPi * kCurveSlack;
    c["willmore_pass"] = !(audited && !curve) || r.willmore_energy >= 4.0 * kPi * kCurveSlack;
    return c;
}

json run_extraction_cell(const ExperimentConfig& cfg, const Cell& cell) {
    const KernelSpec spec = cfg.spec_for(cell.param);
    const FieldRealization field = sample_field(spec, cell.seed);
    const GridSpec grid = grid_for(cfg, cell.param);
    const double cube = grid.R;
    ExtractOptions options;
    options.project_vertices = cfg.project_vertices;
    const ExtractionReport report = extract_zero_set(field, grid, options);
    const CubeSplit split = classify_against_cube(report.components, cube, grid.origin(spec.n));

    const bool knots = spec.n == 3 && spec.m == 2 && cfg.scenario != Scenario::ConvergeNu &&
                       cfg.scenario != Scenario::BettiScaling;
    const bool willmore = cfg.scenario == Scenario::WillmoreAudit;
    std::vector<ComponentRecord> records;
    json comps = json::array();
    std::size_t artifacts = 0;
    int index = 0;
    for (const auto& g : split.inside) {
        std::string status = "ok";
        bool refined = false;
        ComponentRecord record;
        if (willmore && g.kind == GeometryKind::Mesh) {
            // Curvature needs a resolved surface; pieces that vanish on the
            // finer local grid were grid artifacts.
            const auto fine = refine_closed_component(field, g, grid.step(), cfg.refine_cells);
            if (!fine) {
                ++artifacts;
                record = make_record(g, nullptr, false);
                status = "artifact";
            } else {
                refined = true;
                record = make_record(*fine, &field, false);
            }
        } else {
            record = make_record(g, nullptr, knots);
        }
        if (status == "ok") records.push_back(record);
        comps.push_back(component_json(record, index++, status, refined));
    }
    for (const auto& g : split.touching) {
        ComponentRecord r;
        r.geometry = g;
        records.push_back(r);
    }
    const CensusResult c = census(records, spec.n, spec.m);

    double volume = 0.0;
    const Point center = grid.origin(spec.n);
    for (const auto& g : report.components) {
        if (g.kind == GeometryKind::Polyline) {
            volume += length_in_cube(g, cube, center);
            continue;
        }
        // Triangles are assigned to the cube by their centroid.
        for (const auto& t : g.faces) {
            const Eigen::Vector3d& a = g.vertices[static_cast<std::size_t>(t[0])];
            const Eigen::Vector3d& b = g.vertices[static_cast<std::size_t>(t[1])];
            const Eigen::Vector3d& c = g.vertices[static_cast<std::size_t>(t[2])];
            const Eigen::Vector3d mid = (a + b + c) / 3.0;
            if (((mid.head(spec.n) - center).array().abs() <= cube).all()) volume += 0.5 * (b - a).cross(c - a).norm();
        }
    }

    json out;
    out["param"] = cell.param;
    out["seed"] = cell.seed;
    out["model"] = model_name(spec.model);
    out["R"] = cube;
    out["h"] = report.step;
    out["N"] = c.N;
    out["N_star"] = c.N_star;
    out["betti"] = c.betti_sums;
    out["volume"] = volume;
    out["classes"] = c.class_counts;
    out["under_resolved"] = report.under_resolved;
    out["faults"] = report.faults + c.faults;
    out["artifacts"] = artifacts;
    out["components"] = comps;
    return out;
}

// ---------------------------------------------------------------------------
// Ledger

struct Ledger {
    fs::path dir;
    std::string scenario;
    std::string config_hash;
    std::map<std::string, std::string> done;  // shard relative path -> content hash

    fs::path file() const { return dir / "ledger.json"; }

    void save() const {
        json j;
        j["schema"] = "nodal-ledger/1";
        j["scenario"] = scenario;
        j["config_hash"] = config_hash;
        j["cells"] = done;
        atomic_write(file(), j.dump(2) + "\n");
    }

    // Completed cells whose shard still hashes to the recorded value.
    static Ledger load(const fs::path& dir, const std::string& config_hash) {
        Ledger l;
        l.dir = dir;
        l.config_hash = config_hash;
        if (!fs::exists(l.file())) return l;
        json j;
        try {
            j = json::parse(read_file(l.file()));
        } catch (const json::exception& e) {
            throw ConfigError("ledger is corrupt: " + std::string(e.what()));
        }
        if (j.value("config_hash", "") != config_hash) {
            throw ConfigError("ledger " + l.file().string() + " belongs to a different config (hash " +
                              j.value("config_hash", "?") + ", expected " + config_hash + ")");
        }
        for (const auto& [shard, hash] : j.at("cells").items()) {
            const fs::path p = dir / shard;
            if (!fs::exists(p)) continue;
            if (hex64(fnv1a64(read_file(p))) != hash.get<std::string>()) continue;
            l.done[shard] = hash.get<std::string>();
        }
        return l;
    }
};

std::string shard_path(const std::string& key, double param, std::uint64_t seed) {
    return "shards/" + cell_name(key, param) + "/" + std::to_string(seed) + ".json";
}

// ---------------------------------------------------------------------------
// Reduction

const char* kCellsHeader =
    "schema,config_hash,param,seed,model,R,h,N,N_star,beta0,beta1,beta2,volume,classes,under_resolved,faults,artifacts\n";
const char* kComponentsHeader =
    "schema,config_hash,param,seed,index,kind,vertices,size,total_curvature,willmore_energy,class,status,"
    "refined,fault,fenchel_pass,fary_milnor_pass,willmore_pass\n";

std::string cells_row(const std::string& hash, const json& c) {
    std::ostringstream s;
    const auto betti = c.at("betti").get<std::vector<long>>();
    std::string classes;
    for (const auto& [k, v] : c.at("classes").items()) classes += (classes.empty() ? "" : ";") + k + ":" + std::to_string(v.get<long>());
    s << "census/1," << hash << ',' << fmt(c.at("param").get<double>()) << ',' << c.at("seed").get<std::uint64_t>() << ','
      << c.at("model").get<std::string>() << ',' << fmt(c.at("R").get<double>()) << ',' << fmt(c.at("h").get<double>()) << ','
      << c.at("N").get<long>() << ',' << c.at("N_star").get<long>();
    for (std::size_t l = 0; l < 3; ++l) s << ',' << (l < betti.size() ? std::to_string(betti[l]) : std::string("0"));
    s << ',' << fmt(c.at("volume").get<double>()) << ',' << classes << ',' << (c.at("under_resolved").get<bool>() ? 1 : 0)
      << ',' << c.at("faults").get<long>() << ',' << c.at("artifacts").get<long>() << '\n';
    return s.str();
}

std::string component_row(const std::string& hash, const json& cell, const json& c) {
    std::ostringstream s;
    s << "components/1," << hash << ',' << fmt(cell.at("param").get<double>()) << ',' << cell.at("seed").get<std::uint64_t>()
      << ',' << c.at("index").get<int>() << ',' << c.at("kind").get<std::string>() << ',' << c.at("vertices").get<long>()
      << ',' << fmt(c.at("size").get<double>()) << ',' << fmt(c.at("total_curvature").get<double>()) << ','
      << fmt(c.at("willmore_energy").get<double>()) << ',' << c.at("class").get<std::string>() << ','
      << c.at("status").get<std::string>() << ',' << (c.at("refined").get<bool>() ? 1 : 0) << ','
      << (c.at("fault").get<bool>() ? 1 : 0) << ',' << (c.at("fenchel_pass").get<bool>() ? 1 : 0) << ','
      << (c.at("fary_milnor_pass").get<bool>() ? 1 : 0) << ',' << (c.at("willmore_pass").get<bool>() ? 1 : 0) << '\n';
    return s.str();
}

bool cell_faulty(const json& c) { return c.at("faults").get<long>() > 0 || c.at("under_resolved").get<bool>(); }

struct Reduced {
    std::vector<std::vector<json>> cells;  // per sweep value, seeds ascending
};

void add_check(RunOutcome& out, std::string name, double value, double threshold, bool pass, std::string detail = "") {
    out.checks.push_back({std::move(name), value, threshold, pass, std::move(detail)});
}

std::string summary_header(const std::string& cols) { return "schema,config_hash," + cols + "\n"; }

void reduce_converge(const ExperimentConfig& cfg, const Reduced& red, const std::string& hash, std::string& csv,
                     RunOutcome& out) {
    csv = summary_header("R,realizations,excluded,nu_hat,nu_ci,deficit_mean,deficit_rate,single_seed_nu");
    std::vector<double> Rs, nus, deficits;
    double single = 0.0;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const double R = cfg.sweep[i];
        const double volume = std::pow(2.0 * R, cfg.spec.n);
        std::vector<double> nu, def;
        std::size_t excluded = 0;
        for (const auto& c : red.cells[i]) {
            if (cell_faulty(c)) {
                ++excluded;
                continue;
            }
            nu.push_back(c.at("N").get<double>() / volume);
            def.push_back(c.at("N_star").get<double>() - c.at("N").get<double>());
        }
        const double first = red.cells[i].empty() ? 0.0 : red.cells[i].front().at("N").get<double>() / volume;
        if (i + 1 == cfg.sweep.size()) single = first;
        Rs.push_back(R);
        nus.push_back(mean_of(nu));
        deficits.push_back(mean_of(def) / volume);
        csv += "converge_nu/1," + hash + "," + fmt(R) + "," + std::to_string(nu.size()) + "," + std::to_string(excluded) +
               "," + fmt(mean_of(nu)) + "," + fmt(ci_of(nu)) + "," + fmt(mean_of(def)) + "," + fmt(mean_of(def) / volume) +
               "," + fmt(first) + "\n";
    }
    if (Rs.size() >= 2) {
        const double a = nus[nus.size() - 2], b = nus.back();
        const double gap = b > 0 ? std::abs(b - a) / b : INFINITY;
        add_check(out, "nu_relative_gap", gap, 0.10, gap <= 0.10, "|nu(R_last) - nu(R_prev)| / nu(R_last)");
        const double slope = slope_of(Rs, deficits);
        add_check(out, "deficit_slope", slope, -1.0, std::abs(slope + 1.0) <= 0.3, "log-log slope of (N* - N)/|C_R|, -1 +- 0.3");
    }
    const double rel = nus.back() > 0 ? std::abs(single - nus.back()) / nus.back() : INFINITY;
    add_check(out, "single_seed_within_20pct", rel, 0.20, rel <= 0.20, "first seed at the largest R vs the ensemble mean");
}

void reduce_knot_census(const ExperimentConfig& cfg, const Reduced& red, const std::string& hash, std::string& csv,
                        RunOutcome& out) {
    csv = summary_header(cfg.sweep_key() + ",label,count,N,mu,ci_low,ci_high");
    std::size_t nontrivial = 0;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        std::vector<std::map<std::string, std::size_t>> realizations;
        for (const auto& c : red.cells[i]) realizations.push_back(c.at("classes").get<std::map<std::string, std::size_t>>());
        const auto rows = knot_frequencies(realizations);
        double total = 0.0;
        for (const auto& r : rows) {
            total += r.mu;
            if (is_knot_label(r.label)) nontrivial += r.count;
            csv += "knot_census/1," + hash + "," + fmt(cfg.sweep[i]) + "," + r.label + "," + std::to_string(r.count) + "," +
                   std::to_string(r.N) + "," + fmt(r.mu) + "," + fmt(r.ci_low) + "," + fmt(r.ci_high) + "\n";
        }
        if (!rows.empty()) {
            add_check(out, "mu_sums_to_one_" + cell_name(cfg.sweep_key(), cfg.sweep[i]), total, 1.0, std::abs(total - 1.0) < 1e-12);
        }
    }
    add_check(out, "nontrivial_knots_observed", static_cast<double>(nontrivial), 0.0, true, "positivity report");
}

void reduce_betti(const ExperimentConfig& cfg, const Reduced& red, const std::string& hash, std::string& csv,
                  RunOutcome& out) {
    csv = summary_header("R,l,realizations,beta_mean,beta_rate,beta_rate_ci,gap");
    const int L = cfg.spec.n - cfg.spec.m;
    std::vector<double> previous(static_cast<std::size_t>(L + 1), NAN);
    bool finite = true;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const double volume = std::pow(2.0 * cfg.sweep[i], cfg.spec.n);
        for (int l = 0; l <= L; ++l) {
            std::vector<double> rate;
            for (const auto& c : red.cells[i]) {
                if (cell_faulty(c)) continue;
                rate.push_back(c.at("betti").at(static_cast<std::size_t>(l)).get<double>() / volume);
            }
            const double mu = mean_of(rate);
            const double gap = std::isnan(previous[static_cast<std::size_t>(l)]) || mu == 0.0 ? NAN
                                                                                            : std::abs(mu - previous[static_cast<std::size_t>(l)]) / mu;
            previous[static_cast<std::size_t>(l)] = mu;
            finite = finite && std::isfinite(mu);
            csv += "betti_scaling/1," + hash + "," + fmt(cfg.sweep[i]) + "," + std::to_string(l) + "," +
                   std::to_string(rate.size()) + "," + fmt(mu * volume) + "," + fmt(mu) + "," + fmt(ci_of(rate)) + "," +
                   (std::isnan(gap) ? std::string("") : fmt(gap)) + "\n";
        }
    }
    add_check(out, "betti_rates_bounded", finite ? 1.0 : 0.0, 1.0, finite, "beta_l(R)/|C_R| finite at every R");
}

// Equality cases of the curvature inequalities on synthetic unit circle and sphere.
void synthetic_equality_checks(RunOutcome& out) {
    auto circle = AnalyticField(2, 1, [](const Point& x, int order) {
        return quadric_jet(x, order, 1.0, Point::Zero(2), -Matrix::Identity(2, 2));
    });
    GridSpec g2;
    g2.R = 1.5;
    g2.h = 0.02;
    g2.padding = 0.1;
    const auto c = extract_zero_set(circle, g2);
    const double tc = c.components.size() == 1 ? total_curvature(c.components[0]) : 0.0;
    add_check(out, "equality_circle", tc / (2.0 * kPi), 1.0, std::abs(tc / (2.0 * kPi) - 1.0) <= 0.05, "total curvature / 2 pi");

    auto sphere = AnalyticField(3, 1, [](const Point& x, int order) {
        return quadric_jet(x, order, 1.0, Point::Zero(3), -Matrix::Identity(3, 3));
    });
    GridSpec g3;
    g3.R = 1.2;
    g3.h = 0.05;
    g3.padding = 0.1;
    const auto s = extract_zero_set(sphere, g3);
    const double w = s.components.size() == 1 ? willmore_energy(s.components[0], sphere) : 0.0;
    add_check(out, "equality_sphere", w / (4.0 * kPi), 1.0, std::abs(w / (4.0 * kPi) - 1.0) <= 0.05, "Willmore energy / 4 pi");
}

void reduce_willmore(const Reduced& red, std::string& csv, const std::string& hash, RunOutcome& out) {
    std::size_t curves = 0, knots = 0, meshes = 0, artifacts = 0;
    std::size_t fenchel = 0, fary = 0, will = 0;
    double min_curve = INFINITY, min_knot = INFINITY, min_mesh = INFINITY;
    for (const auto& row : red.cells) {
        for (const auto& c : row) {
            for (const auto& comp : c.at("components")) {
                if (comp.at("status") != "ok") {
                    ++artifacts;
                    continue;
                }
                if (comp.at("fault").get<bool>()) continue;
                if (comp.at("kind") == "polyline") {
                    ++curves;
                    fenchel += comp.at("fenchel_pass").get<bool>();
                    min_curve = std::min(min_curve, comp.at("total_curvature").get<double>() / (2 * kPi));
                    if (is_knot_label(comp.at("class").get<std::string>())) {
                        ++knots;
                        fary += comp.at("fary_milnor_pass").get<bool>();
                        min_knot = std::min(min_knot, comp.at("total_curvature").get<double>() / (4 * kPi));
                    }
                } else {
                    ++meshes;
                    will += comp.at("willmore_pass").get<bool>();
                    min_mesh = std::min(min_mesh, comp.at("willmore_energy").get<double>() / (4 * kPi));
                }
            }
        }
    }
    csv = summary_header("check,audited,passed,min_ratio");
    auto line = [&](const char* name, std::size_t n, std::size_t p, double mn) {
        csv += "willmore_audit/1," + hash + "," + name + "," + std::to_string(n) + "," + std::to_string(p) + "," +
               (n ? fmt(mn) : std::string("")) + "\n";
        add_check(out, name, static_cast<double>(p), static_cast<double>(n), p == n,
                  std::to_string(p) + " of " + std::to_string(n) + " components");
    };
    line("fenchel", curves, fenchel, min_curve);
    line("fary_milnor", knots, fary, min_knot);
    line("willmore", meshes, will, min_mesh);
    add_check(out, "artifacts_dropped", static_cast<double>(artifacts), 0.0, true,
              "closed pieces that did not survive local refinement");
    synthetic_equality_checks(out);
}

void reduce_kacrice(const ExperimentConfig& cfg, const Reduced& red, const std::string& hash, std::string& csv,
                    std::string& json_out, RunOutcome& out) {
    const MomentEstimate vol = first_moment_density(cfg.spec_for(cfg.sweep.front()), KacRiceWeight::Volume, cfg.kacrice_samples);
    const MomentEstimate wil = first_moment_density(cfg.spec_for(cfg.sweep.front()), KacRiceWeight::Willmore, cfg.kacrice_samples);
    csv = summary_header("R,realizations,empirical_density,empirical_ci,kacrice_density,kacrice_half_width,relative_difference,"
                         "N_mean,N_bound,pass");
    json bundle;
    bundle["schema"] = "kacrice_vs_empirical/1";
    bundle["config_hash"] = hash;
    bundle["model"] = model_name(cfg.spec.model);
    bundle["volume_density"] = json::parse(to_json(vol));
    bundle["willmore_density"] = json::parse(to_json(wil));
    bundle["rows"] = json::array();
    const int k = cfg.spec.n - cfg.spec.m;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const double cube = cfg.cube_for(cfg.sweep[i]);
        const double volume = std::pow(2.0 * cube, cfg.spec.n);
        std::vector<double> density, N;
        for (const auto& c : red.cells[i]) {
            density.push_back(c.at("volume").get<double>() / volume);
            N.push_back(c.at("N").get<double>());
        }
        const double emp = mean_of(density);
        const double rel = std::abs(emp - vol.value) / vol.value;
        const bool pass = rel <= cfg.tolerance;
        // Components are bounded by the curvature integral over |S^{n-m}|.
        const double bound = wil.value * volume / sphere_volume(k);
        const double se = ci_of(N) / 1.96;
        const bool bound_pass = mean_of(N) <= bound + 3.0 * se;
        csv += "kacrice_vs_empirical/1," + hash + "," + fmt(cube) + "," + std::to_string(density.size()) + "," + fmt(emp) +
               "," + fmt(ci_of(density)) + "," + fmt(vol.value) + "," + fmt(vol.half_width) + "," + fmt(rel) + "," +
               fmt(mean_of(N)) + "," + fmt(bound) + "," + (pass ? "1" : "0") + "\n";
        add_check(out, "volume_density_" + cell_name("R", cube), rel, cfg.tolerance, pass, "relative difference");
        add_check(out, "component_bound_" + cell_name("R", cube), mean_of(N), bound, bound_pass,
                  "mean N <= willmore density |C_R| / |S^{n-m}| + 3 SE");
        bundle["rows"].push_back({{"R", cube}, {"empirical", emp}, {"empirical_ci", ci_of(density)}, {"relative_difference", rel}});
    }
    json_out = bundle.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string run_diagnostics(const ExperimentConfig& cfg, RunOutcome& out) {
    const KernelSpec spec = cfg.spec_for(cfg.R);
    json bundle;
    bundle["schema"] = "diagnostics/1";
    bundle["config_hash"] = hex64(cfg.hash());
    bundle["model"] = model_name(spec.model);

    // Schur bound at 100 random pairs with |x - y| <= 0.5.
    if (spec.stationary()) {
        CounterRng rng(cfg.seed_first, 0x5343, spec.hash());
        std::size_t passed = 0;
        double worst = INFINITY;
        for (int k = 0; k < 100; ++k) {
            Point x(spec.n), d(spec.n);
            for (int i = 0; i < spec.n; ++i) x(i) = spec.model == Model::TorusArithmetic ? rng.uniform() : 2.0 * rng.uniform() - 1.0;
            for (int i = 0; i < spec.n; ++i) d(i) = rng.normal();
            d *= 0.5 * rng.uniform() / d.norm();
            const SchurCheck s = two_point_schur_check(spec, x, x + d);
            passed += s.pass;
            if (s.bound > 0) worst = std::min(worst, s.eigenvalue / s.bound);
        }
        bundle["schur"] = {{"pairs", 100}, {"passed", passed}, {"min_ratio", worst}};
        add_check(out, "schur", static_cast<double>(passed), 100.0, passed == 100, "pairs passing");
    }

    // Ergodicity decay.
    if (spec.isotropic()) {
        const auto pts = ergodicity_decay(spec, cfg.sweep);
        bool decreasing = true;
        json rows = json::array();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            rows.push_back({{"R", pts[i].R}, {"value", pts[i].value}});
            if (i && !(pts[i].value < pts[i - 1].value)) decreasing = false;
        }
        const double slope = log_log_slope(pts);
        bundle["ergodicity"] = {{"points", rows}, {"slope", slope}};
        add_check(out, "ergodicity_decreasing", decreasing ? 1.0 : 0.0, 1.0, decreasing);
        if (spec.model == Model::BargmannFock) {
            add_check(out, "ergodicity_slope", slope, -spec.n, std::abs(slope + spec.n) <= 0.2, "fitted slope -n +- 0.2");
        }
    }

    // Quantitative Bulinskaya probe.
    if (spec.stationary()) {
        const std::vector<double> tau = {0.0, 0.001, 0.01, 0.05, 0.1};
        const KernelSpec probe_spec = cfg.spec_for(cfg.R);
        const auto b = bulinskaya_probe(probe_spec, spec.model == Model::TorusArithmetic ? 0.5 : cfg.R, tau,
                                        cfg.seed_first, cfg.seed_count(), cfg.bulinskaya_h);
        bool monotone = true;
        for (std::size_t i = 1; i < b.probability.size(); ++i) monotone = monotone && b.probability[i] >= b.probability[i - 1];
        bundle["bulinskaya"] = {{"tau", b.tau}, {"probability", b.probability}, {"seeds", cfg.seed_count()}};
        add_check(out, "bulinskaya_monotone", monotone ? 1.0 : 0.0, 1.0, monotone);
        if (spec.model == Model::BargmannFock) {
            add_check(out, "bulinskaya_tau_0.01", b.probability[2], 0.05, b.probability[2] <= 0.05, "P(min < 0.01)");
        }
    }

    // Sphere determinant integral, n = 3, m = 2.
    {
        const std::vector<double> alphas = {-0.25, -0.5, -0.75, -0.95};
        json rows = json::array();
        std::vector<double> values;
        for (double a : alphas) {
            const auto e = sphere_det_integral(3, 2, a, cfg.sphere_samples, cfg.seed_first);
            values.push_back(e.value);
            rows.push_back({{"alpha", a}, {"value", e.value}, {"half_width", e.half_width}});
        }
        bool monotone = true;
        for (std::size_t i = 1; i < values.size(); ++i) monotone = monotone && values[i] > values[i - 1];
        const double ratio = values.back() / values.front();
        bundle["sphere_integral"] = {{"sweep", rows}, {"ratio", ratio}};
        add_check(out, "sphere_integral_monotone", monotone ? 1.0 : 0.0, 1.0, monotone);
        add_check(out, "sphere_integral_ratio", ratio, 2.0, ratio >= 2.0, "value(-0.95) / value(-0.25)");

        // Stability at alpha = -0.5: largest deviation of an independent run from
        // the grand mean against the pooled SE.
        std::vector<double> runs, ses;
        for (int r = 0; r < cfg.sphere_runs; ++r) {
            const auto e = sphere_det_integral(3, 2, -0.5, cfg.sphere_samples, cfg.seed_first + 1000 + static_cast<std::uint64_t>(r));
            runs.push_back(e.value);
            ses.push_back(e.half_width / 1.96);
        }
        double pooled = 0.0;
        for (double s : ses) pooled += s * s;
        pooled = std::sqrt(pooled / static_cast<double>(ses.size()));
        const double grand = std::accumulate(runs.begin(), runs.end(), 0.0) / static_cast<double>(runs.size());
        double spread = 0.0;
        for (double v : runs) spread = std::max(spread, std::abs(v - grand));
        bundle["sphere_stability"] = {{"alpha", -0.5}, {"runs", runs}, {"pooled_se", pooled}, {"max_deviation", spread}};
        add_check(out, "sphere_integral_stable", spread / pooled, 3.0, spread <= 3.0 * pooled, "max |run - mean| / pooled SE");
    }

    if (spec.stationary()) {
        const double k2 = measure_k2(spec, spec.model == Model::TorusArithmetic ? 0.5 : 4.0, 400);
        bundle["k2"] = k2;
        add_check(out, "k2_finite", k2, 0.0, std::isfinite(k2) && k2 > 0.0);
        const auto e = first_moment_density(spec, KacRiceWeight::Volume, cfg.kacrice_samples, cfg.seed_first);
        bundle["volume_density"] = json::parse(to_json(e));
    }
    bundle["checks"] = json::parse(render_checks_json(out.checks));
    return bundle.dump(2) + "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const std::string hash = hex64(cfg.hash());
    const std::string name = scenario_name(cfg.scenario);
    RunOutcome out;

    if (cfg.scenario == Scenario::KostlanLocalLimit) {
        std::string csv = summary_header("d,sup_difference,diagonal_difference");
        std::vector<double> sups;
        for (double d : cfg.sweep) {
            const auto row = kostlan_local_limit(cfg.spec.n, static_cast<int>(d));
            sups.push_back(row.sup_difference);
            csv += "kostlan_local_limit/1," + hash + "," + fmt(d) + "," + fmt(row.sup_difference) + "," +
                   fmt(row.diagonal_difference) + "\n";
            add_check(out, "diagonal_zero_d=" + fmt(d), row.diagonal_difference, 1e-12, row.diagonal_difference <= 1e-12);
            if (d == 200) add_check(out, "sup_difference_d=200", row.sup_difference, 0.02, row.sup_difference <= 0.02);
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < sups.size(); ++i) decreasing = decreasing && sups[i] < sups[i - 1];
        add_check(out, "sup_difference_decreasing", decreasing ? 1.0 : 0.0, 1.0, decreasing);
        atomic_write(dir / (name + ".csv"), csv);
    } else if (cfg.scenario == Scenario::Diagnostics) {
        atomic_write(dir / "diagnostics.json", run_diagnostics(cfg, out));
    } else {
        const std::string key = cfg.sweep_key();
        Ledger ledger;
        if (options.resume) {
            ledger = Ledger::load(dir, hash);
        } else {
            fs::remove_all(dir / "shards");
            fs::remove(dir / "ledger.json");
            ledger.dir = dir;
            ledger.config_hash = hash;
        }
        ledger.scenario = name;

        std::vector<Cell> pending;
        for (double p : cfg.sweep) {
            for (std::uint64_t s = cfg.seed_first; s <= cfg.seed_last; ++s) {
                ++out.cells_total;
                if (!ledger.done.count(shard_path(key, p, s))) pending.push_back({p, s});
            }
        }
        ledger.save();

        const std::size_t budget = std::min(pending.size(), options.max_new_cells);
        std::atomic<std::size_t> next{0};
        std::mutex mutex;
        std::exception_ptr failure;
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= budget) return;
                try {
                    const json cell = run_extraction_cell(cfg, pending[i]);
                    const std::string rel = shard_path(key, pending[i].param, pending[i].seed);
                    const std::string content = cell.dump() + "\n";
                    atomic_write(dir / rel, content);
                    std::lock_guard<std::mutex> lock(mutex);
                    ledger.done[rel] = hex64(fnv1a64(content));
                    ledger.save();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mutex);
                    if (!failure) failure = std::current_exception();
                    next = budget;
                    return;
                }
            }
        };
        const int threads = std::max(1, options.threads > 0 ? options.threads : cfg.threads);
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
        out.cells_run = budget;
        if (budget < pending.size()) {
            out.pass = false;
            add_check(out, "complete", static_cast<double>(out.cells_total - pending.size() + budget),
                      static_cast<double>(out.cells_total), false, "run stopped before all cells finished");
            atomic_write(dir / "checks.json", render_checks_json(out.checks));
            return out;
        }

        // Deterministic reduction: sweep order, seeds ascending.
        Reduced red;
        std::string cells_csv = kCellsHeader;
        std::string comps_csv = kComponentsHeader;
        for (double p : cfg.sweep) {
            red.cells.emplace_back();
            for (std::uint64_t s = cfg.seed_first; s <= cfg.seed_last; ++s) {
                json c = json::parse(read_file(dir / shard_path(key, p, s)));
                cells_csv += cells_row(hash, c);
                for (const auto& comp : c.at("components")) comps_csv += component_row(hash, c, comp);
                out.faulty_cells += cell_faulty(c);
                red.cells.back().push_back(std::move(c));
            }
        }
        atomic_write(dir / "cells.csv", cells_csv);
        atomic_write(dir / "components.csv", comps_csv);

        std::string summary;
        switch (cfg.scenario) {
            case Scenario::ConvergeNu: reduce_converge(cfg, red, hash, summary, out); break;
            case Scenario::KnotCensus: reduce_knot_census(cfg, red, hash, summary, out); break;
            case Scenario::BettiScaling: reduce_betti(cfg, red, hash, summary, out); break;
            case Scenario::WillmoreAudit: reduce_willmore(red, summary, hash, out); break;
            case Scenario::KacRiceVsEmpirical: {
                std::string bundle;
                reduce_kacrice(cfg, red, hash, summary, bundle, out);
                atomic_write(dir / "kacrice_vs_empirical.json", bundle);
                break;
            }
            default: break;
        }
        // Fary-Milnor holds for every labelled knot in any census batch.
        if (cfg.scenario == Scenario::KnotCensus || cfg.scenario == Scenario::KacRiceVsEmpirical) {
            std::size_t knots = 0, ok = 0;
            for (const auto& row : red.cells) {
                for (const auto& c : row) {
                    for (const auto& comp : c.at("components")) {
                        if (!is_knot_label(comp.at("class").get<std::string>())) continue;
                        ++knots;
                        ok += comp.at("fary_milnor_pass").get<bool>();
                    }
                }
            }
            add_check(out, "fary_milnor", static_cast<double>(ok), static_cast<double>(knots), ok == knots,
                      std::to_string(ok) + " of " + std::to_string(knots) + " knotted components");
        }
        const double rate = static_cast<double>(out.faulty_cells) / static_cast<double>(out.cells_total);
        add_check(out, "fault_rate", rate, 0.10, rate <= 0.10, "realizations with faults or under-resolved linking");
        atomic_write(dir / (name + ".csv"), summary);
    }
    for (const auto& c : out.checks) out.pass = out.pass && c.pass;
    atomic_write(dir / "checks.json", render_checks_json(out.checks));
    return out;
}

}  // namespace nodal
