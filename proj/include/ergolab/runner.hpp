#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "averaging.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "report.hpp"
#include "systems.hpp"
#include "ulam.hpp"

namespace ergolab {

/// Failure to read a config or write an artifact.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Artifact {
    std::string name;
    std::string content;
};

struct ExpectationResult {
    Expectation expectation;
    double actual = 0.0;
    bool pass = false;
};

struct RunResult {
    ExperimentConfig config;
    DiagnosticsReport report;
    std::vector<Artifact> artifacts;
    std::vector<ExpectationResult> checks;

    bool all_pass() const
    {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string grid_csv(const GridMeasure& g)
{
    std::ostringstream s;
    write_grid_csv(s, g);
    return s.str();
}

inline std::string trace_csv(const std::vector<double>& v)
{
    std::ostringstream s;
    write_trace_csv(s, v);
    return s.str();
}

inline std::string table_csv(const Table& t)
{
    std::ostringstream s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s << (i ? "," : "") << t.columns[i];
    s << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << format_double(row[i]);
        s << '\n';
    }
    return s.str();
}

inline double max_mass(const GridMeasure& g) { return *std::max_element(g.masses().begin(), g.masses().end()); }

inline DiagnosticsReport base_report(const ExperimentConfig& c)
{
    DiagnosticsReport rep;
    rep.probe = std::string(to_string(c.kind));
    rep.system = system_json(c.system);
    rep.settings["n"] = c.n;
    rep.settings["seed"] = c.seed;
    return rep;
}

inline ProbeOptions probe_options(const ExperimentConfig& c)
{
    return {c.metric, derive_seed(c.seed, stream_probe), c.threads};
}

inline Point start_point(const ExperimentConfig& c) { return ConfigReader::to_point(c.x0, c.system.phase()); }

inline void run_orbit(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const auto pts = orbit(spec, start_point(c), c.n);
    auto& rep = out.report = base_report(c);
    std::ostringstream csv;
    const bool disc = spec.phase() == Phase::Disc;
    csv << (disc ? "step,phi,r\n" : "step,x\n");
    for (std::size_t k = 0; k < pts.size(); ++k) {
        csv << k << ',' << format_double(pts[k].x);
        if (disc) csv << ',' << format_double(pts[k].r);
        csv << '\n';
    }
    out.artifacts.push_back({"orbit.csv", csv.str()});
    const PointCloud occ = PointCloud::equal_weights(spec.phase(), pts);
    const CloudMean m = mean(occ);
    const Dictionary dict = default_dictionary(spec.phase());
    rep.settings["metric"] = std::string(to_string(resolve_metric(c.metric, spec.phase())));
    rep.settings["target"] = measure_label(c.target);
    rep.set_scalar("steps", static_cast<double>(pts.size()));
    if (disc) {
        rep.set_scalar("final_phi", pts.back().phi());
        rep.set_scalar("final_r", pts.back().r);
        rep.set_scalar("mean_r", m.r);
    } else {
        rep.set_scalar("final_x", pts.back().x);
        rep.set_scalar("mean_x", m.x);
    }
    rep.set_scalar("distance_to_target", measure_distance(occ, realize(c.target, spec.phase()), c.metric, dict));
}

inline void run_cesaro(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const Phase phase = spec.phase();
    CesaroAccumulator acc(spec, realize(c.measure, phase), c.resolution, c.threads);
    acc.advance(std::max<std::size_t>(1, c.n / 2));
    const GridMeasure half = acc.cesaro();
    acc.advance(c.n - std::max<std::size_t>(1, c.n / 2));
    const GridMeasure full = acc.cesaro();
    const Dictionary dict = default_dictionary(phase);
    auto& rep = out.report = base_report(c);
    rep.settings["resolution"] = Json::array({c.resolution.first, c.resolution.second});
    rep.settings["measure"] = measure_label(c.measure);
    rep.settings["target"] = measure_label(c.target);
    rep.settings["metric"] = std::string(to_string(resolve_metric(c.metric, phase)));
    rep.set_scalar("cauchy_l1", l1_distance(full, half));
    rep.set_scalar("l1_to_reference", l1_distance(full, reference_grid(phase, c.resolution)));
    rep.set_scalar("first_cell_mass", full.mass(0));
    rep.set_scalar("max_cell_mass", max_mass(full));
    const PointCloud target_cells = grid_as_cloud(bin(realize(c.target, phase), c.resolution));
    rep.set_scalar("distance_to_target", measure_distance(grid_as_cloud(full), target_cells, c.metric, dict));
    out.artifacts.push_back({"cesaro.csv", grid_csv(full)});
    out.artifacts.push_back({"cesaro_half.csv", grid_csv(half)});
}

inline void run_ulam(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const Phase phase = spec.phase();
    const UlamMatrix m = build_ulam(spec, c.resolution, c.samples_per_cell, derive_seed(c.seed, stream_probe), c.threads);
    const UlamCesaroResult r = ulam_cesaro_fixed_density(m, c.n_max, c.tol);
    auto& rep = out.report = base_report(c);
    rep.settings["resolution"] = Json::array({c.resolution.first, c.resolution.second});
    rep.settings["samples_per_cell"] = c.samples_per_cell;
    rep.settings["n_max"] = c.n_max;
    rep.settings["tol"] = c.tol;
    rep.set_flag("converged", r.converged);
    rep.set_scalar("iterations", static_cast<double>(r.iterations));
    rep.set_scalar("last_gap", r.last_gap);
    rep.set_scalar("l1_to_reference", l1_distance(r.density, reference_grid(phase, c.resolution)));
    rep.set_scalar("first_cell_mass", r.density.mass(0));
    rep.set_scalar("max_cell_mass", max_mass(r.density));
    rep.notes.emplace_back("Ulam rows sample cells and cannot see branches on measure-zero sets; the density "
                           "approximates Cesaro limits of absolutely continuous measures");
    std::ostringstream mcsv;
    write_ulam_csv(mcsv, m);
    out.artifacts.push_back({"ulam_matrix.csv", mcsv.str()});
    out.artifacts.push_back({"density.csv", grid_csv(r.density)});
    if (c.compare_particles) {
        rep.settings["measure"] = measure_label(c.measure);
        const GridMeasure particles = cesaro_pushforward(spec, realize(c.measure, phase), c.n, c.resolution, c.threads);
        rep.set_scalar("l1_to_particles", l1_distance(r.density, particles));
        out.artifacts.push_back({"particles.csv", grid_csv(particles)});
    }
}

inline void ensemble_scalars(DiagnosticsReport& rep, const EnsembleResult& r, Resolution res, const std::string& suffix)
{
    rep.set_scalar("final_mean" + suffix, interval_mean(r.final_cloud));
    rep.set_scalar("mean_min" + suffix, *std::min_element(r.mean_trace.begin(), r.mean_trace.end()));
    rep.set_scalar("mean_max" + suffix, *std::max_element(r.mean_trace.begin(), r.mean_trace.end()));
    rep.set_scalar("l1_to_reference" + suffix, l1_distance(r.averaged, reference_grid(Phase::Interval01, res)));
}

inline void run_ensemble(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const EnsembleResult r = evolve_ensemble(spec, realize(c.measure, spec.phase()), c.n, c.resolution, c.threads);
    auto& rep = out.report = base_report(c);
    rep.settings["resolution"] = Json::array({c.resolution.first, c.resolution.second});
    rep.settings["measure"] = measure_label(c.measure);
    rep.set_scalar("particles", static_cast<double>(r.final_cloud.size()));
    rep.set_scalar("trace_length", static_cast<double>(r.mean_trace.size()));
    ensemble_scalars(rep, r, c.resolution, "");
    out.artifacts.push_back({"mean_trace.csv", trace_csv(r.mean_trace)});
    out.artifacts.push_back({"averaged.csv", grid_csv(r.averaged)});
    if (c.particles_alt > 0 && c.measure.has_atoms()) {
        MeasureBlock alt = c.measure;
        alt.atoms = c.particles_alt;
        alt.seed = derive_seed(c.seed, stream_alt);
        rep.settings["measure_alt"] = measure_label(alt);
        const EnsembleResult a = evolve_ensemble(spec, realize(alt, spec.phase()), c.n, c.resolution, c.threads);
        ensemble_scalars(rep, a, c.resolution, "_alt");
        rep.set_scalar("l1_between_sizes", l1_distance(r.averaged, a.averaged));
        out.artifacts.push_back({"mean_trace_alt.csv", trace_csv(a.mean_trace)});
        out.artifacts.push_back({"averaged_alt.csv", grid_csv(a.averaged)});
        rep.notes.emplace_back("E_mu is computed from the finite ensemble; compare the plain and _alt scalars for "
                               "particle-count sensitivity");
    }
}

inline void run_typical(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const ReferenceMeasure ref = c.reference == "circle" ? ReferenceMeasure::circle(spec.r())
                                                         : ReferenceMeasure::standard(spec.phase());
    out.report = typical_set_fraction(spec, realize(c.target, spec.phase()), ref, c.points, c.n, c.tol,
                                      probe_options(c));
    out.report.settings["target"] = measure_label(c.target);
}

inline void run_weak(const ExperimentConfig& c, RunResult& out)
{
    out.report = weak_ergodicity_fraction(c.system, realize(c.measure, c.system.phase()), c.points, c.n, c.tol,
                                          probe_options(c));
    out.report.settings["measure"] = measure_label(c.measure);
}

inline void run_naturality(const ExperimentConfig& c, RunResult& out)
{
    const Phase phase = c.system.phase();
    std::vector<NamedMeasure> seeds;
    if (c.seeds.empty()) {
        seeds = default_seed_measures(c.system, c.seed_atoms, derive_seed(c.seed, stream_seed_measures));
    } else {
        for (std::size_t i = 0; i < c.seeds.size(); ++i)
            seeds.push_back({"seed_" + std::to_string(i), realize(c.seeds[i], phase)});
    }
    out.report = naturality_check(c.system, realize(c.target, phase), seeds, c.n, c.tol, c.resolution, probe_options(c));
    out.report.settings["candidate"] = measure_label(c.target);
}

inline void run_invariance(const ExperimentConfig& c, RunResult& out)
{
    auto& rep = out.report = base_report(c);
    rep.settings["measure"] = measure_label(c.measure);
    rep.settings["metric"] = std::string(to_string(resolve_metric(c.metric, c.system.phase())));
    rep.set_scalar("residual", invariance_residual(c.system, realize(c.measure, c.system.phase()), c.metric));
}

inline void run_wandering(const ExperimentConfig& c, RunResult& out)
{
    out.report = wandering_check(c.system, realize(c.measure, c.system.phase()), c.k_max, c.resolutions, c.threshold);
    out.report.settings["measure"] = measure_label(c.measure);
}

inline void run_trace(const ExperimentConfig& c, RunResult& out)
{
    const Phase phase = c.system.phase();
    std::vector<Point> cands;
    for (const auto& v : c.candidates) cands.push_back(ConfigReader::to_point(v, phase));
    const TraceMatch m = trace_match(c.system, start_point(c), cands, c.n, c.tol, probe_options(c));
    auto& rep = out.report = base_report(c);
    rep.settings["tol"] = c.tol;
    rep.settings["x0"] = c.x0;
    rep.settings["metric"] = std::string(to_string(resolve_metric(c.metric, phase)));
    rep.set_flag("matched", m.index.has_value());
    rep.set_scalar("best_distance", m.best);
    rep.set_scalar("match_index", m.index ? static_cast<double>(*m.index) : -1.0);
    Table t{point_columns(phase), {}};
    t.columns.emplace_back("distance");
    for (std::size_t i = 0; i < cands.size(); ++i) {
        std::vector<double> row;
        push_point(row, cands[i], phase);
        row.push_back(m.distances[i]);
        t.rows.push_back(std::move(row));
    }
    rep.tables.emplace_back("candidates", std::move(t));
    rep.notes.emplace_back("a missing match is evidence against weak tracing among these candidates only");
}

inline void run_telescoping(const ExperimentConfig& c, RunResult& out)
{
    const SystemSpec& spec = c.system;
    const Dictionary dict = default_dictionary(spec.phase());
    const ReferenceMeasure ref = ReferenceMeasure::standard(spec.phase());
    const std::uint64_t seed = derive_seed(c.seed, stream_probe);
    auto& rep = out.report = base_report(c);
    rep.settings["points"] = c.points;
    rep.settings["ns"] = c.ns;
    Table t{point_columns(spec.phase()), {}};
    for (const char* col : {"n", "max_ratio", "violations"}) t.columns.emplace_back(col);
    std::size_t violations = 0, checks = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < c.points; ++i) {
        const Point x0 = ref.sample(seed, i);
        for (std::size_t n : c.ns) {
            const auto r = telescoping_residuals(spec, x0, n, dict);
            double ratio = 0.0;
            std::size_t bad = 0;
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double bound = 2.0 * dict.functions()[j].bound / static_cast<double>(n);
                ratio = std::max(ratio, r[j] / bound);
                bad += r[j] > bound ? 1 : 0;
                ++checks;
            }
            violations += bad;
            worst = std::max(worst, ratio);
            std::vector<double> row;
            push_point(row, x0, spec.phase());
            row.insert(row.end(), {static_cast<double>(n), ratio, static_cast<double>(bad)});
            t.rows.push_back(std::move(row));
        }
    }
    rep.set_scalar("violations", static_cast<double>(violations));
    rep.set_scalar("checks", static_cast<double>(checks));
    rep.set_scalar("max_ratio", worst);
    rep.tables.emplace_back("residuals", std::move(t));
}

inline bool compare(double actual, const std::string& op, double value)
{
    if (op == "<") return actual < value;
    if (op == "<=") return actual <= value;
    if (op == ">") return actual > value;
    if (op == ">=") return actual >= value;
    return actual == value;
}

} // namespace detail

/// Scores the config's expectations against a report. An expectation naming
/// a quantity the report does not have is a config error.
inline std::vector<ExpectationResult> evaluate_expectations(const ExperimentConfig& c, const DiagnosticsReport& rep)
{
    std::vector<ExpectationResult> out;
    for (const auto& e : c.expect) {
        double actual = 0.0;
        if (rep.has_scalar(e.metric)) actual = rep.scalar(e.metric);
        else if (rep.has_flag(e.metric)) actual = rep.flag(e.metric) ? 1.0 : 0.0;
        else throw config_error("config field 'expect': report of kind " + std::string(to_string(c.kind))
                                + " has no quantity '" + e.metric + "'");
        out.push_back({e, actual, detail::compare(actual, e.op, e.value)});
    }
    return out;
}

/// Runs an experiment in memory: report, artifacts and expectation scores.
inline RunResult execute(const ExperimentConfig& c)
{
    RunResult out;
    out.config = c;
    switch (c.kind) {
    case ExperimentKind::Orbit: detail::run_orbit(c, out); break;
    case ExperimentKind::Cesaro: detail::run_cesaro(c, out); break;
    case ExperimentKind::Ulam: detail::run_ulam(c, out); break;
    case ExperimentKind::Ensemble: detail::run_ensemble(c, out); break;
    case ExperimentKind::TypicalSetFraction: detail::run_typical(c, out); break;
    case ExperimentKind::WeakErgodicityFraction: detail::run_weak(c, out); break;
    case ExperimentKind::NaturalityCheck: detail::run_naturality(c, out); break;
    case ExperimentKind::InvarianceResidual: detail::run_invariance(c, out); break;
    case ExperimentKind::WanderingCheck: detail::run_wandering(c, out); break;
    case ExperimentKind::TraceMatch: detail::run_trace(c, out); break;
    case ExperimentKind::Telescoping: detail::run_telescoping(c, out); break;
    }
    out.checks = evaluate_expectations(c, out.report);
    for (const auto& [name, table] : out.report.tables) out.artifacts.push_back({name + ".csv", detail::table_csv(table)});
    return out;
}

/// report.json: the report plus the resolved config and expectation scores.
inline Json report_document(const RunResult& r)
{
    Json j = to_json(r.report);
    j["config"] = resolved_json(r.config);
    Json ex = Json::array();
    for (const auto& c : r.checks)
        ex.push_back(Json{{"metric", c.expectation.metric},
                          {"op", c.expectation.op},
                          {"value", c.expectation.value},
                          {"actual", c.actual},
                          {"pass", c.pass}});
    j["expectations"] = ex;
    return j;
}

inline std::string report_text(const RunResult& r)
{
    std::ostringstream s;
    s << "config: " << resolved_json(r.config).dump() << '\n';
    s << to_text(r.report);
    if (!r.checks.empty()) {
        s << "\n# expectations\n";
        for (const auto& c : r.checks)
            s << c.expectation.metric << ' ' << c.expectation.op << ' ' << detail::short_number(c.expectation.value)
              << ": actual " << format_double(c.actual) << (c.pass ? " pass" : " FAIL") << '\n';
    }
    return s.str();
}

/// Output root: $ERGOLAB_OUTPUT_ROOT when set, else the working directory.
inline std::filesystem::path output_root()
{
    if (const char* env = std::getenv("ERGOLAB_OUTPUT_ROOT"); env && *env) return env;
    return std::filesystem::current_path();
}

inline std::filesystem::path resolve_output(const std::string& output)
{
    const std::filesystem::path p(output);
    return p.is_absolute() ? p : output_root() / p;
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open '" + path.string() + "' for writing");
    f << content;
    if (!f) throw io_error("failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot read '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_run(const RunResult& r, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_file(dir / "report.json", report_document(r).dump(2) + "\n");
    write_file(dir / "report.txt", report_text(r));
    for (const auto& a : r.artifacts) write_file(dir / a.name, a.content);
}

/// Executes the experiment and writes its artifacts under the resolved output directory.
inline RunResult run_experiment(const ExperimentConfig& c)
{
    RunResult r = execute(c);
    write_run(r, resolve_output(c.output));
    return r;
}

inline std::string list_systems()
{
    std::ostringstream s;
    for (const auto& info : family_catalog()) {
        s << info.name << "  [" << to_string(info.phase) << ", "
          << (info.measure_dependent ? "measure-dependent" : "autonomous") << "]\n";
        s << "  map: " << info.formula << '\n';
        if (info.params.empty()) s << "  params: none\n";
        for (const auto& p : info.params)
            s << "  param " << p.name << " in " << p.range() << ", default " << detail::short_number(p.fallback) << '\n';
    }
    return s.str();
}

// --- reproduction suite -------------------------------------------------------

struct SuiteCriterion {
    int id;
    std::string title;
    std::vector<std::pair<std::string, Json>> runs;
};

struct SuiteRow {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;
    std::string summary_csv;
    std::string summary_text;

    bool all_pass() const
    {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

namespace detail {

inline Json expect(const char* metric, const char* op, double value)
{
    return Json{{"metric", metric}, {"op", op}, {"value", value}};
}

inline Json system(const char* family, Json params = Json::object())
{
    return Json{{"family", family}, {"params", std::move(params)}};
}

inline Json example1(double alpha)
{
    return Json{{"alpha", alpha}, {"beta", 0.3}, {"gamma", 0.5}, {"r", 0.5}};
}

} // namespace detail

/// The configs behind each row of the reproduction summary.
inline std::vector<SuiteCriterion> reproduction_suite(std::uint64_t seed)
{
    using detail::expect;
    using detail::system;
    const double alpha = irrational_alpha;
    const Json circle{{"kind", "circle"}, {"r", 0.5}, {"atoms", 4096}};
    const Json delta0{{"kind", "dirac"}, {"point", {0.0}}};
    auto cfg = [&](Json j) {
        j["seed"] = seed;
        return j;
    };

    std::vector<SuiteCriterion> s;
    s.push_back({1, "halving typical set of delta_0", {{"typical", cfg({
        {"kind", "typical_set_fraction"}, {"system", system("Halving")}, {"target", delta0},
        {"points", 100}, {"n", 10000}, {"tol", 0.01},
        {"expect", {expect("fraction", "==", 1.0)}}})}}});

    s.push_back({2, "irrational rotation: typicality, weak ergodicity, invariance of m_C", {
        {"typical", cfg({{"kind", "typical_set_fraction"}, {"system", system("DiscRotation", detail::example1(alpha))},
                         {"target", circle}, {"points", 100}, {"n", 100000}, {"tol", 0.05},
                         {"expect", {expect("fraction", ">=", 0.95)}}})},
        {"weak", cfg({{"kind", "weak_ergodicity_fraction"}, {"system", system("DiscRotation", detail::example1(alpha))},
                      {"measure", circle}, {"points", 100}, {"n", 100000}, {"tol", 0.05},
                      {"expect", {expect("fraction", ">=", 0.95)}}})},
        {"invariance", cfg({{"kind", "invariance_residual"}, {"system", system("DiscRotation", detail::example1(alpha))},
                            {"measure", {{"kind", "circle"}, {"r", 0.5}, {"atoms", 10000}}},
                            {"expect", {expect("residual", "<", 0.01)}}})}}});

    s.push_back({3, "rational rotation alpha = 1/3: m_C natural", {{"naturality", cfg({
        {"kind", "naturality_check"}, {"system", system("DiscRotation", detail::example1(1.0 / 3.0))},
        {"target", circle}, {"seed_atoms", 5000}, {"n", 4000}, {"tol", 0.05},
        {"expect", {expect("natural", "==", 1.0), expect("seed_count", ">=", 4.0)}}})}}});

    s.push_back({4, "no-rotation disc: off-circle points are not m_C typical", {{"typical", cfg({
        {"kind", "typical_set_fraction"},
        {"system", system("DiscNoRotation", Json{{"alpha", alpha}, {"gamma", 0.5}, {"r", 0.5}})},
        {"target", circle}, {"points", 100}, {"n", 100000}, {"tol", 0.05},
        {"expect", {expect("fraction", "<=", 0.05), expect("max_endpoint_distance", "<=", 0.05)}}})}}});

    s.push_back({5, "GiGi: observable endpoint mixture is not weakly ergodic", {
        {"orbit", cfg({{"kind", "orbit"}, {"system", system("GiGi")}, {"x0", {0.3}}, {"n", 100000},
                       {"metric", "dictionary"},
                       {"target", {{"kind", "mixture"}, {"points", {{0.0}, {1.0}}}, {"weights", {0.5, 0.5}}}},
                       {"expect", {expect("distance_to_target", "<", 0.02)}}})},
        {"weak", cfg({{"kind", "weak_ergodicity_fraction"}, {"system", system("GiGi")},
                      {"measure", {{"kind", "mixture"}, {"points", {{0.0}, {1.0}}}, {"weights", {0.5, 0.5}}}},
                      {"points", 100}, {"n", 100000}, {"tol", 0.05},
                      {"expect", {expect("fraction", "<=", 0.05)}}})}}});

    const Json square = system("SquareJump", Json{{"c", 0.5}});
    s.push_back({6, "square map with jump: delta_0 natural, not invariant, weakly ergodic", {
        {"naturality", cfg({{"kind", "naturality_check"}, {"system", square}, {"target", delta0},
                            {"resolution", {100, 1}}, {"n", 10000}, {"seed_atoms", 10000}, {"tol", 0.05},
                            {"expect", {expect("natural", "==", 1.0), expect("min_candidate_cell_mass", ">=", 0.95)}}})},
        {"invariance", cfg({{"kind", "invariance_residual"}, {"system", square}, {"measure", delta0},
                            {"expect", {expect("residual", ">=", 0.5 - 1e-12), expect("residual", "<=", 0.5 + 1e-12)}}})},
        {"weak", cfg({{"kind", "weak_ergodicity_fraction"}, {"system", square}, {"measure", delta0},
                      {"points", 100}, {"n", 10000}, {"tol", 0.01},
                      {"expect", {expect("fraction", "==", 1.0)}}})}}});

    s.push_back({7, "jump disc: circle measure wanders", {{"wandering", cfg({
        {"kind", "wandering_check"}, {"system", system("DiscJump", detail::example1(alpha))},
        {"measure", circle}, {"k_max", 6}, {"resolutions", {{1, 32}, {1, 64}, {1, 128}}}, {"threshold", 0.05},
        {"expect", {expect("wandering", "==", 1.0), expect("max_overlap_finest", "<", 0.05),
                    expect("non_increasing", "==", 1.0)}}})}}});

    SuiteCriterion tele{8, "telescoping residual bound for every autonomous family", {}};
    for (const auto& info : family_catalog()) {
        if (info.measure_dependent) continue;
        tele.runs.push_back({std::string(info.name), cfg({
            {"kind", "telescoping"}, {"system", system(std::string(info.name).c_str())}, {"points", 10},
            {"ns", {100, 1000, 10000}}, {"expect", {expect("violations", "==", 0.0)}}})});
    }
    s.push_back(std::move(tele));

    s.push_back({9, "Ulam densities: doubling uniform and matches particles, halving at 0", {
        {"doubling", cfg({{"kind", "ulam"}, {"system", system("Doubling")}, {"resolution", {100, 1}},
                          {"samples_per_cell", 1000}, {"n_max", 1024}, {"tol", 0.01}, {"compare_particles", true},
                          {"measure", {{"kind", "uniform"}, {"atoms", 100000}}}, {"n", 100},
                          {"expect", {expect("l1_to_reference", "<", 0.05), expect("l1_to_particles", "<", 0.1)}}})},
        {"halving", cfg({{"kind", "ulam"}, {"system", system("Halving")}, {"resolution", {100, 1}},
                         {"samples_per_cell", 100}, {"n_max", 4096}, {"tol", 1e-3},
                         {"expect", {expect("first_cell_mass", ">=", 0.99)}}})}}});

    s.push_back({10, "self-consistent ensembles: MultA to delta_0, MultB near Lebesgue, tent stable", {
        {"multa", cfg({{"kind", "ensemble"}, {"system", system("MultA")}, {"n", 200},
                       {"measure", {{"kind", "uniform"}, {"atoms", 10000}}}, {"particles_alt", 100000},
                       {"expect", {expect("final_mean", "<", 1e-3)}}})},
        {"multb", cfg({{"kind", "ensemble"}, {"system", system("MultB")}, {"n", 1000}, {"resolution", {50, 1}},
                       {"measure", {{"kind", "uniform"}, {"atoms", 100000}}}, {"particles_alt", 10000},
                       {"expect", {expect("mean_min", ">=", 0.48), expect("mean_max", "<=", 0.52),
                                   expect("l1_to_reference", "<", 0.05)}}})},
        {"tent", cfg({{"kind", "ensemble"}, {"system", system("TentAdditive", Json{{"epsilon", 0.05}})}, {"n", 1000},
                      {"resolution", {50, 1}}, {"measure", {{"kind", "uniform"}, {"atoms", 100000}}},
                      {"particles_alt", 10000}, {"expect", {expect("l1_to_reference", "<", 0.1)}}})}}});
    return s;
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

} // namespace detail

/// Runs every criterion with fixed seeds, writes each sub-run under
/// `dir/acNN_<name>/` and a summary table to `dir/summary.csv` and
/// `dir/summary.txt`. Row 11 reruns every sub-run in process and compares
/// the serialized reports byte for byte. Passing an empty `dir` skips writing.
inline SuiteResult reproduce_paper_suite(const std::filesystem::path& dir, std::uint64_t seed = 20240601)
{
    const auto suite = reproduction_suite(seed);
    SuiteResult out;
    std::vector<std::string> first_reports;
    std::vector<ExperimentConfig> configs;
    for (const auto& crit : suite) {
        SuiteRow row{crit.id, crit.title, true, ""};
        for (const auto& [name, json] : crit.runs) {
            ExperimentConfig c;
            try {
                c = parse_config(json.dump());
            } catch (const config_error& e) {
                throw config_error("criterion " + std::to_string(crit.id) + " run " + name + ": " + e.what());
            }
            RunResult r;
            try {
                r = execute(c);
            } catch (const std::exception& e) {
                throw std::runtime_error("criterion " + std::to_string(crit.id) + " run " + name + ": " + e.what());
            }
            if (!dir.empty()) {
                char sub[16];
                std::snprintf(sub, sizeof sub, "ac%02d_", crit.id);
                write_run(r, dir / (sub + name));
            }
            for (const auto& chk : r.checks) {
                row.pass = row.pass && chk.pass;
                if (!row.detail.empty()) row.detail += "; ";
                row.detail += name + "." + chk.expectation.metric + "=" + detail::short_number(chk.actual) + " "
                              + chk.expectation.op + " " + detail::short_number(chk.expectation.value)
                              + (chk.pass ? "" : " FAIL");
            }
            first_reports.push_back(report_document(r).dump());
            configs.push_back(std::move(c));
        }
        out.rows.push_back(std::move(row));
    }

    std::size_t identical = 0;
    for (std::size_t i = 0; i < configs.size(); ++i)
        identical += report_document(execute(configs[i])).dump() == first_reports[i] ? 1 : 0;
    out.rows.push_back({11, "determinism: in-process rerun reproduces every report", identical == configs.size(),
                        "identical_reports=" + std::to_string(identical) + "/" + std::to_string(configs.size())});

    std::ostringstream csv, txt;
    csv << "criterion,title,status,detail\n";
    txt << "seed: " << seed << '\n';
    for (const auto& r : out.rows) {
        csv << r.id << ',' << detail::csv_field(r.title) << ',' << (r.pass ? "PASS" : "FAIL") << ','
            << detail::csv_field(r.detail) << '\n';
        txt << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.title << "\n       " << r.detail << '\n';
    }
    out.summary_csv = csv.str();
    out.summary_text = txt.str();
    if (!dir.empty()) {
        write_file(dir / "summary.csv", out.summary_csv);
        write_file(dir / "summary.txt", out.summary_text);
    }
    return out;
}

} // namespace ergolab
