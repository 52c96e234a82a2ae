#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "averaging.hpp"
#include "diagnostics.hpp"
#include "measure.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "report.hpp"
#include "systems.hpp"

namespace ergolab {

/// Malformed or invalid experiment configuration. The message names the
/// offending field and, when it can be located, the line in the source text.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    Orbit,
    Cesaro,
    Ulam,
    Ensemble,
    TypicalSetFraction,
    WeakErgodicityFraction,
    NaturalityCheck,
    InvarianceResidual,
    WanderingCheck,
    TraceMatch,
    Telescoping,
};

inline const std::vector<std::pair<ExperimentKind, std::string_view>>& experiment_kinds()
{
    static const std::vector<std::pair<ExperimentKind, std::string_view>> kinds{
        {ExperimentKind::Orbit, "orbit"},
        {ExperimentKind::Cesaro, "cesaro"},
        {ExperimentKind::Ulam, "ulam"},
        {ExperimentKind::Ensemble, "ensemble"},
        {ExperimentKind::TypicalSetFraction, "typical_set_fraction"},
        {ExperimentKind::WeakErgodicityFraction, "weak_ergodicity_fraction"},
        {ExperimentKind::NaturalityCheck, "naturality_check"},
        {ExperimentKind::InvarianceResidual, "invariance_residual"},
        {ExperimentKind::WanderingCheck, "wandering_check"},
        {ExperimentKind::TraceMatch, "trace_match"},
        {ExperimentKind::Telescoping, "telescoping"},
    };
    return kinds;
}

inline std::string_view to_string(ExperimentKind k)
{
    for (const auto& [kind, name] : experiment_kinds())
        if (kind == k) return name;
    return "";
}

/// A measure described in a config file.
///
///   {"kind": "dirac", "point": [x] | [phi, r]}
///   {"kind": "mixture", "points": [[...], ...], "weights": [...]}
///   {"kind": "uniform", "atoms": N, "seed": S}
///   {"kind": "perturbation", "atoms": N, "seed": S}
///   {"kind": "circle", "r": r, "atoms": N}
struct MeasureBlock {
    std::string kind = "uniform";
    std::vector<std::vector<double>> points;
    std::vector<double> weights;
    std::size_t atoms = 10000;
    std::uint64_t seed = 0;
    double r = 0.5;

    bool has_atoms() const { return kind == "uniform" || kind == "perturbation" || kind == "circle"; }
};

struct Expectation {
    std::string metric;
    std::string op;
    double value = 0.0;
};

/// A fully resolved experiment: every knob carries a value, either from the
/// file or from its default.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Orbit;
    SystemSpec system{Family::Halving};
    std::size_t n = 10000;
    std::size_t points = 100;
    double tol = 0.05;
    Metric metric = Metric::Auto;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    Resolution resolution{200, 1};
    std::vector<Resolution> resolutions;
    std::size_t k_max = 6;
    double threshold = 0.05;
    std::size_t samples_per_cell = 100;
    std::size_t n_max = 4096;
    bool compare_particles = false;
    std::size_t particles_alt = 10000;
    std::vector<double> x0;
    MeasureBlock measure;
    MeasureBlock target;
    std::string reference = "standard";
    std::vector<MeasureBlock> seeds;
    std::size_t seed_atoms = 10000;
    std::vector<std::vector<double>> candidates;
    std::vector<std::size_t> ns;
    std::string output = "ergolab-out";
    std::vector<Expectation> expect;
};

inline const std::vector<std::string_view>& config_keys()
{
    static const std::vector<std::string_view> keys{
        "kind",        "system",           "n",          "points",    "tol",       "metric",       "seed",
        "threads",     "resolution",       "resolutions", "k_max",    "threshold", "samples_per_cell", "n_max",
        "compare_particles", "particles_alt", "x0",      "measure",   "target",    "reference",    "seeds",
        "seed_atoms",  "candidates",       "ns",         "output",    "expect",
    };
    return keys;
}

namespace detail {

/// Per-role seed streams derived from the master seed.
enum SeedStream : std::uint64_t {
    stream_measure = 1,
    stream_target = 2,
    stream_probe = 3,
    stream_alt = 4,
    stream_seed_measures = 16,
};

class ConfigReader {
public:
    explicit ConfigReader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const
    {
        std::string where = "field '" + path + "'";
        if (auto line = locate(path)) where = "line " + std::to_string(*line) + ", " + where;
        throw config_error("config " + where + ": " + msg);
    }

    void check_keys(const Json& obj, const std::vector<std::string_view>& allowed, const std::string& path) const
    {
        if (!obj.is_object()) fail(path, "expected an object");
        for (const auto& [key, value] : obj.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                fail(join(path, key), "unknown key '" + key + "'");
        }
    }

    double number(const Json& v, const std::string& path) const
    {
        if (!v.is_number()) fail(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(path, "expected a finite number");
        return d;
    }

    std::size_t count(const Json& v, const std::string& path, std::size_t min_value = 0) const
    {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(path, "expected a nonnegative integer");
        const auto c = v.get<std::size_t>();
        if (c < min_value) fail(path, "must be at least " + std::to_string(min_value));
        return c;
    }

    std::uint64_t seed(const Json& v, const std::string& path) const
    {
        if (!v.is_number_unsigned()) fail(path, "expected a nonnegative integer seed");
        return v.get<std::uint64_t>();
    }

    std::string string(const Json& v, const std::string& path) const
    {
        if (!v.is_string()) fail(path, "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const Json& v, const std::string& path) const
    {
        if (!v.is_boolean()) fail(path, "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> point(const Json& v, Phase phase, const std::string& path) const
    {
        const std::size_t dim = phase == Phase::Interval01 ? 1 : 2;
        if (!v.is_array() || v.size() != dim)
            fail(path, phase == Phase::Interval01 ? "expected a point [x]" : "expected a point [phi, r]");
        std::vector<double> out;
        for (std::size_t i = 0; i < dim; ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
        if (!in_domain(phase, to_point(out, phase))) fail(path, "point lies outside the phase space");
        return out;
    }

    Resolution resolution(const Json& v, Phase phase, const std::string& path) const
    {
        if (!v.is_array() || v.size() != 2) fail(path, "expected [cells, cells]");
        const Resolution res{count(v[0], path + "[0]", 1), count(v[1], path + "[1]", 1)};
        if (phase == Phase::Interval01 && res.second != 1) fail(path, "interval resolutions are [N, 1]");
        return res;
    }

    static Point to_point(const std::vector<double>& v, Phase phase)
    {
        return phase == Phase::Interval01 ? Point::on_interval(v[0]) : Point::polar(v[0], v[1]);
    }

    static std::string join(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

private:
    /// First line mentioning the last path component as a quoted key.
    std::optional<std::size_t> locate(const std::string& path) const
    {
        std::string key = path.substr(path.find_last_of('.') == std::string::npos ? 0 : path.find_last_of('.') + 1);
        key = key.substr(0, key.find('['));
        if (key.empty()) return std::nullopt;
        const auto pos = text_.find("\"" + key + "\"");
        if (pos == std::string::npos) return std::nullopt;
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
    }

    const std::string& text_;
};

inline MeasureBlock parse_measure(const ConfigReader& rd, const Json& j, const std::string& path,
                                  const SystemSpec& spec, MeasureBlock defaults)
{
    rd.check_keys(j, {"kind", "point", "points", "weights", "atoms", "seed", "r"}, path);
    MeasureBlock m = defaults;
    if (j.contains("kind")) m.kind = rd.string(j["kind"], path + ".kind");
    const Phase phase = spec.phase();
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (j.contains(k)) rd.fail(path + "." + k, std::string("not used by a '") + m.kind + "' measure");
    };
    m.points.clear();
    m.weights.clear();
    if (m.kind == "dirac") {
        forbid({"points", "weights", "atoms", "seed", "r"});
        if (!j.contains("point")) rd.fail(path + ".point", "a dirac measure needs a point");
        m.points.push_back(rd.point(j["point"], phase, path + ".point"));
    } else if (m.kind == "mixture") {
        forbid({"point", "atoms", "seed", "r"});
        if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
            rd.fail(path + ".points", "a mixture needs a non-empty list of points");
        for (std::size_t i = 0; i < j["points"].size(); ++i)
            m.points.push_back(rd.point(j["points"][i], phase, path + ".points[" + std::to_string(i) + "]"));
        if (j.contains("weights")) {
            if (!j["weights"].is_array() || j["weights"].size() != m.points.size())
                rd.fail(path + ".weights", "expected one weight per point");
            double total = 0.0;
            for (std::size_t i = 0; i < m.points.size(); ++i) {
                const double w = rd.number(j["weights"][i], path + ".weights");
                if (w < 0.0) rd.fail(path + ".weights", "weights must be nonnegative");
                m.weights.push_back(w);
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-12) rd.fail(path + ".weights", "weights must sum to 1");
        } else {
            m.weights.assign(m.points.size(), 1.0 / static_cast<double>(m.points.size()));
        }
    } else if (m.kind == "uniform" || m.kind == "perturbation") {
        forbid({"point", "points", "weights", "r"});
        if (j.contains("atoms")) m.atoms = rd.count(j["atoms"], path + ".atoms", 1);
        if (j.contains("seed")) m.seed = rd.seed(j["seed"], path + ".seed");
    } else if (m.kind == "circle") {
        forbid({"point", "points", "weights", "seed"});
        if (phase != Phase::Disc) rd.fail(path + ".kind", "circle measures live on the disc");
        m.r = j.contains("r") ? rd.number(j["r"], path + ".r") : spec.r();
        if (!(m.r > 0.0 && m.r < 1.0)) rd.fail(path + ".r", "circle radius must lie in (0, 1)");
        if (j.contains("atoms")) m.atoms = rd.count(j["atoms"], path + ".atoms", 1);
    } else {
        rd.fail(path + ".kind", "unknown measure kind '" + m.kind + "' (dirac, mixture, uniform, perturbation, circle)");
    }
    return m;
}

inline Json measure_json(const MeasureBlock& m)
{
    Json j;
    j["kind"] = m.kind;
    if (m.kind == "dirac") j["point"] = m.points.front();
    if (m.kind == "mixture") {
        j["points"] = m.points;
        j["weights"] = m.weights;
    }
    if (m.kind == "circle") j["r"] = m.r;
    if (m.has_atoms()) j["atoms"] = m.atoms;
    if (m.kind == "uniform" || m.kind == "perturbation") j["seed"] = m.seed;
    return j;
}

inline std::vector<Resolution> default_resolutions(Phase phase)
{
    if (phase == Phase::Disc) return {{1, 32}, {1, 64}, {1, 128}};
    return {{32, 1}, {64, 1}, {128, 1}};
}

inline MeasureBlock default_target(const SystemSpec& spec)
{
    MeasureBlock m;
    if (spec.phase() == Phase::Disc) {
        m.kind = "circle";
        m.r = spec.r();
        m.atoms = 4096;
    } else {
        m.kind = "dirac";
        m.points = {{0.0}};
    }
    return m;
}

inline const std::vector<std::string_view>& expectation_ops()
{
    static const std::vector<std::string_view> ops{"<", "<=", ">", ">=", "=="};
    return ops;
}

} // namespace detail

/// Parses and validates a config document. Throws config_error.
inline ExperimentConfig parse_config(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw config_error("config line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    const detail::ConfigReader rd(text);
    rd.check_keys(j, config_keys(), "");
    ExperimentConfig c;

    if (!j.contains("kind")) rd.fail("kind", "missing experiment kind");
    {
        const std::string k = rd.string(j["kind"], "kind");
        bool found = false;
        for (const auto& [kind, name] : experiment_kinds())
            if (name == k) {
                c.kind = kind;
                found = true;
            }
        if (!found) rd.fail("kind", "unknown experiment kind '" + k + "'");
    }

    if (!j.contains("system")) rd.fail("system", "missing system block");
    {
        const Json& s = j["system"];
        rd.check_keys(s, {"family", "params"}, "system");
        if (!s.contains("family")) rd.fail("system.family", "missing family");
        const std::string name = rd.string(s["family"], "system.family");
        const auto family = family_from_string(name);
        if (!family) rd.fail("system.family", "unknown family '" + name + "'");
        std::map<std::string, double> params;
        if (s.contains("params")) {
            if (!s["params"].is_object()) rd.fail("system.params", "expected an object");
            for (const auto& [k, v] : s["params"].items()) params[k] = rd.number(v, "system.params." + k);
        }
        try {
            c.system = SystemSpec(*family, params);
        } catch (const invalid_argument& e) {
            std::string field = "system.params";
            for (const auto& [k, v] : params) {
                try {
                    SystemSpec(*family, {{k, v}});
                } catch (const invalid_argument&) {
                    field += "." + k;
                    break;
                }
            }
            rd.fail(field, e.what());
        }
    }
    const SystemSpec& spec = c.system;
    const Phase phase = spec.phase();

    const bool ensemble = c.kind == ExperimentKind::Ensemble;
    if (ensemble != spec.measure_dependent())
        rd.fail("kind", ensemble ? "ensemble experiments need a measure-dependent family"
                                 : std::string(to_string(c.kind)) + " needs an autonomous family");

    if (j.contains("n")) c.n = rd.count(j["n"], "n", 1);
    if (j.contains("points")) c.points = rd.count(j["points"], "points", 1);
    if (j.contains("tol")) c.tol = rd.number(j["tol"], "tol");
    if (c.tol < 0.0) rd.fail("tol", "must be nonnegative");
    if (j.contains("metric")) {
        const std::string m = rd.string(j["metric"], "metric");
        if (m == "auto") c.metric = Metric::Auto;
        else if (m == "w1") c.metric = Metric::Wasserstein1;
        else if (m == "dictionary") c.metric = Metric::Dictionary;
        else rd.fail("metric", "expected auto, w1 or dictionary");
        if (c.metric == Metric::Wasserstein1 && phase != Phase::Interval01)
            rd.fail("metric", "w1 is only available on the interval");
    }
    if (j.contains("seed")) c.seed = rd.seed(j["seed"], "seed");
    if (j.contains("threads")) c.threads = rd.count(j["threads"], "threads", 1);
    c.resolution = j.contains("resolution") ? rd.resolution(j["resolution"], phase, "resolution")
                                            : default_resolution(phase);
    if (j.contains("resolutions")) {
        if (!j["resolutions"].is_array() || j["resolutions"].empty())
            rd.fail("resolutions", "expected a non-empty list of resolutions");
        for (std::size_t i = 0; i < j["resolutions"].size(); ++i)
            c.resolutions.push_back(rd.resolution(j["resolutions"][i], phase, "resolutions[" + std::to_string(i) + "]"));
    } else {
        c.resolutions = detail::default_resolutions(phase);
    }
    if (j.contains("k_max")) c.k_max = rd.count(j["k_max"], "k_max", 1);
    if (j.contains("threshold")) c.threshold = rd.number(j["threshold"], "threshold");
    if (j.contains("samples_per_cell")) c.samples_per_cell = rd.count(j["samples_per_cell"], "samples_per_cell", 1);
    if (j.contains("n_max")) c.n_max = rd.count(j["n_max"], "n_max", 2);
    if (j.contains("compare_particles")) c.compare_particles = rd.boolean(j["compare_particles"], "compare_particles");
    if (j.contains("particles_alt")) c.particles_alt = rd.count(j["particles_alt"], "particles_alt");

    c.x0 = j.contains("x0") ? rd.point(j["x0"], phase, "x0")
                            : (phase == Phase::Interval01 ? std::vector<double>{0.3} : std::vector<double>{1.0, 0.9});

    MeasureBlock measure_defaults;
    measure_defaults.atoms = ensemble ? 100000 : 10000;
    measure_defaults.seed = derive_seed(c.seed, detail::stream_measure);
    c.measure = j.contains("measure") ? detail::parse_measure(rd, j["measure"], "measure", spec, measure_defaults)
                                      : measure_defaults;

    MeasureBlock target_defaults = detail::default_target(spec);
    target_defaults.seed = derive_seed(c.seed, detail::stream_target);
    if (j.contains("target")) {
        MeasureBlock base;
        base.seed = target_defaults.seed;
        c.target = detail::parse_measure(rd, j["target"], "target", spec, base);
    } else {
        c.target = target_defaults;
    }

    if (j.contains("reference")) c.reference = rd.string(j["reference"], "reference");
    if (c.reference != "standard" && c.reference != "circle") rd.fail("reference", "expected standard or circle");
    if (c.reference == "circle" && phase != Phase::Disc) rd.fail("reference", "circle references live on the disc");

    if (j.contains("seed_atoms")) c.seed_atoms = rd.count(j["seed_atoms"], "seed_atoms", 1);
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty()) rd.fail("seeds", "expected a non-empty list of measures");
        for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
            MeasureBlock base;
            base.atoms = c.seed_atoms;
            base.seed = derive_seed(c.seed, detail::stream_seed_measures + i);
            c.seeds.push_back(detail::parse_measure(rd, j["seeds"][i], "seeds[" + std::to_string(i) + "]", spec, base));
        }
    }

    if (j.contains("candidates")) {
        if (!j["candidates"].is_array() || j["candidates"].empty())
            rd.fail("candidates", "expected a non-empty list of points");
        for (std::size_t i = 0; i < j["candidates"].size(); ++i)
            c.candidates.push_back(rd.point(j["candidates"][i], phase, "candidates[" + std::to_string(i) + "]"));
    } else {
        for (std::size_t i = 0; i < 32; ++i) {
            if (phase == Phase::Disc)
                c.candidates.push_back({two_pi * static_cast<double>(i) / 32.0, spec.r()});
            else
                c.candidates.push_back({(static_cast<double>(i) + 0.5) / 32.0});
        }
    }

    if (j.contains("ns")) {
        if (!j["ns"].is_array() || j["ns"].empty()) rd.fail("ns", "expected a non-empty list of step counts");
        for (const auto& v : j["ns"]) c.ns.push_back(rd.count(v, "ns", 1));
    } else {
        c.ns = {100, 1000, 10000};
    }

    if (j.contains("output")) c.output = rd.string(j["output"], "output");
    if (c.output.empty()) rd.fail("output", "must not be empty");

    if (j.contains("expect")) {
        if (!j["expect"].is_array()) rd.fail("expect", "expected a list of {metric, op, value}");
        for (std::size_t i = 0; i < j["expect"].size(); ++i) {
            const std::string path = "expect[" + std::to_string(i) + "]";
            const Json& e = j["expect"][i];
            rd.check_keys(e, {"metric", "op", "value"}, path);
            if (!e.contains("metric") || !e.contains("op") || !e.contains("value"))
                rd.fail(path, "expectations need metric, op and value");
            Expectation x;
            x.metric = rd.string(e["metric"], path + ".metric");
            x.op = rd.string(e["op"], path + ".op");
            const auto& ops = detail::expectation_ops();
            if (std::find(ops.begin(), ops.end(), x.op) == ops.end())
                rd.fail(path + ".op", "expected one of <, <=, >, >=, ==");
            x.value = e["value"].is_boolean() ? (e["value"].get<bool>() ? 1.0 : 0.0)
                                              : rd.number(e["value"], path + ".value");
            c.expect.push_back(x);
        }
    }
    return c;
}

/// The resolved config as a document that parses back to the same config.
inline Json resolved_json(const ExperimentConfig& c)
{
    Json j;
    j["kind"] = std::string(to_string(c.kind));
    Json params = Json::object();
    for (const auto& [k, v] : c.system.params()) params[k] = v;
    j["system"] = Json{{"family", std::string(c.system.name())}, {"params", params}};
    j["n"] = c.n;
    j["points"] = c.points;
    j["tol"] = c.tol;
    j["metric"] = std::string(to_string(c.metric));
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["resolution"] = Json::array({c.resolution.first, c.resolution.second});
    Json rs = Json::array();
    for (const auto& r : c.resolutions) rs.push_back(Json::array({r.first, r.second}));
    j["resolutions"] = rs;
    j["k_max"] = c.k_max;
    j["threshold"] = c.threshold;
    j["samples_per_cell"] = c.samples_per_cell;
    j["n_max"] = c.n_max;
    j["compare_particles"] = c.compare_particles;
    j["particles_alt"] = c.particles_alt;
    j["x0"] = c.x0;
    j["measure"] = detail::measure_json(c.measure);
    j["target"] = detail::measure_json(c.target);
    j["reference"] = c.reference;
    Json seeds = Json::array();
    for (const auto& s : c.seeds) seeds.push_back(detail::measure_json(s));
    if (!c.seeds.empty()) j["seeds"] = seeds;
    j["seed_atoms"] = c.seed_atoms;
    j["candidates"] = c.candidates;
    j["ns"] = c.ns;
    j["output"] = c.output;
    Json ex = Json::array();
    for (const auto& e : c.expect) ex.push_back(Json{{"metric", e.metric}, {"op", e.op}, {"value", e.value}});
    j["expect"] = ex;
    return j;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b)
{
    return resolved_json(a) == resolved_json(b);
}

/// Builds the cloud a measure block describes.
inline PointCloud realize(const MeasureBlock& m, Phase phase)
{
    auto pt = [&](const std::vector<double>& v) { return detail::ConfigReader::to_point(v, phase); };
    if (m.kind == "dirac") return dirac(phase, pt(m.points.front()));
    if (m.kind == "mixture") {
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < m.points.size(); ++i) atoms.push_back({pt(m.points[i]), m.weights[i]});
        return PointCloud::normalized(phase, std::move(atoms));
    }
    if (m.kind == "uniform") return uniform_cloud(phase, m.atoms, m.seed);
    if (m.kind == "perturbation") return smooth_perturbation(phase, m.atoms, m.seed);
    if (m.kind == "circle") return conditional_on_circle(m.r, m.atoms);
    detail::fail_argument("unknown measure kind '" + m.kind + "'");
}

inline std::string measure_label(const MeasureBlock& m)
{
    return detail::measure_json(m).dump();
}

} // namespace ergolab
