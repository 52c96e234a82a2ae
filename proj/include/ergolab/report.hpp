#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "systems.hpp"

namespace ergolab {

using Json = nlohmann::ordered_json;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Structured result of a probe or experiment. Every entry keeps insertion
/// order so serialized reports are byte-stable.
///
/// JSON layout:
///   { "probe": str, "system": {"family": str, "params": {name: num}},
///     "settings": {...}, "scalars": {name: num}, "flags": {name: bool},
///     "notes": [str], "tables": {name: {"columns": [str], "rows": [[num]]}} }
///
/// Text layout: `key: value` header lines, then each table as
/// `# table <name>` followed by CSV with a header row.
struct DiagnosticsReport {
    std::string probe;
    Json system = Json::object();
    Json settings = Json::object();
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, bool>> flags;
    std::vector<std::string> notes;
    std::vector<std::pair<std::string, Table>> tables;

    void set_scalar(const std::string& name, double v)
    {
        for (auto& [k, val] : scalars)
            if (k == name) {
                val = v;
                return;
            }
        scalars.emplace_back(name, v);
    }

    void set_flag(const std::string& name, bool v)
    {
        for (auto& [k, val] : flags)
            if (k == name) {
                val = v;
                return;
            }
        flags.emplace_back(name, v);
    }

    bool has_scalar(const std::string& name) const
    {
        for (const auto& [k, v] : scalars)
            if (k == name) return true;
        return false;
    }

    double scalar(const std::string& name) const
    {
        for (const auto& [k, v] : scalars)
            if (k == name) return v;
        detail::fail_argument("report has no scalar '" + name + "'");
    }

    bool has_flag(const std::string& name) const
    {
        for (const auto& [k, v] : flags)
            if (k == name) return true;
        return false;
    }

    bool flag(const std::string& name) const
    {
        for (const auto& [k, v] : flags)
            if (k == name) return v;
        detail::fail_argument("report has no flag '" + name + "'");
    }

    const Table& table(const std::string& name) const
    {
        for (const auto& [k, t] : tables)
            if (k == name) return t;
        detail::fail_argument("report has no table '" + name + "'");
    }
};

inline Json system_json(const SystemSpec& spec)
{
    Json params = Json::object();
    for (const auto& [k, v] : spec.params()) params[k] = v;
    return Json{{"family", std::string(spec.name())}, {"params", params}};
}

inline Json to_json(const DiagnosticsReport& r)
{
    Json j;
    j["probe"] = r.probe;
    j["system"] = r.system;
    j["settings"] = r.settings;
    Json scalars = Json::object();
    for (const auto& [k, v] : r.scalars) scalars[k] = v;
    j["scalars"] = scalars;
    Json flags = Json::object();
    for (const auto& [k, v] : r.flags) flags[k] = v;
    j["flags"] = flags;
    j["notes"] = r.notes;
    Json tables = Json::object();
    for (const auto& [k, t] : r.tables) tables[k] = Json{{"columns", t.columns}, {"rows", t.rows}};
    j["tables"] = tables;
    return j;
}

inline std::string to_text(const DiagnosticsReport& r)
{
    std::ostringstream out;
    out << "probe: " << r.probe << '\n';
    out << "system: " << r.system.dump() << '\n';
    for (const auto& [k, v] : r.settings.items()) out << "setting." << k << ": " << v.dump() << '\n';
    for (const auto& [k, v] : r.scalars) out << "scalar." << k << ": " << format_double(v) << '\n';
    for (const auto& [k, v] : r.flags) out << "flag." << k << ": " << (v ? "true" : "false") << '\n';
    for (const auto& n : r.notes) out << "note: " << n << '\n';
    for (const auto& [k, t] : r.tables) {
        out << "\n# table " << k << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
            out << '\n';
        }
    }
    return out.str();
}

} // namespace ergolab
