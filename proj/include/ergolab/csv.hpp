#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measure.hpp"
#include "ulam.hpp"

namespace ergolab {

/// 17 significant digits: enough for a bit-exact round trip of any double.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline double parse_double(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') fail_argument("malformed number '" + s + "' in CSV");
    return v;
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, const std::string& expected_header)
{
    std::string line;
    if (!std::getline(in, line) || line != expected_header)
        fail_argument("CSV header must be '" + expected_header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(split_csv_line(line));
    return rows;
}

} // namespace detail

/// `x,weight` on the interval, `phi,r,weight` on the disc.
inline void write_cloud_csv(std::ostream& out, const PointCloud& mu)
{
    const bool disc = mu.phase() == Phase::Disc;
    out << (disc ? "phi,r,weight\n" : "x,weight\n");
    for (const Atom& a : mu.atoms()) {
        out << format_double(a.point.x);
        if (disc) out << ',' << format_double(a.point.r);
        out << ',' << format_double(a.weight) << '\n';
    }
}

inline PointCloud read_cloud_csv(std::istream& in, Phase phase)
{
    const bool disc = phase == Phase::Disc;
    const auto rows = detail::read_csv_rows(in, disc ? "phi,r,weight" : "x,weight");
    std::vector<Atom> atoms;
    atoms.reserve(rows.size());
    for (const auto& row : rows) {
        detail::require(row.size() == (disc ? 3u : 2u), "wrong column count in cloud CSV");
        const Point p = disc ? Point::polar(detail::parse_double(row[0]), detail::parse_double(row[1]))
                             : Point::on_interval(detail::parse_double(row[0]));
        atoms.push_back({p, detail::parse_double(row.back())});
    }
    return PointCloud(phase, std::move(atoms));
}

inline void write_grid_csv(std::ostream& out, const GridMeasure& g)
{
    out << "cell_index,mass\n";
    for (std::size_t i = 0; i < g.cells(); ++i) out << i << ',' << format_double(g.mass(i)) << '\n';
}

inline GridMeasure read_grid_csv(std::istream& in, Phase phase, Resolution res)
{
    const auto rows = detail::read_csv_rows(in, "cell_index,mass");
    std::vector<double> masses(res.cells(), 0.0);
    detail::require(rows.size() == res.cells(), "grid CSV row count does not match the resolution");
    for (const auto& row : rows) {
        detail::require(row.size() == 2, "wrong column count in grid CSV");
        const auto idx = static_cast<std::size_t>(detail::parse_double(row[0]));
        detail::require(idx < masses.size(), "cell index outside the grid");
        masses[idx] = detail::parse_double(row[1]);
    }
    return GridMeasure(phase, res, std::move(masses));
}

/// `step,value`, one row per entry.
inline void write_trace_csv(std::ostream& out, std::span<const double> values)
{
    out << "step,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << format_double(values[i]) << '\n';
}

inline std::vector<double> read_trace_csv(std::istream& in)
{
    const auto rows = detail::read_csv_rows(in, "step,value");
    std::vector<double> out;
    for (const auto& row : rows) {
        detail::require(row.size() == 2, "wrong column count in trace CSV");
        out.push_back(detail::parse_double(row[1]));
    }
    return out;
}

/// `row,col,prob` triples.
inline void write_ulam_csv(std::ostream& out, const UlamMatrix& m)
{
    out << "row,col,prob\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        for (const auto& e : m.row(i)) out << i << ',' << e.col << ',' << format_double(e.prob) << '\n';
}

} // namespace ergolab
