#ifndef GFDTL_IO_HPP
#define GFDTL_IO_HPP

/*
 * CSV formats shared by the command-line tools.
 *
 * Data files are T rows by p comma-separated columns, one observation per
 * row, with an optional header line.  Fitted paths use a long format with
 * header "t,u,v,value" and 1-based indices; values are printed with 17
 * significant digits so a write/read round trip is bit-identical.
 */

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfdtl/model.hpp"

namespace gfdtl {
namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline bool parse_double(const std::string& tok, double& out) {
    if (tok.empty()) return false;
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parse a data CSV (T x p, optional header) into a Sample.
inline Sample read_data_csv(std::istream& in, const std::string& name = "<stream>") {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (!detail::parse_double(cells[i], row[i])) {
                numeric = false;
                break;
            }
        if (!numeric) {
            if (first_content) {  // header line
                first_content = false;
                continue;
            }
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": expected numeric row");
        }
        first_content = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw std::runtime_error(name + ": need at least two data rows");
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < rows[t].size(); ++j)
            m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return Sample::from_rows(m);
}

inline Sample read_data_csv_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open data file: " + file);
    return read_data_csv(in, file);
}

inline void write_data_csv(std::ostream& out, const Sample& sample) {
    for (int t = 0; t < sample.T(); ++t) {
        for (int j = 0; j < sample.p(); ++j) {
            if (j) out << ',';
            out << detail::format_g17(sample.obs(t, j));
        }
        out << '\n';
    }
}

inline void write_data_csv_file(const std::string& file, const Sample& sample) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open output file: " + file);
    write_data_csv(out, sample);
}

/// Long-format path dump: every entry of every date, 1-based indices.
inline void write_path_csv(std::ostream& out, const PrecisionPath& path) {
    out << "t,u,v,value\n";
    for (std::size_t t = 0; t < path.size(); ++t)
        for (Eigen::Index u = 0; u < path[t].rows(); ++u)
            for (Eigen::Index v = 0; v < path[t].cols(); ++v)
                out << (t + 1) << ',' << (u + 1) << ',' << (v + 1) << ','
                    << detail::format_g17(path[t](u, v)) << '\n';
}

inline void write_path_csv_file(const std::string& file, const PrecisionPath& path) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open output file: " + file);
    write_path_csv(out, path);
}

/// Parse a long-format path CSV; every (t, u, v) cell must be present
/// exactly once for t = 1..T, u, v = 1..p.
inline PrecisionPath read_path_csv(std::istream& in, const std::string& name = "<stream>") {
    struct Entry {
        int t, u, v;
        double value;
    };
    std::vector<Entry> entries;
    int T = 0, p = 0;
    std::string line;
    int lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 4)
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": expected 4 columns (t,u,v,value)");
        double ft, fu, fv, val;
        if (!detail::parse_double(cells[0], ft) || !detail::parse_double(cells[1], fu) ||
            !detail::parse_double(cells[2], fv) || !detail::parse_double(cells[3], val)) {
            if (!seen_header && entries.empty()) {
                seen_header = true;
                continue;
            }
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": bad row");
        }
        const Entry e{static_cast<int>(ft), static_cast<int>(fu), static_cast<int>(fv), val};
        if (e.t < 1 || e.u < 1 || e.v < 1)
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": indices must be 1-based positive");
        T = std::max(T, e.t);
        p = std::max({p, e.u, e.v});
        entries.push_back(e);
    }
    if (T < 2 || p < 1) throw std::runtime_error(name + ": no usable path rows");
    PrecisionPath path(static_cast<std::size_t>(T), Mat::Zero(p, p));
    std::vector<bool> seen(static_cast<std::size_t>(T) * p * p, false);
    for (const Entry& e : entries) {
        const std::size_t flat = (static_cast<std::size_t>(e.t - 1) * p + (e.u - 1)) * p + (e.v - 1);
        if (seen[flat])
            throw std::runtime_error(name + ": duplicate cell at t=" + std::to_string(e.t) +
                                     " u=" + std::to_string(e.u) + " v=" + std::to_string(e.v));
        seen[flat] = true;
        path[e.t - 1](e.u - 1, e.v - 1) = e.value;
    }
    if (entries.size() != seen.size())
        throw std::runtime_error(name + ": incomplete path (want " +
                                 std::to_string(static_cast<long>(T) * p * p) + " cells, have " +
                                 std::to_string(entries.size()) + ")");
    return path;
}

inline PrecisionPath read_path_csv_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open path file: " + file);
    return read_path_csv(in, file);
}

}  // namespace gfdtl

#endif  // GFDTL_IO_HPP
