#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specvar/errors.hpp"
#include "specvar/extended_value.hpp"
#include "specvar/matrix_core.hpp"

namespace specvar {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& cell, const std::string& where) {
    const std::string t = trim(cell);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = t.data();
    if (!t.empty() && t[0] == '+') ++first;
    const auto res = std::from_chars(first, t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw Error(ErrorKind::IoError, where + ": cannot parse number '" + t + "'");
    return v;
}

}  // namespace detail

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Matrix parse_csv(std::istream& in, bool header = false, const std::string& where = "csv") {
    std::string line;
    if (header) std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(detail::parse_double(cell, where));
        if (!line.empty() && line.back() == ',') throw Error(ErrorKind::IoError, where + ": trailing comma");
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorKind::IoError, where + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < M.rows(); ++i)
        for (Index c = 0; c < M.cols(); ++c) M(i, c) = rows[i][c];
    return M;
}

inline Matrix read_csv(const std::string& path, bool header = false) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    return parse_csv(in, header, path);
}

inline std::string to_csv(const Matrix& M) {
    std::string out;
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index c = 0; c < M.cols(); ++c) {
            if (c) out += ',';
            out += format_double(M(i, c));
        }
        out += '\n';
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

inline void write_csv(const std::string& path, const Matrix& M) { write_text(path, to_csv(M)); }

using Json = nlohmann::ordered_json;

inline Json to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
        rows.push_back(row);
    }
    return rows;
}

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// +inf is carried as the string "+inf".
inline Json to_json(const ExtendedValue& v) { return v.is_finite() ? Json(v.value()) : Json("+inf"); }

inline Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorKind::IoError, "matrix must be a JSON array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
            throw Error(ErrorKind::IoError, "ragged matrix in JSON");
        for (Index c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
    }
    return M;
}

namespace detail {

inline void dump_string(std::string& out, const std::string& s) { out += Json(s).dump(); }

inline void dump(std::string& out, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ',';
                    out += nl;
                }
                first = false;
                out += pad;
                dump_string(out, it.key());
                out += indent > 0 ? ": " : ":";
                dump(out, it.value(), indent, depth + 1);
            }
            out += nl;
            out += close;
            out += '}';
            return;
        }
        case Json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += indent > 0 ? ", " : ",";
                first = false;
                dump(out, e, indent, depth + 1);
            }
            out += ']';
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v))
                out += format_double(v);
            else
                dump_string(out, v > 0 ? "+inf" : (v < 0 ? "-inf" : "nan"));
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace detail

// Doubles are written with 17 significant digits.
inline std::string dump_json(const Json& j, int indent = 2) {
    std::string out;
    detail::dump(out, j, indent, 0);
    return out;
}

}  // namespace specvar
