#pragma once

// Wide CSV: a header row of channel labels, then one row per time sample.
// Empty cells and "NaN" are gaps.

#include "../types.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace latentgc::io {

struct CsvOptions
{
    char delimiter = ',';
    /// Fill gaps by linear interpolation on load; otherwise they stay NaN.
    bool interpolate_gaps = true;
};

class parse_error : public error
{
public:
    using error::error;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline std::string unquote(std::string_view s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

inline bool is_gap(std::string_view s)
{
    return s.empty() || s == "NaN" || s == "nan" || s == "NA";
}

inline double parse_number(std::string_view s, std::size_t line, std::size_t col)
{
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw parse_error("line " + std::to_string(line) + ", column " + std::to_string(col)
                          + ": not a number: '" + std::string(s) + "'");
    return v;
}

} // namespace detail

/// Linear interpolation of NaN gaps per channel; leading/trailing gaps take the
/// nearest observed value.
inline Matrix interpolate_gaps(Matrix x)
{
    const Index T = x.cols();
    for (Index c = 0; c < x.rows(); ++c) {
        Index prev = -1;
        for (Index t = 0; t < T; ++t) {
            if (std::isnan(x(c, t)))
                continue;
            if (prev < 0) {
                for (Index u = 0; u < t; ++u)
                    x(c, u) = x(c, t);
            } else if (t - prev > 1) {
                for (Index u = prev + 1; u < t; ++u) {
                    const double a = static_cast<double>(u - prev) / static_cast<double>(t - prev);
                    x(c, u) = (1.0 - a) * x(c, prev) + a * x(c, t);
                }
            }
            prev = t;
        }
        if (prev < 0)
            throw parse_error("channel " + std::to_string(c + 1) + " has no observed values");
        for (Index u = prev + 1; u < T; ++u)
            x(c, u) = x(c, prev);
    }
    return x;
}

inline MultiSeries parse_csv(std::istream& in, const CsvOptions& opts = {})
{
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        for (auto cell : detail::split(line, opts.delimiter))
            labels.push_back(detail::unquote(cell));
        break;
    }
    if (labels.empty())
        throw parse_error("empty file");
    if (labels.size() < 2)
        throw parse_error("fewer than 2 channels");

    const std::size_t D = labels.size();
    std::vector<double> values;
    std::size_t rows = 0;
    bool gaps = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split(line, opts.delimiter);
        if (cells.size() != D)
            throw parse_error("line " + std::to_string(lineno) + ": expected " + std::to_string(D) + " cells, found "
                              + std::to_string(cells.size()));
        for (std::size_t c = 0; c < D; ++c) {
            if (detail::is_gap(cells[c])) {
                values.push_back(std::numeric_limits<double>::quiet_NaN());
                gaps = true;
            } else {
                values.push_back(detail::parse_number(cells[c], lineno, c + 1));
            }
        }
        ++rows;
    }
    if (rows == 0)
        throw parse_error("no data rows");

    // values is row-major T x D, i.e. column-major D x T
    Matrix data = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(D), static_cast<Index>(rows));
    if (gaps && opts.interpolate_gaps)
        data = interpolate_gaps(std::move(data));
    return MultiSeries::from_matrix(std::move(data), std::move(labels));
}

inline MultiSeries load_csv(const std::string& path, const CsvOptions& opts = {})
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw error("cannot open '" + path + "'");
    return parse_csv(f, opts);
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "NaN";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Rows of `columns` are written as CSV columns under `labels`.
inline void write_columns(std::ostream& out, const std::vector<std::string>& labels, const Matrix& columns,
                          char delim = ',')
{
    if (static_cast<Index>(labels.size()) != columns.rows())
        throw invalid_argument("label count does not match column count");
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << (i ? std::string(1, delim) : std::string()) << labels[i];
    out << '\n';
    for (Index t = 0; t < columns.cols(); ++t) {
        for (Index c = 0; c < columns.rows(); ++c) {
            if (c)
                out << delim;
            out << format_double(columns(c, t));
        }
        out << '\n';
    }
}

inline void write_csv(std::ostream& out, const MultiSeries& x, char delim = ',')
{
    write_columns(out, x.labels, x.data, delim);
}

inline void write_csv(const std::string& path, const MultiSeries& x, char delim = ',')
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw error("cannot write '" + path + "'");
    write_csv(f, x, delim);
    if (!f)
        throw error("write failed for '" + path + "'");
}

} // namespace latentgc::io
