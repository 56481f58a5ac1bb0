#include "tgl/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace tgl::csv {

namespace {

std::vector<std::string_view> split_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view cell, double& out)
{
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    if (cell.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

} // namespace

Table parse_table(const std::string& text)
{
    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        // UTF-8 byte order mark
        if (rest.starts_with("\xEF\xBB\xBF")) {
            rest.remove_prefix(3);
        }
        while (!rest.empty()) {
            const std::size_t nl = rest.find('\n');
            lines.push_back(rest.substr(0, nl));
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    while (!lines.empty() && trim(lines.back()).empty()) {
        lines.pop_back();
    }
    if (lines.empty()) {
        throw ParseError("empty CSV: missing header row", 1, 1);
    }

    Table table;
    for (auto cell : split_line(lines.front())) {
        table.header.emplace_back(trim(cell));
    }
    const auto cols = static_cast<Index>(table.header.size());
    const auto rows = static_cast<Index>(lines.size() - 1);
    table.values.resize(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const long line_no = static_cast<long>(r) + 2;
        const auto cells = split_line(lines[static_cast<std::size_t>(r) + 1]);
        if (static_cast<Index>(cells.size()) != cols) {
            throw ParseError("expected " + std::to_string(cols) + " cells, found "
                                 + std::to_string(cells.size()),
                             line_no, static_cast<long>(cells.size()));
        }
        for (Index c = 0; c < cols; ++c) {
            const auto cell = trim(cells[static_cast<std::size_t>(c)]);
            double value = 0.0;
            if (!parse_double(cell, value)) {
                throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_no,
                                 static_cast<long>(c) + 1);
            }
            table.values(r, c) = value;
        }
    }
    return table;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Table read_table(const std::filesystem::path& path)
{
    try {
        return parse_table(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.message(), e.line(), e.column());
    }
}

std::string format_double(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw InputError("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

std::string format_table(const std::vector<std::string>& header, const DenseMatrix& values)
{
    if (static_cast<Index>(header.size()) != values.cols()) {
        throw InputError("format_table: header/column count mismatch");
    }
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += header[c];
    }
    out += '\n';
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) {
            if (c) out += ',';
            out += format_double(values(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string time_header(double hours) { return "t" + format_double(hours); }

double parse_time_header(const std::string& header)
{
    double hours = 0.0;
    if (header.size() < 2 || header.front() != 't'
        || !parse_double(std::string_view(header).substr(1), hours)) {
        throw InputError("response column header '" + header + "' is not of the form t<hours>");
    }
    return hours;
}

LongitudinalDataset read_dataset(const std::filesystem::path& x_path,
                                 const std::filesystem::path& y_path)
{
    Table x = read_table(x_path);
    Table y = read_table(y_path);
    LongitudinalDataset data;
    data.x = std::move(x.values);
    data.y = std::move(y.values);
    data.feature_names = std::move(x.header);
    for (std::size_t c = 0; c < y.header.size(); ++c) {
        try {
            data.time_labels.push_back(parse_time_header(y.header[c]));
        } catch (const InputError& e) {
            throw ParseError(y_path.string() + ": " + e.what(), 1, static_cast<long>(c) + 1);
        }
    }
    data.validate();
    return data;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot open '" + tmp.string() + "' for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw InputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot move output into place at '" + path.string() + "'");
    }
}

} // namespace tgl::csv
