#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tgl/dataset.hpp"

namespace tgl::csv {

struct Table
{
    std::vector<std::string> header;
    DenseMatrix values;
};

/// Header row followed by numeric rows. Non-numeric or non-finite cells
/// raise ParseError with the offending coordinates.
Table read_table(const std::filesystem::path& path);
Table parse_table(const std::string& text);

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

std::string format_table(const std::vector<std::string>& header, const DenseMatrix& values);

/// Time-point column header, e.g. 5 -> "t5", 2.5 -> "t2.5".
std::string time_header(double hours);
double parse_time_header(const std::string& header);

LongitudinalDataset read_dataset(const std::filesystem::path& x_path,
                                 const std::filesystem::path& y_path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

} // namespace tgl::csv
