#pragma once

#include "papc/core.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace papc::bench {

/// "rows cols" on the first line, then rows*cols entries in row-major order.
Mat<double> parse_matrix(std::string_view text, const std::string& origin = "<text>");
Mat<double> read_matrix(const std::filesystem::path& path);
std::string format_matrix(const Mat<double>& m);
void write_matrix(const std::filesystem::path& path, const Mat<double>& m);

/// A vector file is a matrix with one column (or one row).
Vec<double> read_vector(const std::filesystem::path& path);

/// %.17g, the shortest format that round-trips every double
std::string format_double(double v);

}  // namespace papc::bench
