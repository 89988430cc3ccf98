#include "papc/bench/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace papc::bench {

Mat<double> parse_matrix(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  long long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    throw std::runtime_error(origin + ": first line must be 'rows cols' with positive sizes");
  Mat<double> m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok))
        throw std::runtime_error(origin + ": expected " + std::to_string(rows * cols) + " entries, got " +
                                 std::to_string(i * cols + j));
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw std::runtime_error(origin + ": bad entry '" + tok + "'");
      m(i, j) = v;
    }
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error(origin + ": trailing data after " + std::to_string(rows * cols) + " entries");
  return m;
}

Mat<double> read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str(), path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_matrix(const Mat<double>& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const Mat<double>& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file '" + path.string() + "'");
  out << format_matrix(m);
}

Vec<double> read_vector(const std::filesystem::path& path) {
  const Mat<double> m = read_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error(path.string() + ": expected a single row or column");
}

}  // namespace papc::bench
