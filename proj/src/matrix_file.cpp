#include "ifpca/matrix_file.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "ifpca/error.hpp"

namespace ifpca {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  v = std::strtod(s.c_str(), &end);
  return *end == '\0' && errno != ERANGE;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

DataMatrix read_matrix(const MatrixFile& file) {
  std::ifstream in(file.path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + file.path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split(line, file.delimiter);
    std::vector<double> row(cells.size());
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], row[c])) {
        numeric = false;
        bad = c;
        break;
      }
    }
    if (first) {
      first = false;
      const bool is_header = file.header.value_or(!numeric);
      if (is_header) continue;
    }
    if (!numeric) {
      throw Error(ErrorCode::kData, file.path.string() + ":" + std::to_string(line_no) +
                                        ": non-numeric cell in column " +
                                        std::to_string(bad + 1),
                  bad);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kData, file.path.string() + ":" + std::to_string(line_no) +
                                        ": expected " + std::to_string(rows.front().size()) +
                                        " cells, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "read error on " + file.path.string());
  if (rows.empty()) throw Error(ErrorCode::kData, file.path.string() + " has no data rows");

  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  Matrix m = file.features_by_samples ? Matrix(c, r) : Matrix(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (file.features_by_samples) {
        m(j, i) = v;
      } else {
        m(i, j) = v;
      }
    }
  }
  return DataMatrix(std::move(m));
}

LabelVector read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  LabelVector out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const std::string cell = trim(line);
    char* end = nullptr;
    const long v = std::strtol(cell.c_str(), &end, 10);
    if (cell.empty() || *end != '\0') {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::kData,
                  path.string() + ":" + std::to_string(line_no) + ": label is not an integer");
    }
    first = false;
    if (v < 1) {
      throw Error(ErrorCode::kData,
                  path.string() + ":" + std::to_string(line_no) + ": labels must be >= 1");
    }
    out.labels.push_back(static_cast<int>(v));
  }
  if (out.labels.empty()) throw Error(ErrorCode::kData, path.string() + " has no labels");
  out.k = *std::max_element(out.labels.begin(), out.labels.end());
  return out;
}

void write_labels(const std::filesystem::path& path, const LabelVector& labels) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "sample,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i + 1 << ',' << labels.labels[i] << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write error on " + path.string());
}

}  // namespace ifpca
