#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ifpca/cluster.hpp"
#include "ifpca/matrix.hpp"

namespace ifpca {

struct MatrixFile {
  std::filesystem::path path;
  char delimiter = ',';
  // false: rows are samples; true: rows are features (typical for
  // microarray exports) and the file is transposed on load.
  bool features_by_samples = false;
  // nullopt: treat the first line as a header iff some cell is not numeric.
  std::optional<bool> header;
};

DataMatrix read_matrix(const MatrixFile& file);

// One integer in 1..K per line; an optional single header line is skipped.
LabelVector read_labels(const std::filesystem::path& path);

// CSV with columns sample,label (1-based sample index).
void write_labels(const std::filesystem::path& path, const LabelVector& labels);

}  // namespace ifpca
