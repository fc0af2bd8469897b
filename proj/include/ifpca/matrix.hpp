#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ifpca {

// Column-major so each feature is contiguous.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;

// Raw n x p samples-by-features matrix. Construction validates n >= 2,
// p >= 1 and that every entry is finite.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  std::size_t samples() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

struct StandardizeOptions {
  // Remove zero-variance columns instead of failing; the surviving original
  // indices are recorded in StandardizedMatrix::kept_columns().
  bool drop_constant = false;
};

// W(i,j) = (X(i,j) - mean_j) / sd_j with the n-1 denominator.
class StandardizedMatrix {
 public:
  StandardizedMatrix(Matrix values, std::vector<double> means,
                     std::vector<double> sds, std::vector<std::size_t> kept);

  std::size_t samples() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& sds() const { return sds_; }
  // Original column index of each retained column.
  const std::vector<std::size_t>& kept_columns() const { return kept_; }

 private:
  Matrix values_;
  std::vector<double> means_;
  std::vector<double> sds_;
  std::vector<std::size_t> kept_;
};

StandardizedMatrix standardize_columns(const DataMatrix& x,
                                       const StandardizeOptions& options = {});

struct SpectralEmbedding {
  Matrix vectors;                       // n x k, orthonormal columns
  std::vector<double> singular_values;  // descending
  // sigma_k and sigma_{k+1} differ by less than tol * sigma_1; the k-th
  // vector is then not uniquely determined.
  bool degenerate_gap = false;
  int iterations = 0;
};

struct SvdOptions {
  double tol = 1e-10;
  int max_iter = 1000;
};

// Leading k left singular vectors of a, by block orthogonal iteration with
// Rayleigh-Ritz on the smaller Gram side (a a' when n <= p, else a' a).
// Each column is signed so its largest-magnitude entry is positive (ties go
// to the lowest row). Throws NoConvergence after max_iter sweeps.
SpectralEmbedding truncated_left_svd(const MatrixRef& a, int k,
                                     const SvdOptions& options = {});

// Clips every entry to [-t, t]. Columns are no longer orthonormal afterwards.
SpectralEmbedding entrywise_truncate(const SpectralEmbedding& u, double t);

}  // namespace ifpca
