#include "ifpca/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) {
    throw Error(ErrorCode::kData, "data matrix needs at least 2 samples");
  }
  if (values_.cols() < 1) {
    throw Error(ErrorCode::kData, "data matrix needs at least 1 feature");
  }
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (!std::isfinite(values_(i, j))) {
        throw Error(ErrorCode::kData,
                    "non-finite entry at row " + std::to_string(i + 1) +
                        ", column " + std::to_string(j + 1),
                    static_cast<std::size_t>(j));
      }
    }
  }
}

StandardizedMatrix::StandardizedMatrix(Matrix values, std::vector<double> means,
                                       std::vector<double> sds,
                                       std::vector<std::size_t> kept)
    : values_(std::move(values)),
      means_(std::move(means)),
      sds_(std::move(sds)),
      kept_(std::move(kept)) {}

StandardizedMatrix standardize_columns(const DataMatrix& x,
                                       const StandardizeOptions& options) {
  const Matrix& raw = x.values();
  const std::size_t n = x.samples();
  const std::size_t p = x.features();
  std::vector<double> means(p), sds(p);

  parallel_for(p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double* col = raw.col(static_cast<Eigen::Index>(j)).data();
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += col[i];
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = col[i] - mean;
        ss += d * d;
      }
      means[j] = mean;
      sds[j] = std::sqrt(ss / static_cast<double>(n - 1));
    }
  });

  std::vector<std::size_t> kept;
  kept.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (sds[j] > 0.0) {
      kept.push_back(j);
    } else if (!options.drop_constant) {
      throw Error(ErrorCode::kZeroVarianceColumn,
                  "column " + std::to_string(j + 1) + " has zero variance", j);
    }
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kZeroVarianceColumn, "every column is constant");
  }

  Matrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept.size()));
  std::vector<double> kept_means(kept.size()), kept_sds(kept.size());
  parallel_for(kept.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t j = kept[c];
      const double mean = means[j];
      const double sd = sds[j];
      const double* src = raw.col(static_cast<Eigen::Index>(j)).data();
      double* dst = w.col(static_cast<Eigen::Index>(c)).data();
      for (std::size_t i = 0; i < n; ++i) dst[i] = (src[i] - mean) / sd;
      kept_means[c] = mean;
      kept_sds[c] = sd;
    }
  });
  return StandardizedMatrix(std::move(w), std::move(kept_means),
                            std::move(kept_sds), std::move(kept));
}

namespace {

struct Eigenpairs {
  Matrix vectors;               // m x (k or k+1)
  std::vector<double> values;   // descending, same count as vectors
  int iterations = 0;
};

void sort_descending(Vector& values, Matrix& vectors) {
  // SelfAdjointEigenSolver returns ascending order.
  values.reverseInPlace();
  vectors.rowwise().reverseInPlace();
}

Matrix orthonormalize(const Matrix& z) {
  Eigen::HouseholderQR<Matrix> qr(z);
  return qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
}

// Leading eigenpairs of the symmetric PSD matrix g. Returns k+1 pairs when
// the block has room, so the caller can inspect the gap after the k-th.
Eigenpairs leading_eigenpairs(const Matrix& g, int k, const SvdOptions& opt) {
  const Eigen::Index m = g.rows();
  const Eigen::Index block =
      std::min<Eigen::Index>(m, std::max<Eigen::Index>(2 * k, k + 16));
  const Eigen::Index keep = std::min<Eigen::Index>(block, k + 1);
  Eigenpairs out;

  if (block == m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    Vector values = es.eigenvalues();
    Matrix vectors = es.eigenvectors();
    sort_descending(values, vectors);
    out.vectors = vectors.leftCols(keep);
    out.values.assign(values.data(), values.data() + keep);
    out.iterations = 1;
    return out;
  }

  std::mt19937_64 rng(0x5eedf00dULL);
  boost::random::normal_distribution<double> normal;
  Matrix q(m, block);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index r = 0; r < m; ++r) q(r, c) = normal(rng);
  }
  q = orthonormalize(q);

  for (int it = 1; it <= opt.max_iter; ++it) {
    Matrix z = g * q;
    Matrix h = q.transpose() * z;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Vector values = es.eigenvalues();
    Matrix rot = es.eigenvectors();
    sort_descending(values, rot);
    q = q * rot;
    z = z * rot;

    const double scale = std::abs(values(0));
    bool converged = true;
    for (int i = 0; i < k && converged; ++i) {
      const double resid = (z.col(i) - values(i) * q.col(i)).norm();
      converged = resid <= opt.tol * scale;
    }
    if (converged) {
      out.vectors = q.leftCols(keep);
      out.values.assign(values.data(), values.data() + keep);
      out.iterations = it;
      return out;
    }
    q = orthonormalize(z);
  }
  throw Error(ErrorCode::kNoConvergence,
              "orthogonal iteration did not converge after " +
                  std::to_string(opt.max_iter) + " sweeps");
}

// Replaces column c of u (assumed zero) with a unit vector orthogonal to the
// columns before it.
void complete_column(Matrix& u, Eigen::Index c) {
  for (Eigen::Index e = 0; e < u.rows(); ++e) {
    Vector v = Vector::Unit(u.rows(), e);
    for (Eigen::Index prev = 0; prev < c; ++prev) {
      v -= u.col(prev).dot(v) * u.col(prev);
    }
    const double norm = v.norm();
    if (norm > 1e-8) {
      u.col(c) = v / norm;
      return;
    }
  }
}

void fix_signs(Matrix& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const double v = std::abs(u(r, c));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (u(best, c) < 0.0) u.col(c) = -u.col(c);
  }
}

}  // namespace

SpectralEmbedding truncated_left_svd(const MatrixRef& a, int k,
                                     const SvdOptions& options) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = a.cols();
  if (k < 1 || k > std::min(n, p)) {
    throw Error(ErrorCode::kInvalidConfig,
                "truncated_left_svd: k must lie in [1, min(n, p)]");
  }
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "truncated_left_svd: tol must be positive and max_iter >= 1");
  }

  const bool left_side = n <= p;
  const Eigen::Index m = left_side ? n : p;
  Matrix gram = Matrix::Zero(m, m);
  if (left_side) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  const Eigenpairs pairs = leading_eigenpairs(gram, k, options);
  Matrix u(n, k);
  std::vector<double> sigma(static_cast<std::size_t>(k));
  if (left_side) {
    u = pairs.vectors.leftCols(k);
    const Matrix v = a.transpose() * u;
    for (int i = 0; i < k; ++i) sigma[i] = v.col(i).norm();
  } else {
    u = a * pairs.vectors.leftCols(k);
    for (int i = 0; i < k; ++i) {
      sigma[i] = u.col(i).norm();
      if (sigma[i] > 0.0) {
        u.col(i) /= sigma[i];
      } else {
        complete_column(u, i);
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return sigma[l] > sigma[r]; });
  SpectralEmbedding out;
  out.vectors.resize(n, k);
  out.singular_values.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.vectors.col(i) = u.col(order[i]);
    out.singular_values[i] = sigma[order[i]];
  }
  fix_signs(out.vectors);
  out.iterations = pairs.iterations;

  if (pairs.values.size() > static_cast<std::size_t>(k)) {
    const double next = std::sqrt(std::max(0.0, pairs.values[k]));
    const double gap = out.singular_values[k - 1] - next;
    out.degenerate_gap = gap < options.tol * out.singular_values[0];
  }
  return out;
}

SpectralEmbedding entrywise_truncate(const SpectralEmbedding& u, double t) {
  if (!(t > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "truncation threshold must be > 0");
  }
  SpectralEmbedding out = u;
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.vectors.rows(); ++r) {
      double& v = out.vectors(r, c);
      if (std::abs(v) > t) v = std::copysign(t, v);
    }
  }
  return out;
}

}  // namespace ifpca
