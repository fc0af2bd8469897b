#include "ifpca/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

void LabelVector::validate() const {
  if (labels.empty()) throw Error(ErrorCode::kData, "label vector is empty");
  if (k < 1) throw Error(ErrorCode::kData, "label vector has k < 1");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > k) {
      throw Error(ErrorCode::kData,
                  "label " + std::to_string(labels[i]) + " at position " +
                      std::to_string(i + 1) + " is outside 1.." + std::to_string(k),
                  i);
    }
  }
}

namespace {

constexpr std::uint64_t kKmeansStream = 0x6b6d65616eULL;
// Above this dimension squared distances go through a GEMM expansion.
constexpr Eigen::Index kDirectDistanceMaxDim = 64;

double squared_distance(const MatrixRef& points, Eigen::Index i,
                        const Matrix& centers, Eigen::Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

// n x k matrix of squared distances between rows of points and centers.
Matrix squared_distances(const MatrixRef& points, const Vector& point_norms,
                         const Matrix& centers) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  Matrix d(n, k);
  if (points.cols() <= kDirectDistanceMaxDim) {
    for (Eigen::Index c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) d(i, c) = squared_distance(points, i, centers, c);
    }
    return d;
  }
  d.noalias() = -2.0 * points * centers.transpose();
  const Vector center_norms = centers.rowwise().squaredNorm();
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      d(i, c) = std::max(0.0, d(i, c) + point_norms(i) + center_norms(c));
    }
  }
  return d;
}

// Returns true when any label changed.
bool assign(const MatrixRef& points, const Vector& point_norms,
            const Matrix& centers, std::vector<int>& labels) {
  const Matrix d = squared_distances(points, point_norms, centers);
  bool changed = false;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < d.cols(); ++c) {
      if (d(i, c) < d(i, best)) best = c;
    }
    if (labels[i] != static_cast<int>(best)) {
      labels[i] = static_cast<int>(best);
      changed = true;
    }
  }
  return changed;
}

double exact_wcss(const MatrixRef& points, const Matrix& centers,
                  const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += squared_distance(points, i, centers, labels[i]);
  }
  return total;
}

// Recomputes centers as member means. An empty cluster takes the point
// farthest from its own current center; that point moves into it.
void update_centers(const MatrixRef& points, Matrix& centers, std::vector<int>& labels) {
  const Eigen::Index k = centers.rows();
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(labels[i]) += points.row(i);
    ++counts[labels[i]];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[c] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (counts[labels[i]] <= 1) continue;
      const double d = squared_distance(points, i, centers, labels[i]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) continue;  // fewer distinct donors than clusters
    const int donor = labels[far];
    --counts[donor];
    sums.row(donor) -= points.row(far);
    centers.row(donor) = sums.row(donor) / static_cast<double>(counts[donor]);
    labels[far] = static_cast<int>(c);
    counts[c] = 1;
    sums.row(c) = points.row(far);
    centers.row(c) = points.row(far);
  }
}

Matrix uniform_sample_seed(const MatrixRef& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix centers(k, points.cols());
  for (int c = 0; c < k; ++c) {
    boost::random::uniform_int_distribution<Eigen::Index> pick(c, n - 1);
    std::swap(idx[c], idx[pick(rng)]);
    centers.row(c) = points.row(idx[c]);
  }
  return centers;
}

KmeansResult run_replicate(const MatrixRef& points, const Vector& point_norms, int k,
                           const KmeansOptions& opt, int replicate) {
  std::mt19937_64 rng(derive_seed(opt.seed, kKmeansStream,
                                  static_cast<std::uint64_t>(replicate)));
  Matrix centers = opt.init == KmeansInit::kPlusPlus ? kmeanspp_seed(points, k, rng)
                                                     : uniform_sample_seed(points, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(points.rows()), -1);
  assign(points, point_norms, centers, labels);
  double wcss = exact_wcss(points, centers, labels);
  if (opt.on_iteration) opt.on_iteration(replicate, 0, wcss);

  int it = 0;
  while (it < opt.max_iter) {
    ++it;
    std::vector<int> before = labels;
    update_centers(points, centers, labels);
    assign(points, point_norms, centers, labels);
    wcss = exact_wcss(points, centers, labels);
    if (opt.on_iteration) opt.on_iteration(replicate, it, wcss);
    if (labels == before) break;
  }

  KmeansResult out;
  out.labels.k = k;
  out.labels.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.labels.labels[i] = labels[i] + 1;
  out.centers = std::move(centers);
  out.wcss = wcss;
  out.replicate = replicate;
  out.iterations = it;
  return out;
}

}  // namespace

Matrix kmeanspp_seed(const MatrixRef& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw Error(ErrorCode::kInvalidK, "k-means++ needs 1 <= k <= n");
  Matrix centers(k, points.cols());
  boost::random::uniform_int_distribution<Eigen::Index> uniform(0, n - 1);
  centers.row(0) = points.row(uniform(rng));
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    weight[i] = squared_distance(points, i, centers, 0);
  }
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      boost::random::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0.0;
      chosen = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        acc += weight[i];
        chosen = i;
        if (acc > target) break;
      }
    } else {
      chosen = uniform(rng);
    }
    centers.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      weight[i] = std::min(weight[i], squared_distance(points, i, centers, c));
    }
  }
  return centers;
}

KmeansResult kmeans(const MatrixRef& points, int k, const KmeansOptions& options) {
  if (k < 1 || k > points.rows()) {
    throw Error(ErrorCode::kInvalidK, "k-means needs 1 <= k <= n (k = " +
                                          std::to_string(k) + ", n = " +
                                          std::to_string(points.rows()) + ")");
  }
  if (options.replicates < 1) {
    throw Error(ErrorCode::kInvalidConfig, "k-means needs at least one replicate");
  }
  const Vector point_norms = points.rowwise().squaredNorm();
  std::vector<KmeansResult> runs(static_cast<std::size_t>(options.replicates));
  parallel_for(runs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      runs[r] = run_replicate(points, point_norms, k, options, static_cast<int>(r));
    }
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;
  }
  return std::move(runs[best]);
}

LabelVector hierarchical_complete(const MatrixRef& points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kInvalidK, "hierarchical clustering needs 1 <= k <= n");
  }
  // Squared distances preserve the merge order of Euclidean ones.
  Matrix dist(n, n);
  if (points.cols() <= kDirectDistanceMaxDim) {
    for (Eigen::Index i = 0; i < n; ++i) {
      dist(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        dist(i, j) = dist(j, i) = (points.row(i) - points.row(j)).squaredNorm();
      }
    }
  } else {
    const Matrix gram = points * points.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      dist(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        dist(i, j) = dist(j, i) =
            std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
      }
    }
  }

  std::vector<char> active(static_cast<std::size_t>(n), 1);
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  // Per active row i: smallest distance to an active j > i (lowest j on ties).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> row_min(static_cast<std::size_t>(n), inf);
  std::vector<Eigen::Index> row_arg(static_cast<std::size_t>(n), -1);
  auto refresh = [&](Eigen::Index i) {
    row_min[i] = inf;
    row_arg[i] = -1;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (active[j] && dist(i, j) < row_min[i]) {
        row_min[i] = dist(i, j);
        row_arg[i] = j;
      }
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) refresh(i);

  for (Eigen::Index clusters = n; clusters > k; --clusters) {
    Eigen::Index a = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[i] && row_arg[i] >= 0 && (a < 0 || row_min[i] < row_min[a])) a = i;
    }
    const Eigen::Index b = row_arg[a];
    active[b] = 0;
    parent[b] = a;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (!active[l] || l == a) continue;
      const double merged = std::max(dist(a, l), dist(b, l));
      dist(a, l) = dist(l, a) = merged;
    }
    refresh(a);
    for (Eigen::Index l = 0; l < a; ++l) {
      if (active[l] && (row_arg[l] == a || row_arg[l] == b)) refresh(l);
    }
    for (Eigen::Index l = a + 1; l < b; ++l) {
      if (active[l] && row_arg[l] == b) refresh(l);
    }
  }

  auto root = [&](Eigen::Index i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  LabelVector out;
  out.k = k;
  out.labels.resize(static_cast<std::size_t>(n));
  std::vector<int> label_of(static_cast<std::size_t>(n), 0);
  int next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = root(i);
    if (label_of[r] == 0) label_of[r] = ++next;
    out.labels[i] = label_of[r];
  }
  return out;
}

double hamming_error(const LabelVector& predicted, const LabelVector& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kData, "label vectors differ in length");
  }
  const int k = std::max(predicted.k, truth.k);
  if (k > 10) throw Error(ErrorCode::kKTooLarge, "hamming_error supports k <= 10");
  LabelVector p = predicted, t = truth;
  p.k = t.k = k;
  p.validate();
  t.validate();

  std::vector<std::size_t> confusion(static_cast<std::size_t>(k * k), 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++confusion[static_cast<std::size_t>((p.labels[i] - 1) * k + (t.labels[i] - 1))];
  }
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t matched = 0;
    for (int b = 0; b < k; ++b) matched += confusion[static_cast<std::size_t>(perm[b] * k + b)];
    best = std::max(best, matched);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(p.size() - best) / static_cast<double>(p.size());
}

}  // namespace ifpca
