#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ifpca/matrix.hpp"

namespace ifpca {

// Class labels in 1..k.
struct LabelVector {
  std::vector<int> labels;
  int k = 0;

  std::size_t size() const { return labels.size(); }
  // Throws if any label falls outside 1..k or the vector is empty.
  void validate() const;
};

enum class KmeansInit { kUniformSample, kPlusPlus };

struct KmeansOptions {
  int replicates = 30;
  std::uint64_t seed = 0;
  KmeansInit init = KmeansInit::kUniformSample;
  int max_iter = 300;
  // Called after every assignment step with the current WCSS. Observers must
  // be thread-safe; replicates run in parallel.
  std::function<void(int replicate, int iteration, double wcss)> on_iteration;
};

struct KmeansResult {
  LabelVector labels;
  Matrix centers;  // k x d
  double wcss = 0.0;
  int replicate = 0;
  int iterations = 0;
};

// Lloyd's algorithm on the rows of `points`, best of `replicates` runs.
KmeansResult kmeans(const MatrixRef& points, int k, const KmeansOptions& options);

// D^2-weighted seeding; all-zero weights fall back to a uniform draw.
Matrix kmeanspp_seed(const MatrixRef& points, int k, std::mt19937_64& rng);

// Agglomerative clustering with complete linkage and Euclidean distance,
// stopped at k clusters. Labels are numbered by first appearance.
LabelVector hierarchical_complete(const MatrixRef& points, int k);

// Fraction of mismatches after the best relabeling of `truth`, by exact
// enumeration of the k! permutations (k <= 10).
double hamming_error(const LabelVector& predicted, const LabelVector& truth);

}  // namespace ifpca
