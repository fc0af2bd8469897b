#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifpca/matrix.hpp"

namespace ifpca {

enum class Normalization { kNone, kMeanStd, kMedMad, kLower50 };

const char* to_string(Normalization mode);
Normalization parse_normalization(const std::string& name);

// Per-feature KS scores. values[j] = (raw_j - shift) / scale, where the
// affine constants are those of the normalization that produced them.
struct KsScores {
  std::vector<double> values;
  std::size_t n = 0;
  Normalization normalization = Normalization::kNone;
  double shift = 0.0;
  double scale = 1.0;
};

// Sorted Monte-Carlo sample of the standardize-then-KS statistic under the
// null, simulated at sample size n.
class NullTable {
 public:
  NullTable(std::size_t n, std::uint64_t seed, std::vector<double> sorted);

  std::size_t n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& values() const { return values_; }

  // Text format: header line then one value per line with 17 significant
  // digits. A ".bin" extension selects the binary variant (same header,
  // then little-endian IEEE doubles).
  void save(const std::filesystem::path& path) const;
  static NullTable load(const std::filesystem::path& path);

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

struct PValues {
  std::vector<double> values;
};

struct FeatureSet {
  std::vector<std::size_t> indices;  // 0-based, ascending
  double threshold = 0.0;
  bool empty() const { return indices.empty(); }
};

double normal_cdf(double x);

// sqrt(n) * sup_t |F_n(t) - Phi(t)| for already standardized values.
double ks_of_standardized(std::span<const double> v);

KsScores ks_scores(const StandardizedMatrix& w);

// Null table must be supplied for kLower50. Throws ZeroSpread when the scale
// statistic vanishes.
KsScores normalize_scores(const KsScores& ks, Normalization mode,
                          const NullTable* null = nullptr);

// Default Monte-Carlo size used when no explicit count is given.
std::size_t default_null_size(std::size_t p);

NullTable build_null_table(std::size_t n, std::size_t draws, std::uint64_t seed);

// The null reference that scores normalized with `mode` are compared
// against: meanstd and medmad rescale the null by its own location and
// spread, none and lower50 use it raw.
std::vector<double> null_reference(const NullTable& null, Normalization mode);

// pi_j = (1 + #{null >= score_j}) / (N + 1).
PValues pvalues(const KsScores& scores, const NullTable& null);
PValues pvalues_against(const KsScores& scores,
                        std::span<const double> sorted_reference);

FeatureSet select_features(const KsScores& scores, double t);

}  // namespace ifpca
