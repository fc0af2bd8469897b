#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifpca/cluster.hpp"
#include "ifpca/hc.hpp"
#include "ifpca/ks.hpp"
#include "ifpca/matrix.hpp"

namespace ifpca {

enum class Method { kIfPca, kPca, kKmeans, kKmeansPP, kHier, kIfKmeans, kIfHier };

const char* to_string(Method method);
Method parse_method(const std::string& name);

struct ThresholdRule {
  enum class Kind { kHc, kFixed, kFixedQ };
  Kind kind = Kind::kHc;
  double value = 0.0;

  static ThresholdRule hc() { return {Kind::kHc, 0.0}; }
  static ThresholdRule fixed(double t) { return {Kind::kFixed, t}; }
  static ThresholdRule fixed_q(double q) { return {Kind::kFixedQ, q}; }
  // "hc", "fixed:<t>" or "fixed-q:<q>".
  static ThresholdRule parse(const std::string& text);
  std::string to_string() const;
};

struct PipelineOptions {
  int k = 2;
  Method method = Method::kIfPca;
  Normalization normalization = Normalization::kMeanStd;
  ThresholdRule threshold;
  // Clip the embedding entrywise at log(p) / sqrt(n) before k-means.
  bool truncate = false;
  // Shared null table; built on demand from (null_reps, seed) when absent.
  std::shared_ptr<const NullTable> null_table;
  std::size_t null_reps = 0;  // 0 selects default_null_size(p)
  int replicates = 30;
  std::uint64_t seed = 0;
  bool hc_fallback = false;
  StandardizeOptions standardize;

  void validate() const;
};

struct RunReport {
  std::size_t n = 0;
  std::size_t p = 0;
  LabelVector labels;
  std::vector<std::size_t> selected;  // original 0-based feature indices
  std::optional<double> threshold;
  std::optional<HcResult> hc;
  std::map<std::string, double> timings;  // seconds per stage
  std::optional<double> error_rate;
  nlohmann::json config;
};

// Standardized data and raw KS scores; reusable across runs on one matrix.
struct PreparedData {
  StandardizedMatrix w;
  KsScores raw;
};

PreparedData prepare(const DataMatrix& x, const StandardizeOptions& options = {});

RunReport run_pipeline(const PreparedData& data, const PipelineOptions& options,
                       const LabelVector* truth = nullptr);
RunReport run_pipeline(const DataMatrix& x, const PipelineOptions& options,
                       const LabelVector* truth = nullptr);

// Named entry points; each overrides the method/threshold fields of options.
RunReport if_hct_pca(const DataMatrix& x, PipelineOptions options,
                     const LabelVector* truth = nullptr);
RunReport if_pca_fixed(const DataMatrix& x, int k, double t, PipelineOptions options,
                       const LabelVector* truth = nullptr);
RunReport classical_pca(const DataMatrix& x, int k, PipelineOptions options,
                        const LabelVector* truth = nullptr);
RunReport if_hct_variant(const DataMatrix& x, PipelineOptions options,
                         const LabelVector* truth = nullptr);
RunReport baseline(const DataMatrix& x, int k, Method method, PipelineOptions options,
                   const LabelVector* truth = nullptr);

// Keys: labels, selected (1-based), selected_count, threshold, j_hat,
// error_rate (only with truth), timings (optional), config.
nlohmann::json to_json(const RunReport& report, bool include_timings = true);

}  // namespace ifpca
