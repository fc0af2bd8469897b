#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "ifpca/acm.hpp"
#include "ifpca/ks.hpp"

namespace ifpca {

// Method names as they appear in the CSV: IF-PCA(1) is IF-HCT-PCA,
// IF-PCA(2) is IF-PCA with threshold sqrt(2 q log p) for each preset q.
enum class SimMethod { kIfPcaHc, kIfPcaFixed, kSpecGem, kKmeans, kKmeansPP, kHier,
                       kIfKmeans, kIfHier };

const char* to_string(SimMethod method);
// Accepts the CSV names and the short forms ifpca1, ifpca2, specgem,
// kmeans, kmeanspp, hier, if-kmeans, if-hier.
SimMethod parse_sim_method(const std::string& name);
std::vector<SimMethod> default_sim_methods();

// Null tables keyed by n, built once per process.
class NullCache {
 public:
  NullCache(std::uint64_t seed, std::size_t draws) : seed_(seed), draws_(draws) {}
  std::shared_ptr<const NullTable> get(std::size_t n, std::size_t p);

 private:
  std::uint64_t seed_;
  std::size_t draws_;  // 0 selects default_null_size(p)
  std::mutex mutex_;
  std::map<std::size_t, std::shared_ptr<const NullTable>> tables_;
};

struct SimulationOptions {
  std::vector<SimMethod> methods = default_sim_methods();
  int reps = 0;  // 0 uses the setting's own rep count
  std::uint64_t seed = 0;
  int replicates = 30;
  Normalization normalization = Normalization::kNone;
};

struct MethodSummary {
  std::string experiment;
  std::string setting;
  std::string method;
  double mean_error = 0.0;
  double sd_error = 0.0;
  int reps = 0;
  std::vector<double> errors;
};

// Rows in the order methods x thresholds. A run whose screening step keeps
// no feature is scored as the one-cluster labeling.
std::vector<MethodSummary> simulate_setting(const ExperimentSetting& setting,
                                            std::size_t setting_index,
                                            const SimulationOptions& options, NullCache& nulls);

void write_simulation_csv(std::ostream& out, const std::vector<MethodSummary>& rows);

}  // namespace ifpca
