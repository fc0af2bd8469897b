#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "ifpca/ks.hpp"

namespace ifpca {

struct HcResult {
  std::vector<double> sorted_pvalues;  // ascending, length p
  std::vector<double> hc_curve;        // HC_{p,j} for j = 1..p
  std::vector<bool> eligible;          // pi_(j) > log(p)/p and j < p/2
  std::size_t j_hat = 0;               // 1-based rank
  double t_hc = 0.0;                   // j_hat-th largest score
  bool used_fallback = false;
};

struct HcOptions {
  // On an empty eligible set, retry without the p-value floor.
  bool fallback = false;
};

// Higher-Criticism threshold. Ties in the argmax go to the smallest j.
HcResult hc_threshold(const PValues& pvals, const KsScores& scores, std::size_t n,
                      const HcOptions& options = {});

// The HC statistic at rank j (1-based) for sorted p-value pi_j.
double hc_score(std::size_t p, std::size_t n, std::size_t j, double pi_j);

// CSV with columns j,pi_j,HC_j,eligible.
void write_hc_csv(std::ostream& out, const HcResult& hc);

}  // namespace ifpca
