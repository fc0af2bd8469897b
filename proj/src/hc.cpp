#include "ifpca/hc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "ifpca/error.hpp"

namespace ifpca {

double hc_score(std::size_t p, std::size_t n, std::size_t j, double pi_j) {
  const double frac = static_cast<double>(j) / static_cast<double>(p);
  const double diff = frac - pi_j;
  const double denom =
      std::sqrt(std::max(std::sqrt(static_cast<double>(n)) * diff, 0.0) + frac);
  return std::sqrt(static_cast<double>(p)) * diff / denom;
}

HcResult hc_threshold(const PValues& pvals, const KsScores& scores, std::size_t n,
                      const HcOptions& options) {
  const std::size_t p = pvals.values.size();
  if (p < 2 || scores.values.size() != p) {
    throw Error(ErrorCode::kInvalidConfig,
                "hc_threshold needs p >= 2 aligned p-values and scores");
  }
  HcResult out;
  out.sorted_pvalues = pvals.values;
  std::sort(out.sorted_pvalues.begin(), out.sorted_pvalues.end());
  out.hc_curve.resize(p);
  out.eligible.resize(p);

  const double floor = std::log(static_cast<double>(p)) / static_cast<double>(p);
  // j < p/2 with integer j.
  const std::size_t j_max = (p + 1) / 2 - 1;
  for (std::size_t j = 1; j <= p; ++j) {
    const double pi = out.sorted_pvalues[j - 1];
    out.hc_curve[j - 1] = hc_score(p, n, j, pi);
    out.eligible[j - 1] = j <= j_max && pi > floor;
  }

  auto argmax = [&](const std::function<bool(std::size_t)>& allowed) {
    std::size_t best = 0;
    for (std::size_t j = 1; j <= p; ++j) {
      if (!allowed(j)) continue;
      if (best == 0 || out.hc_curve[j - 1] > out.hc_curve[best - 1]) best = j;
    }
    return best;
  };

  out.j_hat = argmax([&](std::size_t j) { return out.eligible[j - 1]; });
  if (out.j_hat == 0) {
    if (!options.fallback) {
      throw Error(ErrorCode::kNoEligibleIndex,
                  "no rank satisfies the HC p-value floor and j < p/2");
    }
    out.j_hat = argmax([&](std::size_t j) { return j <= j_max; });
    out.used_fallback = true;
    if (out.j_hat == 0) {
      throw Error(ErrorCode::kNoEligibleIndex, "no rank satisfies j < p/2");
    }
  }

  std::vector<double> desc = scores.values;
  std::nth_element(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(out.j_hat - 1),
                   desc.end(), std::greater<>());
  out.t_hc = desc[out.j_hat - 1];
  return out;
}

void write_hc_csv(std::ostream& out, const HcResult& hc) {
  out << "j,pi_j,HC_j,eligible\n";
  char buf[96];
  for (std::size_t j = 1; j <= hc.hc_curve.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d\n", j,
                  hc.sorted_pvalues[j - 1], hc.hc_curve[j - 1],
                  hc.eligible[j - 1] ? 1 : 0);
    out << buf;
  }
}

}  // namespace ifpca
