#include "ifpca/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "ifpca/acm.hpp"
#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

namespace {

constexpr std::uint64_t kAltStream = 0x616c74ULL;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0' || !std::isfinite(v)) {
      throw Error(ErrorCode::kUsage, std::string("bad ") + what + " value '" + cell + "'");
    }
    out.push_back(v);
  }
  if (out.empty() || (!text.empty() && text.back() == ',')) {
    throw Error(ErrorCode::kUsage, std::string("empty ") + what + " list");
  }
  return out;
}

}  // namespace

double null_tail_lower(double t) {
  return std::exp(-t * t / (2.0 * kA0 * kA0)) / (std::sqrt(2.0) * kA0);
}

std::vector<TailRow> null_tail_check(const NullTable& null, std::span<const double> grid) {
  const auto& v = null.values();
  std::vector<TailRow> rows;
  for (double t : grid) {
    TailRow r;
    r.t = t;
    r.hits = static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
    r.empirical_survival = static_cast<double>(r.hits) / static_cast<double>(v.size());
    r.theory_lower = null_tail_lower(t);
    r.theory_upper = 2.0 * r.theory_lower;
    r.ratio = r.empirical_survival / r.theory_lower;
    rows.push_back(r);
  }
  return rows;
}

AltSpec parse_alt(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kUsage, "--alt expects 'd1,d2,...:m1,m2,...'");
  }
  AltSpec alt{parse_list(text.substr(0, colon), "delta"),
              parse_list(text.substr(colon + 1), "mean")};
  if (alt.delta.size() != alt.m.size()) {
    throw Error(ErrorCode::kUsage, "--alt needs one mean per class");
  }
  double total = 0.0;
  for (double d : alt.delta) {
    if (!(d > 0.0)) throw Error(ErrorCode::kUsage, "--alt priors must be positive");
    total += d;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::kUsage, "--alt priors must sum to 1");
  return alt;
}

std::vector<double> simulate_alt_scores(const AltSpec& alt, std::size_t n, std::size_t draws,
                                        std::uint64_t seed) {
  if (n < 2 || draws < 1) throw Error(ErrorCode::kUsage, "need n >= 2 and reps >= 1");
  std::vector<double> scores(draws);
  parallel_for(draws, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(n);
    boost::random::normal_distribution<double> normal;
    boost::random::discrete_distribution<int> label(alt.delta.begin(), alt.delta.end());
    for (std::size_t d = begin; d < end; ++d) {
      std::mt19937_64 rng(derive_seed(seed, kAltStream, d));
      normal.reset();
      for (double& v : x) {
        const int y = label(rng);
        v = alt.m[static_cast<std::size_t>(y)] + normal(rng);
      }
      const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double v : x) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      for (double& v : x) v = (v - mean) / sd;
      scores[d] = ks_of_standardized(x);
    }
  });
  return scores;
}

std::vector<AltRow> alt_tail_check(const AltSpec& alt, std::size_t n,
                                   std::span<const double> sorted_scores,
                                   std::span<const double> grid) {
  const double k = static_cast<double>(alt.delta.size());
  const double tau_value = tau(alt.m, alt.delta, static_cast<double>(n));
  std::vector<AltRow> rows;
  for (double t : grid) {
    AltRow r;
    r.t = t;
    const auto le = std::upper_bound(sorted_scores.begin(), sorted_scores.end(), t) -
                    sorted_scores.begin();
    r.empirical_miss = static_cast<double>(le) / static_cast<double>(sorted_scores.size());
    r.bound = k * std::exp(-(tau_value - t) * (tau_value - t) / (2.0 * k * kA0 * kA0));
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> parse_grid(const std::string& text) {
  auto grid = parse_list(text, "grid");
  for (double t : grid) {
    if (t < 0.0) throw Error(ErrorCode::kUsage, "grid values must be non-negative");
  }
  return grid;
}

}  // namespace ifpca
