#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ifpca/ks.hpp"

namespace ifpca {

// (sqrt(2) a0)^-1 exp(-t^2 / (2 a0^2)), the lower envelope of the null tail.
double null_tail_lower(double t);

struct TailRow {
  double t = 0.0;
  double empirical_survival = 0.0;  // P(psi >= t) over the table
  double theory_lower = 0.0;
  double theory_upper = 0.0;
  double ratio = 0.0;               // empirical / theory_lower
  std::size_t hits = 0;
};

std::vector<TailRow> null_tail_check(const NullTable& null, std::span<const double> grid);

// A useful feature: class priors delta and standardized class means m.
struct AltSpec {
  std::vector<double> delta;
  std::vector<double> m;
};

// "d1,d2,...:m1,m2,..."; throws Usage on malformed input.
AltSpec parse_alt(const std::string& text);

// Standardize-then-KS scores of `draws` independent columns of length n with
// labels iid from delta and x_i = m_{y_i} + N(0, 1).
std::vector<double> simulate_alt_scores(const AltSpec& alt, std::size_t n, std::size_t draws,
                                        std::uint64_t seed);

struct AltRow {
  double t = 0.0;
  double empirical_miss = 0.0;  // P(psi <= t)
  double bound = 0.0;           // K exp(-(tau - t)^2 / (2 K a0^2))
};

std::vector<AltRow> alt_tail_check(const AltSpec& alt, std::size_t n,
                                   std::span<const double> sorted_scores,
                                   std::span<const double> grid);

// Parses a comma-separated list of finite non-negative reals.
std::vector<double> parse_grid(const std::string& text);

}  // namespace ifpca
