#include "ifpca/ks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

const char* to_string(Normalization mode) {
  switch (mode) {
    case Normalization::kNone: return "none";
    case Normalization::kMeanStd: return "meanstd";
    case Normalization::kMedMad: return "medmad";
    case Normalization::kLower50: return "lower50";
  }
  return "none";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::kNone;
  if (name == "meanstd") return Normalization::kMeanStd;
  if (name == "medmad") return Normalization::kMedMad;
  if (name == "lower50") return Normalization::kLower50;
  throw Error(ErrorCode::kUsage, "unknown normalization '" + name + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

constexpr std::uint64_t kNullStream = 0x6e756c6cULL;
constexpr double kMadConsistency = 1.4826;

// Counting sort into n buckets of width 1/n followed by insertion sort inside
// each bucket. Values are CDF images in [0, 1].
void bucket_sort_unit(std::vector<double>& u, std::vector<double>& scratch,
                      std::vector<std::uint32_t>& offsets) {
  const std::size_t n = u.size();
  offsets.assign(n + 1, 0);
  const double nd = static_cast<double>(n);
  auto bucket = [&](double x) {
    auto b = static_cast<std::size_t>(x * nd);
    return b >= n ? n - 1 : b;
  };
  for (double x : u) ++offsets[bucket(x) + 1];
  for (std::size_t b = 0; b < n; ++b) offsets[b + 1] += offsets[b];
  scratch.resize(n);
  for (double x : u) scratch[offsets[bucket(x)]++] = x;
  // offsets[b] now marks the end of bucket b.
  std::size_t begin = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t end = offsets[b];
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double key = scratch[i];
      std::size_t k = i;
      while (k > begin && scratch[k - 1] > key) {
        scratch[k] = scratch[k - 1];
        --k;
      }
      scratch[k] = key;
    }
    begin = end;
  }
  u.swap(scratch);
}

double ks_from_sorted_cdf(std::span<const double> u) {
  const double nd = static_cast<double>(u.size());
  double best = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double lo = static_cast<double>(i) / nd;
    const double hi = static_cast<double>(i + 1) / nd;
    best = std::max(best, std::max(hi - u[i], u[i] - lo));
  }
  return std::sqrt(nd) * best;
}

struct KsWorkspace {
  std::vector<double> u;
  std::vector<double> scratch;
  std::vector<std::uint32_t> offsets;
};

double ks_with(std::span<const double> v, KsWorkspace& ws) {
  ws.u.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) ws.u[i] = normal_cdf(v[i]);
  if (v.size() >= 64) {
    bucket_sort_unit(ws.u, ws.scratch, ws.offsets);
  } else {
    std::sort(ws.u.begin(), ws.u.end());
  }
  return ks_from_sorted_cdf(ws.u);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

struct Affine {
  double shift;
  double scale;
};

Affine location_scale(std::span<const double> v, Normalization mode) {
  if (mode == Normalization::kMeanStd) {
    const double m = mean_of(v);
    return {m, sd_of(v, m)};
  }
  const double med = median_of(std::vector<double>(v.begin(), v.end()));
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
  return {med, kMadConsistency * median_of(std::move(dev))};
}

// Mean and SD of the floor(size/2) smallest entries.
Affine lower_half(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t half = v.size() / 2;
  std::span<const double> low(v.data(), half);
  const double m = mean_of(low);
  return {m, half >= 2 ? sd_of(low, m) : 0.0};
}

}  // namespace

double ks_of_standardized(std::span<const double> v) {
  if (v.empty()) {
    throw Error(ErrorCode::kData, "KS statistic needs at least one value");
  }
  KsWorkspace ws;
  return ks_with(v, ws);
}

KsScores ks_scores(const StandardizedMatrix& w) {
  const std::size_t n = w.samples();
  const std::size_t p = w.features();
  KsScores out;
  out.n = n;
  out.values.resize(p);
  parallel_for(p, [&](std::size_t begin, std::size_t end) {
    KsWorkspace ws;
    for (std::size_t j = begin; j < end; ++j) {
      const double* col = w.values().col(static_cast<Eigen::Index>(j)).data();
      out.values[j] = ks_with(std::span<const double>(col, n), ws);
    }
  });
  return out;
}

KsScores normalize_scores(const KsScores& ks, Normalization mode,
                          const NullTable* null) {
  if (ks.values.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig,
                "score normalization needs at least two features");
  }
  // Work from the raw scores so re-normalizing is well defined.
  std::vector<double> raw(ks.values.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    raw[j] = ks.values[j] * ks.scale + ks.shift;
  }
  KsScores out;
  out.n = ks.n;
  out.normalization = mode;
  Affine map{0.0, 1.0};
  switch (mode) {
    case Normalization::kNone:
      break;
    case Normalization::kMeanStd:
    case Normalization::kMedMad:
      map = location_scale(raw, mode);
      break;
    case Normalization::kLower50: {
      if (null == nullptr) {
        throw Error(ErrorCode::kInvalidConfig,
                    "lower50 normalization requires a null table");
      }
      const Affine obs = lower_half(raw);
      const Affine ref = lower_half(null->values());
      if (!(obs.scale > 0.0) || !(ref.scale > 0.0)) {
        throw Error(ErrorCode::kZeroSpread,
                    "lower half of the scores has zero spread");
      }
      map.scale = obs.scale / ref.scale;
      map.shift = obs.shift - ref.shift * map.scale;
      break;
    }
  }
  if (!(map.scale > 0.0)) {
    throw Error(ErrorCode::kZeroSpread,
                std::string(to_string(mode)) + " scale statistic is zero");
  }
  out.shift = map.shift;
  out.scale = map.scale;
  out.values.resize(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out.values[j] = (raw[j] - map.shift) / map.scale;
  }
  return out;
}

NullTable::NullTable(std::size_t n, std::uint64_t seed, std::vector<double> sorted)
    : n_(n), seed_(seed), values_(std::move(sorted)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kData, "null table is empty");
  }
  if (!std::is_sorted(values_.begin(), values_.end())) {
    throw Error(ErrorCode::kData, "null table values are not ascending");
  }
}

std::size_t default_null_size(std::size_t p) {
  return std::max<std::size_t>(1000000, 100 * p);
}

NullTable build_null_table(std::size_t n, std::size_t draws, std::uint64_t seed) {
  if (n < 2 || draws < 1) {
    throw Error(ErrorCode::kInvalidConfig, "null table needs n >= 2 and N >= 1");
  }
  std::vector<double> values(draws);
  parallel_for(draws, [&](std::size_t begin, std::size_t end) {
    KsWorkspace ws;
    std::vector<double> x(n);
    boost::random::normal_distribution<double> normal;
    for (std::size_t d = begin; d < end; ++d) {
      std::mt19937_64 rng(derive_seed(seed, kNullStream, d));
      normal.reset();
      for (double& v : x) v = normal(rng);
      const double m = mean_of(x);
      const double s = sd_of(x, m);
      for (double& v : x) v = (v - m) / s;
      values[d] = ks_with(x, ws);
    }
  });
  std::sort(values.begin(), values.end());
  return NullTable(n, seed, std::move(values));
}

std::vector<double> null_reference(const NullTable& null, Normalization mode) {
  if (mode == Normalization::kNone || mode == Normalization::kLower50) {
    return null.values();
  }
  const Affine a = location_scale(null.values(), mode);
  if (!(a.scale > 0.0)) {
    throw Error(ErrorCode::kZeroSpread, "null table has zero spread");
  }
  std::vector<double> out(null.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (null.values()[i] - a.shift) / a.scale;
  }
  return out;
}

PValues pvalues_against(const KsScores& scores,
                        std::span<const double> sorted_reference) {
  PValues out;
  out.values.resize(scores.values.size());
  const double denom = static_cast<double>(sorted_reference.size()) + 1.0;
  for (std::size_t j = 0; j < scores.values.size(); ++j) {
    const auto it = std::lower_bound(sorted_reference.begin(),
                                     sorted_reference.end(), scores.values[j]);
    const auto at_or_above =
        static_cast<double>(sorted_reference.end() - it);
    out.values[j] = (1.0 + at_or_above) / denom;
  }
  return out;
}

PValues pvalues(const KsScores& scores, const NullTable& null) {
  const std::vector<double> ref = null_reference(null, scores.normalization);
  return pvalues_against(scores, ref);
}

FeatureSet select_features(const KsScores& scores, double t) {
  FeatureSet out;
  out.threshold = t;
  for (std::size_t j = 0; j < scores.values.size(); ++j) {
    if (scores.values[j] >= t) out.indices.push_back(j);
  }
  return out;
}

// ---- serialization -------------------------------------------------------

namespace {

std::string header_line(const NullTable& t) {
  return "ifpca-null v1, n=" + std::to_string(t.n()) +
         ", N=" + std::to_string(t.size()) + ", seed=" + std::to_string(t.seed());
}

bool is_binary(const std::filesystem::path& path) {
  return path.extension() == ".bin";
}

}  // namespace

void NullTable::save(const std::filesystem::path& path) const {
  const bool binary = is_binary(path);
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  out << header_line(*this) << '\n';
  if (binary) {
    for (double v : values_) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  } else {
    char buf[40];
    for (double v : values_) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", v);
      out << buf;
    }
  }
  if (!out) {
    throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
  }
}

NullTable NullTable::load(const std::filesystem::path& path) {
  const bool binary = is_binary(path);
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open null table '" + path.string() + "'");
  }
  std::string header;
  std::getline(in, header);
  unsigned long long n = 0, count = 0, seed = 0;
  if (std::sscanf(header.c_str(), "ifpca-null v1, n=%llu, N=%llu, seed=%llu", &n,
                  &count, &seed) != 3) {
    throw Error(ErrorCode::kData, "bad null table header in '" + path.string() + "'");
  }
  std::vector<double> values;
  values.reserve(count);
  if (binary) {
    unsigned char bytes[8];
    while (values.size() < count && in.read(reinterpret_cast<char*>(bytes), 8)) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      values.push_back(std::bit_cast<double>(bits));
    }
  } else {
    std::string line;
    while (values.size() < count && std::getline(in, line)) {
      if (line.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(line.c_str(), &end);
      if (end == line.c_str()) {
        throw Error(ErrorCode::kData, "bad null table value '" + line + "'");
      }
      values.push_back(v);
    }
  }
  if (values.size() != count) {
    throw Error(ErrorCode::kData, "null table '" + path.string() + "' holds " +
                                      std::to_string(values.size()) + " of " +
                                      std::to_string(count) + " values");
  }
  return NullTable(n, seed, std::move(values));
}

}  // namespace ifpca
