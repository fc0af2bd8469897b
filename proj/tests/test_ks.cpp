#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "ifpca/error.hpp"
#include "ifpca/ks.hpp"
#include "ifpca/parallel.hpp"
#include "ifpca/theory.hpp"
#include "ifpca/acm.hpp"
#include "oracles.hpp"

using namespace ifpca;

namespace {

KsScores raw_scores(std::vector<double> v) {
  KsScores s;
  s.values = std::move(v);
  s.n = 10;
  return s;
}

std::vector<double> normals(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (double& x : v) x = z(rng);
  return v;
}

}  // namespace

TEST_CASE("normal_cdf reference values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(normal_cdf(-1.96) == doctest::Approx(0.024997895148220435).epsilon(1e-13));
}

TEST_CASE("ks_of_standardized examples") {
  const std::vector<double> one{0.0};
  CHECK(ks_of_standardized(one) == 0.5);
  const std::vector<double> two{-1.0, 1.0};
  CHECK(ks_of_standardized(two) ==
        doctest::Approx(std::sqrt(2.0) * (0.8413447460685429 - 0.5)).epsilon(1e-14));
  CHECK(std::abs(ks_of_standardized(two) - 0.482740) < 1e-5);

  boost::math::normal_distribution<double> gauss;
  for (std::size_t n : {25u, 100u, 400u}) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = boost::math::quantile(gauss, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    }
    CHECK(ks_of_standardized(v) ==
          doctest::Approx(0.5 / std::sqrt(static_cast<double>(n))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ks_of_standardized(std::vector<double>{}), Error);
}

TEST_CASE("closed-form KS equals the brute-force sup over jump points") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    auto v = normals(n, rng);
    for (double& x : v) x = x * 1.3 + 0.2;
    const double fast = ks_of_standardized(v);
    CHECK(fast == oracle::brute_ks(v));
    const double nd = static_cast<double>(n);
    CHECK(fast >= 1.0 / (2.0 * std::sqrt(nd)));
    CHECK(fast <= std::sqrt(nd));
  }
}

TEST_CASE("ks_scores: identical columns, row permutations, affine maps") {
  std::mt19937_64 rng(8);
  const std::size_t n = 90;
  const auto base = normals(n, rng);
  Matrix x(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = base[i];
    x(i, 1) = base[i];
    x(i, 2) = 3.5 * base[i] - 2.0;
    x(i, 3) = -0.25 * base[i] + 9.0;
  }
  const auto s = ks_scores(standardize_columns(DataMatrix(x)));
  CHECK(s.normalization == Normalization::kNone);
  CHECK(s.n == n);
  CHECK(s.values[0] == s.values[1]);
  CHECK(std::abs(s.values[2] - s.values[0]) <= 1e-12);
  // a < 0 mirrors the sample; Phi's symmetry keeps the statistic.
  CHECK(std::abs(s.values[3] - s.values[0]) <= 1e-12);

  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(n, 4);
  for (std::size_t i = 0; i < n; ++i) shuffled.row(i) = x.row(perm[i]);
  const auto t = ks_scores(standardize_columns(DataMatrix(shuffled)));
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(t.values[j] - s.values[j]) <= 1e-12);
}

TEST_CASE("normalize_scores modes") {
  const auto ms = normalize_scores(raw_scores({1, 2, 3}), Normalization::kMeanStd);
  CHECK(ms.values[0] == doctest::Approx(-1.0));
  CHECK(ms.values[1] == doctest::Approx(0.0));
  CHECK(ms.values[2] == doctest::Approx(1.0));

  const auto none = normalize_scores(raw_scores({0.4, 0.9, 0.1}), Normalization::kNone);
  CHECK(none.values == std::vector<double>{0.4, 0.9, 0.1});

  try {
    normalize_scores(raw_scores({1, 1, 1, 10}), Normalization::kMedMad);
    FAIL("zero MAD accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroSpread);
  }
  // median 3, MAD 1
  const auto mm = normalize_scores(raw_scores({1, 2, 3, 4, 10}), Normalization::kMedMad);
  CHECK(mm.values[4] == doctest::Approx(7.0 / 1.4826));
  CHECK(mm.values[2] == 0.0);

  CHECK_THROWS_AS(normalize_scores(raw_scores({1, 2}), Normalization::kLower50), Error);
  CHECK_THROWS_AS(normalize_scores(raw_scores({1}), Normalization::kMeanStd), Error);
  CHECK(parse_normalization("medmad") == Normalization::kMedMad);
  CHECK_THROWS_AS(parse_normalization("bogus"), Error);
}

TEST_CASE("meanstd-normalized scores have mean 0 and SD 1") {
  std::mt19937_64 rng(3);
  auto v = normals(501, rng);
  for (double& x : v) x = std::exp(x);
  const auto s = normalize_scores(raw_scores(v), Normalization::kMeanStd);
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / 501.0;
  double ss = 0.0;
  for (double x : s.values) ss += (x - mean) * (x - mean);
  CHECK(std::abs(mean) <= 1e-10);
  CHECK(std::abs(std::sqrt(ss / 500.0) - 1.0) <= 1e-10);
}

TEST_CASE("lower50 matches the lower halves of scores and null") {
  std::mt19937_64 rng(4);
  auto v = normals(400, rng);
  for (double& x : v) x = 2.0 * x + 5.0;
  auto nv = normals(1001, rng);
  std::sort(nv.begin(), nv.end());
  const NullTable null(50, 1, nv);
  const auto s = normalize_scores(raw_scores(v), Normalization::kLower50, &null);
  auto lower_stats = [](std::vector<double> x) {
    std::sort(x.begin(), x.end());
    x.resize(x.size() / 2);
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double y : x) ss += (y - m) * (y - m);
    return std::pair{m, std::sqrt(ss / static_cast<double>(x.size() - 1))};
  };
  const auto [ms, ss] = lower_stats(s.values);
  const auto [mn, sn] = lower_stats(nv);
  CHECK(ms == doctest::Approx(mn).epsilon(1e-12));
  CHECK(ss == doctest::Approx(sn).epsilon(1e-12));
}

TEST_CASE("build_null_table: range, determinism, worker independence") {
  const auto one = build_null_table(30, 1, 9);
  REQUIRE(one.size() == 1);
  CHECK(one.values()[0] >= 1.0 / (2.0 * std::sqrt(30.0)));
  CHECK(one.values()[0] <= std::sqrt(30.0));

  set_num_threads(1);
  const auto a = build_null_table(120, 3000, 77);
  set_num_threads(4);
  const auto b = build_null_table(120, 3000, 77);
  set_num_threads(0);
  CHECK(a.values() == b.values());
  CHECK(std::is_sorted(a.values().begin(), a.values().end()));
  CHECK(a.n() == 120);
  CHECK(a.seed() == 77);
  const auto c = build_null_table(120, 3000, 78);
  CHECK(c.values() != a.values());
  CHECK_THROWS_AS(build_null_table(1, 10, 0), Error);
}

TEST_CASE("null table median agrees with an independent Monte-Carlo oracle") {
  // Direct simulation with a different generator and explicit standardization.
  const std::size_t n = 400;
  std::mt19937 rng(123);
  std::normal_distribution<double> z;
  std::vector<double> oracle_draws;
  for (int d = 0; d < 4000; ++d) {
    std::vector<double> x(n);
    for (double& v : x) v = z(rng);
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / (n - 1));
    for (double& v : x) v = (v - m) / sd;
    oracle_draws.push_back(oracle::brute_ks(x));
  }
  std::nth_element(oracle_draws.begin(), oracle_draws.begin() + 2000, oracle_draws.end());
  const double oracle_median = oracle_draws[2000];
  const auto table = build_null_table(n, 20000, 5);
  const double median = table.values()[10000];
  CHECK(std::abs(median - oracle_median) < 0.03);
}

TEST_CASE("NullTable save/load round trip in text and binary form") {
  const auto t = build_null_table(64, 500, 31);
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* name : {"ifpca_null_test.txt", "ifpca_null_test.bin"}) {
    const auto path = dir / name;
    t.save(path);
    const auto back = NullTable::load(path);
    CHECK(back.n() == 64);
    CHECK(back.seed() == 31);
    CHECK(back.values() == t.values());
    std::filesystem::remove(path);
  }
  CHECK_THROWS_AS(NullTable::load(dir / "ifpca_missing_table.txt"), Error);
  CHECK_THROWS_AS(NullTable(5, 0, {0.3, 0.2}), Error);
}

TEST_CASE("pvalues examples and antitonicity") {
  const NullTable null(10, 0, {0.4, 0.6, 0.8});
  const auto pv = pvalues(raw_scores({0.9, 0.1, 0.7, 0.6}), null);
  CHECK(pv.values[0] == 0.25);
  CHECK(pv.values[1] == 1.0);
  CHECK(pv.values[2] == 0.5);
  CHECK(pv.values[3] == 0.75);

  std::mt19937_64 rng(6);
  auto nv = normals(999, rng);
  std::sort(nv.begin(), nv.end());
  const NullTable big(10, 0, nv);
  const auto s = raw_scores(normals(300, rng));
  const auto p = pvalues(s, big);
  for (std::size_t a = 0; a < 300; ++a) {
    CHECK(p.values[a] > 0.0);
    CHECK(p.values[a] <= 1.0);
    for (std::size_t b = 0; b < 300; b += 7) {
      if (s.values[a] >= s.values[b]) CHECK(p.values[a] <= p.values[b]);
    }
  }
}

TEST_CASE("pvalues rescale the null for meanstd scores") {
  const NullTable null(10, 0, {1.0, 2.0, 3.0});
  // null standardized to (-1, 0, 1)
  KsScores s = raw_scores({0.5, -2.0});
  s.normalization = Normalization::kMeanStd;
  const auto p = pvalues(s, null);
  CHECK(p.values[0] == 0.5);
  CHECK(p.values[1] == 1.0);
}

TEST_CASE("select_features examples") {
  const auto s = raw_scores({0.2, 0.9, 0.5});
  CHECK(select_features(s, -std::numeric_limits<double>::infinity()).indices.size() == 3);
  CHECK(select_features(s, 0.5).indices == std::vector<std::size_t>{1, 2});
  CHECK(select_features(s, 0.95).empty());
  CHECK(default_null_size(10) == 1000000);
  CHECK(default_null_size(40000) == 4000000);
}

TEST_CASE("useful features rarely score below t when tau >= 2t") {
  // K = 2, delta = (1/3, 2/3), means (m, -m/2) with tau = 2 t at n = 1000.
  const double t = threshold_tpq(0.05, 1e4);
  const std::size_t n = 1000;
  const double m1 = std::cbrt(4.0 * 2.0 * t * 6.0 * std::sqrt(2.0 * M_PI) / std::sqrt(1000.0));
  AltSpec alt{{1.0 / 3.0, 2.0 / 3.0}, {m1, -m1 / 2.0}};
  CHECK(tau(alt.m, alt.delta, n) == doctest::Approx(2.0 * t).epsilon(1e-12));
  auto scores = simulate_alt_scores(alt, n, 2000, 17);
  std::sort(scores.begin(), scores.end());
  const auto rows = alt_tail_check(alt, n, scores, std::vector<double>{t});
  const double bound = std::exp(-(t * t) / (2.0 * 2.0 * kA0 * kA0));
  CHECK(rows[0].empirical_miss <= 10.0 * bound);
}
