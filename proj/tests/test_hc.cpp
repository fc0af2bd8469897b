#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ifpca/error.hpp"
#include "ifpca/hc.hpp"

using namespace ifpca;

namespace {

double hc_definition(double p, double n, double j, double pi) {
  const double gap = j / p - pi;
  return std::sqrt(p) * gap / std::sqrt(std::max(std::sqrt(n) * gap, 0.0) + j / p);
}

KsScores scores_of(std::vector<double> v) {
  KsScores s;
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("HC worked example with p = 10, n = 100") {
  const std::vector<double> pi{0.01, 0.05, 0.25, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90};
  std::vector<double> score(10);
  for (std::size_t j = 0; j < 10; ++j) score[j] = 10.0 - static_cast<double>(j);
  const auto hc = hc_threshold(PValues{pi}, scores_of(score), 100);
  for (std::size_t j = 0; j < 10; ++j) CHECK(hc.eligible[j] == (j == 2 || j == 3));
  CHECK(hc.hc_curve[2] == doctest::Approx(0.17678).epsilon(1e-4));
  CHECK(hc.hc_curve[3] == doctest::Approx(0.26726).epsilon(1e-4));
  CHECK(hc.j_hat == 4);
  CHECK(hc.t_hc == 7.0);
  CHECK_FALSE(hc.used_fallback);
}

TEST_CASE("HC ties go to the smallest eligible rank") {
  std::vector<double> pi(10);
  for (std::size_t j = 0; j < 10; ++j) pi[j] = static_cast<double>(j + 1) / 10.0;
  std::vector<double> score(10, 1.0);
  const auto hc = hc_threshold(PValues{pi}, scores_of(score), 50);
  for (double h : hc.hc_curve) CHECK(h == 0.0);
  CHECK(hc.j_hat == 3);
}

TEST_CASE("HC with no eligible rank") {
  std::vector<double> pi(10, 0.1);
  std::vector<double> score(10);
  for (std::size_t j = 0; j < 10; ++j) score[j] = static_cast<double>(j);
  try {
    hc_threshold(PValues{pi}, scores_of(score), 50);
    FAIL("expected NoEligibleIndex");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoEligibleIndex);
  }
  HcOptions opt;
  opt.fallback = true;
  const auto hc = hc_threshold(PValues{pi}, scores_of(score), 50, opt);
  CHECK(hc.used_fallback);
  CHECK(hc.j_hat >= 1);
  CHECK(hc.j_hat <= 4);

  CHECK_THROWS_AS(hc_threshold(PValues{{0.1, 0.2}}, scores_of({1, 2}), 50, opt), Error);
}

TEST_CASE("HC curve equals the definitional formula; t_hc selects j_hat features") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 20 + rng() % 500;
    const std::size_t n = 10 + rng() % 300;
    std::vector<double> score(p);
    for (double& s : score) s = u(rng) * 3.0;
    // p-values decreasing in score, with a few strong signals
    std::vector<double> pi(p);
    for (std::size_t j = 0; j < p; ++j) pi[j] = std::exp(-score[j] * score[j]) * (0.5 + 0.5 * u(rng));
    for (std::size_t j = 0; j < p; ++j) pi[j] = std::clamp(pi[j], 1.0 / (10.0 * p), 1.0);
    HcOptions opt;
    opt.fallback = true;
    const auto hc = hc_threshold(PValues{pi}, scores_of(score), n, opt);
    auto sorted = pi;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 1; j <= p; ++j) {
      const double expect = hc_definition(static_cast<double>(p), static_cast<double>(n),
                                          static_cast<double>(j), sorted[j - 1]);
      CHECK(std::abs(hc.hc_curve[j - 1] - expect) <= 1e-12);
    }
    REQUIRE(hc.j_hat >= 1);
    if (!hc.used_fallback) CHECK(hc.eligible[hc.j_hat - 1]);
    const auto kept = std::count_if(score.begin(), score.end(),
                                    [&](double s) { return s >= hc.t_hc; });
    CHECK(static_cast<std::size_t>(kept) == hc.j_hat);
  }
}

TEST_CASE("j_hat is invariant under a monotone relabeling of scores and null") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> z;
  std::vector<double> null(4000);
  for (double& v : null) v = std::abs(z(rng));
  std::sort(null.begin(), null.end());
  std::vector<double> score(800);
  for (std::size_t j = 0; j < score.size(); ++j) {
    score[j] = std::abs(z(rng)) + (j < 40 ? 2.5 : 0.0);
  }
  auto map = [](double x) { return std::exp(1.7 * x) + 3.0; };
  std::vector<double> null2(null.size()), score2(score.size());
  std::transform(null.begin(), null.end(), null2.begin(), map);
  std::transform(score.begin(), score.end(), score2.begin(), map);
  const auto a = hc_threshold(pvalues_against(scores_of(score), null), scores_of(score), 200);
  const auto b = hc_threshold(pvalues_against(scores_of(score2), null2), scores_of(score2), 200);
  CHECK(a.j_hat == b.j_hat);
  CHECK(b.t_hc == map(a.t_hc));
}

TEST_CASE("HC diagnostic CSV") {
  const std::vector<double> pi{0.01, 0.05, 0.25, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90};
  std::vector<double> score{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
  const auto hc = hc_threshold(PValues{pi}, scores_of(score), 100);
  std::ostringstream out;
  write_hc_csv(out, hc);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "j,pi_j,HC_j,eligible");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);
  CHECK(out.str().find("\n3,0.25,") != std::string::npos);
}
