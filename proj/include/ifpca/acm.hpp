#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ifpca/cluster.hpp"
#include "ifpca/matrix.hpp"

namespace ifpca {

// sqrt((pi - 2) / (4 pi)), the scale of the KS null right tail.
inline const double kA0 = std::sqrt((M_PI - 2.0) / (4.0 * M_PI));

struct DistributionSpec {
  enum class Kind { kPointMass, kUniform, kNormal, kTruncNormal, kTruncShiftExp };

  Kind kind = Kind::kPointMass;
  // Parameter meaning depends on kind:
  //   point mass:    a = value
  //   uniform:       U(a - b, a + b)
  //   normal:        mean a, variance b
  //   trunc normal:  N(a, b) conditioned on [a - c, a + c]
  //   trunc shifted exponential: b + Exp(mean a) conditioned on [c, d]
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static DistributionSpec point_mass(double value);
  static DistributionSpec uniform(double center, double half_width);
  static DistributionSpec normal(double mean, double variance);
  static DistributionSpec trunc_normal(double center, double variance, double half_width);
  static DistributionSpec trunc_shift_exp(double mean, double shift, double lo, double hi);

  void validate() const;
  double sample(std::mt19937_64& rng) const;
};

struct NoiseModel {
  enum class Kind {
    kGaussian,
    kClassScaled,  // row i ~ N(0, class_variances[y_i])
    kStudentT6,    // sqrt(2/3) * t_6
    kChiSq6,       // (chi^2_6 - 6) / sqrt(12)
    kBand,         // Z A with A = I + d * superdiagonal
    kRandomSubset, // Z A with d on a random size-`subset` set per column
  };
  Kind kind = Kind::kGaussian;
  std::vector<double> class_variances;
  double d = 0.0;
  std::size_t subset = 0;
};

struct AcmConfig {
  int k = 2;
  std::size_t p = 0;
  double theta = 0.6;     // n = round(p^theta)
  double sparsity = 0.7;  // useful features ~ Bernoulli(p^-sparsity)
  double r = 0.5;         // signal strength
  int reps = 100;
  std::vector<double> delta;          // class priors
  std::array<double, 3> gamma{};      // P(sign = -1, 0, +1)
  DistributionSpec overall_mean = DistributionSpec::normal(0.0, 1.0);
  DistributionSpec magnitude = DistributionSpec::point_mass(1.0);
  DistributionSpec noise_sd = DistributionSpec::point_mass(1.0);
  NoiseModel noise;
  // Back-solve mu_K with realized class fractions instead of the priors.
  bool center_realized = false;

  std::size_t n() const;
  void validate() const;
};

struct GroundTruth {
  LabelVector y;
  Vector overall_mean;     // p
  Matrix contrast;         // k x p, rows mu_1..mu_k
  Vector sigma;            // p
  std::vector<double> weights;  // delta used in the mu_k back-solve
  std::vector<std::size_t> useful;
  std::vector<double> kappa, tau, omega;  // per feature, on m = mu / sigma
};

struct AcmSample {
  DataMatrix x;
  GroundTruth truth;
};

AcmSample generate(const AcmConfig& config, std::uint64_t seed);

// Sparse p x p mixing matrix, stored by column: (row, value) pairs.
struct MixingMatrix {
  std::size_t p = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> columns;
};

MixingMatrix correlated_noise_matrix(const NoiseModel& model, std::size_t p,
                                     std::uint64_t seed);

// Per-feature signal strengths on standardized contrasts m_1..m_K.
double kappa(std::span<const double> m, std::span<const double> delta);
double tau(std::span<const double> m, std::span<const double> delta, double n);
// sup over a grid on [-8, 8] with golden-section refinement of the best cell.
double omega(std::span<const double> m, std::span<const double> delta, double n,
             double grid_step = 1e-3);

double threshold_tpq(double q, double p);
double threshold_fixed(double q_tilde, double p);

struct ErrPParams {
  double sparsity, q, r;
  int k;
  double n, p, kappa_norm, rho1, rho2;
};
double err_p(const ErrPParams& params);

// The ratio c0 with kappa(symmetric, c0 r) = kappa(asymmetric, r) for unit
// magnitudes and signs.
double symmetric_rescale(std::span<const double> asymmetric_delta,
                         std::span<const double> symmetric_delta);

struct ExperimentSetting {
  std::string experiment;
  std::string label;
  AcmConfig config;
  std::vector<double> fixed_q;  // thresholds sqrt(2 q log p) for IF-PCA(2)
};

// Throws UnknownExperiment for ids outside {1a,1b,2a,2b,3,4,5}.
std::vector<ExperimentSetting> experiment_preset(const std::string& id);

nlohmann::json to_json(const DistributionSpec& spec);
nlohmann::json to_json(const AcmConfig& config);
nlohmann::json to_json(const ExperimentSetting& setting);
DistributionSpec distribution_from_json(const nlohmann::json& j);
AcmConfig config_from_json(const nlohmann::json& j);
ExperimentSetting setting_from_json(const nlohmann::json& j);

}  // namespace ifpca
