#include "ifpca/acm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

namespace {

constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kFeatureStream = 2;
constexpr std::uint64_t kMixingStream = 3;

double uniform01(std::mt19937_64& rng) {
  return boost::random::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double standard_normal(std::mt19937_64& rng) {
  return boost::random::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

// ---- distributions ---------------------------------------------------------

DistributionSpec DistributionSpec::point_mass(double value) {
  return {Kind::kPointMass, value, 0.0, 0.0, 0.0};
}
DistributionSpec DistributionSpec::uniform(double center, double half_width) {
  return {Kind::kUniform, center, half_width, 0.0, 0.0};
}
DistributionSpec DistributionSpec::normal(double mean, double variance) {
  return {Kind::kNormal, mean, variance, 0.0, 0.0};
}
DistributionSpec DistributionSpec::trunc_normal(double center, double variance,
                                                double half_width) {
  return {Kind::kTruncNormal, center, variance, half_width, 0.0};
}
DistributionSpec DistributionSpec::trunc_shift_exp(double mean, double shift, double lo,
                                                   double hi) {
  return {Kind::kTruncShiftExp, mean, shift, lo, hi};
}

void DistributionSpec::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::kInvalidConfig, what); };
  switch (kind) {
    case Kind::kPointMass:
      if (!std::isfinite(a)) bad("point mass value must be finite");
      break;
    case Kind::kUniform:
      if (!(b > 0.0)) bad("uniform half width must be > 0");
      break;
    case Kind::kNormal:
      if (!(b >= 0.0)) bad("normal variance must be >= 0");
      break;
    case Kind::kTruncNormal:
      if (!(b > 0.0) || !(c > 0.0)) bad("truncated normal needs variance > 0 and width > 0");
      break;
    case Kind::kTruncShiftExp:
      if (!(a > 0.0)) bad("exponential mean must be > 0");
      if (!(c <= d)) bad("truncation bounds need lo <= hi");
      if (!(d > b)) bad("truncation window lies below the shift");
      break;
  }
}

double DistributionSpec::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::kPointMass:
      return a;
    case Kind::kUniform:
      return a - b + 2.0 * b * uniform01(rng);
    case Kind::kNormal:
      return a + std::sqrt(b) * standard_normal(rng);
    case Kind::kTruncNormal: {
      const double sd = std::sqrt(b);
      for (;;) {
        const double x = a + sd * standard_normal(rng);
        if (x >= a - c && x <= a + c) return x;
      }
    }
    case Kind::kTruncShiftExp: {
      // Inverse CDF of Exp(mean a) restricted to [lo, hi].
      const double lo = std::max(0.0, c - b);
      const double width = d - b - lo;
      const double mass = std::isfinite(width) ? -std::expm1(-width / a) : 1.0;
      const double v = uniform01(rng);
      return b + lo - a * std::log1p(-v * mass);
    }
  }
  return a;
}

// ---- configuration ---------------------------------------------------------

std::size_t AcmConfig::n() const {
  return static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(p), theta)));
}

void AcmConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (k < 1) bad("k must be >= 1");
  if (p < 1) bad("p must be >= 1");
  if (!(theta > 0.0 && theta < 1.0)) bad("theta must lie in (0, 1)");
  if (!(sparsity > 0.0 && sparsity < 1.0)) bad("sparsity exponent must lie in (0, 1)");
  if (!(r > 0.0)) bad("r must be > 0");
  if (reps < 1) bad("reps must be >= 1");
  if (delta.size() != static_cast<std::size_t>(k)) bad("delta must have k entries");
  double sum = 0.0;
  for (double d : delta) {
    if (!(d > 0.0)) bad("class priors must be > 0");
    sum += d;
  }
  if (std::abs(sum - 1.0) > 1e-9) bad("class priors must sum to 1");
  double gsum = 0.0;
  for (double g : gamma) {
    if (!(g >= 0.0)) bad("sign probabilities must be >= 0");
    gsum += g;
  }
  if (std::abs(gsum - 1.0) > 1e-9) bad("sign probabilities must sum to 1");
  overall_mean.validate();
  magnitude.validate();
  noise_sd.validate();
  switch (noise.kind) {
    case NoiseModel::Kind::kClassScaled:
      if (noise.class_variances.size() != static_cast<std::size_t>(k)) {
        bad("class-scaled noise needs one variance per class");
      }
      for (double v : noise.class_variances) {
        if (!(v > 0.0)) bad("class noise variances must be > 0");
      }
      break;
    case NoiseModel::Kind::kBand:
    case NoiseModel::Kind::kRandomSubset:
      if (!(std::abs(noise.d) < 1.0)) bad("mixing weight d must satisfy |d| < 1");
      if (noise.kind == NoiseModel::Kind::kRandomSubset &&
          (noise.subset < 1 || noise.subset >= p)) {
        bad("random mixing subset size must lie in [1, p)");
      }
      break;
    default:
      break;
  }
  if (n() < static_cast<std::size_t>(k) || n() < 2) bad("n = round(p^theta) must be >= max(k, 2)");
}

// ---- diagnostics -----------------------------------------------------------

double kappa(std::span<const double> m, std::span<const double> delta) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += delta[k] * m[k] * m[k];
  return std::sqrt(s);
}

double tau(std::span<const double> m, std::span<const double> delta, double n) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += delta[k] * m[k] * m[k] * m[k];
  return std::sqrt(n) * std::abs(s) / (6.0 * std::sqrt(2.0 * M_PI));
}

double omega(std::span<const double> m, std::span<const double> delta, double n,
             double grid_step) {
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double sq = m[k] * m[k];
    m2 += delta[k] * sq;
    m4 += delta[k] * sq * sq;
  }
  if (m2 == 0.0 && m4 == 0.0) return 0.0;
  const double c2 = m2 * m2 / 8.0;
  const double c4 = m4 / 24.0;
  auto f = [&](double y) {
    const double phi = std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI);
    // phi'''(y) = (3y - y^3) phi(y)
    return c2 * y * (1.0 - 3.0 * y * y) * phi + c4 * (3.0 * y - y * y * y) * phi;
  };
  const double lo = -8.0, hi = 8.0;
  const auto steps = static_cast<long>(std::llround((hi - lo) / grid_step));
  double best = 0.0;  // f(0) = 0
  double best_y = 0.0;
  for (long i = 0; i <= steps; ++i) {
    const double y = lo + static_cast<double>(i) * grid_step;
    const double v = f(y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  // Golden-section search on the bracketing cells.
  double a = best_y - grid_step, b = best_y + grid_step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  best = std::max({best, f1, f2});
  return std::sqrt(n) * best;
}

double threshold_tpq(double q, double p) { return kA0 * std::sqrt(2.0 * q * std::log(p)); }

double threshold_fixed(double q_tilde, double p) {
  return std::sqrt(2.0 * q_tilde * std::log(p));
}

double err_p(const ErrPParams& e) {
  auto pos = [](double x) { return std::max(x, 0.0); };
  const double bias =
      (1.0 + std::sqrt(std::pow(e.p, 1.0 - std::min(e.sparsity, e.q)) / e.n)) /
      e.kappa_norm;
  const double root = pos(std::sqrt(e.r) - std::sqrt(e.q));
  const double missed = std::pow(e.p, -root * root / (2.0 * e.k));
  const double variance =
      std::sqrt(std::pow(e.p, e.sparsity - 1.0) + std::pow(e.p, pos(e.sparsity - e.q)) / e.n) *
      std::sqrt(e.rho1);
  return e.rho2 * (bias + missed + variance);
}

double symmetric_rescale(std::span<const double> asymmetric_delta,
                         std::span<const double> symmetric_delta) {
  // K = 2 with h = beta = 1: mu_1 = c r^(1/6), mu_2 = -(delta_1/delta_2) mu_1.
  auto unit_kappa = [](std::span<const double> d) {
    const std::array<double, 2> m{1.0, -d[0] / d[1]};
    return kappa(m, d);
  };
  return std::pow(unit_kappa(asymmetric_delta) / unit_kappa(symmetric_delta), 6.0);
}

// ---- generation ------------------------------------------------------------

MixingMatrix correlated_noise_matrix(const NoiseModel& model, std::size_t p,
                                     std::uint64_t seed) {
  MixingMatrix a;
  a.p = p;
  a.columns.resize(p);
  for (std::size_t j = 0; j < p; ++j) a.columns[j].push_back({j, 1.0});
  if (model.d == 0.0) return a;
  if (model.kind == NoiseModel::Kind::kBand) {
    for (std::size_t j = 1; j < p; ++j) a.columns[j].push_back({j - 1, model.d});
    return a;
  }
  if (model.kind != NoiseModel::Kind::kRandomSubset) return a;
  if (model.subset < 1 || model.subset >= p) {
    throw Error(ErrorCode::kInvalidConfig, "random mixing subset size must lie in [1, p)");
  }
  parallel_for(p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      std::mt19937_64 rng(derive_seed(seed, kMixingStream, j));
      // Floyd's sampling over the p - 1 indices other than j.
      std::vector<std::size_t> chosen;
      std::unordered_set<std::size_t> seen;
      for (std::size_t t = p - 1 - model.subset; t < p - 1; ++t) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, t);
        std::size_t v = pick(rng);
        if (seen.count(v)) v = t;
        seen.insert(v);
        chosen.push_back(v);
      }
      std::sort(chosen.begin(), chosen.end());
      for (std::size_t v : chosen) {
        a.columns[j].push_back({v >= j ? v + 1 : v, model.d});
      }
    }
  });
  return a;
}

namespace {

double noise_draw(const NoiseModel& model, int label, std::mt19937_64& rng) {
  switch (model.kind) {
    case NoiseModel::Kind::kClassScaled:
      return std::sqrt(model.class_variances[static_cast<std::size_t>(label - 1)]) *
             standard_normal(rng);
    case NoiseModel::Kind::kStudentT6:
      return std::sqrt(2.0 / 3.0) *
             boost::random::student_t_distribution<double>(6.0)(rng);
    case NoiseModel::Kind::kChiSq6:
      return (boost::random::chi_squared_distribution<double>(6.0)(rng) - 6.0) /
             std::sqrt(12.0);
    default:
      return standard_normal(rng);
  }
}

}  // namespace

AcmSample generate(const AcmConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.n();
  const std::size_t p = config.p;
  const int k = config.k;
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  GroundTruth truth;
  truth.y.k = k;
  truth.y.labels.resize(n);
  {
    std::mt19937_64 rng(derive_seed(seed, kLabelStream, 0));
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform01(rng);
      double acc = 0.0;
      int label = k;
      for (int c = 0; c < k; ++c) {
        acc += config.delta[c];
        if (u < acc) {
          label = c + 1;
          break;
        }
      }
      truth.y.labels[i] = label;
    }
  }
  truth.weights = config.delta;
  if (config.center_realized) {
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (int label : truth.y.labels) counts[label - 1] += 1.0;
    if (counts.back() == 0.0) {
      throw Error(ErrorCode::kInvalidConfig,
                  "realized centering needs at least one sample in class K");
    }
    for (auto& c : counts) c /= nd;
    truth.weights = counts;
  }

  truth.overall_mean.resize(static_cast<Eigen::Index>(p));
  truth.contrast = Matrix::Zero(k, static_cast<Eigen::Index>(p));
  truth.sigma.resize(static_cast<Eigen::Index>(p));
  const double useful_prob = std::pow(pd, -config.sparsity);
  const double magnitude_scale = 72.0 * M_PI * 2.0 * config.r * std::log(pd) / nd;
  const bool mixed = config.noise.kind == NoiseModel::Kind::kBand ||
                     config.noise.kind == NoiseModel::Kind::kRandomSubset;

  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Matrix z;
  if (mixed) z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));

  parallel_for(p, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      std::mt19937_64 rng(derive_seed(seed, kFeatureStream, j));
      truth.overall_mean(jj) = config.overall_mean.sample(rng);
      if (uniform01(rng) < useful_prob) {
        double weighted = 0.0;
        for (int c = 0; c + 1 < k; ++c) {
          const double u = uniform01(rng);
          const double sign = u < config.gamma[0] ? -1.0
                              : u < config.gamma[0] + config.gamma[1] ? 0.0
                                                                      : 1.0;
          const double h = config.magnitude.sample(rng);
          if (h < 0.0) {
            throw Error(ErrorCode::kInvalidConfig, "feature magnitudes must be >= 0");
          }
          const double mu = std::pow(magnitude_scale * h, 1.0 / 6.0) * sign;
          truth.contrast(c, jj) = mu;
          weighted += truth.weights[c] * mu;
        }
        if (k >= 2) truth.contrast(k - 1, jj) = -weighted / truth.weights[k - 1];
      }
      const double sigma = config.noise_sd.sample(rng);
      truth.sigma(jj) = sigma;
      double* col = mixed ? z.col(jj).data() : x.col(jj).data();
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = sigma * noise_draw(config.noise, truth.y.labels[i], rng);
      }
    }
  });

  if (mixed) {
    const MixingMatrix a =
        correlated_noise_matrix(config.noise, p, derive_seed(seed, kMixingStream, 0));
    parallel_for(p, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        auto dst = x.col(static_cast<Eigen::Index>(j));
        dst.setZero();
        for (const auto& [row, value] : a.columns[j]) {
          dst += value * z.col(static_cast<Eigen::Index>(row));
        }
      }
    });
  }

  truth.kappa.assign(p, 0.0);
  truth.tau.assign(p, 0.0);
  truth.omega.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    bool any = false;
    for (int c = 0; c < k; ++c) any = any || truth.contrast(c, jj) != 0.0;
    if (!any) continue;
    truth.useful.push_back(j);
  }
  parallel_for(truth.useful.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> mk(static_cast<std::size_t>(k));
    for (std::size_t u = begin; u < end; ++u) {
      const auto jj = static_cast<Eigen::Index>(truth.useful[u]);
      for (int c = 0; c < k; ++c) mk[c] = truth.contrast(c, jj) / truth.sigma(jj);
      truth.kappa[truth.useful[u]] = kappa(mk, config.delta);
      truth.tau[truth.useful[u]] = tau(mk, config.delta, nd);
      truth.omega[truth.useful[u]] = omega(mk, config.delta, nd);
    }
  });

  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double base = truth.overall_mean(jj);
    double* col = x.col(jj).data();
    for (std::size_t i = 0; i < n; ++i) {
      col[i] += base + truth.contrast(truth.y.labels[i] - 1, jj);
    }
  }
  return AcmSample{DataMatrix(std::move(x)), std::move(truth)};
}

// ---- presets ---------------------------------------------------------------

namespace {

AcmConfig base_config(int k, std::size_t p, double theta, double sparsity, double r,
                      std::vector<double> delta, std::array<double, 3> gamma) {
  AcmConfig c;
  c.k = k;
  c.p = p;
  c.theta = theta;
  c.sparsity = sparsity;
  c.r = r;
  c.reps = 100;
  c.delta = std::move(delta);
  c.gamma = gamma;
  c.overall_mean = DistributionSpec::normal(0.0, 1.0);
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::vector<ExperimentSetting> experiment_preset(const std::string& id) {
  std::vector<ExperimentSetting> out;
  const std::vector<double> asym{1.0 / 3.0, 2.0 / 3.0};
  const std::vector<double> sym{0.5, 0.5};
  const std::array<double, 3> balanced{0.5, 0.0, 0.5};
  const std::vector<double> r_grid{0.20, 0.35, 0.50, 0.65};

  auto exp1 = [&](const std::vector<double>& delta, double r, const std::string& tag) {
    AcmConfig c = base_config(2, 40000, 0.6, 0.7, r, delta, balanced);
    c.magnitude = DistributionSpec::uniform(1.0, 0.2);  // support (.8, 1.2)
    c.noise_sd = DistributionSpec::uniform(1.1, 0.1);   // support (1, 1.2)
    out.push_back({id, tag + ",r=" + fmt(r), c, {0.06}});
  };
  auto exp2 = [&](double sparsity, bool wide, std::vector<double> fixed_q) {
    AcmConfig c = base_config(2, 40000, 0.6, sparsity, 0.3, asym, balanced);
    if (wide) {
      c.magnitude = DistributionSpec::trunc_normal(1.0, 0.1, 0.7);
      c.noise_sd = DistributionSpec::point_mass(1.0);
    } else {
      c.magnitude = DistributionSpec::trunc_normal(1.0, 0.01, 0.2);
      c.noise_sd = DistributionSpec::trunc_normal(1.0, 0.01, 0.1);
    }
    out.push_back({id, "vartheta=" + fmt(sparsity), c, std::move(fixed_q)});
  };

  if (id == "1a") {
    for (double r : r_grid) exp1(asym, r, "delta=(1/3,2/3)");
    for (double r : {0.06, 0.14, 0.22, 0.30}) exp1(sym, r, "delta=(1/2,1/2)");
  } else if (id == "1b") {
    for (double r : r_grid) exp1(asym, r, "delta=(1/3,2/3)");
    const double c0 = symmetric_rescale(asym, sym);
    for (double r : r_grid) exp1(sym, c0 * r, "delta=(1/2,1/2)");
  } else if (id == "2a") {
    for (double s : {0.68, 0.72, 0.76, 0.80}) exp2(s, false, {0.05});
  } else if (id == "2b") {
    for (double s : {0.68, 0.72, 0.76, 0.80}) exp2(s, true, {0.05});
  } else if (id == "3") {
    for (double s : {0.68, 0.72, 0.76, 0.80}) exp2(s, true, {0.03, 0.04, 0.05, 0.06});
  } else if (id == "4") {
    const std::vector<std::pair<std::string, NoiseModel>> variants{
        {"band,d=0.1", {NoiseModel::Kind::kBand, {}, 0.1, 0}},
        {"random,N=5,d=0.1", {NoiseModel::Kind::kRandomSubset, {}, 0.1, 5}},
        {"random,N=20,d=0.1", {NoiseModel::Kind::kRandomSubset, {}, 0.1, 20}},
    };
    for (const auto& [tag, noise] : variants) {
      AcmConfig c = base_config(4, 20000, 0.5, 0.6, 0.7, {0.25, 0.25, 0.25, 0.25},
                                {0.3, 0.05, 0.65});
      c.magnitude = DistributionSpec::trunc_shift_exp(0.1, 0.9,
                                                      -std::numeric_limits<double>::infinity(),
                                                      std::numeric_limits<double>::infinity());
      c.noise_sd = DistributionSpec::trunc_shift_exp(0.1, 0.9, 0.9, 1.2);
      c.noise = noise;
      out.push_back({id, tag, c, {0.03}});
    }
  } else if (id == "5") {
    const std::vector<std::pair<std::string, NoiseModel>> variants{
        {"class-scaled,a=(0.8,1,1.2,1.4)",
         {NoiseModel::Kind::kClassScaled, {0.8, 1.0, 1.2, 1.4}, 0.0, 0}},
        {"t6", {NoiseModel::Kind::kStudentT6, {}, 0.0, 0}},
        {"chisq6", {NoiseModel::Kind::kChiSq6, {}, 0.0, 0}},
    };
    for (const auto& [tag, noise] : variants) {
      AcmConfig c = base_config(4, 20000, 0.5, 0.55, 1.0,
                                {0.25, 0.25, 1.0 / 3.0, 1.0 / 6.0}, {0.4, 0.1, 0.5});
      c.magnitude = DistributionSpec::trunc_shift_exp(0.1, 0.9,
                                                      -std::numeric_limits<double>::infinity(),
                                                      std::numeric_limits<double>::infinity());
      c.noise_sd = DistributionSpec::point_mass(1.0);
      c.noise = noise;
      out.push_back({id, tag, c, {0.03}});
    }
  } else {
    throw Error(ErrorCode::kUnknownExperiment, "unknown experiment '" + id + "'");
  }
  return out;
}

// ---- JSON ------------------------------------------------------------------

namespace {

const char* kind_name(DistributionSpec::Kind k) {
  switch (k) {
    case DistributionSpec::Kind::kPointMass: return "pointmass";
    case DistributionSpec::Kind::kUniform: return "uniform";
    case DistributionSpec::Kind::kNormal: return "normal";
    case DistributionSpec::Kind::kTruncNormal: return "truncnormal";
    case DistributionSpec::Kind::kTruncShiftExp: return "truncshiftexp";
  }
  return "pointmass";
}

const char* noise_name(NoiseModel::Kind k) {
  switch (k) {
    case NoiseModel::Kind::kGaussian: return "iid-gaussian";
    case NoiseModel::Kind::kClassScaled: return "class-scaled";
    case NoiseModel::Kind::kStudentT6: return "student-t6";
    case NoiseModel::Kind::kChiSq6: return "chisq6";
    case NoiseModel::Kind::kBand: return "correlated-band";
    case NoiseModel::Kind::kRandomSubset: return "correlated-random";
  }
  return "iid-gaussian";
}

// JSON has no infinities; unbounded truncation limits travel as null.
nlohmann::json bound(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double unbound(const nlohmann::json& j, double if_null) {
  return j.is_null() ? if_null : j.get<double>();
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kInvalidConfig, std::string("missing config field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("bad config field '") + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const DistributionSpec& s) {
  nlohmann::json j;
  j["kind"] = kind_name(s.kind);
  switch (s.kind) {
    case DistributionSpec::Kind::kPointMass:
      j["value"] = s.a;
      break;
    case DistributionSpec::Kind::kUniform:
      j["center"] = s.a;
      j["half_width"] = s.b;
      break;
    case DistributionSpec::Kind::kNormal:
      j["mean"] = s.a;
      j["variance"] = s.b;
      break;
    case DistributionSpec::Kind::kTruncNormal:
      j["center"] = s.a;
      j["variance"] = s.b;
      j["half_width"] = s.c;
      break;
    case DistributionSpec::Kind::kTruncShiftExp:
      j["mean"] = s.a;
      j["shift"] = s.b;
      j["lo"] = bound(s.c);
      j["hi"] = bound(s.d);
      break;
  }
  return j;
}

DistributionSpec distribution_from_json(const nlohmann::json& j) {
  const auto kind = required<std::string>(j, "kind");
  const double inf = std::numeric_limits<double>::infinity();
  DistributionSpec s;
  if (kind == "pointmass") {
    s = DistributionSpec::point_mass(required<double>(j, "value"));
  } else if (kind == "uniform") {
    s = DistributionSpec::uniform(required<double>(j, "center"),
                                  required<double>(j, "half_width"));
  } else if (kind == "normal") {
    s = DistributionSpec::normal(required<double>(j, "mean"), required<double>(j, "variance"));
  } else if (kind == "truncnormal") {
    s = DistributionSpec::trunc_normal(required<double>(j, "center"),
                                       required<double>(j, "variance"),
                                       required<double>(j, "half_width"));
  } else if (kind == "truncshiftexp") {
    s = DistributionSpec::trunc_shift_exp(required<double>(j, "mean"),
                                          required<double>(j, "shift"),
                                          unbound(j.value("lo", nlohmann::json()), -inf),
                                          unbound(j.value("hi", nlohmann::json()), inf));
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown distribution kind '" + kind + "'");
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const AcmConfig& c) {
  nlohmann::json j;
  j["k"] = c.k;
  j["p"] = c.p;
  j["theta"] = c.theta;
  j["vartheta"] = c.sparsity;
  j["r"] = c.r;
  j["rep"] = c.reps;
  j["delta"] = c.delta;
  j["gamma"] = c.gamma;
  j["g_mubar"] = to_json(c.overall_mean);
  j["g_mu"] = to_json(c.magnitude);
  j["g_sigma"] = to_json(c.noise_sd);
  nlohmann::json noise;
  noise["model"] = noise_name(c.noise.kind);
  if (c.noise.kind == NoiseModel::Kind::kClassScaled) noise["a"] = c.noise.class_variances;
  if (c.noise.kind == NoiseModel::Kind::kBand ||
      c.noise.kind == NoiseModel::Kind::kRandomSubset) {
    noise["d"] = c.noise.d;
  }
  if (c.noise.kind == NoiseModel::Kind::kRandomSubset) noise["N"] = c.noise.subset;
  j["noise"] = noise;
  j["center_realized"] = c.center_realized;
  return j;
}

AcmConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  AcmConfig c;
  c.k = required<int>(j, "k");
  c.p = required<std::size_t>(j, "p");
  c.theta = required<double>(j, "theta");
  c.sparsity = required<double>(j, "vartheta");
  c.r = required<double>(j, "r");
  c.reps = j.value("rep", 100);
  c.delta = required<std::vector<double>>(j, "delta");
  c.gamma = required<std::array<double, 3>>(j, "gamma");
  if (j.contains("g_mubar")) c.overall_mean = distribution_from_json(j["g_mubar"]);
  if (j.contains("g_mu")) c.magnitude = distribution_from_json(j["g_mu"]);
  if (j.contains("g_sigma")) c.noise_sd = distribution_from_json(j["g_sigma"]);
  if (j.contains("noise")) {
    const auto& nj = j["noise"];
    const auto model = required<std::string>(nj, "model");
    if (model == "iid-gaussian") {
      c.noise.kind = NoiseModel::Kind::kGaussian;
    } else if (model == "class-scaled") {
      c.noise.kind = NoiseModel::Kind::kClassScaled;
      c.noise.class_variances = required<std::vector<double>>(nj, "a");
    } else if (model == "student-t6") {
      c.noise.kind = NoiseModel::Kind::kStudentT6;
    } else if (model == "chisq6") {
      c.noise.kind = NoiseModel::Kind::kChiSq6;
    } else if (model == "correlated-band") {
      c.noise.kind = NoiseModel::Kind::kBand;
      c.noise.d = required<double>(nj, "d");
    } else if (model == "correlated-random") {
      c.noise.kind = NoiseModel::Kind::kRandomSubset;
      c.noise.d = required<double>(nj, "d");
      c.noise.subset = required<std::size_t>(nj, "N");
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown noise model '" + model + "'");
    }
  }
  c.center_realized = j.value("center_realized", false);
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentSetting& s) {
  return {{"experiment", s.experiment},
          {"setting", s.label},
          {"config", to_json(s.config)},
          {"fixed_q", s.fixed_q}};
}

ExperimentSetting setting_from_json(const nlohmann::json& j) {
  ExperimentSetting s;
  if (j.contains("config")) {
    s.experiment = j.value("experiment", std::string("custom"));
    s.label = j.value("setting", std::string("custom"));
    s.config = config_from_json(j["config"]);
    s.fixed_q = j.value("fixed_q", std::vector<double>{});
  } else {
    s.experiment = "custom";
    s.label = "custom";
    s.config = config_from_json(j);
    s.fixed_q = j.value("fixed_q", std::vector<double>{});
  }
  return s;
}

}  // namespace ifpca
