#include "ifpca/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "ifpca/acm.hpp"
#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"

namespace ifpca {

const char* to_string(Method method) {
  switch (method) {
    case Method::kIfPca: return "ifpca";
    case Method::kPca: return "pca";
    case Method::kKmeans: return "kmeans";
    case Method::kKmeansPP: return "kmeanspp";
    case Method::kHier: return "hier";
    case Method::kIfKmeans: return "if-kmeans";
    case Method::kIfHier: return "if-hier";
  }
  return "ifpca";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kIfPca, Method::kPca, Method::kKmeans, Method::kKmeansPP,
                   Method::kHier, Method::kIfKmeans, Method::kIfHier}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::kUsage, "unknown method '" + name + "'");
}

ThresholdRule ThresholdRule::parse(const std::string& text) {
  if (text == "hc") return hc();
  auto number = [&](std::size_t offset) {
    const std::string tail = text.substr(offset);
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (tail.empty() || *end != '\0' || !std::isfinite(v)) {
      throw Error(ErrorCode::kUsage, "bad threshold value in '" + text + "'");
    }
    return v;
  };
  if (text.rfind("fixed-q:", 0) == 0) {
    const double q = number(8);
    if (!(q > 0.0)) throw Error(ErrorCode::kUsage, "fixed-q threshold needs q > 0");
    return fixed_q(q);
  }
  if (text.rfind("fixed:", 0) == 0) return fixed(number(6));
  throw Error(ErrorCode::kUsage,
              "threshold must be hc, fixed:<t> or fixed-q:<q>, got '" + text + "'");
}

std::string ThresholdRule::to_string() const {
  char buf[64];
  switch (kind) {
    case Kind::kHc: return "hc";
    case Kind::kFixed: std::snprintf(buf, sizeof(buf), "fixed:%.17g", value); return buf;
    case Kind::kFixedQ: std::snprintf(buf, sizeof(buf), "fixed-q:%.17g", value); return buf;
  }
  return "hc";
}

void PipelineOptions::validate() const {
  if (k < 1) throw Error(ErrorCode::kUsage, "k must be >= 1");
  if (replicates < 1) throw Error(ErrorCode::kUsage, "replicates must be >= 1");
  if (threshold.kind == ThresholdRule::Kind::kFixed && !std::isfinite(threshold.value)) {
    throw Error(ErrorCode::kUsage, "fixed threshold must be finite");
  }
  if (threshold.kind == ThresholdRule::Kind::kFixedQ && !(threshold.value > 0.0)) {
    throw Error(ErrorCode::kUsage, "fixed-q threshold needs q > 0");
  }
}

namespace {

constexpr std::uint64_t kNullSeedStream = 0x4e554c4cULL;
constexpr std::uint64_t kFinalKmeansStream = 0x46494e4cULL;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

bool uses_screening(Method m) {
  return m == Method::kIfPca || m == Method::kIfKmeans || m == Method::kIfHier;
}

Matrix select_columns(const Matrix& w, const std::vector<std::size_t>& cols) {
  Matrix out(w.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = w.col(static_cast<Eigen::Index>(cols[c]));
  }
  return out;
}

LabelVector spectral_kmeans(const Matrix& sub, const PipelineOptions& opt, std::size_t p,
                            RunReport& report, Stopwatch& clock) {
  const int dims = static_cast<int>(std::min<Eigen::Index>(
      opt.k - 1, std::min(sub.rows(), sub.cols())));
  SpectralEmbedding u = truncated_left_svd(sub, std::max(dims, 1));
  if (opt.truncate) {
    const double t = std::log(static_cast<double>(p)) /
                     std::sqrt(static_cast<double>(sub.rows()));
    u = entrywise_truncate(u, t);
  }
  report.timings["svd"] = clock.lap();
  KmeansOptions km;
  km.replicates = opt.replicates;
  km.seed = derive_seed(opt.seed, kFinalKmeansStream, 0);
  LabelVector labels = kmeans(u.vectors, opt.k, km).labels;
  report.timings["cluster"] = clock.lap();
  return labels;
}

LabelVector direct_cluster(const Matrix& points, Method engine, const PipelineOptions& opt,
                           RunReport& report, Stopwatch& clock) {
  LabelVector labels;
  if (engine == Method::kHier || engine == Method::kIfHier) {
    labels = hierarchical_complete(points, opt.k);
  } else {
    KmeansOptions km;
    km.replicates = opt.replicates;
    km.seed = derive_seed(opt.seed, kFinalKmeansStream, 0);
    km.init = engine == Method::kKmeansPP ? KmeansInit::kPlusPlus : KmeansInit::kUniformSample;
    labels = kmeans(points, opt.k, km).labels;
  }
  report.timings["cluster"] = clock.lap();
  return labels;
}

nlohmann::json config_echo(const PipelineOptions& opt, std::size_t n, std::size_t p,
                           const NullTable* null) {
  nlohmann::json j;
  j["k"] = opt.k;
  j["method"] = to_string(opt.method);
  j["normalization"] = to_string(opt.normalization);
  j["threshold_rule"] = opt.threshold.to_string();
  j["truncate"] = opt.truncate;
  j["replicates"] = opt.replicates;
  j["seed"] = opt.seed;
  j["hc_fallback"] = opt.hc_fallback;
  j["n"] = n;
  j["p"] = p;
  if (null != nullptr) {
    j["null_size"] = null->size();
    j["null_seed"] = null->seed();
  }
  return j;
}

}  // namespace

PreparedData prepare(const DataMatrix& x, const StandardizeOptions& options) {
  StandardizedMatrix w = standardize_columns(x, options);
  KsScores raw = ks_scores(w);
  return PreparedData{std::move(w), std::move(raw)};
}

RunReport run_pipeline(const PreparedData& data, const PipelineOptions& opt,
                       const LabelVector* truth) {
  opt.validate();
  const StandardizedMatrix& w = data.w;
  const std::size_t n = w.samples();
  const std::size_t p = w.features();
  if (opt.k > static_cast<int>(n)) {
    throw Error(ErrorCode::kInvalidK, "k exceeds the number of samples");
  }
  if (truth != nullptr && truth->size() != n) {
    throw Error(ErrorCode::kData, "truth labels do not match the sample count");
  }
  RunReport report;
  report.n = n;
  report.p = p;
  Stopwatch clock;

  std::shared_ptr<const NullTable> null = opt.null_table;
  const bool screening = uses_screening(opt.method);
  const bool needs_null =
      screening && (opt.threshold.kind == ThresholdRule::Kind::kHc ||
                    opt.normalization == Normalization::kLower50);
  if (needs_null && !null) {
    const std::size_t draws = opt.null_reps > 0 ? opt.null_reps : default_null_size(p);
    null = std::make_shared<NullTable>(
        build_null_table(n, draws, derive_seed(opt.seed, kNullSeedStream, n)));
    report.timings["null_table"] = clock.lap();
  }
  if (needs_null && null->n() != n) {
    throw Error(ErrorCode::kData, "null table was simulated at n = " +
                                      std::to_string(null->n()) + " but the data has n = " +
                                      std::to_string(n));
  }
  report.config = config_echo(opt, n, p, needs_null ? null.get() : nullptr);

  if (!screening) {
    if (opt.method == Method::kPca) {
      report.labels = spectral_kmeans(w.values(), opt, p, report, clock);
    } else {
      report.labels = direct_cluster(w.values(), opt.method, opt, report, clock);
    }
    report.selected = w.kept_columns();
  } else {
    const KsScores scores = normalize_scores(data.raw, opt.normalization, null.get());
    double t = 0.0;
    switch (opt.threshold.kind) {
      case ThresholdRule::Kind::kHc: {
        const PValues pv = pvalues(scores, *null);
        HcOptions hopt;
        hopt.fallback = opt.hc_fallback;
        report.hc = hc_threshold(pv, scores, n, hopt);
        t = report.hc->t_hc;
        break;
      }
      case ThresholdRule::Kind::kFixed:
        t = opt.threshold.value;
        break;
      case ThresholdRule::Kind::kFixedQ:
        t = threshold_fixed(opt.threshold.value, static_cast<double>(p));
        break;
    }
    report.threshold = t;
    const FeatureSet chosen = select_features(scores, t);
    report.timings["screen"] = clock.lap();
    if (chosen.empty()) {
      throw Error(ErrorCode::kEmptySelection,
                  "no feature reaches the threshold " + std::to_string(t));
    }
    report.selected.reserve(chosen.indices.size());
    for (std::size_t j : chosen.indices) report.selected.push_back(w.kept_columns()[j]);
    const Matrix sub = select_columns(w.values(), chosen.indices);
    if (opt.method == Method::kIfPca) {
      report.labels = spectral_kmeans(sub, opt, p, report, clock);
    } else {
      report.labels = direct_cluster(sub, opt.method, opt, report, clock);
    }
  }
  if (truth != nullptr) report.error_rate = hamming_error(report.labels, *truth);
  return report;
}

RunReport run_pipeline(const DataMatrix& x, const PipelineOptions& options,
                       const LabelVector* truth) {
  Stopwatch clock;
  const PreparedData data = prepare(x, options.standardize);
  const double prep = clock.lap();
  RunReport report = run_pipeline(data, options, truth);
  report.timings["prepare"] = prep;
  return report;
}

RunReport if_hct_pca(const DataMatrix& x, PipelineOptions options, const LabelVector* truth) {
  options.method = Method::kIfPca;
  options.threshold = ThresholdRule::hc();
  return run_pipeline(x, options, truth);
}

RunReport if_pca_fixed(const DataMatrix& x, int k, double t, PipelineOptions options,
                       const LabelVector* truth) {
  options.k = k;
  options.method = Method::kIfPca;
  options.threshold = ThresholdRule::fixed(t);
  return run_pipeline(x, options, truth);
}

RunReport classical_pca(const DataMatrix& x, int k, PipelineOptions options,
                        const LabelVector* truth) {
  options.k = k;
  options.method = Method::kPca;
  return run_pipeline(x, options, truth);
}

RunReport if_hct_variant(const DataMatrix& x, PipelineOptions options,
                         const LabelVector* truth) {
  if (options.method != Method::kIfKmeans && options.method != Method::kIfHier) {
    throw Error(ErrorCode::kUsage, "if_hct_variant needs method if-kmeans or if-hier");
  }
  options.threshold = ThresholdRule::hc();
  return run_pipeline(x, options, truth);
}

RunReport baseline(const DataMatrix& x, int k, Method method, PipelineOptions options,
                   const LabelVector* truth) {
  if (method != Method::kKmeans && method != Method::kKmeansPP && method != Method::kHier) {
    throw Error(ErrorCode::kUsage, "baseline method must be kmeans, kmeanspp or hier");
  }
  options.k = k;
  options.method = method;
  return run_pipeline(x, options, truth);
}

nlohmann::json to_json(const RunReport& r, bool include_timings) {
  nlohmann::json j;
  j["labels"] = r.labels.labels;
  std::vector<std::size_t> one_based(r.selected.size());
  for (std::size_t i = 0; i < r.selected.size(); ++i) one_based[i] = r.selected[i] + 1;
  j["selected"] = one_based;
  j["selected_count"] = r.selected.size();
  j["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr);
  j["j_hat"] = r.hc ? nlohmann::json(r.hc->j_hat) : nlohmann::json(nullptr);
  if (r.hc) j["hc_fallback_used"] = r.hc->used_fallback;
  if (r.error_rate) j["error_rate"] = *r.error_rate;
  if (include_timings) j["timings"] = r.timings;
  j["config"] = r.config;
  return j;
}

}  // namespace ifpca
