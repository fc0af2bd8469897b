#include "ifpca/simulate.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "ifpca/error.hpp"
#include "ifpca/parallel.hpp"
#include "ifpca/pipeline.hpp"

namespace ifpca {

namespace {

constexpr std::uint64_t kSimNullStream = 0x73696d6e756c6cULL;
constexpr std::uint64_t kSimDataStream = 0x73696d64617461ULL;
constexpr std::uint64_t kSimRunStream = 0x73696d72756eULL;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_q(double q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", q);
  return buf;
}

}  // namespace

const char* to_string(SimMethod method) {
  switch (method) {
    case SimMethod::kIfPcaHc: return "IF-PCA(1)";
    case SimMethod::kIfPcaFixed: return "IF-PCA(2)";
    case SimMethod::kSpecGem: return "SpecGem";
    case SimMethod::kKmeans: return "kmeans";
    case SimMethod::kKmeansPP: return "kmeans++";
    case SimMethod::kHier: return "Hier";
    case SimMethod::kIfKmeans: return "IF-HCT-kmeans";
    case SimMethod::kIfHier: return "IF-HCT-hier";
  }
  return "IF-PCA(1)";
}

SimMethod parse_sim_method(const std::string& name) {
  const std::string key = lower(name);
  const std::pair<const char*, SimMethod> aliases[] = {
      {"ifpca1", SimMethod::kIfPcaHc},     {"ifpca2", SimMethod::kIfPcaFixed},
      {"specgem", SimMethod::kSpecGem},    {"pca", SimMethod::kSpecGem},
      {"kmeans", SimMethod::kKmeans},      {"kmeanspp", SimMethod::kKmeansPP},
      {"hier", SimMethod::kHier},          {"if-kmeans", SimMethod::kIfKmeans},
      {"if-hier", SimMethod::kIfHier},
  };
  for (const auto& [alias, m] : aliases) {
    if (key == alias) return m;
  }
  for (SimMethod m : {SimMethod::kIfPcaHc, SimMethod::kIfPcaFixed, SimMethod::kSpecGem,
                      SimMethod::kKmeans, SimMethod::kKmeansPP, SimMethod::kHier,
                      SimMethod::kIfKmeans, SimMethod::kIfHier}) {
    if (key == lower(to_string(m))) return m;
  }
  throw Error(ErrorCode::kUsage, "unknown simulation method '" + name + "'");
}

std::vector<SimMethod> default_sim_methods() {
  return {SimMethod::kIfPcaHc, SimMethod::kIfPcaFixed, SimMethod::kSpecGem,
          SimMethod::kKmeans,  SimMethod::kKmeansPP,   SimMethod::kHier};
}

std::shared_ptr<const NullTable> NullCache::get(std::size_t n, std::size_t p) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = tables_.find(n);
  if (it != tables_.end()) return it->second;
  const std::size_t draws = draws_ > 0 ? draws_ : default_null_size(p);
  auto table = std::make_shared<const NullTable>(
      build_null_table(n, draws, derive_seed(seed_, kSimNullStream, n)));
  tables_.emplace(n, table);
  return table;
}

std::vector<MethodSummary> simulate_setting(const ExperimentSetting& setting,
                                            std::size_t setting_index,
                                            const SimulationOptions& options, NullCache& nulls) {
  const AcmConfig& config = setting.config;
  config.validate();
  const int reps = options.reps > 0 ? options.reps : config.reps;
  if (reps < 1) throw Error(ErrorCode::kUsage, "reps must be >= 1");

  struct Slot {
    SimMethod method;
    double q = 0.0;
    std::string name;
  };
  std::vector<Slot> slots;
  for (SimMethod m : options.methods) {
    if (m == SimMethod::kIfPcaFixed) {
      if (setting.fixed_q.empty()) {
        throw Error(ErrorCode::kInvalidConfig,
                    "IF-PCA(2) needs fixed_q values in setting " + setting.label);
      }
      for (double q : setting.fixed_q) {
        std::string name = setting.fixed_q.size() == 1
                               ? std::string(to_string(m))
                               : "IF-PCA(2,q=" + format_q(q) + ")";
        slots.push_back({m, q, std::move(name)});
      }
    } else {
      slots.push_back({m, 0.0, to_string(m)});
    }
  }

  const std::uint64_t setting_seed =
      derive_seed(options.seed, kSimDataStream, setting_index);
  std::vector<std::vector<double>> errors(slots.size());
  for (int rep = 0; rep < reps; ++rep) {
    const AcmSample sample = generate(config, derive_seed(setting_seed, 0, rep));
    const PreparedData data = prepare(sample.x);
    const std::size_t n = sample.x.samples();
    const std::size_t p = sample.x.features();

    PipelineOptions base;
    base.k = config.k;
    base.normalization = options.normalization;
    base.replicates = options.replicates;
    base.seed = derive_seed(setting_seed, kSimRunStream, rep);
    base.hc_fallback = true;

    for (std::size_t s = 0; s < slots.size(); ++s) {
      PipelineOptions opt = base;
      switch (slots[s].method) {
        case SimMethod::kIfPcaHc: opt.method = Method::kIfPca; break;
        case SimMethod::kIfPcaFixed:
          opt.method = Method::kIfPca;
          opt.threshold = ThresholdRule::fixed_q(slots[s].q);
          break;
        case SimMethod::kSpecGem: opt.method = Method::kPca; break;
        case SimMethod::kKmeans: opt.method = Method::kKmeans; break;
        case SimMethod::kKmeansPP: opt.method = Method::kKmeansPP; break;
        case SimMethod::kHier: opt.method = Method::kHier; break;
        case SimMethod::kIfKmeans: opt.method = Method::kIfKmeans; break;
        case SimMethod::kIfHier: opt.method = Method::kIfHier; break;
      }
      if (opt.threshold.kind == ThresholdRule::Kind::kHc &&
          (opt.method == Method::kIfPca || opt.method == Method::kIfKmeans ||
           opt.method == Method::kIfHier)) {
        opt.null_table = nulls.get(n, p);
      } else if (opt.normalization == Normalization::kLower50) {
        opt.null_table = nulls.get(n, p);
      }
      double err = 0.0;
      try {
        err = run_pipeline(data, opt, &sample.truth.y).error_rate.value();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptySelection && e.code() != ErrorCode::kNoEligibleIndex) {
          throw;
        }
        LabelVector one{std::vector<int>(n, 1), 1};
        err = hamming_error(one, sample.truth.y);
      }
      errors[s].push_back(err);
    }
  }

  std::vector<MethodSummary> rows;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    MethodSummary m;
    m.experiment = setting.experiment;
    m.setting = setting.label;
    m.method = slots[s].name;
    m.reps = reps;
    m.errors = errors[s];
    double sum = 0.0;
    for (double e : m.errors) sum += e;
    m.mean_error = sum / reps;
    double ss = 0.0;
    for (double e : m.errors) ss += (e - m.mean_error) * (e - m.mean_error);
    m.sd_error = reps > 1 ? std::sqrt(ss / (reps - 1)) : 0.0;
    rows.push_back(std::move(m));
  }
  return rows;
}

void write_simulation_csv(std::ostream& out, const std::vector<MethodSummary>& rows) {
  auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "experiment,setting,method,mean_error,sd_error,reps\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.experiment << ',' << quoted(r.setting) << ',' << quoted(r.method) << ',';
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.mean_error, r.sd_error);
    out << buf << ',' << r.reps << '\n';
  }
}

}  // namespace ifpca
