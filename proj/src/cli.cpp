#include "ifpca/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "ifpca/acm.hpp"
#include "ifpca/matrix_file.hpp"
#include "ifpca/parallel.hpp"
#include "ifpca/pipeline.hpp"
#include "ifpca/simulate.hpp"
#include "ifpca/theory.hpp"

namespace ifpca {

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kUnknownExperiment:
    case ErrorCode::kInvalidK:
    case ErrorCode::kKTooLarge:
      return 2;
    case ErrorCode::kData:
    case ErrorCode::kIo:
    case ErrorCode::kZeroVarianceColumn:
    case ErrorCode::kInvalidConfig:
      return 3;
    case ErrorCode::kNoConvergence:
    case ErrorCode::kZeroSpread:
      return 4;
    case ErrorCode::kEmptySelection:
    case ErrorCode::kNoEligibleIndex:
      return 5;
  }
  return 3;
}

namespace {

struct ClusterArgs {
  std::string input;
  int k = 0;
  std::string labels;
  std::string method = "ifpca";
  std::string norm = "meanstd";
  std::string threshold = "hc";
  std::string null_table;
  std::size_t null_reps = 0;
  int replicates = 30;
  std::uint64_t seed = 0;
  bool transpose = false;
  bool truncate = false;
  std::string out;
  char delimiter = ',';
  bool hc_fallback = false;
  bool drop_constant = false;
  std::string hc_csv;
  bool no_timings = false;
};

struct SimulateArgs {
  std::string experiment;
  std::string config;
  int reps = -1;
  std::uint64_t seed = 0;
  std::string methods;
  std::string norm = "none";
  std::size_t null_reps = 0;
  int replicates = 30;
  std::string out;
};

struct NullTableArgs {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct TailArgs {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::string grid;
  std::uint64_t seed = 0;
  std::string alt;
  std::string out;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Writes to the file when a path is given, else to `out`.
template <typename F>
void emit(const std::string& path, std::ostream& out, F&& body) {
  if (path.empty()) {
    body(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path);
  body(file);
  if (!file) throw Error(ErrorCode::kIo, "write error on " + path);
}

int cmd_cluster(const ClusterArgs& a, std::ostream& out) {
  PipelineOptions opt;
  opt.k = a.k;
  opt.method = parse_method(a.method);
  opt.normalization = parse_normalization(a.norm);
  opt.threshold = ThresholdRule::parse(a.threshold);
  opt.null_reps = a.null_reps;
  opt.replicates = a.replicates;
  opt.seed = a.seed;
  opt.truncate = a.truncate;
  opt.hc_fallback = a.hc_fallback;
  opt.standardize.drop_constant = a.drop_constant;
  if (!a.null_table.empty()) {
    opt.null_table = std::make_shared<const NullTable>(NullTable::load(a.null_table));
  }

  MatrixFile file;
  file.path = a.input;
  file.delimiter = a.delimiter;
  file.features_by_samples = a.transpose;
  const DataMatrix x = read_matrix(file);
  std::optional<LabelVector> truth;
  if (!a.labels.empty()) truth = read_labels(a.labels);

  const RunReport report = run_pipeline(x, opt, truth ? &*truth : nullptr);
  out << to_json(report, !a.no_timings).dump(2) << '\n';
  if (!a.out.empty()) write_labels(a.out, report.labels);
  if (!a.hc_csv.empty()) {
    if (!report.hc) throw Error(ErrorCode::kUsage, "--hc-csv needs the hc threshold rule");
    emit(a.hc_csv, out, [&](std::ostream& o) { write_hc_csv(o, *report.hc); });
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.reps == 0 || a.reps < -1) throw Error(ErrorCode::kUsage, "--reps must be >= 1");
  std::vector<ExperimentSetting> settings;
  if (!a.experiment.empty()) {
    settings = experiment_preset(a.experiment);
  } else {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidConfig, a.config + ": " + e.what());
    }
    const nlohmann::json& list = j.is_object() && j.contains("settings") ? j["settings"] : j;
    if (list.is_array()) {
      for (const auto& s : list) settings.push_back(setting_from_json(s));
    } else {
      settings.push_back(setting_from_json(list));
    }
  }
  SimulationOptions opt;
  if (!a.methods.empty()) {
    opt.methods.clear();
    for (const auto& m : split_list(a.methods)) opt.methods.push_back(parse_sim_method(m));
  }
  opt.reps = a.reps > 0 ? a.reps : 0;
  opt.seed = a.seed;
  opt.replicates = a.replicates;
  opt.normalization = parse_normalization(a.norm);
  NullCache nulls(a.seed, a.null_reps);
  std::vector<MethodSummary> rows;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    auto part = simulate_setting(settings[s], s, opt, nulls);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  emit(a.out, out, [&](std::ostream& o) { write_simulation_csv(o, rows); });
  return 0;
}

int cmd_nulltable(const NullTableArgs& a) {
  if (a.n < 2) throw Error(ErrorCode::kUsage, "--n must be >= 2");
  if (a.reps < 1) throw Error(ErrorCode::kUsage, "--reps must be >= 1");
  build_null_table(a.n, a.reps, a.seed).save(a.out);
  return 0;
}

int cmd_tailcheck(const TailArgs& a, std::ostream& out) {
  if (a.n < 2) throw Error(ErrorCode::kUsage, "--n must be >= 2");
  if (a.reps < 1) throw Error(ErrorCode::kUsage, "--reps must be >= 1");
  const std::vector<double> grid = parse_grid(a.grid);
  if (a.alt.empty()) {
    const NullTable null = build_null_table(a.n, a.reps, a.seed);
    const auto rows = null_tail_check(null, grid);
    emit(a.out, out, [&](std::ostream& o) {
      o << "t,empirical_survival,theory_lower,theory_upper,ratio\n";
      for (const auto& r : rows) {
        o << fmt(r.t) << ',' << fmt(r.empirical_survival) << ',' << fmt(r.theory_lower) << ','
          << fmt(r.theory_upper) << ',' << fmt(r.ratio) << '\n';
      }
    });
  } else {
    const AltSpec alt = parse_alt(a.alt);
    std::vector<double> scores = simulate_alt_scores(alt, a.n, a.reps, a.seed);
    std::sort(scores.begin(), scores.end());
    const auto rows = alt_tail_check(alt, a.n, scores, grid);
    emit(a.out, out, [&](std::ostream& o) {
      o << "t,empirical_miss,bound\n";
      for (const auto& r : rows) {
        o << fmt(r.t) << ',' << fmt(r.empirical_miss) << ',' << fmt(r.bound) << '\n';
      }
    });
  }
  return 0;
}

int cmd_preset(const std::string& id, std::ostream& out) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : experiment_preset(id)) list.push_back(to_json(s));
  out << nlohmann::json{{"settings", list}}.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"IF-PCA clustering, simulation and null-table tools", "ifpca"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  ClusterArgs ca;
  auto* cluster = app.add_subcommand("cluster", "Cluster the samples of a data matrix");
  cluster->add_option("--input", ca.input, "Numeric CSV, samples by features")
      ->required();
  cluster->add_option("--k", ca.k, "Number of classes")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--labels", ca.labels, "True labels, one integer per line");
  cluster->add_option("--method", ca.method,
                      "ifpca, pca, kmeans, kmeanspp, hier, if-kmeans or if-hier");
  cluster->add_option("--norm", ca.norm, "KS normalization: none, meanstd, medmad, lower50");
  cluster->add_option("--threshold", ca.threshold, "hc, fixed:<t> or fixed-q:<q>");
  auto* nt = cluster->add_option("--null-table", ca.null_table, "Precomputed null table");
  auto* nr = cluster->add_option("--null-reps", ca.null_reps,
                                 "Null draws (default max(1e6, 100 p))");
  nt->excludes(nr);
  cluster->add_option("--replicates", ca.replicates, "k-means restarts")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--seed", ca.seed, "Master seed");
  cluster->add_flag("--transpose", ca.transpose, "Input rows are features");
  cluster->add_flag("--truncate", ca.truncate, "Clip the embedding at log(p)/sqrt(n)");
  cluster->add_option("--out", ca.out, "Write labels CSV here");
  cluster->add_option("--delimiter", ca.delimiter, "Field separator");
  cluster->add_flag("--hc-fallback", ca.hc_fallback,
                    "Drop the p-value floor when no HC rank is eligible");
  cluster->add_flag("--drop-constant", ca.drop_constant, "Skip zero-variance columns");
  cluster->add_option("--hc-csv", ca.hc_csv, "Write the HC curve CSV here");
  cluster->add_flag("--no-timings", ca.no_timings, "Omit stage timings from the report");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run a synthetic experiment sweep");
  auto* ex = simulate->add_option("--experiment", sa.experiment, "1a, 1b, 2a, 2b, 3, 4 or 5");
  auto* cf = simulate->add_option("--config", sa.config, "Setting JSON");
  ex->excludes(cf);
  simulate->add_option("--reps", sa.reps, "Repetitions per setting (default from preset)");
  simulate->add_option("--seed", sa.seed, "Master seed");
  simulate->add_option("--methods", sa.methods,
                       "Comma list: ifpca1, ifpca2, specgem, kmeans, kmeanspp, hier");
  simulate->add_option("--norm", sa.norm, "KS normalization");
  simulate->add_option("--null-reps", sa.null_reps, "Null draws (default max(1e6, 100 p))");
  simulate->add_option("--replicates", sa.replicates, "k-means restarts")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sa.out, "Write the CSV here instead of stdout");

  NullTableArgs na;
  auto* nulltable = app.add_subcommand("nulltable", "Simulate and save a KS null table");
  nulltable->add_option("--n", na.n, "Sample size")->required();
  nulltable->add_option("--reps", na.reps, "Number of null draws")->required();
  nulltable->add_option("--seed", na.seed, "Seed");
  nulltable->add_option("--out", na.out, "Output path (.bin for binary)")->required();

  TailArgs ta;
  auto* tail = app.add_subcommand("tailcheck", "Monte-Carlo check of the KS tail bounds");
  tail->add_option("--n", ta.n, "Sample size")->required();
  tail->add_option("--reps", ta.reps, "Monte-Carlo draws")->required();
  tail->add_option("--grid", ta.grid, "Comma list of t values")->required();
  tail->add_option("--seed", ta.seed, "Seed");
  tail->add_option("--alt", ta.alt, "Useful feature 'd1,d2:m1,m2'");
  tail->add_option("--out", ta.out, "Write the CSV here instead of stdout");

  std::string preset_id;
  auto* preset = app.add_subcommand("preset", "Print an experiment preset as JSON");
  preset->add_option("id", preset_id, "Experiment id")->required();

  std::vector<std::string> argv_store{"ifpca"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return 2;
  }
  if (simulate->parsed() && sa.experiment.empty() && sa.config.empty()) {
    err << "error: simulate needs --experiment or --config\n" << simulate->help();
    return 2;
  }

  try {
    set_num_threads(threads);
    if (cluster->parsed()) return cmd_cluster(ca, out);
    if (simulate->parsed()) return cmd_simulate(sa, out);
    if (nulltable->parsed()) return cmd_nulltable(na);
    if (tail->parsed()) return cmd_tailcheck(ta, out);
    if (preset->parsed()) return cmd_preset(preset_id, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "error [InvalidConfig]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace ifpca
