#include "cli.hpp"

#include <mvcl/error.hpp>
#include <mvcl/eval.hpp>
#include <mvcl/grad.hpp>
#include <mvcl/serialize.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace mvcl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

// report.csv -> report<suffix>
fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

int exit_code_for(const Error& e) {
  const ErrorKind k = e.kind() == ErrorKind::BenchmarkError ? e.cause() : e.kind();
  switch (k) {
    case ErrorKind::IoError: return kIo;
    case ErrorKind::NumericDivergence: return kDivergence;
    default: return kUsage;
  }
}

std::string pct(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared training flags (override the config file).

struct TrainFlags {
  std::optional<Index> d;
  std::optional<double> alpha, beta, sigma, sigma1, sigma2, sigma3;
  std::optional<double> gamma, tol;
  std::optional<long> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> pairing;
  bool no_center = false;
  bool unit_variance = false;
  bool fea_exclude_self = false;

  void attach(CLI::App& app) {
    app.add_option("--d", d, "Subspace dimension");
    app.add_option("--alpha", alpha, "Feature-level weight (default 1)");
    app.add_option("--beta", beta, "Recovery-level weight (default 1)");
    app.add_option("--sigma", sigma, "Temperature for all three heads (default 0.1)");
    app.add_option("--sigma1", sigma1, "Sample-level temperature");
    app.add_option("--sigma2", sigma2, "Recovery-level temperature");
    app.add_option("--sigma3", sigma3, "Feature-level temperature");
    app.add_option("--lr", gamma, "Adam learning rate (default 1e-3)");
    app.add_option("--tol", tol, "Convergence threshold on |dL| (default 1e-3)");
    app.add_option("--max-iters", max_iters, "Iteration cap (default 1000)");
    app.add_option("--seed", seed, "Initialization seed");
    app.add_option("--pairing", pairing, "Sample-level pairing: pooled | per_view_pair")
        ->check(CLI::IsMember({"pooled", "per_view_pair"}));
    app.add_flag("--no-center", no_center, "Disable per-feature centering");
    app.add_flag("--unit-variance", unit_variance, "Scale features to unit variance");
    app.add_flag("--fea-exclude-self-view", fea_exclude_self,
                 "Drop v = m pairs from the feature-level head");
  }

  void apply(RunConfig& cfg) const {
    auto& t = cfg.train;
    if (d) {
      t.hp.d = *d;
      cfg.has_d = true;
    }
    if (alpha) t.hp.alpha = *alpha;
    if (beta) t.hp.beta = *beta;
    if (sigma) t.hp.sigma1 = t.hp.sigma2 = t.hp.sigma3 = *sigma;
    if (sigma1) t.hp.sigma1 = *sigma1;
    if (sigma2) t.hp.sigma2 = *sigma2;
    if (sigma3) t.hp.sigma3 = *sigma3;
    if (gamma) t.adam.gamma = *gamma;
    if (tol) t.tol = *tol;
    if (max_iters) t.max_iters = *max_iters;
    if (seed) t.seed = *seed;
    if (pairing) t.hp.pairing = *pairing == "pooled" ? SamplePairing::Pooled : SamplePairing::PerViewPair;
    if (no_center) t.preprocess.center = false;
    if (unit_variance) t.preprocess.unit_variance = true;
    if (fea_exclude_self) t.hp.fea_include_self_view = false;
  }
};

RunConfig base_config(const std::optional<fs::path>& path) {
  return path ? load_run_config(*path) : RunConfig{};
}

// ---------------------------------------------------------------------------

int cmd_synth(const SynthSpec& spec, const fs::path& out_dir, std::ostream& out) {
  const auto ds = synth_generate(spec);
  export_dataset(out_dir, ds);
  write_file(out_dir / "spec.json", synth_spec_json(spec));
  out << "wrote " << ds.view_count() << " views x " << ds.samples() << " samples to "
      << out_dir.string() << "\n";
  return kOk;
}

int cmd_train(RunConfig cfg, const TrainFlags& flags, const std::vector<fs::path>& views,
              const std::optional<fs::path>& labels, const fs::path& model_path,
              std::optional<fs::path> report_path, bool header, std::ostream& out) {
  flags.apply(cfg);
  if (!views.empty()) cfg.views = views;
  if (labels) cfg.labels = labels;
  if (!cfg.has_d) config_error("subspace dimension d is required (--d or hp.d in --config)");
  if (cfg.views.size() < 2) config_error("--views needs at least two CSV files");

  const auto raw = load_views(cfg.views, cfg.labels, CsvOptions{header});
  auto [ds, stats] = preprocess(raw, cfg.train.preprocess);
  const auto result = train(ds, cfg.train);

  Model model{result.P, result.F, stats, cfg.train};
  write_file(model_path, to_json(model) + "\n");
  if (!report_path) report_path = sibling(model_path, ".report.json");
  write_file(*report_path, to_json(result.report, cfg.train) + "\n");

  out << std::setprecision(17);
  out << "variant: " << (cfg.train.hp.is_cmc_ablation() ? "CMC-ablation" : "MFETCH") << "\n";
  out << "final loss: " << result.report.losses.back() << "\n";
  out << "iterations: " << result.report.iterations << "\n";
  out << "converged: " << (result.report.converged ? "true" : "false") << "\n";
  return kOk;
}

int cmd_eval(const fs::path& model_path, const std::vector<fs::path>& views, const fs::path& labels,
             const std::vector<fs::path>& train_views, const fs::path& train_labels,
             const std::string& strategy, bool header, std::ostream& out) {
  const Model model = model_from_json(read_file(model_path));
  const auto query_raw = load_views(views, labels, CsvOptions{header});
  const auto gallery_raw = load_views(train_views, train_labels, CsvOptions{header});
  for (const auto* ds : {&query_raw, &gallery_raw}) {
    if (ds->view_count() != static_cast<Index>(model.P.mats.size())) {
      throw Error(ErrorKind::DimError, "model has " + std::to_string(model.P.mats.size()) +
                                           " views, data has " + std::to_string(ds->view_count()));
    }
    check_projections(model.P, *ds);
  }
  const auto query = preprocess(query_raw, model.stats.options, model.stats).first;
  const auto gallery = preprocess(gallery_raw, model.stats.options, model.stats).first;

  const auto acc = evaluate_strategies(model.P, gallery, query);
  const auto row_labels = report_row_labels(query.view_count());
  if (strategy == "per-view" || strategy == "both") {
    for (std::size_t r = 0; r + 1 < acc.size(); ++r) {
      out << row_labels[r] << " accuracy: " << pct(acc[r]) << "\n";
    }
  }
  if (strategy == "fused" || strategy == "both") {
    out << "II accuracy: " << pct(acc.back()) << "\n";
  }
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, double h, long n, std::vector<Index> dims, Index d,
                  const TrainFlags& flags, std::ostream& out) {
  RunConfig cfg;
  cfg.train.hp.d = d;
  cfg.has_d = true;
  flags.apply(cfg);
  HyperParams hp = cfg.train.hp;
  hp.validate(dims);
  if (n < 1) config_error("--n must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MultiViewDataset ds;
  for (Index D : dims) {
    Matrix x(D, n);
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < D; ++r) x(r, c) = gauss(rng);
    ds.views.push_back(std::move(x));
  }
  ds.validate();
  const auto [P, F] = init_params(dims, hp.d, splitmix64(seed));
  const auto g = gradients(P, F, ds, hp);

  constexpr double kLimit = 1e-5;
  std::vector<std::string> failed;
  out << std::scientific << std::setprecision(3);
  auto report = [&](const std::string& name, double err) {
    out << name << " max_rel_err " << err << (err <= kLimit ? "  ok" : "  FAIL") << "\n";
    if (!(err <= kLimit)) failed.push_back(name);
  };
  for (std::size_t m = 0; m < dims.size(); ++m) {
    auto fp = [&](const Matrix& x) {
      ProjectionSet p = P;
      p.mats[m] = x;
      return total_loss(p, F, ds, hp);
    };
    report("P" + std::to_string(m + 1), finite_diff_check(fp, P.mats[m], g.dP[m], h));
  }
  for (std::size_t m = 0; m < dims.size(); ++m) {
    auto ff = [&](const Matrix& x) {
      RecoverySet f = F;
      f.mats[m] = x;
      return total_loss(P, f, ds, hp);
    };
    report("F" + std::to_string(m + 1), finite_diff_check(ff, F.mats[m], g.dF[m], h));
  }
  if (!failed.empty()) {
    out << "gradient check failed for:";
    for (const auto& f : failed) out << ' ' << f;
    out << "\n";
    return kGradcheck;
  }
  return kOk;
}

int cmd_benchmark(RunConfig cfg, const TrainFlags& flags, const fs::path& data_dir,
                  std::optional<int> M, std::optional<int> repeats,
                  std::optional<std::uint64_t> split_seed, const std::vector<Index>& sweep,
                  const fs::path& out_path, const std::string& ablate, bool header,
                  std::ostream& out) {
  flags.apply(cfg);
  if (M) cfg.split.per_class = *M;
  if (repeats) cfg.split.repeats = *repeats;
  if (split_seed) cfg.split.seed = *split_seed;
  if (!sweep.empty()) cfg.d_sweep = sweep;

  const auto ds = load_dataset_dir(data_dir, CsvOptions{header});
  BenchmarkOptions opts;
  opts.d_sweep = cfg.d_sweep;
  opts.threads = worker_threads_from_env();

  const auto report = benchmark(ds, cfg.train, cfg.split, opts);
  std::optional<BenchmarkReport> cmc;
  if (ablate == "cmc") {
    TrainConfig base = cfg.train;
    base.hp.alpha = 0.0;
    base.hp.beta = 0.0;
    cmc = benchmark(ds, base, cfg.split, opts);
  }

  // Everything is computed before anything is written.
  write_file(out_path, to_csv(report));
  write_file(sibling(out_path, ".json"), to_json(report) + "\n");
  if (cmc) {
    write_file(sibling(out_path, ".cmc.csv"), to_csv(*cmc));
    write_file(sibling(out_path, ".cmc.json"), to_json(*cmc) + "\n");
    write_file(sibling(out_path, ".paired.csv"), paired_csv(report, *cmc));
  }

  out << "M=" << report.per_class << " repeats=" << report.repeats << "\n";
  for (std::size_t r = 0; r < report.rows.size(); ++r) {
    const auto& row = report.rows[r];
    out << row.label << " " << pct(row.mean_acc) << " +- " << pct(row.std_acc) << " (d=" << row.best_d
        << ")";
    if (cmc) {
      const auto& c = cmc->rows[r];
      out << "  CMC " << pct(c.mean_acc) << " +- " << pct(c.std_acc) << "  diff "
          << pct(row.mean_acc - c.mean_acc);
    }
    out << "\n";
  }
  return kOk;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      config_error("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("malformed run config: ") + e.what());
  }
  if (!j.is_object()) config_error("run config must be a JSON object");
  static const std::set<std::string> allowed{"schema_version", "train", "split", "d_sweep", "views",
                                             "labels"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in run config");
  }
  if (!j.contains("schema_version")) config_error("run config lacks schema_version");
  if (j.at("schema_version") != kSchemaVersion) config_error("unsupported schema_version");

  RunConfig cfg;
  try {
    if (j.contains("train")) {
      cfg.train = train_config_from_json(j.at("train").dump());
      cfg.has_d = j.at("train").contains("hp") && j.at("train").at("hp").contains("d");
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (!s.is_object()) config_error("split must be an object");
      for (const auto& [key, value] : s.items()) {
        if (key != "M" && key != "repeats" && key != "seed") config_error("unknown key '" + key + "' in split");
      }
      cfg.split.per_class = s.value("M", cfg.split.per_class);
      cfg.split.repeats = s.value("repeats", cfg.split.repeats);
      cfg.split.seed = s.value("seed", cfg.split.seed);
      if (cfg.split.per_class < 1 || cfg.split.repeats < 1) config_error("split M and repeats must be >= 1");
    }
    if (j.contains("d_sweep")) {
      cfg.d_sweep = j.at("d_sweep").get<std::vector<Index>>();
      for (Index d : cfg.d_sweep) {
        if (d < 1) config_error("d_sweep entries must be >= 1");
      }
    }
    if (j.contains("views")) {
      for (const auto& v : j.at("views")) cfg.views.emplace_back(v.get<std::string>());
    }
    if (j.contains("labels") && !j.at("labels").is_null()) cfg.labels = j.at("labels").get<std::string>();
  } catch (const json::exception& e) {
    config_error(std::string("run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(read_file(path)); }

std::string to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  json train = json::parse(mvcl::to_json(cfg.train));
  train.erase("schema_version");
  if (!cfg.has_d) train["hp"].erase("d");
  j["train"] = train;
  j["split"] = {{"M", cfg.split.per_class}, {"repeats", cfg.split.repeats}, {"seed", cfg.split.seed}};
  j["d_sweep"] = cfg.d_sweep;
  j["views"] = json::array();
  for (const auto& v : cfg.views) j["views"].push_back(v.string());
  if (cfg.labels) j["labels"] = cfg.labels->string();
  return j.dump(2);
}

std::string synth_spec_json(const SynthSpec& spec) {
  json j = {{"schema_version", kSchemaVersion},
            {"classes", spec.classes},
            {"per_class", spec.per_class},
            {"dims", spec.dims},
            {"shared_dims", spec.shared_dims},
            {"specific_dims", spec.specific_dims},
            {"redundant_copies", spec.redundant_copies},
            {"noise_std", spec.noise_std},
            {"separation", spec.separation},
            {"shared_jitter", spec.shared_jitter},
            {"seed", spec.seed}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view contrastive feature extraction"};
  app.require_subcommand(1);
  app.fallthrough();
  bool header = false;
  app.add_flag("--header", header, "CSV files start with a header line");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
  SynthSpec spec;
  std::string dims_text = "30,30";
  fs::path synth_out;
  synth->add_option("--classes", spec.classes, "Number of classes")->capture_default_str();
  synth->add_option("--per-class", spec.per_class, "Samples per class")->capture_default_str();
  synth->add_option("--dims", dims_text, "Per-view feature dimensions, comma separated")->capture_default_str();
  synth->add_option("--shared", spec.shared_dims, "Class-signal dimensions shared by all views")->capture_default_str();
  synth->add_option("--specific", spec.specific_dims, "Class-signal dimensions private to each view")->capture_default_str();
  synth->add_option("--redundant", spec.redundant_copies, "Noisy copies of shared dimensions")->capture_default_str();
  synth->add_option("--noise", spec.noise_std, "Gaussian noise scale")->capture_default_str();
  synth->add_option("--separation", spec.separation, "Scale of the class means")->capture_default_str();
  synth->add_option("--shared-jitter", spec.shared_jitter, "Per-sample shared deviation seen by every view")->capture_default_str();
  synth->add_option("--seed", spec.seed, "PRNG seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Learn projection matrices");
  std::vector<fs::path> train_views;
  std::optional<fs::path> train_labels, train_config, train_report;
  fs::path model_out;
  TrainFlags train_flags;
  train_cmd->add_option("--views", train_views, "View CSV files")->delimiter(',');
  train_cmd->add_option("--labels", train_labels, "Labels file (kept for bookkeeping)");
  train_cmd->add_option("--config", train_config, "Run configuration JSON");
  train_cmd->add_option("--out", model_out, "Model JSON output")->required();
  train_cmd->add_option("--report", train_report, "Train report JSON (default <out>.report.json)");
  train_flags.attach(*train_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "1-NN accuracy of a trained model");
  fs::path eval_model, eval_labels, eval_train_labels;
  std::vector<fs::path> eval_views, eval_train_views;
  std::string strategy = "both";
  eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
  eval_cmd->add_option("--views", eval_views, "Query view CSV files")->delimiter(',')->required();
  eval_cmd->add_option("--labels", eval_labels, "Query labels")->required();
  eval_cmd->add_option("--train-views", eval_train_views, "Gallery view CSV files")->delimiter(',')->required();
  eval_cmd->add_option("--train-labels", eval_train_labels, "Gallery labels")->required();
  eval_cmd->add_option("--strategy", strategy, "per-view | fused | both")
      ->check(CLI::IsMember({"per-view", "fused", "both"}))
      ->capture_default_str();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  grad_cmd->set_help_flag("--help", "Print this help message and exit");
  std::uint64_t grad_seed = 0;
  double grad_h = kDefaultFdStep;
  long grad_n = 8;
  std::string grad_dims = "6,5";
  Index grad_d = 3;
  TrainFlags grad_flags;
  grad_cmd->add_option("--seed", grad_seed, "Instance seed")->capture_default_str();
  grad_cmd->add_option("--h", grad_h, "Finite-difference step")->capture_default_str();
  grad_cmd->add_option("--n", grad_n, "Samples")->capture_default_str();
  grad_cmd->add_option("--dims", grad_dims, "Per-view dimensions")->capture_default_str();
  grad_cmd->add_option("--d", grad_d, "Subspace dimension")->capture_default_str();
  grad_cmd->add_option("--alpha", grad_flags.alpha, "Feature-level weight");
  grad_cmd->add_option("--beta", grad_flags.beta, "Recovery-level weight");
  grad_cmd->add_option("--sigma", grad_flags.sigma, "Temperature for all heads");
  grad_cmd->add_option("--pairing", grad_flags.pairing, "pooled | per_view_pair")
      ->check(CLI::IsMember({"pooled", "per_view_pair"}));

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "Repeated M-per-class 1-NN benchmark");
  fs::path bench_data, bench_out;
  std::optional<int> bench_M, bench_repeats;
  std::optional<std::uint64_t> bench_split_seed;
  std::optional<fs::path> bench_config;
  std::string bench_sweep, ablate;
  TrainFlags bench_flags;
  bench_cmd->add_option("--data", bench_data, "Directory with view<k>.csv and labels.csv")->required();
  bench_cmd->add_option("--M", bench_M, "Training samples per class (default 4)");
  bench_cmd->add_option("--repeats", bench_repeats, "Random repetitions (default 5)");
  bench_cmd->add_option("--split-seed", bench_split_seed, "Split seed");
  bench_cmd->add_option("--d-sweep", bench_sweep, "Subspace dimensions, comma separated");
  bench_cmd->add_option("--config", bench_config, "Run configuration JSON");
  bench_cmd->add_option("--out", bench_out, "Report CSV")->required();
  bench_cmd->add_option("--ablate", ablate, "Also run the paired alpha=beta=0 baseline")
      ->check(CLI::IsMember({"cmc"}));
  bench_flags.attach(*bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      spec.dims = parse_index_list(dims_text);
      return cmd_synth(spec, synth_out, out);
    }
    if (*train_cmd) {
      return cmd_train(base_config(train_config), train_flags, train_views, train_labels, model_out,
                       train_report, header, out);
    }
    if (*eval_cmd) {
      return cmd_eval(eval_model, eval_views, eval_labels, eval_train_views, eval_train_labels, strategy,
                      header, out);
    }
    if (*grad_cmd) {
      return cmd_gradcheck(grad_seed, grad_h, grad_n, parse_index_list(grad_dims), grad_d, grad_flags, out);
    }
    if (*bench_cmd) {
      return cmd_benchmark(base_config(bench_config), bench_flags, bench_data, bench_M, bench_repeats,
                           bench_split_seed, bench_sweep.empty() ? std::vector<Index>{} : parse_index_list(bench_sweep),
                           bench_out, ablate, header, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace mvcl::cli
