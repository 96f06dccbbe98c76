#include <mvcl/error.hpp>
#include <mvcl/serialize.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace mvcl {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  std::set<std::string> keys;
  for (const char* k : allowed) keys.insert(k);
  for (const auto& [key, value] : obj.items()) {
    if (!keys.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key + ": " + e.what());
  }
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) config_error(where + " must be a non-empty array of rows");
  const std::size_t cols = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != cols) config_error(where + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number()) config_error(where + ": non-numeric entry");
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c].get<double>();
    }
  }
  return m;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& a, const std::string& where) {
  if (!a.is_array()) config_error(where + " must be an array");
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) config_error(where + ": non-numeric entry");
    v(static_cast<Index>(i)) = a[i].get<double>();
  }
  return v;
}

SamplePairing pairing_from_string(const std::string& s) {
  if (s == "pooled") return SamplePairing::Pooled;
  if (s == "per_view_pair") return SamplePairing::PerViewPair;
  config_error("sample_pairing must be 'pooled' or 'per_view_pair', got '" + s + "'");
}

json config_json(const TrainConfig& cfg) {
  return {
      {"max_iters", cfg.max_iters},
      {"tol", cfg.tol},
      {"seed", cfg.seed},
      {"adam",
       {{"gamma", cfg.adam.gamma},
        {"beta1", cfg.adam.beta1},
        {"beta2", cfg.adam.beta2},
        {"epsilon", cfg.adam.epsilon}}},
      {"hp",
       {{"d", cfg.hp.d},
        {"alpha", cfg.hp.alpha},
        {"beta", cfg.hp.beta},
        {"sigma1", cfg.hp.sigma1},
        {"sigma2", cfg.hp.sigma2},
        {"sigma3", cfg.hp.sigma3},
        {"fea_include_self_view", cfg.hp.fea_include_self_view},
        {"sample_pairing", to_string(cfg.hp.pairing)}}},
      {"preprocess",
       {{"center", cfg.preprocess.center}, {"unit_variance", cfg.preprocess.unit_variance}}},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  reject_unknown(j, {"max_iters", "tol", "seed", "adam", "hp", "preprocess"}, "train config");
  read_opt(j, "max_iters", cfg.max_iters, "train");
  read_opt(j, "tol", cfg.tol, "train");
  read_opt(j, "seed", cfg.seed, "train");
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    reject_unknown(a, {"gamma", "beta1", "beta2", "epsilon"}, "adam");
    read_opt(a, "gamma", cfg.adam.gamma, "adam");
    read_opt(a, "beta1", cfg.adam.beta1, "adam");
    read_opt(a, "beta2", cfg.adam.beta2, "adam");
    read_opt(a, "epsilon", cfg.adam.epsilon, "adam");
  }
  if (j.contains("hp")) {
    const auto& h = j.at("hp");
    reject_unknown(h, {"d", "alpha", "beta", "sigma1", "sigma2", "sigma3", "fea_include_self_view",
                       "sample_pairing"},
                   "hp");
    read_opt(h, "d", cfg.hp.d, "hp");
    read_opt(h, "alpha", cfg.hp.alpha, "hp");
    read_opt(h, "beta", cfg.hp.beta, "hp");
    read_opt(h, "sigma1", cfg.hp.sigma1, "hp");
    read_opt(h, "sigma2", cfg.hp.sigma2, "hp");
    read_opt(h, "sigma3", cfg.hp.sigma3, "hp");
    read_opt(h, "fea_include_self_view", cfg.hp.fea_include_self_view, "hp");
    std::string pairing = to_string(cfg.hp.pairing);
    read_opt(h, "sample_pairing", pairing, "hp");
    cfg.hp.pairing = pairing_from_string(pairing);
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    reject_unknown(p, {"center", "unit_variance"}, "preprocess");
    read_opt(p, "center", cfg.preprocess.center, "preprocess");
    read_opt(p, "unit_variance", cfg.preprocess.unit_variance, "preprocess");
  }
  try {
    cfg.adam.validate();
    cfg.hp.validate({});
    if (cfg.max_iters < 1) config_error("max_iters must be >= 1");
    if (!(cfg.tol > 0.0)) config_error("tol must be > 0");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(e.what());
  }
  return cfg;
}

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("malformed ") + what + ": " + e.what());
  }
}

void check_schema(const json& j, const char* what) {
  if (!j.contains("schema_version")) config_error(std::string(what) + " lacks schema_version");
  if (j.at("schema_version") != kSchemaVersion) {
    config_error(std::string(what) + " has unsupported schema_version " + j.at("schema_version").dump());
  }
}

std::string fmt17(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string variant_name(const TrainConfig& cfg) {
  return cfg.hp.is_cmc_ablation() ? "CMC-ablation" : "MFETCH";
}

}  // namespace

std::string to_string(SamplePairing pairing) {
  return pairing == SamplePairing::Pooled ? "pooled" : "per_view_pair";
}

std::string to_json(const TrainConfig& cfg) {
  json j = config_json(cfg);
  j["schema_version"] = kSchemaVersion;
  return j.dump(2);
}

TrainConfig train_config_from_json(std::string_view text) {
  json j = parse(text, "train config");
  if (j.is_object()) j.erase("schema_version");
  return config_from_json(j);
}

std::string to_json(const Model& model) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["variant"] = variant_name(model.config);
  j["V"] = model.P.mats.size();
  j["d"] = model.P.dim();
  json dims = json::array();
  for (const auto& p : model.P.mats) dims.push_back(p.rows());
  j["dims"] = dims;
  j["P"] = json::array();
  for (const auto& p : model.P.mats) j["P"].push_back(matrix_rows(p));
  j["F"] = json::array();
  for (const auto& f : model.F.mats) j["F"].push_back(matrix_rows(f));
  json pre;
  pre["center"] = model.stats.options.center;
  pre["unit_variance"] = model.stats.options.unit_variance;
  pre["means"] = json::array();
  for (const auto& m : model.stats.means) pre["means"].push_back(vector_json(m));
  pre["stds"] = json::array();
  for (const auto& s : model.stats.stds) pre["stds"].push_back(vector_json(s));
  j["preprocessing"] = pre;
  j["config"] = config_json(model.config);
  return j.dump(2);
}

Model model_from_json(std::string_view text) {
  const json j = parse(text, "model");
  reject_unknown(j, {"schema_version", "variant", "V", "d", "dims", "P", "F", "preprocessing", "config"},
                 "model");
  check_schema(j, "model");
  Model model;
  for (const char* key : {"V", "d", "dims", "P", "F", "preprocessing", "config"}) {
    if (!j.contains(key)) config_error(std::string("model lacks '") + key + "'");
  }
  const auto V = j.at("V").get<std::size_t>();
  const auto d = j.at("d").get<Index>();
  const auto dims = j.at("dims").get<std::vector<Index>>();
  if (V < 2 || dims.size() != V || j.at("P").size() != V || j.at("F").size() != V) {
    config_error("model view count is inconsistent");
  }
  for (std::size_t m = 0; m < V; ++m) {
    model.P.mats.push_back(matrix_from_rows(j.at("P")[m], "P[" + std::to_string(m) + "]"));
    model.F.mats.push_back(matrix_from_rows(j.at("F")[m], "F[" + std::to_string(m) + "]"));
    if (model.P.mats[m].rows() != dims[m] || model.P.mats[m].cols() != d ||
        model.F.mats[m].rows() != d || model.F.mats[m].cols() != dims[m]) {
      config_error("model matrix shapes disagree with dims/d for view " + std::to_string(m + 1));
    }
  }
  const auto& pre = j.at("preprocessing");
  reject_unknown(pre, {"center", "unit_variance", "means", "stds"}, "preprocessing");
  model.stats.options.center = pre.value("center", true);
  model.stats.options.unit_variance = pre.value("unit_variance", false);
  for (std::size_t m = 0; m < pre.at("means").size(); ++m) {
    model.stats.means.push_back(vector_from_json(pre.at("means")[m], "means"));
  }
  for (std::size_t m = 0; m < pre.at("stds").size(); ++m) {
    model.stats.stds.push_back(vector_from_json(pre.at("stds")[m], "stds"));
  }
  model.config = config_from_json(j.at("config"));
  return model;
}

std::string to_json(const TrainReport& report, const TrainConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["variant"] = variant_name(cfg);
  j["losses"] = report.losses;
  j["final_loss"] = report.losses.empty() ? 0.0 : report.losses.back();
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["preprocessing"] = {{"center", report.preprocessing.center},
                        {"unit_variance", report.preprocessing.unit_variance}};
  j["wall_ms"] = report.wall_ms;
  j["config"] = config_json(cfg);
  return j.dump(2);
}

std::string to_json(const BenchmarkReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["variant"] = report.variant;
  j["M"] = report.per_class;
  j["repeats"] = report.repeats;
  j["d_sweep"] = report.d_sweep;
  j["std_convention"] = "population";
  j["rows"] = json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"label", row.label},
                         {"mean_acc", row.mean_acc},
                         {"std_acc", row.std_acc},
                         {"best_d", row.best_d}});
  }
  j["accuracies"] = report.accuracies;
  j["split"] = {{"M", report.plan.per_class}, {"repeats", report.plan.repeats}, {"seed", report.plan.seed}};
  j["config"] = config_json(report.config);
  return j.dump(2);
}

std::string to_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "label,mean_acc,std_acc,best_d\n";
  for (const auto& row : report.rows) {
    os << row.label << ',' << fmt17(row.mean_acc) << ',' << fmt17(row.std_acc) << ',' << row.best_d
       << '\n';
  }
  return os.str();
}

std::string paired_csv(const BenchmarkReport& mfetch, const BenchmarkReport& cmc) {
  if (mfetch.rows.size() != cmc.rows.size() || mfetch.repeats != cmc.repeats) {
    throw Error(ErrorKind::DimError, "paired reports have different shapes");
  }
  auto sweep_index = [](const BenchmarkReport& r, Index d) {
    return static_cast<std::size_t>(
        std::find(r.d_sweep.begin(), r.d_sweep.end(), d) - r.d_sweep.begin());
  };
  std::ostringstream os;
  os << "label,mfetch_mean,cmc_mean,paired_diff_mean,paired_diff_std\n";
  for (std::size_t row = 0; row < mfetch.rows.size(); ++row) {
    const auto sm = sweep_index(mfetch, mfetch.rows[row].best_d);
    const auto sc = sweep_index(cmc, cmc.rows[row].best_d);
    std::vector<double> diffs;
    for (int r = 0; r < mfetch.repeats; ++r) {
      const auto rr = static_cast<std::size_t>(r);
      diffs.push_back(mfetch.accuracies[sm][rr][row] - cmc.accuracies[sc][rr][row]);
    }
    double mean = 0.0;
    for (double x : diffs) mean += x;
    mean /= static_cast<double>(diffs.size());
    double var = 0.0;
    for (double x : diffs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(diffs.size()));
    os << mfetch.rows[row].label << ',' << fmt17(mfetch.rows[row].mean_acc) << ','
       << fmt17(cmc.rows[row].mean_acc) << ',' << fmt17(mean) << ',' << fmt17(sd) << '\n';
  }
  return os.str();
}

}  // namespace mvcl
