#pragma once

// JSON documents: training configuration, trained model, train report and
// benchmark report, plus the benchmark CSV table. Parsers reject unknown keys
// and re-validate every invariant; they throw Error{ConfigError}.

#include <mvcl/data.hpp>
#include <mvcl/eval.hpp>
#include <mvcl/loss.hpp>
#include <mvcl/optim.hpp>

#include <string>
#include <string_view>

namespace mvcl {

inline constexpr int kSchemaVersion = 1;

struct Model {
  ProjectionSet P;
  RecoverySet F;
  FeatureStats stats;
  TrainConfig config;
};

std::string to_json(const TrainConfig& cfg);
// Missing keys keep their defaults. Dimension-dependent checks (d < D_m) are
// left to TrainConfig::validate.
TrainConfig train_config_from_json(std::string_view text);

std::string to_json(const Model& model);
Model model_from_json(std::string_view text);

std::string to_json(const TrainReport& report, const TrainConfig& cfg);

std::string to_json(const BenchmarkReport& report);
// label,mean_acc,std_acc,best_d
std::string to_csv(const BenchmarkReport& report);
// Paired rows: label,mfetch_mean,cmc_mean,paired_diff_mean,paired_diff_std.
// The difference is taken per repeat at each row's best sweep entry.
std::string paired_csv(const BenchmarkReport& mfetch, const BenchmarkReport& cmc);

std::string to_string(SamplePairing pairing);

}  // namespace mvcl
