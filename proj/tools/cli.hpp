#pragma once

// Command-line front end: synth | train | eval | gradcheck | benchmark.
//
// Exit codes: 0 success, 2 usage/input, 3 IO, 4 numeric divergence,
// 5 gradient check failure.

#include <mvcl/data.hpp>
#include <mvcl/optim.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvcl::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kDivergence = 4,
  kGradcheck = 5,
};

// JSON-backed run configuration. Unknown keys are rejected and every nested
// invariant is re-validated on load.
struct RunConfig {
  TrainConfig train;
  bool has_d = false;  // whether hp.d was given explicitly
  SplitPlan split;
  std::vector<Index> d_sweep;
  std::vector<std::filesystem::path> views;
  std::optional<std::filesystem::path> labels;
};

RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg);

std::string synth_spec_json(const SynthSpec& spec);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvcl::cli
