#pragma once

// Multi-view datasets: CSV loading, preprocessing, padded stacking,
// synthetic generation and M-per-class splitting.
//
// Storage convention: every view is a D_m x n matrix (features x samples).
// CSV files are the transpose of that (one row per sample).

#include <mvcl/types.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mvcl {

struct MultiViewDataset {
  std::vector<Matrix> views;
  std::optional<Labels> labels;

  Index samples() const { return views.empty() ? 0 : views.front().cols(); }
  Index view_count() const { return static_cast<Index>(views.size()); }
  std::vector<Index> dims() const;
  bool has_labels() const { return labels.has_value(); }

  // Throws Error{ViewMismatch | ParseError | EmptyInput} when an invariant fails.
  void validate() const;
};

// Validating constructor.
MultiViewDataset make_dataset(std::vector<Matrix> views,
                              std::optional<Labels> labels = std::nullopt);

// Keeps the given sample columns (in the given order) in every view and in the labels.
MultiViewDataset select_samples(const MultiViewDataset& ds, std::span<const Index> columns);

// Distinct class ids in ascending order.
std::vector<int> class_ids(const Labels& labels);

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  bool header = false;  // skip the first line
};

// Reads a rows x cols numeric matrix. Throws ParseError / EmptyInput / IoError.
Matrix read_csv(const std::filesystem::path& path, CsvOptions opts = {});
// Writes with 17 significant digits so float64 values round-trip.
void write_csv(const std::filesystem::path& path, const Matrix& rows_by_cols);

Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);

MultiViewDataset load_views(std::span<const std::filesystem::path> paths,
                            const std::optional<std::filesystem::path>& labels_path = std::nullopt,
                            CsvOptions opts = {});

// Writes view1.csv ... viewV.csv (+ labels.csv when present) into dir.
void export_dataset(const std::filesystem::path& dir, const MultiViewDataset& ds);

// Reads a directory written by export_dataset (view<k>.csv in numeric order).
MultiViewDataset load_dataset_dir(const std::filesystem::path& dir, CsvOptions opts = {});

// ---------------------------------------------------------------------------
// Preprocessing

struct PreprocessOptions {
  bool center = true;
  bool unit_variance = false;
};

// Per-view, per-feature statistics. stds are only meaningful with unit_variance.
struct FeatureStats {
  PreprocessOptions options;
  std::vector<Vector> means;
  std::vector<Vector> stds;
};

inline constexpr double kStdFloor = 1e-12;

// Computes statistics on ds when `stats` is empty, otherwise applies the given
// ones (so held-out data reuses training statistics). Throws StatsMismatch.
std::pair<MultiViewDataset, FeatureStats> preprocess(
    const MultiViewDataset& ds, PreprocessOptions opts,
    const std::optional<FeatureStats>& stats = std::nullopt);

// ---------------------------------------------------------------------------
// Padded stacking: view m is placed in its own row block of a D x n matrix,
// D = sum_m D_m, with exact zeros elsewhere.

struct StackedViews {
  std::vector<Matrix> padded;
  std::vector<Index> block_offsets;
  std::vector<Index> block_sizes;

  Index total_dim() const;
  // Original view m (the non-zero block of padded[m]).
  Eigen::Block<const Matrix> block(std::size_t m) const {
    return padded[m].middleRows(block_offsets[m], block_sizes[m]);
  }
};

StackedViews pad_stack(const MultiViewDataset& ds);

// ---------------------------------------------------------------------------
// Synthetic data.
//
// Each sample i of class c has a latent shared vector s_i = mu_c + noise_std * e_i
// that every view observes (plus its own independent noise). View m further gets
// `specific_dims` features carrying a class mean nu_c^m that no other view sees,
// `redundant_copies` noisy duplicates of the shared features, and pure noise in
// the remaining features. Class means are N(0, separation^2).

struct SynthSpec {
  int classes = 5;
  int per_class = 20;
  std::vector<Index> dims{30, 30};
  int shared_dims = 4;
  int specific_dims = 4;
  int redundant_copies = 4;
  double noise_std = 1.0;
  double separation = 3.0;
  double shared_jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidSpec
};

MultiViewDataset synth_generate(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Splitting

struct SplitPlan {
  int per_class = 4;  // M
  int repeats = 5;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<Index> train;  // ascending
  std::vector<Index> test;   // ascending
};

// Seed mixing used for independent repeats.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Throws LabelsRequired, SplitInfeasible, InvalidSpec.
SplitIndices split_indices(const MultiViewDataset& ds, const SplitPlan& plan, int repeat_index);

std::pair<MultiViewDataset, MultiViewDataset> split(const MultiViewDataset& ds,
                                                    const SplitPlan& plan, int repeat_index);

}  // namespace mvcl
