#pragma once

// Subspace evaluation: per-view projection (strategy I), summed fusion
// (strategy II), 1-NN classification and the repeated M-per-class benchmark.

#include <mvcl/data.hpp>
#include <mvcl/loss.hpp>
#include <mvcl/optim.hpp>
#include <mvcl/types.hpp>

#include <string>
#include <vector>

namespace mvcl {

// embs[m] = P_m^T X^m.
EmbeddingSet project_per_view(const ProjectionSet& P, const MultiViewDataset& ds);

// sum_m P_m^T X^m (d x n).
Matrix fuse(const ProjectionSet& P, const MultiViewDataset& ds);

// Label of the Euclidean-nearest training column; ties go to the lowest
// training index. Only k = 1 is supported. Throws EmptyTrain / DimError.
Labels knn_classify(const Matrix& train_emb, const Labels& train_labels, const Matrix& test_emb,
                    int k = 1);

// Percentage of matching entries.
double accuracy_percent(const Labels& predicted, const Labels& truth);

// Per-view accuracies (strategy I), their mean, and the fused accuracy
// (strategy II) for one trained model, in that order.
std::vector<double> evaluate_strategies(const ProjectionSet& P, const MultiViewDataset& train,
                                        const MultiViewDataset& test);

// Row labels: "View1".."ViewV", "Mean", "II".
std::vector<std::string> report_row_labels(Index views);

// {5, 10, ..., min(50, min_m D_m - 1)}; falls back to {min_m D_m - 1} for tiny views.
std::vector<Index> default_d_sweep(std::span<const Index> dims);

struct BenchmarkRow {
  std::string label;
  double mean_acc = 0.0;  // percent
  double std_acc = 0.0;   // population std over repeats, percent
  Index best_d = 0;       // sweep entry with the highest mean
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  int per_class = 0;  // M
  int repeats = 0;
  std::vector<Index> d_sweep;
  // accuracies[s][r][row]: sweep entry s, repeat r, row (same order as rows).
  std::vector<std::vector<std::vector<double>>> accuracies;
  TrainConfig config;
  SplitPlan plan;
  std::string variant;  // "MFETCH" or "CMC-ablation"
};

struct BenchmarkOptions {
  std::vector<Index> d_sweep;  // empty -> default_d_sweep
  int threads = 1;             // repeats evaluated concurrently
};

// For each repeat: split, preprocess with training statistics, train on the
// training views, and score every strategy with 1-NN. Rows report the
// per-row best mean over the d sweep with its std. Throws BenchmarkError
// naming the failing repeat.
BenchmarkReport benchmark(const MultiViewDataset& ds, const TrainConfig& cfg,
                          const SplitPlan& plan, const BenchmarkOptions& opts = {});

// Worker count from MVCL_THREADS (0 or unset = hardware concurrency).
int worker_threads_from_env();

}  // namespace mvcl
