#include <mvcl/error.hpp>
#include <mvcl/eval.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <future>
#include <limits>
#include <thread>

namespace mvcl {

EmbeddingSet project_per_view(const ProjectionSet& P, const MultiViewDataset& ds) {
  return embed(P, ds);
}

Matrix fuse(const ProjectionSet& P, const MultiViewDataset& ds) {
  check_projections(P, ds);
  Matrix out = Matrix::Zero(P.dim(), ds.samples());
  for (std::size_t m = 0; m < P.mats.size(); ++m) out += P.mats[m].transpose() * ds.views[m];
  return out;
}

Labels knn_classify(const Matrix& train_emb, const Labels& train_labels, const Matrix& test_emb,
                    int k) {
  if (k != 1) throw Error(ErrorKind::InvalidSpec, "only k = 1 is supported");
  if (train_emb.cols() == 0) throw Error(ErrorKind::EmptyTrain, "no training samples");
  if (static_cast<Index>(train_labels.size()) != train_emb.cols()) {
    throw Error(ErrorKind::DimError, "training labels do not match training samples");
  }
  if (train_emb.rows() != test_emb.rows()) {
    throw Error(ErrorKind::DimError, "training and test embeddings have different dimensions");
  }
  Labels out(static_cast<std::size_t>(test_emb.cols()));
  for (Index q = 0; q < test_emb.cols(); ++q) {
    Index best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < train_emb.cols(); ++t) {
      const double dist = (train_emb.col(t) - test_emb.col(q)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = t;
      }
    }
    out[static_cast<std::size_t>(q)] = train_labels[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy_percent(const Labels& predicted, const Labels& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::DimError, "prediction and truth lengths differ");
  }
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<double> evaluate_strategies(const ProjectionSet& P, const MultiViewDataset& train,
                                        const MultiViewDataset& test) {
  if (!train.labels || !test.labels) throw Error(ErrorKind::LabelsRequired, "evaluation needs labels");
  const auto tr = project_per_view(P, train);
  const auto te = project_per_view(P, test);
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t m = 0; m < tr.embs.size(); ++m) {
    const double acc = accuracy_percent(knn_classify(tr.embs[m], *train.labels, te.embs[m]), *test.labels);
    out.push_back(acc);
    sum += acc;
  }
  out.push_back(sum / static_cast<double>(tr.embs.size()));
  out.push_back(accuracy_percent(knn_classify(fuse(P, train), *train.labels, fuse(P, test)),
                                 *test.labels));
  return out;
}

std::vector<std::string> report_row_labels(Index views) {
  std::vector<std::string> out;
  for (Index m = 0; m < views; ++m) out.push_back("View" + std::to_string(m + 1));
  out.emplace_back("Mean");
  out.emplace_back("II");
  return out;
}

std::vector<Index> default_d_sweep(std::span<const Index> dims) {
  Index min_dim = std::numeric_limits<Index>::max();
  for (Index d : dims) min_dim = std::min(min_dim, d);
  const Index cap = std::min<Index>(50, min_dim - 1);
  std::vector<Index> out;
  for (Index d = 5; d <= cap; d += 5) out.push_back(d);
  if (out.empty() && cap >= 1) out.push_back(cap);
  return out;
}

int worker_threads_from_env() {
  int n = 0;
  if (const char* env = std::getenv("MVCL_THREADS")) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

BenchmarkReport benchmark(const MultiViewDataset& ds, const TrainConfig& cfg,
                          const SplitPlan& plan, const BenchmarkOptions& opts) {
  ds.validate();
  if (!ds.labels) throw Error(ErrorKind::LabelsRequired, "benchmark needs class labels");
  if (plan.repeats < 1) throw Error(ErrorKind::InvalidSpec, "repeats must be >= 1");
  const auto dims = ds.dims();

  BenchmarkReport report;
  report.per_class = plan.per_class;
  report.repeats = plan.repeats;
  report.d_sweep = opts.d_sweep.empty() ? default_d_sweep(dims) : opts.d_sweep;
  if (report.d_sweep.empty()) throw Error(ErrorKind::DimError, "empty subspace dimension sweep");
  report.config = cfg;
  report.plan = plan;
  report.variant = cfg.hp.is_cmc_ablation() ? "CMC-ablation" : "MFETCH";
  for (Index d : report.d_sweep) {
    TrainConfig probe = cfg;
    probe.hp.d = d;
    probe.validate(dims);
  }

  const auto labels = report_row_labels(ds.view_count());
  const std::size_t n_rows = labels.size();
  const std::size_t n_sweep = report.d_sweep.size();
  report.accuracies.assign(n_sweep, std::vector<std::vector<double>>(
                                        static_cast<std::size_t>(plan.repeats)));

  // Repeat r fills accuracies[*][r]; no two tasks write the same slot.
  auto run_repeat = [&](int r) {
    try {
      auto [train_raw, test_raw] = split(ds, plan, r);
      auto [train_ds, stats] = preprocess(train_raw, cfg.preprocess);
      auto [test_ds, unused] = preprocess(test_raw, cfg.preprocess, stats);
      for (std::size_t s = 0; s < n_sweep; ++s) {
        TrainConfig run = cfg;
        run.hp.d = report.d_sweep[s];
        const auto result = train(train_ds, run);
        report.accuracies[s][static_cast<std::size_t>(r)] =
            evaluate_strategies(result.P, train_ds, test_ds);
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::BenchmarkError, e.cause(), "repeat " + std::to_string(r) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::BenchmarkError, "repeat " + std::to_string(r) + ": " + e.what());
    }
  };

  const int threads = std::max(1, std::min(opts.threads, plan.repeats));
  if (threads == 1) {
    for (int r = 0; r < plan.repeats; ++r) run_repeat(r);
  } else {
    for (int first = 0; first < plan.repeats; first += threads) {
      std::vector<std::future<void>> batch;
      for (int r = first; r < std::min(plan.repeats, first + threads); ++r) {
        batch.push_back(std::async(std::launch::async, run_repeat, r));
      }
      std::exception_ptr failure;
      for (auto& f : batch) {
        try {
          f.get();
        } catch (...) {
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
    }
  }

  const double R = static_cast<double>(plan.repeats);
  for (std::size_t row = 0; row < n_rows; ++row) {
    BenchmarkRow best{labels[row], -1.0, 0.0, 0};
    for (std::size_t s = 0; s < n_sweep; ++s) {
      double mean = 0.0;
      for (const auto& rep : report.accuracies[s]) mean += rep[row];
      mean /= R;
      double var = 0.0;
      for (const auto& rep : report.accuracies[s]) var += (rep[row] - mean) * (rep[row] - mean);
      if (mean > best.mean_acc) {
        best.mean_acc = mean;
        best.std_acc = std::sqrt(var / R);
        best.best_d = report.d_sweep[s];
      }
    }
    report.rows.push_back(best);
  }
  return report;
}

}  // namespace mvcl
