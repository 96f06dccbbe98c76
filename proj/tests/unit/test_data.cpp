#include <mvcl/data.hpp>
#include <mvcl/error.hpp>
#include <mvcl/eval.hpp>

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>

using namespace mvcl;
namespace fs = std::filesystem;

namespace {

constexpr double kSynthRawBaseline = 95.0;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("mvcl_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected mvcl::Error";
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(LoadViews, TransposesToFeaturesBySamples) {
  TempDir dir;
  write_text(dir.path() / "a.csv", "1,2,3\n4,5,6\n");
  write_text(dir.path() / "b.csv", "7,8\n9,10\n");
  write_text(dir.path() / "l.csv", "0\n1\n");
  const std::vector<fs::path> paths{dir.path() / "a.csv", dir.path() / "b.csv"};
  const auto ds = load_views(paths, dir.path() / "l.csv");
  EXPECT_EQ(ds.view_count(), 2);
  EXPECT_EQ(ds.samples(), 2);
  EXPECT_EQ(ds.dims(), (std::vector<Index>{3, 2}));
  EXPECT_EQ(ds.views[0](2, 1), 6.0);
  EXPECT_EQ(ds.views[1](0, 1), 9.0);
  EXPECT_EQ(*ds.labels, (Labels{0, 1}));
}

TEST(LoadViews, YaleShapedViews) {
  TempDir dir;
  std::mt19937_64 rng(1);
  const Matrix a = oracle::gaussian(rng, 165, 256), b = oracle::gaussian(rng, 165, 256);
  write_csv(dir.path() / "gs.csv", a);
  write_csv(dir.path() / "lbp.csv", b);
  const std::vector<fs::path> paths{dir.path() / "gs.csv", dir.path() / "lbp.csv"};
  const auto ds = load_views(paths);
  EXPECT_EQ(ds.samples(), 165);
  EXPECT_EQ(ds.dims(), (std::vector<Index>{256, 256}));
  // 17 significant digits round-trip exactly.
  EXPECT_EQ(ds.views[0], a.transpose());
}

TEST(LoadViews, MultipleFeaturesShapedViews) {
  TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<fs::path> paths;
  for (long w : {216L, 76L, 240L}) {
    paths.push_back(dir.path() / ("v" + std::to_string(w) + ".csv"));
    write_csv(paths.back(), oracle::gaussian(rng, 2000, w));
  }
  const auto ds = load_views(paths);
  EXPECT_EQ(ds.view_count(), 3);
  EXPECT_EQ(ds.samples(), 2000);
}

TEST(LoadViews, SingleViewRejected) {
  TempDir dir;
  write_text(dir.path() / "a.csv", "1,2\n3,4\n5,6\n");
  const std::vector<fs::path> paths{dir.path() / "a.csv"};
  EXPECT_EQ(kind_of([&] { load_views(paths); }), ErrorKind::ViewMismatch);
}

TEST(LoadViews, ErrorKinds) {
  TempDir dir;
  write_text(dir.path() / "a.csv", "1,2\n3,4\n");
  write_text(dir.path() / "b.csv", "1\n2\n3\n");
  write_text(dir.path() / "bad.csv", "1,x\n3,4\n");
  write_text(dir.path() / "empty.csv", "");
  auto load = [&](const char* x, const char* y) {
    const std::vector<fs::path> paths{dir.path() / x, dir.path() / y};
    load_views(paths);
  };
  EXPECT_EQ(kind_of([&] { load("a.csv", "b.csv"); }), ErrorKind::ViewMismatch);
  EXPECT_EQ(kind_of([&] { load("a.csv", "bad.csv"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { load("a.csv", "empty.csv"); }), ErrorKind::EmptyInput);
  EXPECT_EQ(kind_of([&] { load("a.csv", "missing.csv"); }), ErrorKind::IoError);
}

TEST(LoadViews, HeaderLineSkipped) {
  TempDir dir;
  write_text(dir.path() / "a.csv", "f1,f2\n1,2\n");
  write_text(dir.path() / "b.csv", "g1\n3\n");
  const std::vector<fs::path> paths{dir.path() / "a.csv", dir.path() / "b.csv"};
  const auto ds = load_views(paths, std::nullopt, CsvOptions{true});
  EXPECT_EQ(ds.samples(), 1);
  EXPECT_EQ(ds.views[1](0, 0), 3.0);
}

TEST(Preprocess, CentersRows) {
  MultiViewDataset ds;
  Matrix x(2, 2);
  x << 1, 3, 2, 2;
  ds.views = {x, x};
  const auto [out, stats] = preprocess(ds, {});
  Matrix expected(2, 2);
  expected << -1, 1, 0, 0;
  EXPECT_EQ(out.views[0], expected);
  EXPECT_EQ(stats.means[0](0), 2.0);
}

TEST(Preprocess, IdempotentOnCenteredData) {
  std::mt19937_64 rng(3);
  MultiViewDataset ds;
  ds.views = {oracle::gaussian(rng, 4, 9), oracle::gaussian(rng, 3, 9)};
  const auto once = preprocess(ds, {}).first;
  const auto twice = preprocess(once, {}).first;
  for (std::size_t m = 0; m < 2; ++m) EXPECT_LE((once.views[m] - twice.views[m]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Preprocess, HeldOutDataReusesTrainingStatistics) {
  std::mt19937_64 rng(4);
  MultiViewDataset train, test;
  train.views = {oracle::gaussian(rng, 3, 6), oracle::gaussian(rng, 2, 6)};
  test.views = {oracle::gaussian(rng, 3, 4), oracle::gaussian(rng, 2, 4)};
  PreprocessOptions opts{true, true};
  const auto stats = preprocess(train, opts).second;
  const auto out = preprocess(test, opts, stats).first;
  // Spreadsheet-style: per feature, (x - mean_train) / std_train.
  for (std::size_t m = 0; m < 2; ++m) {
    for (Index r = 0; r < train.views[m].rows(); ++r) {
      double mean = 0.0;
      for (Index c = 0; c < 6; ++c) mean += train.views[m](r, c);
      mean /= 6.0;
      double var = 0.0;
      for (Index c = 0; c < 6; ++c) var += (train.views[m](r, c) - mean) * (train.views[m](r, c) - mean);
      const double sd = std::sqrt(var / 6.0);
      double out_mean = 0.0;
      for (Index c = 0; c < 4; ++c) {
        EXPECT_NEAR(out.views[m](r, c), (test.views[m](r, c) - mean) / sd, 1e-12);
        out_mean += out.views[m](r, c) / 4.0;
      }
      EXPECT_GT(std::abs(out_mean), 1e-6);
    }
  }
}

TEST(Preprocess, StatsMismatch) {
  MultiViewDataset a, b;
  a.views = {Matrix::Ones(3, 2), Matrix::Ones(2, 2)};
  b.views = {Matrix::Ones(4, 2), Matrix::Ones(2, 2)};
  const auto stats = preprocess(a, {}).second;
  EXPECT_EQ(kind_of([&] { preprocess(b, {}, stats); }), ErrorKind::StatsMismatch);
}

TEST(PadStack, BlockLayout) {
  MultiViewDataset ds;
  std::mt19937_64 rng(5);
  ds.views = {oracle::gaussian(rng, 2, 4), oracle::gaussian(rng, 3, 4)};
  const auto st = pad_stack(ds);
  EXPECT_EQ(st.total_dim(), 5);
  EXPECT_EQ(st.block_offsets, (std::vector<Index>{0, 2}));
  EXPECT_EQ(st.padded[0].topRows(2), ds.views[0]);
  EXPECT_EQ(st.padded[0].bottomRows(3), Matrix::Zero(3, 4));
  EXPECT_EQ(st.padded[1].topRows(2), Matrix::Zero(2, 4));
  EXPECT_EQ(st.padded[1].bottomRows(3), ds.views[1]);
  for (std::size_t m = 0; m < 2; ++m)
    for (Index i = 0; i < 4; ++i) EXPECT_LE((st.padded[m].col(i).array() != 0.0).count(), ds.views[m].rows());
}

TEST(PadStack, StackedProductEqualsPerViewProduct) {
  std::mt19937_64 rng(6);
  MultiViewDataset ds;
  ds.views = {oracle::gaussian(rng, 4, 7), oracle::gaussian(rng, 3, 7), oracle::gaussian(rng, 5, 7)};
  const auto st = pad_stack(ds);
  const Matrix P = oracle::gaussian(rng, 12, 2);
  for (std::size_t m = 0; m < 3; ++m) {
    const Matrix block = P.middleRows(st.block_offsets[m], st.block_sizes[m]);
    // Loop products; the zero rows add exact zeros.
    for (Index k = 0; k < 2; ++k) {
      for (Index i = 0; i < 7; ++i) {
        double stacked = 0.0, direct = 0.0;
        for (Index r = 0; r < 12; ++r) stacked += P(r, k) * st.padded[m](r, i);
        for (Index r = 0; r < block.rows(); ++r) direct += block(r, k) * ds.views[m](r, i);
        EXPECT_EQ(stacked, direct);
      }
    }
    EXPECT_LE((P.transpose() * st.padded[m] - block.transpose() * ds.views[m]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Synth, DeterministicForSeed) {
  SynthSpec spec;
  spec.seed = 9;
  const auto a = synth_generate(spec), b = synth_generate(spec);
  for (std::size_t m = 0; m < a.views.size(); ++m) EXPECT_EQ(a.views[m], b.views[m]);
  EXPECT_EQ(*a.labels, *b.labels);
  spec.seed = 10;
  EXPECT_NE(synth_generate(spec).views[0], a.views[0]);
}

TEST(Synth, ZeroNoiseLimitCollapsesSharedBlock) {
  SynthSpec spec;
  spec.noise_std = 1e-14;
  const auto ds = synth_generate(spec);
  for (const auto& v : ds.views) {
    for (Index i = 0; i < ds.samples(); ++i) {
      const Index first = (i / spec.per_class) * spec.per_class;
      EXPECT_LE((v.col(i).head(spec.shared_dims) - v.col(first).head(spec.shared_dims)).cwiseAbs().maxCoeff(),
                1e-12);
    }
  }
  // Shared signal is identical across views; specific signal is not.
  EXPECT_LE((ds.views[0].topRows(4) - ds.views[1].topRows(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((ds.views[0].middleRows(4, 4) - ds.views[1].middleRows(4, 4)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Synth, SharedJitterIsCommonToAllViews) {
  SynthSpec spec;
  spec.noise_std = 1e-14;
  spec.shared_jitter = 0.5;
  const auto ds = synth_generate(spec);
  EXPECT_LE((ds.views[0].topRows(4) - ds.views[1].topRows(4)).cwiseAbs().maxCoeff(), 1e-12);
  // Samples of one class no longer coincide on the shared block.
  EXPECT_GT((ds.views[0].col(0).head(4) - ds.views[0].col(1).head(4)).norm(), 1e-3);
  spec.shared_jitter = -1.0;
  EXPECT_EQ(kind_of([&] { synth_generate(spec); }), ErrorKind::InvalidSpec);
}

TEST(Synth, RawConcatenationBeatsChance) {
  SynthSpec spec;
  spec.classes = 4;
  spec.per_class = 15;
  spec.dims = {20, 20};
  spec.noise_std = 2.5;
  spec.seed = 3;
  const auto ds = synth_generate(spec);
  const auto idx = split_indices(ds, SplitPlan{5, 1, 0}, 0);
  const auto train = select_samples(ds, idx.train), test = select_samples(ds, idx.test);
  auto concat = [](const MultiViewDataset& d) {
    Matrix c(d.views[0].rows() + d.views[1].rows(), d.samples());
    c << d.views[0], d.views[1];
    return c;
  };
  const double acc = accuracy_percent(knn_classify(concat(train), *train.labels, concat(test)), *test.labels);
  // Recorded regression baseline for this seed.
  EXPECT_DOUBLE_EQ(acc, kSynthRawBaseline);
  EXPECT_GT(acc, 100.0 / 4.0);
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec spec;
  spec.shared_dims = 20;
  spec.specific_dims = 20;
  EXPECT_EQ(kind_of([&] { synth_generate(spec); }), ErrorKind::InvalidSpec);
  spec = {};
  spec.noise_std = 0.0;
  EXPECT_EQ(kind_of([&] { synth_generate(spec); }), ErrorKind::InvalidSpec);
}

TEST(Split, YaleShapedCounts) {
  MultiViewDataset ds;
  ds.views = {Matrix::Zero(3, 165), Matrix::Zero(2, 165)};
  Labels l;
  for (int c = 0; c < 15; ++c)
    for (int k = 0; k < 11; ++k) l.push_back(c);
  ds.labels = l;
  const auto [train, test] = split(ds, SplitPlan{4, 5, 1}, 2);
  EXPECT_EQ(train.samples(), 60);
  EXPECT_EQ(test.samples(), 105);
}

TEST(Split, MaximalMLeavesOnePerClass) {
  MultiViewDataset ds;
  ds.views = {Matrix::Zero(2, 6), Matrix::Zero(2, 6)};
  ds.labels = Labels{0, 1, 0, 1, 0, 1};
  const auto [train, test] = split(ds, SplitPlan{2, 1, 0}, 0);
  EXPECT_EQ(test.samples(), 2);
  EXPECT_EQ(class_ids(*test.labels), (std::vector<int>{0, 1}));
}

TEST(Split, IsAPartitionWithMPerClass) {
  SynthSpec spec;
  const auto ds = synth_generate(spec);
  for (int r = 0; r < 5; ++r) {
    const auto idx = split_indices(ds, SplitPlan{6, 5, 77}, r);
    std::set<Index> all(idx.train.begin(), idx.train.end());
    for (Index t : idx.test) EXPECT_TRUE(all.insert(t).second);
    EXPECT_EQ(static_cast<Index>(all.size()), ds.samples());
    std::map<int, int> per_class;
    for (Index t : idx.train) per_class[(*ds.labels)[static_cast<std::size_t>(t)]]++;
    for (auto [c, k] : per_class) EXPECT_EQ(k, 6);
  }
}

TEST(Split, RepeatsDrawDifferentTrainingSets) {
  SynthSpec spec;
  spec.classes = 3;
  spec.per_class = 10;
  const auto ds = synth_generate(spec);
  int differing = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = split_indices(ds, SplitPlan{4, 2, seed}, 0);
    const auto b = split_indices(ds, SplitPlan{4, 2, seed}, 1);
    const auto a2 = split_indices(ds, SplitPlan{4, 2, seed}, 0);
    EXPECT_EQ(a.train, a2.train);
    differing += a.train != b.train;
  }
  // Collision probability per trial is C(10,4)^-3, so all 100 must differ.
  EXPECT_EQ(differing, 100);
}

TEST(Split, Errors) {
  MultiViewDataset ds;
  ds.views = {Matrix::Zero(2, 4), Matrix::Zero(2, 4)};
  EXPECT_EQ(kind_of([&] { split(ds, SplitPlan{1, 1, 0}, 0); }), ErrorKind::LabelsRequired);
  ds.labels = Labels{0, 0, 1, 1};
  EXPECT_EQ(kind_of([&] { split(ds, SplitPlan{2, 1, 0}, 0); }), ErrorKind::SplitInfeasible);
}

TEST(Dataset, ExportRoundTrip) {
  TempDir dir;
  SynthSpec spec;
  spec.classes = 2;
  spec.per_class = 3;
  spec.dims = {5, 6, 7};
  spec.shared_dims = 2;
  spec.specific_dims = 1;
  spec.redundant_copies = 1;
  const auto ds = synth_generate(spec);
  export_dataset(dir.path(), ds);
  const auto back = load_dataset_dir(dir.path());
  ASSERT_EQ(back.view_count(), 3);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(back.views[m], ds.views[m]);
  EXPECT_EQ(*back.labels, *ds.labels);
}
