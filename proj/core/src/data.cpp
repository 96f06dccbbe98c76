#include <mvcl/data.hpp>
#include <mvcl/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>

namespace mvcl {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ViewMismatch: return "ViewMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::StatsMismatch: return "StatsMismatch";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::LabelsRequired: return "LabelsRequired";
    case ErrorKind::SplitInfeasible: return "SplitInfeasible";
    case ErrorKind::DimError: return "DimError";
    case ErrorKind::NumericError: return "NumericError";
    case ErrorKind::NumericDivergence: return "NumericDivergence";
    case ErrorKind::EmptyTrain: return "EmptyTrain";
    case ErrorKind::BenchmarkError: return "BenchmarkError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

// ---------------------------------------------------------------------------
// MultiViewDataset

std::vector<Index> MultiViewDataset::dims() const {
  std::vector<Index> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back(v.rows());
  return out;
}

void MultiViewDataset::validate() const {
  if (views.size() < 2) {
    throw Error(ErrorKind::ViewMismatch,
                "at least 2 views required, got " + std::to_string(views.size()));
  }
  const Index n = views.front().cols();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "dataset has no samples");
  for (std::size_t m = 0; m < views.size(); ++m) {
    if (views[m].cols() != n) {
      throw Error(ErrorKind::ViewMismatch, "view " + std::to_string(m + 1) + " has " +
                                               std::to_string(views[m].cols()) +
                                               " samples, expected " + std::to_string(n));
    }
    if (views[m].rows() == 0) {
      throw Error(ErrorKind::EmptyInput, "view " + std::to_string(m + 1) + " has no features");
    }
    if (!views[m].allFinite()) {
      throw Error(ErrorKind::ParseError,
                  "view " + std::to_string(m + 1) + " contains non-finite entries");
    }
  }
  if (labels) {
    if (static_cast<Index>(labels->size()) != n) {
      throw Error(ErrorKind::ViewMismatch, "labels have " + std::to_string(labels->size()) +
                                               " entries, expected " + std::to_string(n));
    }
    for (int c : *labels) {
      if (c < 0) throw Error(ErrorKind::ParseError, "negative class id " + std::to_string(c));
    }
  }
}

MultiViewDataset make_dataset(std::vector<Matrix> views, std::optional<Labels> labels) {
  MultiViewDataset ds{std::move(views), std::move(labels)};
  ds.validate();
  return ds;
}

MultiViewDataset select_samples(const MultiViewDataset& ds, std::span<const Index> columns) {
  MultiViewDataset out;
  out.views.reserve(ds.views.size());
  for (const auto& v : ds.views) {
    Matrix sub(v.rows(), static_cast<Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) sub.col(static_cast<Index>(k)) = v.col(columns[k]);
    out.views.push_back(std::move(sub));
  }
  if (ds.labels) {
    Labels l;
    l.reserve(columns.size());
    for (Index c : columns) l.push_back((*ds.labels)[static_cast<std::size_t>(c)]);
    out.labels = std::move(l);
  }
  return out;
}

std::vector<int> class_ids(const Labels& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view cell, const std::filesystem::path& path, std::size_t line) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) +
                                           ": non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

Matrix read_csv(const std::filesystem::path& path, CsvOptions opts) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool skipped_header = !opts.header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), path, lineno));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": expected " + std::to_string(rows.front().size()) +
                                             " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " has no data rows");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

Labels read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  Labels labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto cell = trim(line);
    if (cell.empty()) continue;
    int value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": label is not an integer: '" + std::string(cell) +
                                             "'");
    }
    labels.push_back(value);
  }
  if (labels.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " has no labels");
  return labels;
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
  auto out = open_out(path);
  for (int c : labels) out << c << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

MultiViewDataset load_views(std::span<const std::filesystem::path> paths,
                            const std::optional<std::filesystem::path>& labels_path,
                            CsvOptions opts) {
  if (paths.size() < 2) {
    throw Error(ErrorKind::ViewMismatch,
                "at least 2 views required, got " + std::to_string(paths.size()));
  }
  std::vector<Matrix> views;
  views.reserve(paths.size());
  for (const auto& p : paths) {
    Matrix rows = read_csv(p, opts);
    if (!views.empty() && rows.rows() != views.front().cols()) {
      throw Error(ErrorKind::ViewMismatch, p.string() + " has " + std::to_string(rows.rows()) +
                                               " rows, expected " +
                                               std::to_string(views.front().cols()));
    }
    views.push_back(rows.transpose());
  }
  std::optional<Labels> labels;
  if (labels_path) labels = read_labels(*labels_path);
  return make_dataset(std::move(views), std::move(labels));
}

void export_dataset(const std::filesystem::path& dir, const MultiViewDataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t m = 0; m < ds.views.size(); ++m) {
    write_csv(dir / ("view" + std::to_string(m + 1) + ".csv"), ds.views[m].transpose());
  }
  if (ds.labels) write_labels(dir / "labels.csv", *ds.labels);
}

MultiViewDataset load_dataset_dir(const std::filesystem::path& dir, CsvOptions opts) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::IoError, dir.string() + " is not a directory");
  }
  static const std::regex pattern(R"(view(\d+)\.csv)");
  std::map<int, std::filesystem::path> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, match, pattern)) found[std::stoi(match[1].str())] = entry.path();
  }
  std::vector<std::filesystem::path> paths;
  for (auto& [k, p] : found) paths.push_back(p);
  std::optional<std::filesystem::path> labels;
  if (std::filesystem::exists(dir / "labels.csv")) labels = dir / "labels.csv";
  return load_views(paths, labels, opts);
}

// ---------------------------------------------------------------------------
// Preprocessing

std::pair<MultiViewDataset, FeatureStats> preprocess(const MultiViewDataset& ds,
                                                     PreprocessOptions opts,
                                                     const std::optional<FeatureStats>& stats) {
  FeatureStats used;
  if (stats) {
    if (stats->means.size() != ds.views.size() || stats->stds.size() != ds.views.size()) {
      throw Error(ErrorKind::StatsMismatch, "stats cover " + std::to_string(stats->means.size()) +
                                                " views, dataset has " +
                                                std::to_string(ds.views.size()));
    }
    for (std::size_t m = 0; m < ds.views.size(); ++m) {
      if (stats->means[m].size() != ds.views[m].rows() ||
          stats->stds[m].size() != ds.views[m].rows()) {
        throw Error(ErrorKind::StatsMismatch, "view " + std::to_string(m + 1) +
                                                  " stats have dimension " +
                                                  std::to_string(stats->means[m].size()) +
                                                  ", view has " +
                                                  std::to_string(ds.views[m].rows()));
      }
    }
    used = *stats;
    used.options = opts;
  } else {
    used.options = opts;
    for (const auto& v : ds.views) {
      const double n = static_cast<double>(v.cols());
      Vector mean = v.rowwise().mean();
      Vector std_dev = ((v.colwise() - mean).array().square().rowwise().sum() / n).sqrt();
      used.means.push_back(std::move(mean));
      used.stds.push_back(std::move(std_dev));
    }
  }

  MultiViewDataset out = ds;
  for (std::size_t m = 0; m < out.views.size(); ++m) {
    if (opts.center) out.views[m].colwise() -= used.means[m];
    if (opts.unit_variance) {
      Vector scale = used.stds[m].cwiseMax(kStdFloor);
      out.views[m].array().colwise() /= scale.array();
    }
  }
  return {std::move(out), std::move(used)};
}

// ---------------------------------------------------------------------------
// Padded stacking

Index StackedViews::total_dim() const {
  Index d = 0;
  for (Index s : block_sizes) d += s;
  return d;
}

StackedViews pad_stack(const MultiViewDataset& ds) {
  ds.validate();
  StackedViews out;
  Index total = 0;
  for (const auto& v : ds.views) {
    out.block_offsets.push_back(total);
    out.block_sizes.push_back(v.rows());
    total += v.rows();
  }
  const Index n = ds.samples();
  for (std::size_t m = 0; m < ds.views.size(); ++m) {
    Matrix p = Matrix::Zero(total, n);
    p.middleRows(out.block_offsets[m], out.block_sizes[m]) = ds.views[m];
    out.padded.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidSpec, msg); };
  if (classes < 1) fail("classes must be >= 1");
  if (per_class < 1) fail("per_class must be >= 1");
  if (dims.size() < 2) fail("at least 2 views required");
  if (shared_dims < 0 || specific_dims < 0 || redundant_copies < 0) fail("counts must be >= 0");
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) fail("noise_std must be > 0");
  if (!(separation >= 0.0) || !std::isfinite(separation)) fail("separation must be >= 0");
  if (!(shared_jitter >= 0.0) || !std::isfinite(shared_jitter)) fail("shared_jitter must be >= 0");
  if (redundant_copies > 0 && shared_dims == 0) fail("redundant copies need shared_dims > 0");
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (dims[m] < 1) fail("view " + std::to_string(m + 1) + " needs at least one feature");
    if (shared_dims + specific_dims + redundant_copies > dims[m]) {
      fail("view " + std::to_string(m + 1) + ": shared + specific + redundant = " +
           std::to_string(shared_dims + specific_dims + redundant_copies) + " exceeds dim " +
           std::to_string(dims[m]));
    }
  }
}

MultiViewDataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    // Column-major fill; order fixed for reproducibility.
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = gauss(rng);
    return m;
  };

  const Index V = static_cast<Index>(spec.dims.size());
  const Index n = static_cast<Index>(spec.classes) * spec.per_class;
  const Index shared = spec.shared_dims;
  const Index specific = spec.specific_dims;
  const Index redundant = spec.redundant_copies;

  Labels labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i / spec.per_class);

  const Matrix shared_means = spec.separation * draw(shared, spec.classes);
  std::vector<Matrix> specific_means;
  for (Index m = 0; m < V; ++m) specific_means.push_back(spec.separation * draw(specific, spec.classes));

  // Latent shared signal per sample, observed by all views.
  Matrix latent(shared, n);
  {
    const Matrix jitter = spec.shared_jitter * draw(shared, n);
    for (Index i = 0; i < n; ++i) latent.col(i) = shared_means.col(labels[static_cast<std::size_t>(i)]) + jitter.col(i);
  }

  std::vector<Matrix> views;
  for (Index m = 0; m < V; ++m) {
    const Index D = spec.dims[static_cast<std::size_t>(m)];
    Matrix x = spec.noise_std * draw(D, n);
    for (Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      x.col(i).head(shared) += latent.col(i);
      x.col(i).segment(shared, specific) += specific_means[static_cast<std::size_t>(m)].col(c);
      for (Index r = 0; r < redundant; ++r) x(shared + specific + r, i) += latent(r % shared, i);
    }
    views.push_back(std::move(x));
  }
  return make_dataset(std::move(views), std::move(labels));
}

// ---------------------------------------------------------------------------
// Splitting

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SplitIndices split_indices(const MultiViewDataset& ds, const SplitPlan& plan, int repeat_index) {
  if (!ds.labels) throw Error(ErrorKind::LabelsRequired, "split needs class labels");
  if (plan.per_class < 1) throw Error(ErrorKind::InvalidSpec, "M must be >= 1");
  if (plan.repeats < 1) throw Error(ErrorKind::InvalidSpec, "repeats must be >= 1");
  if (repeat_index < 0 || repeat_index >= plan.repeats) {
    throw Error(ErrorKind::InvalidSpec, "repeat_index " + std::to_string(repeat_index) +
                                            " outside [0, " + std::to_string(plan.repeats) + ")");
  }

  std::map<int, std::vector<Index>> by_class;
  for (std::size_t i = 0; i < ds.labels->size(); ++i) {
    by_class[(*ds.labels)[i]].push_back(static_cast<Index>(i));
  }
  for (const auto& [c, members] : by_class) {
    if (static_cast<std::size_t>(plan.per_class) >= members.size()) {
      throw Error(ErrorKind::SplitInfeasible,
                  "class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " samples; M = " + std::to_string(plan.per_class) + " leaves no test sample");
    }
  }

  std::mt19937_64 rng(splitmix64(plan.seed ^ splitmix64(static_cast<std::uint64_t>(repeat_index))));
  SplitIndices out;
  for (auto& [c, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    out.train.insert(out.train.end(), members.begin(), members.begin() + plan.per_class);
    out.test.insert(out.test.end(), members.begin() + plan.per_class, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<MultiViewDataset, MultiViewDataset> split(const MultiViewDataset& ds,
                                                    const SplitPlan& plan, int repeat_index) {
  const auto idx = split_indices(ds, plan, repeat_index);
  return {select_samples(ds, idx.train), select_samples(ds, idx.test)};
}

}  // namespace mvcl
