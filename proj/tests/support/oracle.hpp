#pragma once

// Brute-force reference implementations used only by tests. Everything here is
// written with explicit scalar loops over (m, v, anchor, candidate) tuples and
// plain exp/log sums, independent of the library's matrix kernels.

#include <mvcl/data.hpp>
#include <mvcl/loss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double sim(const Vec& a, const Vec& b, double sigma) {
  const double na = std::max(std::sqrt(dot(a, a)), 1e-12);
  const double nb = std::max(std::sqrt(dot(b, b)), 1e-12);
  return dot(a, b) / (na * nb * sigma);
}

// y_i^m = P_m^T x_i^m, by loops.
inline Vec embed_sample(const mvcl::Matrix& P, const mvcl::Matrix& X, long i) {
  Vec y(static_cast<std::size_t>(P.cols()), 0.0);
  for (long k = 0; k < P.cols(); ++k)
    for (long r = 0; r < P.rows(); ++r) y[static_cast<std::size_t>(k)] += P(r, k) * X(r, i);
  return y;
}

inline Vec column(const mvcl::Matrix& X, long i) {
  Vec out(static_cast<std::size_t>(X.rows()));
  for (long r = 0; r < X.rows(); ++r) out[static_cast<std::size_t>(r)] = X(r, i);
  return out;
}

// z = F^T y, by loops.
inline Vec recover(const mvcl::Matrix& F, const Vec& y) {
  Vec z(static_cast<std::size_t>(F.cols()), 0.0);
  for (long c = 0; c < F.cols(); ++c)
    for (long k = 0; k < F.rows(); ++k) z[static_cast<std::size_t>(c)] += F(k, c) * y[static_cast<std::size_t>(k)];
  return z;
}

inline std::vector<std::vector<Vec>> all_embeddings(const mvcl::ProjectionSet& P,
                                                    const mvcl::MultiViewDataset& ds) {
  std::vector<std::vector<Vec>> Y(ds.views.size());
  for (std::size_t m = 0; m < ds.views.size(); ++m)
    for (long i = 0; i < ds.samples(); ++i) Y[m].push_back(embed_sample(P.mats[m], ds.views[m], i));
  return Y;
}

inline double sample_loss(const mvcl::ProjectionSet& P, const mvcl::MultiViewDataset& ds,
                          double sigma, bool pooled = true) {
  const auto Y = all_embeddings(P, ds);
  const std::size_t V = Y.size();
  const std::size_t n = Y.front().size();
  double total = 0.0;
  for (std::size_t m = 0; m < V; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pooled) {
        double pos = 0.0, neg = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
          if (v == m) continue;
          for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(sim(Y[m][i], Y[v][j], sigma));
            (j == i ? pos : neg) += e;
          }
        }
        total += -std::log(pos / (pos + neg)) / static_cast<double>(n);
      } else {
        for (std::size_t v = 0; v < V; ++v) {
          if (v == m) continue;
          double den = 0.0;
          for (std::size_t j = 0; j < n; ++j) den += std::exp(sim(Y[m][i], Y[v][j], sigma));
          total += -std::log(std::exp(sim(Y[m][i], Y[v][i], sigma)) / den) / static_cast<double>(n);
        }
      }
    }
  }
  return total;
}

inline double feature_loss(const mvcl::ProjectionSet& P, const mvcl::MultiViewDataset& ds,
                           double sigma, bool include_self_view = true) {
  const auto Y = all_embeddings(P, ds);
  const std::size_t V = Y.size();
  const std::size_t n = Y.front().size();
  const std::size_t d = Y.front().front().size();
  auto row = [&](std::size_t m, std::size_t k) {
    Vec r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = Y[m][i][k];
    return r;
  };
  double total = 0.0;
  for (std::size_t m = 0; m < V; ++m) {
    for (std::size_t v = 0; v < V; ++v) {
      if (v == m && !include_self_view) continue;
      for (std::size_t k = 0; k < d; ++k) {
        double den = 0.0;
        for (std::size_t l = 0; l < d; ++l) den += std::exp(sim(row(m, k), row(v, l), sigma));
        total += -std::log(std::exp(sim(row(m, k), row(v, k), sigma)) / den) / static_cast<double>(d);
      }
    }
  }
  return total;
}

inline double recovery_loss(const mvcl::ProjectionSet& P, const mvcl::RecoverySet& F,
                            const mvcl::MultiViewDataset& ds, double sigma) {
  const auto Y = all_embeddings(P, ds);
  const std::size_t V = Y.size();
  const std::size_t n = Y.front().size();
  double total = 0.0;
  for (std::size_t m = 0; m < V; ++m) {
    for (std::size_t v = 0; v < V; ++v) {
      if (v == m) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec x = column(ds.views[m], static_cast<long>(i));
        double den = 0.0;
        for (std::size_t j = 0; j < n; ++j) den += std::exp(sim(x, recover(F.mats[m], Y[v][j]), sigma));
        const double num = std::exp(sim(x, recover(F.mats[m], Y[v][i]), sigma));
        total += -std::log(num / den) / static_cast<double>(n);
      }
    }
  }
  return total;
}

// Squared Euclidean distances by loops; 1-NN with lowest-index ties.
inline std::vector<int> nearest_labels(const mvcl::Matrix& train, const std::vector<int>& labels,
                                       const mvcl::Matrix& test) {
  std::vector<int> out;
  for (long q = 0; q < test.cols(); ++q) {
    long best = -1;
    double best_d = 0.0;
    for (long t = 0; t < train.cols(); ++t) {
      double dist = 0.0;
      for (long r = 0; r < train.rows(); ++r) dist += (train(r, t) - test(r, q)) * (train(r, t) - test(r, q));
      if (best < 0 || dist < best_d) {
        best = t;
        best_d = dist;
      }
    }
    out.push_back(labels[static_cast<std::size_t>(best)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeded random instances.

struct Instance {
  mvcl::MultiViewDataset ds;
  mvcl::ProjectionSet P;
  mvcl::RecoverySet F;
};

inline mvcl::Matrix gaussian(std::mt19937_64& rng, long rows, long cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  mvcl::Matrix m(rows, cols);
  for (long c = 0; c < cols; ++c)
    for (long r = 0; r < rows; ++r) m(r, c) = g(rng);
  return m;
}

inline Instance random_instance(std::uint64_t seed, long n, const std::vector<long>& dims, long d) {
  std::mt19937_64 rng(seed);
  Instance inst;
  for (long D : dims) inst.ds.views.push_back(gaussian(rng, D, n));
  for (long D : dims) inst.P.mats.push_back(gaussian(rng, D, d));
  for (long D : dims) inst.F.mats.push_back(gaussian(rng, d, D));
  return inst;
}

}  // namespace oracle
