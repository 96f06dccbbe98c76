#include "heads.hpp"

#include <algorithm>
#include <cmath>

namespace mvcl::detail {

Normalized normalize_columns(const Matrix& a) {
  Normalized out{Matrix(a.rows(), a.cols()), Vector(a.cols())};
  for (Index c = 0; c < a.cols(); ++c) {
    const double norm = a.col(c).norm();
    out.raw_norm(c) = norm;
    out.unit.col(c) = a.col(c) / std::max(norm, kNormFloor);
  }
  return out;
}

Matrix normalize_columns_backward(const Normalized& n, const Matrix& d_unit) {
  Matrix out(d_unit.rows(), d_unit.cols());
  for (Index c = 0; c < d_unit.cols(); ++c) {
    const double norm = n.raw_norm(c);
    if (norm > kNormFloor) {
      const auto u = n.unit.col(c);
      out.col(c) = (d_unit.col(c) - u * u.dot(d_unit.col(c))) / norm;
    } else {
      out.col(c) = d_unit.col(c) / kNormFloor;
    }
  }
  return out;
}

namespace {

double log_sum_exp(const double* begin, Index count, Index stride, double max_value) {
  double s = 0.0;
  for (Index k = 0; k < count; ++k) s += std::exp(begin[k * stride] - max_value);
  return max_value + std::log(s);
}

}  // namespace

double infonce_rows(const Matrix& logits, Index blocks, Matrix* d_logits) {
  const Index r = logits.rows();
  if (d_logits) d_logits->setZero(logits.rows(), logits.cols());
  double total = 0.0;
  // Work on the transpose so each anchor's logits are contiguous.
  const Matrix t = logits.transpose();
  for (Index i = 0; i < r; ++i) {
    const double* row = t.col(i).data();
    const Index width = t.rows();
    double max_all = row[0];
    for (Index k = 1; k < width; ++k) max_all = std::max(max_all, row[k]);
    double max_pos = row[i];
    for (Index b = 1; b < blocks; ++b) max_pos = std::max(max_pos, row[b * r + i]);
    const double lse_all = log_sum_exp(row, width, 1, max_all);
    const double lse_pos = log_sum_exp(row + i, blocks, r, max_pos);
    total += lse_all - lse_pos;
    if (d_logits) {
      for (Index k = 0; k < width; ++k) (*d_logits)(i, k) = std::exp(row[k] - lse_all);
      for (Index b = 0; b < blocks; ++b) (*d_logits)(i, b * r + i) -= std::exp(row[b * r + i] - lse_pos);
    }
  }
  return total;
}

double sample_head(const std::vector<Matrix>& Y, double sigma, SamplePairing pairing,
                   double weight, std::vector<Matrix>* dY) {
  const Index V = static_cast<Index>(Y.size());
  const Index n = Y.front().cols();
  std::vector<Normalized> unit;
  for (const auto& y : Y) unit.push_back(normalize_columns(y));
  std::vector<Matrix> d_unit;
  if (dY) d_unit.assign(Y.size(), Matrix::Zero(Y.front().rows(), n));

  const double scale = weight / static_cast<double>(n);
  double loss = 0.0;
  for (Index m = 0; m < V; ++m) {
    const Matrix& a = unit[m].unit;
    if (pairing == SamplePairing::Pooled) {
      Matrix logits(n, (V - 1) * n);
      Index b = 0;
      for (Index v = 0; v < V; ++v) {
        if (v == m) continue;
        logits.middleCols(b * n, n) = a.transpose() * unit[v].unit / sigma;
        ++b;
      }
      Matrix g;
      loss += infonce_rows(logits, V - 1, dY ? &g : nullptr) / static_cast<double>(n);
      if (dY) {
        g *= scale / sigma;
        b = 0;
        for (Index v = 0; v < V; ++v) {
          if (v == m) continue;
          const auto gb = g.middleCols(b * n, n);
          d_unit[m] += unit[v].unit * gb.transpose();
          d_unit[v] += a * gb;
          ++b;
        }
      }
    } else {
      for (Index v = 0; v < V; ++v) {
        if (v == m) continue;
        const Matrix logits = a.transpose() * unit[v].unit / sigma;
        Matrix g;
        loss += infonce_rows(logits, 1, dY ? &g : nullptr) / static_cast<double>(n);
        if (dY) {
          g *= scale / sigma;
          d_unit[m] += unit[v].unit * g.transpose();
          d_unit[v] += a * g;
        }
      }
    }
  }
  if (dY) {
    for (Index m = 0; m < V; ++m) (*dY)[m] += normalize_columns_backward(unit[m], d_unit[m]);
  }
  return loss;
}

double feature_head(const std::vector<Matrix>& Y, double sigma, bool include_self_view,
                    double weight, std::vector<Matrix>* dY) {
  const Index V = static_cast<Index>(Y.size());
  const Index d = Y.front().rows();
  // Feature rows become columns of the transposed embedding (n x d).
  std::vector<Normalized> unit;
  for (const auto& y : Y) unit.push_back(normalize_columns(y.transpose()));
  std::vector<Matrix> d_unit;
  if (dY) d_unit.assign(Y.size(), Matrix::Zero(Y.front().cols(), d));

  const double scale = weight / static_cast<double>(d);
  double loss = 0.0;
  for (Index m = 0; m < V; ++m) {
    for (Index v = 0; v < V; ++v) {
      if (v == m && !include_self_view) continue;
      const Matrix logits = unit[m].unit.transpose() * unit[v].unit / sigma;
      Matrix g;
      loss += infonce_rows(logits, 1, dY ? &g : nullptr) / static_cast<double>(d);
      if (dY) {
        g *= scale / sigma;
        d_unit[m] += unit[v].unit * g.transpose();
        d_unit[v] += unit[m].unit * g;
      }
    }
  }
  if (dY) {
    for (Index m = 0; m < V; ++m) {
      (*dY)[m] += normalize_columns_backward(unit[m], d_unit[m]).transpose();
    }
  }
  return loss;
}

double recovery_head(const std::vector<Matrix>& Y, const std::vector<Matrix>& X,
                     const std::vector<Matrix>& F, double sigma, double weight,
                     std::vector<Matrix>* dY, std::vector<Matrix>* dF) {
  const Index V = static_cast<Index>(Y.size());
  const Index n = Y.front().cols();
  const double scale = weight / static_cast<double>(n);
  const bool want_grad = dY || dF;
  double loss = 0.0;
  for (Index m = 0; m < V; ++m) {
    const Normalized xm = normalize_columns(X[m]);
    for (Index v = 0; v < V; ++v) {
      if (v == m) continue;
      const Normalized z = normalize_columns(F[m].transpose() * Y[v]);  // D_m x n
      const Matrix logits = xm.unit.transpose() * z.unit / sigma;
      Matrix g;
      loss += infonce_rows(logits, 1, want_grad ? &g : nullptr) / static_cast<double>(n);
      if (want_grad) {
        g *= scale / sigma;
        const Matrix dz = normalize_columns_backward(z, xm.unit * g);
        if (dF) (*dF)[m] += Y[v] * dz.transpose();
        if (dY) (*dY)[v] += F[m] * dz;
      }
    }
  }
  return loss;
}

}  // namespace mvcl::detail
