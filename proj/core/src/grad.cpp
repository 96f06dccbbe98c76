#include <mvcl/error.hpp>
#include <mvcl/grad.hpp>

#include "heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvcl {

namespace {

// Accumulates dL/dY^m and dL/dF_m for the weighted objective.
double objective_wrt_embeddings(const std::vector<Matrix>& Y, const std::vector<Matrix>& X,
                                const std::vector<Matrix>& F, const HyperParams& hp,
                                std::vector<Matrix>* dY, std::vector<Matrix>* dF) {
  double total = detail::sample_head(Y, hp.sigma1, hp.pairing, 1.0, dY);
  if (hp.alpha != 0.0) {
    total += hp.alpha * detail::feature_head(Y, hp.sigma3, hp.fea_include_self_view, hp.alpha, dY);
  }
  if (hp.beta != 0.0) {
    total += hp.beta * detail::recovery_head(Y, X, F, hp.sigma2, hp.beta, dY, dF);
  }
  return total;
}

std::vector<Matrix> zeros_like(const std::vector<Matrix>& mats) {
  std::vector<Matrix> out;
  out.reserve(mats.size());
  for (const auto& m : mats) out.push_back(Matrix::Zero(m.rows(), m.cols()));
  return out;
}

void check_layout(const Matrix& stacked, const RecoverySet& F, const StackedViews& views) {
  if (stacked.rows() != views.total_dim()) {
    throw Error(ErrorKind::DimError, "stacked projection has " + std::to_string(stacked.rows()) +
                                         " rows, padded views have " +
                                         std::to_string(views.total_dim()));
  }
  if (F.mats.size() != views.padded.size()) {
    throw Error(ErrorKind::DimError, "recovery count does not match view count");
  }
  for (std::size_t m = 0; m < F.mats.size(); ++m) {
    if (F.mats[m].rows() != stacked.cols() || F.mats[m].cols() != views.block_sizes[m]) {
      throw Error(ErrorKind::DimError,
                  "recovery " + std::to_string(m + 1) + " does not match block layout");
    }
  }
}

}  // namespace

GradientSet gradients(const ProjectionSet& P, const RecoverySet& F, const MultiViewDataset& ds,
                      const HyperParams& hp) {
  check_recoveries(F, P, ds);
  const auto Y = embed(P, ds).embs;
  auto dY = zeros_like(Y);
  GradientSet out;
  out.dF = zeros_like(F.mats);
  objective_wrt_embeddings(Y, ds.views, F.mats, hp, &dY, &out.dF);
  out.dP.reserve(Y.size());
  for (std::size_t m = 0; m < Y.size(); ++m) out.dP.push_back(ds.views[m] * dY[m].transpose());
  return out;
}

std::vector<Matrix> grad_wrt_P(const ProjectionSet& P, const RecoverySet& F,
                               const MultiViewDataset& ds, const HyperParams& hp) {
  return gradients(P, F, ds, hp).dP;
}

std::vector<Matrix> grad_wrt_F(const ProjectionSet& P, const RecoverySet& F,
                               const MultiViewDataset& ds, const HyperParams& hp) {
  check_recoveries(F, P, ds);
  auto dF = zeros_like(F.mats);
  if (hp.beta == 0.0) return dF;
  const auto Y = embed(P, ds).embs;
  detail::recovery_head(Y, ds.views, F.mats, hp.sigma2, hp.beta, nullptr, &dF);
  return dF;
}

Matrix stack_projections(const ProjectionSet& P) {
  Index rows = 0;
  for (const auto& p : P.mats) rows += p.rows();
  Matrix out(rows, P.dim());
  Index offset = 0;
  for (const auto& p : P.mats) {
    out.middleRows(offset, p.rows()) = p;
    offset += p.rows();
  }
  return out;
}

ProjectionSet unstack_projections(const Matrix& stacked, const StackedViews& layout) {
  if (stacked.rows() != layout.total_dim()) {
    throw Error(ErrorKind::DimError, "stacked projection rows do not match block layout");
  }
  ProjectionSet out;
  for (std::size_t m = 0; m < layout.block_sizes.size(); ++m) {
    out.mats.push_back(stacked.middleRows(layout.block_offsets[m], layout.block_sizes[m]));
  }
  return out;
}

double total_loss_stacked(const Matrix& stacked, const RecoverySet& F, const StackedViews& views,
                          const HyperParams& hp) {
  check_layout(stacked, F, views);
  std::vector<Matrix> Y, X;
  for (std::size_t m = 0; m < views.padded.size(); ++m) {
    Y.push_back(stacked.transpose() * views.padded[m]);
    X.push_back(views.block(m));
  }
  return objective_wrt_embeddings(Y, X, F.mats, hp, nullptr, nullptr);
}

Matrix grad_wrt_P_stacked(const Matrix& stacked, const RecoverySet& F, const StackedViews& views,
                          const HyperParams& hp) {
  check_layout(stacked, F, views);
  std::vector<Matrix> Y, X;
  for (std::size_t m = 0; m < views.padded.size(); ++m) {
    Y.push_back(stacked.transpose() * views.padded[m]);
    X.push_back(views.block(m));
  }
  auto dY = zeros_like(Y);
  objective_wrt_embeddings(Y, X, F.mats, hp, &dY, nullptr);
  // dL/dP = sum_m X~^m (dL/dY^m)^T; only block m of X~^m is non-zero.
  Matrix out = Matrix::Zero(stacked.rows(), stacked.cols());
  for (std::size_t m = 0; m < views.padded.size(); ++m) out += views.padded[m] * dY[m].transpose();
  return out;
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& objective,
                        const Matrix& param, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::NumericError, "finite-difference step must be > 0");
  Matrix probe = param;
  Matrix out(param.rows(), param.cols());
  for (Index c = 0; c < param.cols(); ++c) {
    for (Index r = 0; r < param.rows(); ++r) {
      const double saved = probe(r, c);
      probe(r, c) = saved + h;
      const double up = objective(probe);
      probe(r, c) = saved - h;
      const double down = objective(probe);
      probe(r, c) = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw Error(ErrorKind::NumericError, "objective is not finite at entry (" +
                                                 std::to_string(r) + ", " + std::to_string(c) +
                                                 ")");
      }
      out(r, c) = (up - down) / (2.0 * h);
    }
  }
  return out;
}

double finite_diff_check(const std::function<double(const Matrix&)>& objective,
                         const Matrix& param, const Matrix& analytic, double h) {
  if (analytic.rows() != param.rows() || analytic.cols() != param.cols()) {
    throw Error(ErrorKind::DimError, "analytic gradient shape differs from parameter shape");
  }
  const Matrix numeric = numeric_gradient(objective, param, h);
  double worst = 0.0;
  for (Index c = 0; c < param.cols(); ++c) {
    for (Index r = 0; r < param.rows(); ++r) {
      const double a = analytic(r, c);
      const double b = numeric(r, c);
      const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  }
  return worst;
}

}  // namespace mvcl
