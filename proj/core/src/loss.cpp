#include <mvcl/error.hpp>
#include <mvcl/loss.hpp>

#include "heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvcl {

void HyperParams::validate(std::span<const Index> dims) const {
  if (d < 1) throw Error(ErrorKind::DimError, "subspace dimension d must be >= 1");
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (d >= dims[m]) {
      throw Error(ErrorKind::DimError, "d = " + std::to_string(d) + " must be below view " +
                                           std::to_string(m + 1) + " dimension " +
                                           std::to_string(dims[m]));
    }
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidSpec, "alpha and beta must be finite and >= 0");
  }
  for (double s : {sigma1, sigma2, sigma3}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorKind::InvalidSpec, "temperatures must be finite and > 0");
    }
  }
}

void check_projections(const ProjectionSet& P, const MultiViewDataset& ds) {
  if (P.mats.size() != ds.views.size()) {
    throw Error(ErrorKind::DimError, std::to_string(P.mats.size()) + " projections for " +
                                         std::to_string(ds.views.size()) + " views");
  }
  const Index d = P.dim();
  for (std::size_t m = 0; m < P.mats.size(); ++m) {
    if (P.mats[m].rows() != ds.views[m].rows() || P.mats[m].cols() != d) {
      throw Error(ErrorKind::DimError,
                  "projection " + std::to_string(m + 1) + " is " + std::to_string(P.mats[m].rows()) +
                      "x" + std::to_string(P.mats[m].cols()) + ", expected " +
                      std::to_string(ds.views[m].rows()) + "x" + std::to_string(d));
    }
  }
  if (d < 1) throw Error(ErrorKind::DimError, "projections have no columns");
}

void check_recoveries(const RecoverySet& F, const ProjectionSet& P, const MultiViewDataset& ds) {
  check_projections(P, ds);
  if (F.mats.size() != ds.views.size()) {
    throw Error(ErrorKind::DimError, std::to_string(F.mats.size()) + " recovery matrices for " +
                                         std::to_string(ds.views.size()) + " views");
  }
  for (std::size_t m = 0; m < F.mats.size(); ++m) {
    if (F.mats[m].rows() != P.dim() || F.mats[m].cols() != ds.views[m].rows()) {
      throw Error(ErrorKind::DimError,
                  "recovery " + std::to_string(m + 1) + " is " + std::to_string(F.mats[m].rows()) +
                      "x" + std::to_string(F.mats[m].cols()) + ", expected " +
                      std::to_string(P.dim()) + "x" + std::to_string(ds.views[m].rows()));
    }
  }
}

double cosine_sim(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                  double sigma) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::DimError, "cosine_sim on vectors of length " +
                                         std::to_string(u.size()) + " and " +
                                         std::to_string(v.size()));
  }
  const double nu = std::max(u.norm(), kNormFloor);
  const double nv = std::max(v.norm(), kNormFloor);
  return u.dot(v) / (nu * nv * sigma);
}

EmbeddingSet embed(const ProjectionSet& P, const MultiViewDataset& ds) {
  check_projections(P, ds);
  EmbeddingSet out;
  out.embs.reserve(P.mats.size());
  for (std::size_t m = 0; m < P.mats.size(); ++m) {
    out.embs.push_back(P.mats[m].transpose() * ds.views[m]);
  }
  return out;
}

double sample_level_loss(const ProjectionSet& P, const MultiViewDataset& ds, double sigma1,
                         SamplePairing pairing) {
  return detail::sample_head(embed(P, ds).embs, sigma1, pairing, 1.0, nullptr);
}

double feature_level_loss(const ProjectionSet& P, const MultiViewDataset& ds, double sigma3,
                          bool include_self_view) {
  return detail::feature_head(embed(P, ds).embs, sigma3, include_self_view, 1.0, nullptr);
}

double recovery_level_loss(const ProjectionSet& P, const RecoverySet& F,
                           const MultiViewDataset& ds, double sigma2) {
  check_recoveries(F, P, ds);
  return detail::recovery_head(embed(P, ds).embs, ds.views, F.mats, sigma2, 1.0, nullptr,
                               nullptr);
}

LossBreakdown loss_breakdown(const ProjectionSet& P, const RecoverySet& F,
                             const MultiViewDataset& ds, const HyperParams& hp) {
  check_recoveries(F, P, ds);
  const auto Y = embed(P, ds).embs;
  LossBreakdown out;
  out.sample = detail::sample_head(Y, hp.sigma1, hp.pairing, 1.0, nullptr);
  if (hp.alpha != 0.0) {
    out.feature = detail::feature_head(Y, hp.sigma3, hp.fea_include_self_view, 1.0, nullptr);
  }
  if (hp.beta != 0.0) {
    out.recovery = detail::recovery_head(Y, ds.views, F.mats, hp.sigma2, 1.0, nullptr, nullptr);
  }
  out.total = out.sample;
  if (hp.alpha != 0.0) out.total += hp.alpha * out.feature;
  if (hp.beta != 0.0) out.total += hp.beta * out.recovery;
  return out;
}

double total_loss(const ProjectionSet& P, const RecoverySet& F, const MultiViewDataset& ds,
                  const HyperParams& hp) {
  return loss_breakdown(P, F, ds, hp).total;
}

}  // namespace mvcl
