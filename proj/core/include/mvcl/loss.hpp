#pragma once

// Temperature-scaled cosine similarity and the three contrastive heads:
//
//   sample level    InfoNCE over subspace samples y_i^m = P_m^T x_i^m; the same
//                   sample in another view is the positive, other samples of
//                   other views are negatives.
//   feature level   InfoNCE over subspace feature rows Y_k^m (n-vectors); the same
//                   dimension k in view v is the positive, dimensions l != k the
//                   negatives.
//   recovery level  InfoNCE matching x_i^m against recovered vectors F_m^T y_j^v of
//                   every other view v; j = i is the positive.
//
// Expectations are means over the anchor index, view pairs are summed.
// The total objective is  sample + alpha * feature + beta * recovery.

#include <mvcl/data.hpp>
#include <mvcl/types.hpp>

#include <span>
#include <vector>

namespace mvcl {

// How positives are pooled in the sample-level head.
enum class SamplePairing {
  // One softmax per anchor (m, i) over all other views:
  //   -log( sum_{v!=m} e^{s(i,i)} / sum_{v!=m} sum_j e^{s(i,j)} )
  Pooled,
  // One softmax per (m, v, i) with a single positive.
  PerViewPair,
};

struct HyperParams {
  Index d = 10;
  double alpha = 1.0;
  double beta = 1.0;
  double sigma1 = 0.1;  // sample level
  double sigma2 = 0.1;  // recovery level
  double sigma3 = 0.1;  // feature level
  bool fea_include_self_view = true;
  SamplePairing pairing = SamplePairing::Pooled;

  // Throws DimError / InvalidSpec. `dims` are the per-view D_m.
  void validate(std::span<const Index> dims) const;
  bool is_cmc_ablation() const { return alpha == 0.0 && beta == 0.0; }
};

struct ProjectionSet {
  std::vector<Matrix> mats;  // D_m x d
  Index dim() const { return mats.empty() ? 0 : mats.front().cols(); }
};

struct RecoverySet {
  std::vector<Matrix> mats;  // d x D_m
};

struct EmbeddingSet {
  std::vector<Matrix> embs;  // d x n
};

struct LossBreakdown {
  double sample = 0.0;
  double feature = 0.0;
  double recovery = 0.0;
  double total = 0.0;
};

// u.v / (max(|u|, 1e-12) * max(|v|, 1e-12) * sigma). Throws DimError.
double cosine_sim(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                  double sigma);

// Y^m = P_m^T X^m. Throws DimError on shape mismatch.
EmbeddingSet embed(const ProjectionSet& P, const MultiViewDataset& ds);

double sample_level_loss(const ProjectionSet& P, const MultiViewDataset& ds, double sigma1,
                         SamplePairing pairing = SamplePairing::Pooled);

double feature_level_loss(const ProjectionSet& P, const MultiViewDataset& ds, double sigma3,
                          bool include_self_view = true);

double recovery_level_loss(const ProjectionSet& P, const RecoverySet& F,
                           const MultiViewDataset& ds, double sigma2);

// Heads with zero weight are not evaluated (reported as 0).
LossBreakdown loss_breakdown(const ProjectionSet& P, const RecoverySet& F,
                             const MultiViewDataset& ds, const HyperParams& hp);

double total_loss(const ProjectionSet& P, const RecoverySet& F, const MultiViewDataset& ds,
                  const HyperParams& hp);

// Shape checks shared by loss, grad and eval. Throw DimError.
void check_projections(const ProjectionSet& P, const MultiViewDataset& ds);
void check_recoveries(const RecoverySet& F, const ProjectionSet& P, const MultiViewDataset& ds);

}  // namespace mvcl
