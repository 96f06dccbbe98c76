#pragma once

// Analytic gradients of the combined contrastive objective and a central
// finite-difference checker used to certify them.
//
// Every head is a softmax cross-entropy over cosine similarities, so the
// gradients are assembled by reverse accumulation through three steps:
// logits -> unit vectors (dL/dlogit = softmax - positive softmax), unit
// vectors -> raw vectors ((I - u u^T) / |u|), raw vectors -> parameters
// (Y = P^T X, Z = F^T Y).
//
// For reference, the published closed forms for dL/dF_m and dL/dP are
// expanded quotient-rule expressions of the same quantities; they are not
// transcribed here because the printed versions invert the softmax fraction
// in the leading factor and drop the alpha/beta weights from the total.

#include <mvcl/data.hpp>
#include <mvcl/loss.hpp>
#include <mvcl/types.hpp>

#include <functional>
#include <vector>

namespace mvcl {

struct GradientSet {
  std::vector<Matrix> dP;  // D_m x d
  std::vector<Matrix> dF;  // d x D_m
};

// Both parameter blocks in one pass.
GradientSet gradients(const ProjectionSet& P, const RecoverySet& F, const MultiViewDataset& ds,
                      const HyperParams& hp);

// d(total)/dP_m for every view, alpha and beta included.
std::vector<Matrix> grad_wrt_P(const ProjectionSet& P, const RecoverySet& F,
                               const MultiViewDataset& ds, const HyperParams& hp);

// beta * d(recovery)/dF_m; all zeros when beta == 0.
std::vector<Matrix> grad_wrt_F(const ProjectionSet& P, const RecoverySet& F,
                               const MultiViewDataset& ds, const HyperParams& hp);

// P = [P_1; ...; P_V] (D x d) and back.
Matrix stack_projections(const ProjectionSet& P);
ProjectionSet unstack_projections(const Matrix& stacked, const StackedViews& layout);

// Objective and gradient evaluated through the padded views, Y^m = P^T X~^m.
double total_loss_stacked(const Matrix& stacked, const RecoverySet& F, const StackedViews& views,
                          const HyperParams& hp);
Matrix grad_wrt_P_stacked(const Matrix& stacked, const RecoverySet& F, const StackedViews& views,
                          const HyperParams& hp);

inline constexpr double kDefaultFdStep = 1e-5;

// Max over entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// with numeric = (f(x + h e) - f(x - h e)) / 2h. Throws NumericError when the
// objective is non-finite at a probe point, DimError on shape mismatch.
double finite_diff_check(const std::function<double(const Matrix&)>& objective,
                         const Matrix& param, const Matrix& analytic, double h = kDefaultFdStep);

// Central-difference gradient of `objective` at `param`.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& objective,
                        const Matrix& param, double h = kDefaultFdStep);

}  // namespace mvcl
