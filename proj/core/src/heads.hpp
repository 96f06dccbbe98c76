#pragma once

// Value-and-gradient kernels for the three contrastive heads, written against
// embeddings Y^m (d x n) so that the per-view and the padded/stacked
// parameterizations share one implementation.

#include <mvcl/loss.hpp>
#include <mvcl/types.hpp>

#include <vector>

namespace mvcl::detail {

struct Normalized {
  Matrix unit;      // columns scaled to unit length (or by 1/kNormFloor when tiny)
  Vector raw_norm;  // unfloored column norms
};

Normalized normalize_columns(const Matrix& a);

// Pulls a gradient w.r.t. the unit columns back to the raw columns. Columns whose
// norm is at the floor are treated as divided by a constant.
Matrix normalize_columns_backward(const Normalized& n, const Matrix& d_unit);

// Softmax cross-entropy over rows of `logits` (r x blocks*r). Row i's positives are
// the columns b*r + i. Returns sum_i [lse(row i) - lse(positives of row i)].
// When `d_logits` is given it receives the gradient of that sum.
double infonce_rows(const Matrix& logits, Index blocks, Matrix* d_logits);

// Each head returns its unweighted loss. When gradient outputs are given, the
// gradient of (weight * loss) is accumulated into them.
double sample_head(const std::vector<Matrix>& Y, double sigma, SamplePairing pairing,
                   double weight, std::vector<Matrix>* dY);

double feature_head(const std::vector<Matrix>& Y, double sigma, bool include_self_view,
                    double weight, std::vector<Matrix>* dY);

double recovery_head(const std::vector<Matrix>& Y, const std::vector<Matrix>& X,
                     const std::vector<Matrix>& F, double sigma, double weight,
                     std::vector<Matrix>* dY, std::vector<Matrix>* dF);

}  // namespace mvcl::detail
