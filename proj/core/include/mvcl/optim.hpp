#pragma once

// Adam and the alternating training loop: each outer iteration takes one Adam
// step on every recovery matrix F_m with P fixed, then one Adam step on the
// stacked projection P = [P_1; ...; P_V] with F fixed, and stops once the
// total loss changes by at most `tol` between iterations.

#include <mvcl/data.hpp>
#include <mvcl/loss.hpp>
#include <mvcl/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace mvcl {

struct AdamParams {
  double gamma = 1e-3;  // learning rate
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;  // throws InvalidSpec
};

struct AdamState {
  Matrix m;
  Matrix v;
  long t = 0;

  static AdamState zeros_like(const Matrix& param) {
    return {Matrix::Zero(param.rows(), param.cols()), Matrix::Zero(param.rows(), param.cols()), 0};
  }
};

// Bias-corrected Adam update of `param` in place. Throws DimError.
void adam_step(AdamState& state, const Matrix& grad, Matrix& param, const AdamParams& ap);

struct TrainConfig {
  long max_iters = 1000;
  double tol = 1e-3;
  std::uint64_t seed = 0;
  AdamParams adam;
  HyperParams hp;
  // Recorded in the report; the caller applies preprocessing before train().
  PreprocessOptions preprocess;

  void validate(std::span<const Index> dims) const;
};

struct TrainReport {
  std::vector<double> losses;  // losses[0] is the loss at initialization
  long iterations = 0;
  bool converged = false;
  PreprocessOptions preprocessing;
  double wall_ms = 0.0;
};

struct TrainResult {
  ProjectionSet P;
  RecoverySet F;
  TrainReport report;
};

// P_m: orthonormalized columns of a seeded Gaussian D_m x d matrix.
// F_m: seeded Gaussian d x D_m scaled by 1/sqrt(d). Throws DimError if d >= D_m.
std::pair<ProjectionSet, RecoverySet> init_params(std::span<const Index> dims, Index d,
                                                  std::uint64_t seed);

// Throws NumericDivergence if the loss or a parameter stops being finite.
TrainResult train(const MultiViewDataset& ds, const TrainConfig& cfg);

}  // namespace mvcl
