#include <mvcl/error.hpp>
#include <mvcl/grad.hpp>
#include <mvcl/optim.hpp>

#include <chrono>
#include <cmath>
#include <random>
#include <string>

namespace mvcl {

void AdamParams::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidSpec, "Adam learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorKind::InvalidSpec, "Adam beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(ErrorKind::InvalidSpec, "Adam beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidSpec, "Adam epsilon must be > 0");
}

void adam_step(AdamState& state, const Matrix& grad, Matrix& param, const AdamParams& ap) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols() ||
      state.m.rows() != param.rows() || state.m.cols() != param.cols() ||
      state.v.rows() != param.rows() || state.v.cols() != param.cols()) {
    throw Error(ErrorKind::DimError, "Adam state, gradient and parameter shapes differ");
  }
  state.t += 1;
  state.m = ap.beta1 * state.m + (1.0 - ap.beta1) * grad;
  state.v = ap.beta2 * state.v + (1.0 - ap.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(ap.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(ap.beta2, static_cast<double>(state.t));
  param.array() -= ap.gamma * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + ap.epsilon);
}

void TrainConfig::validate(std::span<const Index> dims) const {
  if (max_iters < 1) throw Error(ErrorKind::InvalidSpec, "max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidSpec, "tol must be > 0");
  adam.validate();
  hp.validate(dims);
}

std::pair<ProjectionSet, RecoverySet> init_params(std::span<const Index> dims, Index d,
                                                  std::uint64_t seed) {
  if (d < 1) throw Error(ErrorKind::DimError, "d must be >= 1");
  for (std::size_t m = 0; m < dims.size(); ++m) {
    if (d >= dims[m]) {
      throw Error(ErrorKind::DimError, "d = " + std::to_string(d) + " must be below view " +
                                           std::to_string(m + 1) + " dimension " +
                                           std::to_string(dims[m]));
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) a(r, c) = gauss(rng);
    return a;
  };

  ProjectionSet P;
  RecoverySet F;
  for (Index D : dims) {
    const Matrix g = draw(D, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(D, d);
    P.mats.push_back(std::move(q));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index D : dims) F.mats.push_back(scale * draw(d, D));
  return {std::move(P), std::move(F)};
}

TrainResult train(const MultiViewDataset& ds, const TrainConfig& cfg) {
  ds.validate();
  const auto dims = ds.dims();
  cfg.validate(dims);
  const auto start = std::chrono::steady_clock::now();

  auto [P, F] = init_params(dims, cfg.hp.d, cfg.seed);
  const StackedViews layout = pad_stack(ds);
  Matrix stacked = stack_projections(P);

  std::vector<AdamState> f_states;
  for (const auto& f : F.mats) f_states.push_back(AdamState::zeros_like(f));
  AdamState p_state = AdamState::zeros_like(stacked);

  TrainReport report;
  report.preprocessing = cfg.preprocess;
  auto checked_loss = [&](long iteration) {
    const double loss = total_loss(P, F, ds, cfg.hp);
    if (!std::isfinite(loss)) throw NumericDivergence(iteration, "total loss is not finite");
    return loss;
  };
  report.losses.push_back(checked_loss(0));

  for (long t = 1; t <= cfg.max_iters; ++t) {
    if (cfg.hp.beta != 0.0) {
      const auto dF = grad_wrt_F(P, F, ds, cfg.hp);
      for (std::size_t m = 0; m < F.mats.size(); ++m) {
        adam_step(f_states[m], dF[m], F.mats[m], cfg.adam);
        if (!F.mats[m].allFinite()) throw NumericDivergence(t, "recovery matrix is not finite");
      }
    }
    const auto dP = grad_wrt_P(P, F, ds, cfg.hp);
    adam_step(p_state, stack_projections(ProjectionSet{dP}), stacked, cfg.adam);
    if (!stacked.allFinite()) throw NumericDivergence(t, "projection matrix is not finite");
    P = unstack_projections(stacked, layout);

    report.losses.push_back(checked_loss(t));
    report.iterations = t;
    if (std::abs(report.losses[t] - report.losses[t - 1]) <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {std::move(P), std::move(F), std::move(report)};
}

}  // namespace mvcl
