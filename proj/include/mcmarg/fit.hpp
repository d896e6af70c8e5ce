#pragma once

// Monte-Carlo marginalization fitting.
//
// The model is compared with the data only through 1-D marginals along random
// unit directions. For each direction u the data side is a Gaussian KDE of
// the projected batch and the model side is the closed-form projected mixture;
// both are discretized on the KDE's grid and compared with KL(q || p). The
// loss of a step is the mean KL over its directions and the parameters are
// updated by Adam on the exact gradient of that discretized loss.

#include "grid_density.hpp"
#include "io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcmarg {

struct FitConfig
{
  std::size_t steps = 3000;
  double lr = 1e-4;
  std::size_t units_per_step = 32;
  //! Points projected per step; 0 selects min(n, 4096).
  std::size_t batch = 0;
  std::size_t bins = 256;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  InitStrategy init = InitStrategy::kmeanspp;

  static constexpr std::size_t default_batch_cap = 4096;

  void validate() const
  {
    if (steps < 1) {
      throw std::invalid_argument("steps must be >= 1");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
      throw std::invalid_argument("learning rate must be positive");
    }
    if (units_per_step < 1) {
      throw std::invalid_argument("units_per_step must be >= 1");
    }
    if (bins < min_bins) {
      throw std::invalid_argument("bins must be >= " + std::to_string(min_bins));
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
      throw std::invalid_argument("invalid Adam moment parameters");
    }
  }

  std::size_t effective_batch(std::size_t n) const
  {
    const std::size_t cap = batch == 0 ? default_batch_cap : batch;
    return std::min(n, cap);
  }
};

struct FitTrace
{
  std::vector<double> loss;
  //! Milliseconds since the start of the fit, recorded after each step.
  std::vector<double> elapsed_ms;
  double wall_ms = 0.0;

  std::size_t size() const { return loss.size(); }
};

//! Writes `step,loss,elapsed_ms` with a header line.
inline void save_trace_csv(const FitTrace& trace, const std::filesystem::path& path)
{
  std::string out = "step,loss,elapsed_ms\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i + 1);
    out.push_back(',');
    detail::append_double(out, trace.loss[i]);
    std::snprintf(buf, sizeof buf, ",%.3f\n", trace.elapsed_ms[i]);
    out += buf;
  }
  detail::write_file(path, out);
}

//! A standard-normal vector scaled to unit length, uniform on the sphere.
inline Vector sample_unit_vector(std::size_t d, Engine& rng)
{
  if (d < 1) {
    throw std::invalid_argument("unit vectors need d >= 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(static_cast<Eigen::Index>(d));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u(i) = normal(rng);
    }
    norm = u.norm();
  } while (!(norm > 0.0));
  return u / norm;
}

//! d x count matrix whose columns are independent unit vectors.
inline Eigen::MatrixXd sample_unit_block(std::size_t d, std::size_t count, Engine& rng)
{
  Eigen::MatrixXd units(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(count));
  for (Eigen::Index c = 0; c < units.cols(); ++c) {
    units.col(c) = sample_unit_vector(d, rng);
  }
  return units;
}

inline Vector project(const Dataset& data, const Vector& u)
{
  if (static_cast<std::size_t>(u.size()) != data.dim()) {
    throw std::invalid_argument("dimension mismatch: direction has " + std::to_string(u.size()) +
                                " coordinates, dataset has " + std::to_string(data.dim()));
  }
  return data.values() * u;
}

//! Loss value and its gradient in GmmParams coordinates.
struct LossAndGrad
{
  double loss = 0.0;
  GmmParams grad;
};

namespace detail {

//! Per-direction contribution to the loss and to the gradient with respect to
//! the log-weights and the projected means and stds of every component.
struct DirectionTerms
{
  double loss = 0.0;
  Vector d_log_weight;
  Vector d_mean;
  Vector d_std;
};

inline DirectionTerms direction_terms(const GridDensity& target, const Marginal1D& model)
{
  const Grid& grid = target.grid;
  const Matrix terms = marginal_log_terms(model, grid);
  const auto k = terms.rows();
  const auto bins = terms.cols();

  // Log cell values, their softmax over cells, and the per-cell responsibilities.
  Vector log_cells(bins);
  for (Eigen::Index b = 0; b < bins; ++b) {
    log_cells(b) = log_sum_exp(terms.col(b));
  }
  const double scale = floor_scale(grid.bins);
  const Vector share = (log_cells.array() - log_sum_exp(log_cells)).exp().matrix();
  const Vector p = (share.array() * scale + mass_floor).matrix();
  const Vector& q = target.masses;

  DirectionTerms out;
  Vector d_share(bins);
  for (Eigen::Index b = 0; b < bins; ++b) {
    out.loss += q(b) * std::log(q(b) / p(b));
    d_share(b) = -scale * q(b) / p(b);
  }
  // Through the normalization over cells.
  const double centered = d_share.dot(share);
  const Vector d_log_cell = (share.array() * (d_share.array() - centered)).matrix();

  out.d_log_weight = Vector::Zero(k);
  out.d_mean = Vector::Zero(k);
  out.d_std = Vector::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double mean = model.means(c);
    const double std = model.stds(c);
    double acc_w = 0.0;
    double acc_m = 0.0;
    double acc_s = 0.0;
    for (Eigen::Index b = 0; b < bins; ++b) {
      const double g = d_log_cell(b) * std::exp(terms(c, b) - log_cells(b));
      const double z = (grid.center(static_cast<std::size_t>(b)) - mean) / std;
      acc_w += g;
      acc_m += g * z;
      acc_s += g * (z * z - 1.0);
    }
    out.d_log_weight(c) = acc_w;
    out.d_mean(c) = acc_m / std;
    out.d_std(c) = acc_s / std;
  }
  return out;
}

} // namespace detail

//! Mean over the columns of `units` of KL(KDE of batch . u || model marginal),
//! with the exact gradient. The KDE side is a constant target.
inline LossAndGrad loss_and_grad(const GmmParams& params, const Matrix& batch,
                                 const Eigen::MatrixXd& units, std::size_t bins)
{
  validate(params);
  const auto d = static_cast<Eigen::Index>(params.dim());
  if (batch.cols() != d || units.rows() != d) {
    throw std::invalid_argument("dimension mismatch between model, batch and directions");
  }
  if (units.cols() < 1) {
    throw std::invalid_argument("loss_and_grad needs at least one direction");
  }
  const auto k = static_cast<Eigen::Index>(params.components());
  const auto count = units.cols();

  const Eigen::MatrixXd projections = batch * units;
  const Matrix variances = (2.0 * params.log_stds.array()).exp().matrix();
  const Eigen::MatrixXd units_sq = units.cwiseAbs2();
  const Eigen::MatrixXd proj_means = params.means * units;
  const Eigen::MatrixXd proj_stds = (variances * units_sq).cwiseSqrt();
  const Vector w = weights(params);

  double loss = 0.0;
  Vector d_log_weight = Vector::Zero(k);
  Eigen::MatrixXd d_mean(k, count);
  Eigen::MatrixXd d_std_over_std(k, count);
  for (Eigen::Index u = 0; u < count; ++u) {
    const GridDensity target = kde_marginal(
      std::span<const double>(projections.col(u).data(), static_cast<std::size_t>(projections.rows())),
      bins);
    Marginal1D model{ w, proj_means.col(u), proj_stds.col(u) };
    const detail::DirectionTerms t = detail::direction_terms(target, model);
    loss += t.loss;
    d_log_weight += t.d_log_weight;
    d_mean.col(u) = t.d_mean;
    d_std_over_std.col(u) = t.d_std.cwiseQuotient(proj_stds.col(u));
  }
  const double inv = 1.0 / static_cast<double>(count);

  LossAndGrad out;
  out.loss = loss * inv;
  out.grad = GmmParams::zeros(params.components(), params.dim());
  d_log_weight *= inv;
  out.grad.logits = d_log_weight - w * d_log_weight.sum();
  out.grad.means = (d_mean * units.transpose()) * inv;
  out.grad.log_stds = variances.cwiseProduct(d_std_over_std * units_sq.transpose()) * inv;
  return out;
}

namespace detail {

//! Draws `m` distinct row indices by a partial Fisher-Yates pass over `pool`.
inline void draw_batch(std::vector<std::size_t>& pool, std::size_t m, Engine& rng)
{
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows)
{
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

} // namespace detail

//! Draws a batch of distinct rows with `rng` and evaluates the loss on it.
inline LossAndGrad loss_and_grad(const GmmParams& params, const Dataset& data,
                                 const Eigen::MatrixXd& units, const FitConfig& config, Engine& rng)
{
  const std::size_t m = config.effective_batch(data.size());
  if (m == data.size()) {
    return loss_and_grad(params, data.values(), units, config.bins);
  }
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), std::size_t{ 0 });
  detail::draw_batch(pool, m, rng);
  return loss_and_grad(params, detail::gather_rows(data.values(), std::span(pool).first(m)),
                       units, config.bins);
}

//! First and second moment estimates for Adam, shaped like GmmParams.
class AdamState
{
public:
  AdamState(const GmmParams& like, const FitConfig& config)
    : m_(GmmParams::zeros(like.components(), like.dim()))
    , v_(GmmParams::zeros(like.components(), like.dim()))
    , lr_(config.lr)
    , beta1_(config.beta1)
    , beta2_(config.beta2)
    , eps_(config.epsilon)
  {
  }

  void step(GmmParams& params, const GmmParams& grad)
  {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    update(params.logits, m_.logits, v_.logits, grad.logits, c1, c2);
    update(params.means, m_.means, v_.means, grad.means, c1, c2);
    update(params.log_stds, m_.log_stds, v_.log_stds, grad.log_stds, c1, c2);
  }

private:
  template <typename T>
  void update(T& theta, T& m, T& v, const T& g, double c1, double c2) const
  {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
    theta.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  GmmParams m_;
  GmmParams v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
};

struct FitResult
{
  GmmParams params;
  FitTrace trace;
};

//! Fits a K-component GMM from an explicit starting point.
inline FitResult fit_from(const Dataset& data, GmmParams start, const FitConfig& config)
{
  config.validate();
  validate(start);
  if (start.dim() != data.dim()) {
    throw std::invalid_argument("dimension mismatch between model and dataset");
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  Engine rng = make_engine(config.seed, "mcmarg.fit");
  const std::size_t m = config.effective_batch(data.size());
  std::vector<std::size_t> pool(data.size());
  std::iota(pool.begin(), pool.end(), std::size_t{ 0 });
  Matrix batch;

  FitResult out{ std::move(start), {} };
  clamp_stds(out.params);
  out.trace.loss.reserve(config.steps);
  out.trace.elapsed_ms.reserve(config.steps);
  AdamState adam(out.params, config);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const Eigen::MatrixXd units = sample_unit_block(data.dim(), config.units_per_step, rng);
    LossAndGrad lg;
    if (m == data.size()) {
      lg = loss_and_grad(out.params, data.values(), units, config.bins);
    } else {
      detail::draw_batch(pool, m, rng);
      batch = detail::gather_rows(data.values(), std::span(pool).first(m));
      lg = loss_and_grad(out.params, batch, units, config.bins);
    }
    adam.step(out.params, lg.grad);
    clamp_stds(out.params);
    out.trace.loss.push_back(lg.loss);
    out.trace.elapsed_ms.push_back(elapsed());
  }
  out.trace.wall_ms = elapsed();
  return out;
}

//! Initializes with `init_params` and runs `config.steps` Adam iterations.
//! Each iteration draws fresh directions and a fresh batch; deterministic per seed.
inline FitResult fit(const Dataset& data, std::size_t k, const FitConfig& config)
{
  config.validate();
  return fit_from(data, init_params(data, k, config.seed, config.init), config);
}

} // namespace mcmarg
