#pragma once

#include "dataset.hpp"
#include "seeding.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace mcmarg {

//! Diagonal-covariance Gaussian mixture in unconstrained coordinates.
//!
//! Mixing weights are softmax(logits); component k has mean `means.row(k)`
//! and per-dimension standard deviation exp(log_stds.row(k)).
struct GmmParams
{
  Vector logits;   // K
  Matrix means;    // K x d
  Matrix log_stds; // K x d

  std::size_t components() const { return static_cast<std::size_t>(logits.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }

  static GmmParams zeros(std::size_t k, std::size_t d)
  {
    const auto ki = static_cast<Eigen::Index>(k);
    const auto di = static_cast<Eigen::Index>(d);
    return { Vector::Zero(ki), Matrix::Zero(ki, di), Matrix::Zero(ki, di) };
  }

  friend bool operator==(const GmmParams& a, const GmmParams& b)
  {
    return a.logits.size() == b.logits.size() && a.means.rows() == b.means.rows() &&
           a.means.cols() == b.means.cols() && a.log_stds.rows() == b.log_stds.rows() &&
           a.log_stds.cols() == b.log_stds.cols() && a.logits == b.logits &&
           a.means == b.means && a.log_stds == b.log_stds;
  }
};

//! Throws if the shapes disagree or any entry is non-finite.
inline void validate(const GmmParams& p)
{
  if (p.logits.size() < 1 || p.means.cols() < 1) {
    throw std::invalid_argument("GMM needs K >= 1 and d >= 1");
  }
  if (p.means.rows() != p.logits.size() || p.log_stds.rows() != p.logits.size() ||
      p.log_stds.cols() != p.means.cols()) {
    throw std::invalid_argument("GMM parameter shapes disagree");
  }
  if (!p.logits.allFinite() || !p.means.allFinite() || !p.log_stds.allFinite()) {
    throw std::invalid_argument("GMM parameters contain a non-finite entry");
  }
}

inline double log_sigma_floor() { return std::log(sigma_floor); }

//! Raises every log-std to at least ln(sigma_floor).
inline void clamp_stds(GmmParams& p)
{
  p.log_stds = p.log_stds.cwiseMax(log_sigma_floor());
}

//! Numerically stable log(sum(exp(v))).
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v)
{
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((v.derived().array() - m).exp().sum());
}

//! Softmax of a vector, computed with the max subtracted.
inline Vector softmax(const Vector& logits)
{
  const double m = logits.maxCoeff();
  Vector w = (logits.array() - m).exp().matrix();
  return w / w.sum();
}

inline Vector weights(const GmmParams& p) { return softmax(p.logits); }

inline Vector log_weights(const GmmParams& p)
{
  return (p.logits.array() - log_sum_exp(p.logits)).matrix();
}

inline double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

//! Precomputed inverse stds and normalizers for repeated density queries.
class DensityEvaluator
{
public:
  explicit DensityEvaluator(const GmmParams& p)
    : means_(p.means)
    , inv_stds_((-p.log_stds.array()).exp().matrix())
    , log_weights_((p.logits.array() - log_sum_exp(p.logits)).matrix())
    , log_norm_(p.log_stds.rowwise().sum())
  {
    log_norm_ = (-log_norm_.array() - 0.5 * static_cast<double>(p.dim()) * log_two_pi()).matrix();
  }

  std::size_t components() const { return static_cast<std::size_t>(means_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(means_.cols()); }

  //! ln N(x; mu_k, diag(sigma_k^2)) for every component k.
  template <typename Derived>
  Vector component_log_densities(const Eigen::MatrixBase<Derived>& x) const
  {
    if (static_cast<std::size_t>(x.size()) != dim()) {
      throw std::invalid_argument("dimension mismatch: point has " + std::to_string(x.size()) +
                                  " coordinates, model has " + std::to_string(dim()));
    }
    Vector out(means_.rows());
    for (Eigen::Index c = 0; c < means_.rows(); ++c) {
      double q = 0.0;
      for (Eigen::Index j = 0; j < means_.cols(); ++j) {
        const double z = (x(j) - means_(c, j)) * inv_stds_(c, j);
        q += z * z;
      }
      out(c) = log_norm_(c) - 0.5 * q;
    }
    return out;
  }

  //! ln pi_k + ln N(x; mu_k, Sigma_k) for every component k.
  template <typename Derived>
  Vector weighted_log_densities(const Eigen::MatrixBase<Derived>& x) const
  {
    return log_weights_ + component_log_densities(x);
  }

  template <typename Derived>
  double log_density(const Eigen::MatrixBase<Derived>& x) const
  {
    return log_sum_exp(weighted_log_densities(x));
  }

private:
  Matrix means_;
  Matrix inv_stds_;
  Vector log_weights_;
  Vector log_norm_;
};

template <typename Derived>
Vector component_log_densities(const GmmParams& p, const Eigen::MatrixBase<Derived>& x)
{
  return DensityEvaluator(p).component_log_densities(x);
}

//! ln p(x) of the mixture via log-sum-exp; finite wherever the linear-space
//! normalizer (2*pi)^(-d/2) underflows.
template <typename Derived>
double log_density(const GmmParams& p, const Eigen::MatrixBase<Derived>& x)
{
  return DensityEvaluator(p).log_density(x);
}

//! Draws `n` points; returns them with the index of their source component.
inline std::pair<Dataset, LabelVector> sample(const GmmParams& p, std::size_t n, std::uint64_t seed)
{
  if (n < 1) {
    throw std::invalid_argument("sample needs n >= 1");
  }
  validate(p);
  Engine rng = make_engine(seed, "gmm.sample");
  const Vector w = weights(p);
  std::discrete_distribution<std::size_t> pick(w.data(), w.data() + w.size());
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto d = static_cast<Eigen::Index>(p.dim());
  Matrix x(static_cast<Eigen::Index>(n), d);
  LabelVector labels(n);
  const Matrix stds = p.log_stds.array().exp().matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = p.components() == 1 ? 0 : pick(rng);
    labels[i] = static_cast<Label>(c);
    const auto ii = static_cast<Eigen::Index>(i);
    const auto ci = static_cast<Eigen::Index>(c);
    for (Eigen::Index j = 0; j < d; ++j) {
      x(ii, j) = p.means(ci, j) + stds(ci, j) * normal(rng);
    }
  }
  return { Dataset(std::move(x)), std::move(labels) };
}

//! The exact 1-D mixture obtained by projecting a GMM onto a unit vector.
struct Marginal1D
{
  Vector weights;
  Vector means;
  Vector stds;

  std::size_t components() const { return static_cast<std::size_t>(weights.size()); }

  double pdf(double t) const
  {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      const double z = (t - means(k)) / stds(k);
      acc += weights(k) * std::exp(-0.5 * z * z) / (stds(k) * std::sqrt(2.0 * std::numbers::pi));
    }
    return acc;
  }

  double cdf(double t) const
  {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      acc += weights(k) * 0.5 * std::erfc(-(t - means(k)) / (stds(k) * std::numbers::sqrt2));
    }
    return acc;
  }
};

inline constexpr double unit_norm_tolerance = 1e-9;

inline void check_unit(const Vector& u, std::size_t d)
{
  if (static_cast<std::size_t>(u.size()) != d) {
    throw std::invalid_argument("dimension mismatch: unit vector has " + std::to_string(u.size()) +
                                " coordinates, expected " + std::to_string(d));
  }
  if (!(std::abs(u.norm() - 1.0) < unit_norm_tolerance)) {
    throw std::invalid_argument("projection direction is not a unit vector");
  }
}

//! Closed-form projection: means u.mu_k and stds sqrt(sum_i u_i^2 sigma_ki^2).
inline Marginal1D marginalize(const GmmParams& p, const Vector& u)
{
  check_unit(u, p.dim());
  Marginal1D m;
  m.weights = weights(p);
  m.means = p.means * u;
  const Matrix var = (2.0 * p.log_stds.array()).exp().matrix();
  m.stds = (var * u.cwiseAbs2()).cwiseSqrt();
  return m;
}

enum class InitStrategy
{
  random_points,
  kmeanspp
};

inline InitStrategy parse_init_strategy(std::string_view name)
{
  if (name == "random" || name == "random-points") {
    return InitStrategy::random_points;
  }
  if (name == "kmeans++" || name == "kmeans++-means") {
    return InitStrategy::kmeanspp;
  }
  throw std::invalid_argument("unknown init strategy: " + std::string(name));
}

//! Uniform weights, means at `k` distinct data points, and every component's
//! log-std set to the log of the global per-dimension population std.
inline GmmParams init_params(const Dataset& data, std::size_t k, std::uint64_t seed,
                             InitStrategy strategy = InitStrategy::kmeanspp)
{
  if (k < 1 || k > data.size()) {
    throw std::invalid_argument("init_params needs 1 <= K <= n (K=" + std::to_string(k) +
                                ", n=" + std::to_string(data.size()) + ")");
  }
  Engine rng = make_engine(seed, "gmm.init");
  const std::vector<std::size_t> idx = strategy == InitStrategy::kmeanspp
                                         ? kmeanspp_indices(data, k, rng)
                                         : random_indices(data.size(), k, rng);
  const Matrix& x = data.values();
  GmmParams p = GmmParams::zeros(k, data.dim());
  for (std::size_t c = 0; c < k; ++c) {
    p.means.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(idx[c]));
  }
  const double n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = x.colwise().sum() / n;
  const Eigen::RowVectorXd std =
    ((x.rowwise() - mean).colwise().squaredNorm() / n).cwiseSqrt().cwiseMax(sigma_floor);
  p.log_stds.rowwise() = std.array().log().matrix();
  return p;
}

} // namespace mcmarg
