#pragma once

#include "gmm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace mcmarg {

struct SyntheticSpec
{
  std::size_t k = 1;
  std::size_t d = 2;
  std::size_t n = 100;
  double separation = 10.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (k < 1 || d < 1) {
      throw std::invalid_argument("synthetic data needs K >= 1 and d >= 1");
    }
    if (n < k) {
      throw std::invalid_argument("synthetic data needs n >= K (n=" + std::to_string(n) +
                                  ", K=" + std::to_string(k) + ")");
    }
    if (!(separation > 0.0) || !std::isfinite(separation)) {
      throw std::invalid_argument("separation must be positive");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("sigma must be positive");
    }
  }
};

//! Deterministic component centers, pairwise at least `separation` apart:
//! separation * e_k while K <= d, otherwise separation times the base-b digits
//! of k spread over the coordinates, with the smallest b such that b^d >= K.
inline Matrix synthetic_centers(std::size_t k, std::size_t d, double separation)
{
  Matrix centers = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  if (k <= d) {
    for (std::size_t c = 0; c < k; ++c) {
      centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = separation;
    }
    return centers;
  }
  std::size_t base = 2;
  while (std::pow(static_cast<double>(base), static_cast<double>(d)) < static_cast<double>(k)) {
    ++base;
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t rest = c;
    for (std::size_t j = 0; j < d && rest > 0; ++j, rest /= base) {
      centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
        separation * static_cast<double>(rest % base);
    }
  }
  return centers;
}

//! Equal-weight isotropic mixture around `synthetic_centers`, the points drawn
//! from it (floor(n / K) per component, the remainder going to the first
//! components), and the generating component of each point. Point order is a
//! seeded shuffle.
inline std::tuple<Dataset, LabelVector, GmmParams> gen_synthetic(const SyntheticSpec& spec)
{
  spec.validate();
  GmmParams truth = GmmParams::zeros(spec.k, spec.d);
  truth.means = synthetic_centers(spec.k, spec.d, spec.separation);
  truth.log_stds.setConstant(std::log(spec.sigma));

  LabelVector labels;
  labels.reserve(spec.n);
  for (std::size_t c = 0; c < spec.k; ++c) {
    const std::size_t count = spec.n / spec.k + (c < spec.n % spec.k ? 1 : 0);
    labels.insert(labels.end(), count, static_cast<Label>(c));
  }
  Engine rng = make_engine(spec.seed, "synthetic");
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> normal(0.0, spec.sigma);
  Matrix x(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      x(i, j) = truth.means(c, j) + normal(rng);
    }
  }
  return { Dataset(std::move(x)), std::move(labels), std::move(truth) };
}

} // namespace mcmarg
