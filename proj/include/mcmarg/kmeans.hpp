#pragma once

#include "dataset.hpp"
#include "seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mcmarg {

struct KMeansModel
{
  Matrix centroids; // K x d
  double inertia = 0.0;

  std::size_t components() const { return static_cast<std::size_t>(centroids.rows()); }
};

struct KMeansOptions
{
  std::size_t max_iters = 300;
  //! Stop once no centroid moves more than tol * (1 + largest centroid norm).
  double tol = 1e-6;
  std::uint64_t seed = 0;
  //! Independent seedings; the run with the lowest final inertia is kept.
  std::size_t n_init = 10;
};

struct KMeansResult
{
  KMeansModel model;
  LabelVector labels;
  //! Inertia after every assignment step, starting with the seeded centroids.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

namespace detail {

//! Nearest centroid of every row (ties to the lowest index) and its squared distance.
inline void nearest_centroids(const Matrix& x, const Matrix& centroids, LabelVector& labels,
                              std::vector<double>& dist)
{
  labels.resize(static_cast<std::size_t>(x.rows()));
  dist.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double dd = (x.row(i) - centroids.row(c)).squaredNorm();
      if (dd < best) {
        best = dd;
        arg = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<Label>(arg);
    dist[static_cast<std::size_t>(i)] = best;
  }
}

inline double sum_in_order(const std::vector<double>& v)
{
  double acc = 0.0;
  for (double x : v) {
    acc += x;
  }
  return acc;
}

} // namespace detail

inline LabelVector kmeans_assign(const KMeansModel& model, const Dataset& queries)
{
  if (static_cast<std::size_t>(model.centroids.cols()) != queries.dim()) {
    throw std::invalid_argument("dimension mismatch: centroids have d=" +
                                std::to_string(model.centroids.cols()) + ", queries have d=" +
                                std::to_string(queries.dim()));
  }
  LabelVector labels;
  std::vector<double> dist;
  detail::nearest_centroids(queries.values(), model.centroids, labels, dist);
  return labels;
}

namespace detail {

inline KMeansResult lloyd(const Dataset& data, std::size_t k, const KMeansOptions& options, Engine& rng)
{
  const Matrix& x = data.values();
  const auto seeds = kmeanspp_indices(data, k, rng);

  KMeansResult out;
  Matrix& centroids = out.model.centroids;
  centroids.resize(static_cast<Eigen::Index>(k), x.cols());
  for (std::size_t c = 0; c < k; ++c) {
    centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(seeds[c]));
  }

  std::vector<double> dist;
  detail::nearest_centroids(x, centroids, out.labels, dist);
  out.inertia_history.push_back(detail::sum_in_order(dist));

  Matrix sums(centroids.rows(), centroids.cols());
  std::vector<std::size_t> sizes(k);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    sums.setZero();
    std::fill(sizes.begin(), sizes.end(), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto c = static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(i)]);
      sums.row(c) += x.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    Matrix updated = centroids;
    for (std::size_t c = 0; c < k; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (sizes[c] > 0) {
        updated.row(ci) = sums.row(ci) / static_cast<double>(sizes[c]);
        continue;
      }
      const auto far = static_cast<std::size_t>(
        std::max_element(dist.begin(), dist.end()) - dist.begin());
      updated.row(ci) = x.row(static_cast<Eigen::Index>(far));
      dist[far] = 0.0;
    }

    const double shift = (updated - centroids).rowwise().norm().maxCoeff();
    const double reference = 1.0 + updated.rowwise().norm().maxCoeff();
    centroids = std::move(updated);
    detail::nearest_centroids(x, centroids, out.labels, dist);
    out.inertia_history.push_back(detail::sum_in_order(dist));
    out.iterations = iter + 1;
    if (shift <= options.tol * reference) {
      break;
    }
  }
  out.model.inertia = out.inertia_history.back();
  return out;
}

} // namespace detail

//! Lloyd's algorithm from k-means++ seeds, best of `n_init` seedings. A
//! cluster that empties is moved to the point farthest from its centroid.
inline KMeansResult kmeans_fit(const Dataset& data, std::size_t k, const KMeansOptions& options = {})
{
  if (k < 1 || k > data.size()) {
    throw std::invalid_argument("kmeans needs 1 <= K <= n (K=" + std::to_string(k) +
                                ", n=" + std::to_string(data.size()) + ")");
  }
  if (options.n_init < 1) {
    throw std::invalid_argument("kmeans needs n_init >= 1");
  }
  Engine rng = make_engine(options.seed, "kmeans.seed");
  KMeansResult best = detail::lloyd(data, k, options, rng);
  for (std::size_t run = 1; run < options.n_init; ++run) {
    KMeansResult next = detail::lloyd(data, k, options, rng);
    if (next.model.inertia < best.model.inertia) {
      best = std::move(next);
    }
  }
  return best;
}

} // namespace mcmarg
