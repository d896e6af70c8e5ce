#pragma once

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mcmarg {

namespace detail {

//! Index `i` with cumulative weight first exceeding `target`, skipping zero weights.
inline std::size_t pick_by_weight(const std::vector<double>& w, double target)
{
  double acc = 0.0;
  std::size_t pick = w.size();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) {
      continue;
    }
    acc += w[i];
    pick = i;
    if (acc > target) {
      break;
    }
  }
  return pick;
}

} // namespace detail

//! Greedy k-means++ seeding. Returns `k` distinct row indices of `data`.
//!
//! Each new seed is the best of 2 + floor(ln k) candidates drawn with
//! probability proportional to the squared distance to the nearest seed so
//! far, "best" meaning the lowest resulting potential. When every remaining
//! point coincides with a seed, the next index is uniform among unchosen rows.
inline std::vector<std::size_t> kmeanspp_indices(const Dataset& data, std::size_t k, Engine& rng)
{
  const std::size_t n = data.size();
  if (k == 0 || k > n) {
    throw std::invalid_argument("k-means++ seeding needs 1 <= k <= n");
  }
  const Matrix& x = data.values();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::vector<char> taken(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<double> cand_d2(n);
  std::vector<double> best_d2(n);

  auto distances_to = [&](std::size_t idx, std::vector<double>& out) {
    const Vector sq = (x.rowwise() - x.row(static_cast<Eigen::Index>(idx))).rowwise().squaredNorm();
    double potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::min(d2[i], sq(static_cast<Eigen::Index>(i)));
      potential += out[i];
    }
    return potential;
  };
  auto take = [&](std::size_t idx, std::vector<double>& dist) {
    chosen.push_back(idx);
    taken[idx] = 1;
    d2.swap(dist);
    d2[idx] = 0.0;
  };

  const std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  distances_to(first, cand_d2);
  take(first, cand_d2);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) {
        total += d2[i];
      }
    }
    if (!(total > 0.0)) {
      const std::size_t remaining = n - chosen.size();
      std::size_t r = std::uniform_int_distribution<std::size_t>(0, remaining - 1)(rng);
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && r-- == 0) {
          pick = i;
          break;
        }
      }
      distances_to(pick, cand_d2);
      take(pick, cand_d2);
      continue;
    }
    std::size_t best = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t cand = detail::pick_by_weight(d2, unit(rng) * total);
      const double potential = distances_to(cand, cand_d2);
      if (potential < best_potential) {
        best_potential = potential;
        best = cand;
        best_d2.swap(cand_d2);
      }
    }
    take(best, best_d2);
  }
  return chosen;
}

//! The first `k` entries of a seeded uniform permutation of [0, n).
inline std::vector<std::size_t> random_indices(std::size_t n, std::size_t k, Engine& rng)
{
  if (k > n) {
    throw std::invalid_argument("cannot draw more indices than points");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

} // namespace mcmarg
