#pragma once

#include "gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcmarg {

enum class AssignMode
{
  knn_vote,
  logdensity_argmax
};

inline AssignMode parse_assign_mode(std::string_view name)
{
  if (name == "vote" || name == "knn-vote") {
    return AssignMode::knn_vote;
  }
  if (name == "argmax" || name == "logdensity-argmax") {
    return AssignMode::logdensity_argmax;
  }
  throw std::invalid_argument("unknown assignment mode: " + std::string(name));
}

struct AssignConfig
{
  std::size_t total_samples = 60000;
  std::size_t k_neighbors = 50;
  std::uint64_t seed = 0;
  AssignMode mode = AssignMode::knn_vote;

  void validate(std::size_t components) const
  {
    if (total_samples < components) {
      throw std::invalid_argument("total_samples must be >= K (" + std::to_string(components) + ")");
    }
    if (k_neighbors < 1 || k_neighbors > total_samples) {
      throw std::invalid_argument("k_neighbors must be in [1, total_samples]");
    }
  }
};

//! Points drawn from the fitted components, each tagged with its source.
struct ReferenceSampleSet
{
  Matrix points;
  LabelVector component_ids;
  std::size_t components = 0;

  std::size_t size() const { return component_ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

//! floor(total * w_k) per component, plus one extra sample each for the
//! components with the largest fractional remainders (ties to the lower
//! index) until the counts sum to `total`.
inline std::vector<std::size_t> allocate_counts(std::span<const double> weights, std::size_t total)
{
  const std::size_t k = weights.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t used = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double share = static_cast<double>(total) * weights[c];
    const double whole = std::floor(share);
    counts[c] = static_cast<std::size_t>(whole);
    remainder[c] = share - whole;
    used += counts[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; used < total; i = (i + 1) % k) {
    ++counts[order[i]];
    ++used;
  }
  // Rounding can only overshoot by a handful when the weights sum above one.
  std::size_t i = k;
  while (used > total) {
    i = (i == 0 ? k : i) - 1;
    if (counts[order[i]] > 0) {
      --counts[order[i]];
      --used;
    }
  }
  return counts;
}

//! Draws the reference pool component by component using `allocate_counts`.
inline ReferenceSampleSet build_reference_samples(const GmmParams& params, const AssignConfig& config)
{
  validate(params);
  config.validate(params.components());
  const Vector w = weights(params);
  const std::vector<std::size_t> counts =
    allocate_counts(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                    config.total_samples);

  Engine rng = make_engine(config.seed, "assign.pool");
  std::normal_distribution<double> normal(0.0, 1.0);
  ReferenceSampleSet refs;
  refs.components = params.components();
  refs.points.resize(static_cast<Eigen::Index>(config.total_samples), params.means.cols());
  refs.component_ids.reserve(config.total_samples);
  const Matrix stds = params.log_stds.array().exp().matrix();
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    for (std::size_t s = 0; s < counts[c]; ++s, ++row) {
      for (Eigen::Index j = 0; j < refs.points.cols(); ++j) {
        refs.points(row, j) = params.means(ci, j) + stds(ci, j) * normal(rng);
      }
      refs.component_ids.push_back(static_cast<Label>(c));
    }
  }
  return refs;
}

namespace detail {

inline constexpr Eigen::Index query_block = 128;
inline constexpr Eigen::Index reference_block = 1024;

//! Candidate neighbor ordered by (squared distance, reference index).
using Neighbor = std::pair<double, std::size_t>;

} // namespace detail

//! Indices of the `k` nearest references of every query, nearest first.
//!
//! Distances are screened with the |q|^2 + |r|^2 - 2 q.r expansion computed
//! blockwise by matrix products; any reference whose screened distance is
//! within the expansion's rounding bound of the current k-th best is rescored
//! with the direct sum of squared differences. The result is exactly the
//! brute-force k-NN with distance ties resolved toward the lower index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& queries,
                                                               const Matrix& refs, std::size_t k)
{
  if (refs.rows() == 0) {
    throw std::invalid_argument("reference set is empty");
  }
  if (queries.cols() != refs.cols()) {
    throw std::invalid_argument("dimension mismatch: queries have " + std::to_string(queries.cols()) +
                                " coordinates, references have " + std::to_string(refs.cols()));
  }
  if (k < 1 || k > static_cast<std::size_t>(refs.rows())) {
    throw std::invalid_argument("k must be in [1, number of references]");
  }
  const Vector ref_sq = refs.rowwise().squaredNorm();
  const double slack =
    4.0 * static_cast<double>(refs.cols() + 4) * std::numeric_limits<double>::epsilon();

  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(queries.rows()));
  Eigen::MatrixXd dots;
  for (Eigen::Index q0 = 0; q0 < queries.rows(); q0 += detail::query_block) {
    const Eigen::Index qn = std::min(detail::query_block, queries.rows() - q0);
    const auto qblock = queries.middleRows(q0, qn);
    const Vector q_sq = qblock.rowwise().squaredNorm();
    std::vector<std::priority_queue<detail::Neighbor>> heaps(static_cast<std::size_t>(qn));

    for (Eigen::Index r0 = 0; r0 < refs.rows(); r0 += detail::reference_block) {
      const Eigen::Index rn = std::min(detail::reference_block, refs.rows() - r0);
      dots.noalias() = qblock * refs.middleRows(r0, rn).transpose();
      for (Eigen::Index i = 0; i < qn; ++i) {
        auto& heap = heaps[static_cast<std::size_t>(i)];
        const auto query = queries.row(q0 + i);
        for (Eigen::Index j = 0; j < rn; ++j) {
          const Eigen::Index r = r0 + j;
          if (heap.size() == k) {
            const double screened = q_sq(i) + ref_sq(r) - 2.0 * dots(i, j);
            if (screened - slack * (q_sq(i) + ref_sq(r)) >= heap.top().first) {
              continue;
            }
          }
          const double exact = (query - refs.row(r)).squaredNorm();
          const detail::Neighbor cand{ exact, static_cast<std::size_t>(r) };
          if (heap.size() < k) {
            heap.push(cand);
          } else if (cand < heap.top()) {
            heap.pop();
            heap.push(cand);
          }
        }
      }
    }
    for (Eigen::Index i = 0; i < qn; ++i) {
      auto& heap = heaps[static_cast<std::size_t>(i)];
      std::vector<std::size_t> idx(heap.size());
      for (std::size_t s = idx.size(); s-- > 0;) {
        idx[s] = heap.top().second;
        heap.pop();
      }
      out[static_cast<std::size_t>(q0 + i)] = std::move(idx);
    }
  }
  return out;
}

//! Majority vote over the k nearest references; vote ties go to the lowest
//! component id.
inline LabelVector assign_knn(const Dataset& queries, const ReferenceSampleSet& refs,
                              std::size_t k_neighbors)
{
  if (refs.size() == 0) {
    throw std::invalid_argument("reference set is empty");
  }
  const auto neighbors = nearest_neighbors(queries.values(), refs.points, k_neighbors);
  const std::size_t components =
    std::max<std::size_t>(refs.components,
                          static_cast<std::size_t>(*std::max_element(refs.component_ids.begin(),
                                                                     refs.component_ids.end())) + 1);
  LabelVector labels(neighbors.size());
  std::vector<std::size_t> votes(components);
  for (std::size_t q = 0; q < neighbors.size(); ++q) {
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t r : neighbors[q]) {
      ++votes[static_cast<std::size_t>(refs.component_ids[r])];
    }
    labels[q] = static_cast<Label>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return labels;
}

//! argmax_k ln pi_k + ln N(x; mu_k, Sigma_k), computed in log space; ties to
//! the lowest index.
inline LabelVector assign_argmax_logdensity(const GmmParams& params, const Dataset& queries)
{
  validate(params);
  if (queries.dim() != params.dim()) {
    throw std::invalid_argument("dimension mismatch: model has d=" + std::to_string(params.dim()) +
                                ", queries have d=" + std::to_string(queries.dim()));
  }
  const DensityEvaluator eval(params);
  LabelVector labels(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Vector scores = eval.weighted_log_densities(queries.row(i));
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
      if (scores(c) > scores(best)) {
        best = c;
      }
    }
    labels[i] = static_cast<Label>(best);
  }
  return labels;
}

//! Labels queries with the configured mode.
inline LabelVector assign(const GmmParams& params, const Dataset& queries, const AssignConfig& config)
{
  validate(params);
  if (queries.dim() != params.dim()) {
    throw std::invalid_argument("dimension mismatch: model has d=" + std::to_string(params.dim()) +
                                ", queries have d=" + std::to_string(queries.dim()));
  }
  if (config.mode == AssignMode::logdensity_argmax) {
    return assign_argmax_logdensity(params, queries);
  }
  config.validate(params.components());
  return assign_knn(queries, build_reference_samples(params, config), config.k_neighbors);
}

} // namespace mcmarg
