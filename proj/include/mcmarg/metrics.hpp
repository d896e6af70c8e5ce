#pragma once

#include "common.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcmarg {

//! Counts n_ij of items with the i-th distinct truth label and the j-th
//! distinct predicted label (both sorted ascending).
struct ContingencyTable
{
  std::vector<Label> row_labels;
  std::vector<Label> col_labels;
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t total = 0;
};

inline ContingencyTable contingency(const LabelVector& truth, const LabelVector& pred)
{
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("contingency: label vectors differ in length (" +
                                std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) + ")");
  }
  if (truth.empty()) {
    throw std::invalid_argument("contingency: empty label vectors");
  }
  auto index_of = [](const LabelVector& v, std::vector<Label>& distinct) {
    distinct = v;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::map<Label, std::size_t> pos;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      pos.emplace(distinct[i], i);
    }
    return pos;
  };

  ContingencyTable t;
  const auto rows = index_of(truth, t.row_labels);
  const auto cols = index_of(pred, t.col_labels);
  t.counts.assign(t.row_labels.size(), std::vector<std::int64_t>(t.col_labels.size(), 0));
  t.row_sums.assign(t.row_labels.size(), 0);
  t.col_sums.assign(t.col_labels.size(), 0);
  for (std::size_t p = 0; p < truth.size(); ++p) {
    const std::size_t i = rows.at(truth[p]);
    const std::size_t j = cols.at(pred[p]);
    ++t.counts[i][j];
    ++t.row_sums[i];
    ++t.col_sums[j];
  }
  t.total = static_cast<std::int64_t>(truth.size());
  return t;
}

namespace detail {

using Wide = __int128;

inline Wide pairs(std::int64_t n) { return static_cast<Wide>(n) * (n - 1) / 2; }

} // namespace detail

//! Adjusted Rand Index.
//!
//! With I = sum C(n_ij, 2), A = sum C(a_i, 2), B = sum C(b_j, 2), N = C(n, 2):
//!   ARI = (I - A B / N) / ((A + B) / 2 - A B / N)
//!       = 2 (I N - A B) / ((A + B) N - 2 A B),
//! evaluated in 128-bit integers with a single floating division at the end.
//! A zero denominator (both sides all singletons or all one cluster) gives
//! 1.0 when the partitions coincide and 0.0 otherwise.
inline double ari(const LabelVector& truth, const LabelVector& pred)
{
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("ari: label vectors differ in length (" + std::to_string(truth.size()) +
                                " vs " + std::to_string(pred.size()) + ")");
  }
  if (truth.size() < 2) {
    throw std::invalid_argument("ari needs at least 2 items");
  }
  const ContingencyTable t = contingency(truth, pred);
  detail::Wide index = 0;
  for (const auto& row : t.counts) {
    for (std::int64_t c : row) {
      index += detail::pairs(c);
    }
  }
  detail::Wide a = 0;
  for (std::int64_t s : t.row_sums) {
    a += detail::pairs(s);
  }
  detail::Wide b = 0;
  for (std::int64_t s : t.col_sums) {
    b += detail::pairs(s);
  }
  const detail::Wide n_pairs = detail::pairs(t.total);
  const detail::Wide num = 2 * (index * n_pairs - a * b);
  const detail::Wide den = (a + b) * n_pairs - 2 * a * b;
  if (den == 0) {
    // Identical set partitions put every pair together or apart on both sides.
    return (index == a && index == b) ? 1.0 : 0.0;
  }
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

} // namespace mcmarg
