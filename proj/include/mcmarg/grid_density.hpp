#pragma once

#include "gmm.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace mcmarg {

//! A uniform 1-D grid of `bins` cells spanning [lo, hi]. Densities are
//! sampled at cell centers.
struct Grid
{
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 0;

  double width() const { return (hi - lo) / static_cast<double>(bins); }
  double center(std::size_t b) const { return lo + (static_cast<double>(b) + 0.5) * width(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline constexpr std::size_t min_bins = 16;

//! A probability vector over the cells of a Grid. Every mass is at least
//! `mass_floor` and the masses sum to one.
struct GridDensity
{
  Grid grid;
  Vector masses;

  std::size_t bins() const { return grid.bins; }

  double mean() const
  {
    double acc = 0.0;
    for (std::size_t b = 0; b < bins(); ++b) {
      acc += masses(static_cast<Eigen::Index>(b)) * grid.center(b);
    }
    return acc;
  }

  double variance() const
  {
    const double mu = mean();
    double acc = 0.0;
    for (std::size_t b = 0; b < bins(); ++b) {
      const double t = grid.center(b) - mu;
      acc += masses(static_cast<Eigen::Index>(b)) * t * t;
    }
    return acc;
  }
};

//! Share of the total mass reserved for the floor: masses are
//! floor + (1 - bins * floor) * a for a probability vector a.
inline double floor_scale(std::size_t bins)
{
  return 1.0 - static_cast<double>(bins) * mass_floor;
}

//! Normalizes non-negative cell values with a positive sum and applies the
//! mass floor. Mixing in the floor (instead of clipping) keeps the map smooth.
inline Vector floor_and_normalize(const Vector& raw)
{
  const double total = raw.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::domain_error("cannot normalize a grid density with zero or non-finite mass");
  }
  const double scale = floor_scale(static_cast<std::size_t>(raw.size()));
  return ((raw.array() / total) * scale + mass_floor).matrix();
}

//! Same as floor_and_normalize, from log cell values.
inline Vector floor_and_normalize_log(const Vector& log_raw)
{
  const double scale = floor_scale(static_cast<std::size_t>(log_raw.size()));
  const double lse = log_sum_exp(log_raw);
  return ((log_raw.array() - lse).exp() * scale + mass_floor).matrix();
}

inline void check_grid(const Grid& g)
{
  if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || !(g.hi > g.lo)) {
    throw std::invalid_argument("grid bounds must be finite with lo < hi");
  }
  if (g.bins < min_bins) {
    throw std::invalid_argument("grid needs at least " + std::to_string(min_bins) + " bins");
  }
}

//! Silverman's rule, 0.9 * min(std, IQR / 1.34) * m^(-1/5), with the
//! sample standard deviation and linearly interpolated quartiles. When that is
//! zero the bandwidth falls back to 1e-3 * (max - min + 1e-9). Throws for
//! fewer than two points or all points equal.
inline double silverman_bandwidth(std::span<const double> x)
{
  const std::size_t m = x.size();
  if (m < 2) {
    throw std::domain_error("KDE needs at least 2 projections");
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    throw std::domain_error("degenerate KDE: all projections are identical");
  }

  double mean = 0.0;
  for (double v : x) {
    mean += v;
  }
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : x) {
    ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));

  std::vector<double> work(x.begin(), x.end());
  auto quantile = [&](double prob) {
    const double pos = prob * static_cast<double>(m - 1);
    const auto below = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(below), work.end());
    const double a = work[below];
    if (below + 1 >= m) {
      return a;
    }
    const double b = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(below) + 1, work.end());
    return a + (pos - static_cast<double>(below)) * (b - a);
  };
  const double q1 = quantile(0.25);
  const double q3 = quantile(0.75);

  const double spread = std::min(sd, (q3 - q1) / 1.34);
  double h = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
  if (!(h > 0.0)) {
    h = 1e-3 * (hi - lo + 1e-9);
  }
  return h;
}

namespace detail {

//! Kernel values below exp(-cut^2 / 2) ~ 2e-16 of the peak are dropped.
inline constexpr double kernel_cutoff = 8.5;

} // namespace detail

//! Gaussian-kernel density of the projections on [min - 3h, max + 3h].
//!
//! Each point's kernel is evaluated on the cells within 8.5 bandwidths by a
//! multiplicative recurrence anchored at the nearest cell, so the cost per
//! point is three exponentials plus two products per touched cell.
inline GridDensity kde_marginal(std::span<const double> projections, std::size_t bins)
{
  const double h = silverman_bandwidth(projections);
  const auto [lo_it, hi_it] = std::minmax_element(projections.begin(), projections.end());
  GridDensity out;
  out.grid = Grid{ *lo_it - 3.0 * h, *hi_it + 3.0 * h, bins };
  check_grid(out.grid);

  const double width = out.grid.width();
  const double delta = width / h;
  const double step_decay = std::exp(-delta * delta);
  const double first_center = out.grid.center(0);
  const auto last = static_cast<std::ptrdiff_t>(bins) - 1;
  const double reach = detail::kernel_cutoff * h;

  Vector raw = Vector::Zero(static_cast<Eigen::Index>(bins));
  double* cell = raw.data();
  for (double x : projections) {
    const auto start = std::clamp<std::ptrdiff_t>(
      static_cast<std::ptrdiff_t>(std::ceil((x - reach - first_center) / width)), 0, last);
    const auto stop = std::clamp<std::ptrdiff_t>(
      static_cast<std::ptrdiff_t>(std::floor((x + reach - first_center) / width)), 0, last);
    const auto anchor = std::clamp<std::ptrdiff_t>(
      static_cast<std::ptrdiff_t>(std::lround((x - first_center) / width)), start, stop);

    const double z = (out.grid.center(static_cast<std::size_t>(anchor)) - x) / h;
    const double peak = std::exp(-0.5 * z * z);
    cell[anchor] += peak;

    double v = peak;
    double ratio = std::exp(-z * delta - 0.5 * delta * delta);
    for (std::ptrdiff_t b = anchor + 1; b <= stop; ++b) {
      v *= ratio;
      ratio *= step_decay;
      cell[b] += v;
    }
    v = peak;
    ratio = std::exp(z * delta - 0.5 * delta * delta);
    for (std::ptrdiff_t b = anchor - 1; b >= start; --b) {
      v *= ratio;
      ratio *= step_decay;
      cell[b] += v;
    }
  }
  out.masses = floor_and_normalize(raw);
  return out;
}

//! ln of the mixture pdf at every cell center, one row per component:
//! entry (k, b) is ln w_k + ln N(center_b; mean_k, std_k^2).
inline Matrix marginal_log_terms(const Marginal1D& m, const Grid& grid)
{
  const auto k = static_cast<Eigen::Index>(m.components());
  const auto bins = static_cast<Eigen::Index>(grid.bins);
  Matrix out(k, bins);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double base = std::log(m.weights(c)) - std::log(m.stds(c)) - 0.5 * log_two_pi();
    for (Eigen::Index b = 0; b < bins; ++b) {
      const double z = (grid.center(static_cast<std::size_t>(b)) - m.means(c)) / m.stds(c);
      out(c, b) = base - 0.5 * z * z;
    }
  }
  return out;
}

//! Mixture pdf at the cell centers, normalized in log space and floored.
inline GridDensity eval_marginal_on_grid(const Marginal1D& m, const Grid& grid)
{
  check_grid(grid);
  const Matrix terms = marginal_log_terms(m, grid);
  Vector log_cells(terms.cols());
  for (Eigen::Index b = 0; b < terms.cols(); ++b) {
    log_cells(b) = log_sum_exp(terms.col(b));
  }
  return { grid, floor_and_normalize_log(log_cells) };
}

//! sum_b q_b ln(q_b / p_b) over a shared grid.
inline double kl_grid(const GridDensity& q, const GridDensity& p)
{
  if (!(q.grid == p.grid) || q.masses.size() != p.masses.size()) {
    throw std::invalid_argument("kl_grid: densities live on different grids");
  }
  double acc = 0.0;
  for (Eigen::Index b = 0; b < q.masses.size(); ++b) {
    acc += q.masses(b) * std::log(q.masses(b) / p.masses(b));
  }
  return acc;
}

} // namespace mcmarg
