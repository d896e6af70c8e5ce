#pragma once

#include "common.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mcmarg {

//! An n x d matrix of finite points, one point per row.
class Dataset
{
public:
  Dataset() = default;

  explicit Dataset(Matrix values)
    : values_(std::move(values))
  {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw std::invalid_argument("dataset must have n >= 1 and d >= 1");
    }
    if (!values_.allFinite()) {
      throw std::invalid_argument("dataset contains a non-finite entry");
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const { return values_.size() == 0; }

  const Matrix& values() const { return values_; }
  auto row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)); }

  friend bool operator==(const Dataset& a, const Dataset& b)
  {
    return a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

private:
  Matrix values_;
};

//! Per-dimension affine map applied by `standardize`; x = z * scale + mean.
struct Standardization
{
  Vector mean;
  Vector scale;
};

//! Centers every dimension and divides by its population standard deviation.
//! Dimensions whose std is below 1e-12 are centered and left at scale 1.
inline std::pair<Dataset, Standardization> standardize(const Dataset& data)
{
  if (data.size() < 2) {
    throw std::invalid_argument("standardize needs at least 2 points");
  }
  const Matrix& x = data.values();
  const double n = static_cast<double>(x.rows());

  Standardization stats;
  stats.mean = x.colwise().sum().transpose() / n;
  Matrix centered = x.rowwise() - stats.mean.transpose();
  stats.scale = (centered.colwise().squaredNorm().transpose() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < stats.scale.size(); ++j) {
    if (!(stats.scale(j) >= 1e-12)) {
      stats.scale(j) = 1.0;
    }
  }
  centered.array().rowwise() /= stats.scale.transpose().array();
  return { Dataset(std::move(centered)), std::move(stats) };
}

inline void check_same_length(std::size_t a, std::size_t b, const char* what)
{
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

} // namespace mcmarg
