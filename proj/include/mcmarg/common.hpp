#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mcmarg {

//! Row-major so that one point (or one component) is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Label = std::int64_t;
using LabelVector = std::vector<Label>;

//! Random engine used everywhere; fixed so that seeded runs are reproducible.
using Engine = std::mt19937_64;

//! Smallest admissible per-dimension standard deviation of a component.
inline constexpr double sigma_floor = 1e-6;

//! Smallest admissible probability mass of a grid bin.
inline constexpr double mass_floor = 1e-12;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace detail

//! Derives an independent sub-seed for the subsystem named `label`.
//! All randomness in the library flows from one user seed through here.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label)
{
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a(label));
}

inline Engine make_engine(std::uint64_t seed, std::string_view label)
{
  return Engine(derive_seed(seed, label));
}

} // namespace mcmarg
