#pragma once

// File formats for point sets and label vectors.
//
// Binary vectors: "MCMV", u8 version (=1), u32 d, u64 n, then n*d float32
// values in row-major order. All integers and floats are little-endian.
// CSV vectors: one point per line, comma separated, no header.
// Labels: one non-negative base-10 integer per line, LF terminated.

#include "dataset.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace mcmarg {

enum class VectorFormat
{
  binary,
  csv
};

inline VectorFormat parse_vector_format(std::string_view name)
{
  if (name == "binary" || name == "bin") {
    return VectorFormat::binary;
  }
  if (name == "csv") {
    return VectorFormat::csv;
  }
  throw std::invalid_argument("unknown vector format: " + std::string(name));
}

//! Picks CSV for a ".csv" extension and binary otherwise.
inline VectorFormat guess_vector_format(const std::filesystem::path& path)
{
  return path.extension() == ".csv" ? VectorFormat::csv : VectorFormat::binary;
}

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::array<char, 4> vector_magic{ 'M', 'C', 'M', 'V' };
inline constexpr std::uint8_t vector_version = 1;
inline constexpr std::size_t vector_header_size = 4 + 1 + 4 + 8;

template <typename UInt>
void put_le(std::string& out, UInt v)
{
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename UInt>
UInt get_le(const char* p)
{
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open file for writing: " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view field, std::size_t line)
{
  field = trim(field);
  if (!field.empty() && field.front() == '+') {
    field.remove_prefix(1);
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw IoError("malformed number '" + std::string(field) + "' on line " +
                  std::to_string(line));
  }
  if (!std::isfinite(v)) {
    throw IoError("non-finite entry on line " + std::to_string(line));
  }
  return v;
}

inline void append_double(std::string& out, double v)
{
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

inline Dataset parse_binary(const std::string& bytes)
{
  if (bytes.size() < vector_header_size ||
      std::memcmp(bytes.data(), vector_magic.data(), vector_magic.size()) != 0) {
    throw IoError("malformed header: bad magic");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != vector_version) {
    throw IoError("malformed header: unsupported version " +
                  std::to_string(static_cast<unsigned>(static_cast<std::uint8_t>(bytes[4]))));
  }
  const auto d = get_le<std::uint32_t>(bytes.data() + 5);
  const auto n = get_le<std::uint64_t>(bytes.data() + 9);
  if (d == 0 || n == 0) {
    throw IoError("malformed header: n and d must be positive");
  }
  const std::size_t payload = bytes.size() - vector_header_size;
  if (n > payload / 4 / d || payload != n * d * 4) {
    throw IoError("payload length mismatch: header declares " + std::to_string(n) + "x" +
                  std::to_string(d) + " floats, file holds " + std::to_string(payload) +
                  " payload bytes");
  }
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const char* p = bytes.data() + vector_header_size;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j, p += 4) {
      const float f = std::bit_cast<float>(get_le<std::uint32_t>(p));
      if (!std::isfinite(f)) {
        throw IoError("non-finite entry at row " + std::to_string(i));
      }
      values(i, j) = static_cast<double>(f);
    }
  }
  return Dataset(std::move(values));
}

inline Dataset parse_csv(const std::string& text)
{
  std::vector<double> flat;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t line_no = 0;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto eol = rest.find('\n');
    std::string_view line = rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view() : rest.substr(eol + 1);
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      flat.push_back(parse_double(line.substr(0, comma), line_no));
      ++fields;
      if (comma == std::string_view::npos) {
        break;
      }
      line.remove_prefix(comma + 1);
    }
    if (d == 0) {
      d = fields;
    } else if (fields != d) {
      throw IoError("row " + std::to_string(line_no) + " has " + std::to_string(fields) +
                    " fields, expected " + std::to_string(d));
    }
    ++n;
  }
  if (n == 0) {
    throw IoError("CSV file contains no rows");
  }
  Matrix values = Eigen::Map<Matrix>(flat.data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  return Dataset(std::move(values));
}

} // namespace detail

inline Dataset load_vectors(const std::filesystem::path& path, VectorFormat format)
{
  const std::string bytes = detail::read_file(path);
  return format == VectorFormat::binary ? detail::parse_binary(bytes)
                                        : detail::parse_csv(bytes);
}

inline Dataset load_vectors(const std::filesystem::path& path)
{
  return load_vectors(path, guess_vector_format(path));
}

//! Binary mode narrows each value to float32; values already representable
//! as float32 round-trip bit-exactly.
inline void save_vectors(const Dataset& data, const std::filesystem::path& path,
                         VectorFormat format)
{
  const Matrix& x = data.values();
  std::string out;
  if (format == VectorFormat::binary) {
    out.reserve(detail::vector_header_size + static_cast<std::size_t>(x.size()) * 4);
    out.append(detail::vector_magic.data(), detail::vector_magic.size());
    out.push_back(static_cast<char>(detail::vector_version));
    detail::put_le(out, static_cast<std::uint32_t>(x.cols()));
    detail::put_le(out, static_cast<std::uint64_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto f = static_cast<float>(x(i, j));
        if (!std::isfinite(f)) {
          throw IoError("value at row " + std::to_string(i) + " overflows float32");
        }
        detail::put_le(out, std::bit_cast<std::uint32_t>(f));
      }
    }
  } else {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j > 0) {
          out.push_back(',');
        }
        detail::append_double(out, x(i, j));
      }
      out.push_back('\n');
    }
  }
  detail::write_file(path, out);
}

inline void save_vectors(const Dataset& data, const std::filesystem::path& path)
{
  save_vectors(data, path, guess_vector_format(path));
}

inline LabelVector parse_labels(std::string_view text)
{
  LabelVector labels;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) {
      if (!text.empty()) {
        throw IoError("empty label line " + std::to_string(line_no));
      }
      break;
    }
    Label v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size() || v < 0) {
      throw IoError("label line " + std::to_string(line_no) + " is not a non-negative integer: '" +
                    std::string(line) + "'");
    }
    labels.push_back(v);
  }
  if (labels.empty()) {
    throw IoError("label file is empty");
  }
  return labels;
}

inline LabelVector load_labels(const std::filesystem::path& path)
{
  return parse_labels(detail::read_file(path));
}

inline void save_labels(const LabelVector& labels, const std::filesystem::path& path)
{
  std::string out;
  out.reserve(labels.size() * 3);
  for (Label v : labels) {
    if (v < 0) {
      throw std::invalid_argument("labels must be non-negative");
    }
    out += std::to_string(v);
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

} // namespace mcmarg
