#pragma once

// GMM model files: a UTF-8 JSON document
//
//   { "format": "mcmarg-gmm", "version": 1, "K": ..., "d": ...,
//     "logits": [K], "means": [[d] x K], "log_stds": [[d] x K] }
//
// Doubles are written in shortest round-trip form (at most 17 significant
// digits), so a saved model reloads bit-identically.

#include "gmm.hpp"
#include "io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace mcmarg {

inline constexpr int model_format_version = 1;

inline std::string model_to_json(const GmmParams& p)
{
  validate(p);
  nlohmann::json doc;
  doc["format"] = "mcmarg-gmm";
  doc["version"] = model_format_version;
  doc["K"] = p.components();
  doc["d"] = p.dim();
  doc["logits"] = std::vector<double>(p.logits.data(), p.logits.data() + p.logits.size());
  auto rows = [](const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      out.push_back(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
    }
    return out;
  };
  doc["means"] = rows(p.means);
  doc["log_stds"] = rows(p.log_stds);
  return doc.dump() + "\n";
}

inline GmmParams model_from_json(const std::string& text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "mcmarg-gmm") {
      throw IoError("model file has an unexpected format tag");
    }
    if (doc.at("version").get<int>() != model_format_version) {
      throw IoError("unsupported model version " + doc.at("version").dump());
    }
    const auto k = doc.at("K").get<std::size_t>();
    const auto d = doc.at("d").get<std::size_t>();
    GmmParams p = GmmParams::zeros(k, d);
    const auto logits = doc.at("logits").get<std::vector<double>>();
    if (logits.size() != k) {
      throw IoError("model logits do not match K");
    }
    for (std::size_t c = 0; c < k; ++c) {
      p.logits(static_cast<Eigen::Index>(c)) = logits[c];
    }
    auto fill = [&](const char* key, Matrix& m) {
      const auto rows = doc.at(key).get<std::vector<std::vector<double>>>();
      if (rows.size() != k) {
        throw IoError(std::string("model field '") + key + "' does not have K rows");
      }
      for (std::size_t r = 0; r < k; ++r) {
        if (rows[r].size() != d) {
          throw IoError(std::string("model field '") + key + "' row has wrong length");
        }
        for (std::size_t j = 0; j < d; ++j) {
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
        }
      }
    };
    fill("means", p.means);
    fill("log_stds", p.log_stds);
    validate(p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid model: ") + e.what());
  }
}

inline void save_model(const GmmParams& p, const std::filesystem::path& path)
{
  detail::write_file(path, model_to_json(p));
}

inline GmmParams load_model(const std::filesystem::path& path)
{
  return model_from_json(detail::read_file(path));
}

} // namespace mcmarg
