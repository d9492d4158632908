#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "chorus/features/extractor.hpp"
#include "chorus/scoring/config.hpp"
#include "chorus/scoring/network.hpp"

namespace chorus::scoring {

/// Trained parameters with everything needed to rebuild and validate the scorer.
///
/// File layout: the 8 bytes "CHORUSCK", a little-endian u32 format version,
/// a u64 header length, a JSON header, a u64 parameter count, then the
/// parameters as little-endian IEEE-754 doubles.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  NetworkSpec spec;
  TrainConfig config;
  std::optional<features::FeatureManifest> manifest;  // set for the small architecture
  Eigen::VectorXd theta;
  nlohmann::json metadata = nlohmann::json::object();  // free-form (history summary, data set)

  void save(const std::filesystem::path& path) const;
  /// Throws ValidationError on a malformed or truncated file.
  static Checkpoint load(const std::filesystem::path& path);

  bool operator==(const Checkpoint& other) const;
};

}  // namespace chorus::scoring
