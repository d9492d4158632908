#pragma once

#include <filesystem>
#include <memory>

#include "chorus/responders/builtin.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::testing {

inline std::filesystem::path data_dir() { return CHORUS_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return CHORUS_FIXTURE_DIR; }

/// Shipped text resources with synthetic embeddings, loaded once per process.
inline std::shared_ptr<const text::TextResources> shipped_text() {
  static const auto res = text::TextResources::load(data_dir(), {});
  return res;
}

inline std::shared_ptr<const responders::ResponderPack> shipped_pack() {
  static const auto pack = responders::ResponderPack::load(data_dir(), shipped_text());
  return pack;
}

/// A fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("chorus_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace chorus::testing
