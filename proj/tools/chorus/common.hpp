#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <memory>
#include <string>

#include "chorus/features/extractor.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::cli {

/// Resource pack location used when --data-dir is not given.
std::filesystem::path default_data_dir();

/// Options shared by commands that need the text resources.
struct ResourceOptions {
  std::filesystem::path data_dir = default_data_dir();
  std::filesystem::path embeddings;

  void add_to(CLI::App& app);
  std::shared_ptr<const text::TextResources> load_text() const;
};

/// Blocks SIGINT and SIGTERM in the calling thread and every thread it starts afterwards.
void block_stop_signals();
/// Waits until SIGINT or SIGTERM arrives; requires block_stop_signals().
void wait_for_stop_signal();

void register_service_commands(CLI::App& app);
void register_data_commands(CLI::App& app);
void register_training_commands(CLI::App& app);

}  // namespace chorus::cli
