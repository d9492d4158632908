#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <iostream>

#include "chorus/model/types.hpp"
#include "common.hpp"

namespace chorus::cli {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("CHORUS_DATA_DIR")) return env;
  return CHORUS_DEFAULT_DATA_DIR;
}

void ResourceOptions::add_to(CLI::App& app) {
  app.add_option("--data-dir", data_dir, "Resource pack directory")->check(CLI::ExistingDirectory)->capture_default_str();
  app.add_option("--embeddings", embeddings, "word2vec text file; synthetic vectors when omitted")
      ->check(CLI::ExistingFile);
}

std::shared_ptr<const text::TextResources> ResourceOptions::load_text() const {
  return text::TextResources::load(data_dir, embeddings);
}

void block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

void wait_for_stop_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

}  // namespace chorus::cli

int main(int argc, char** argv) {
  CLI::App app{"chorus: ensemble chatbot service, training and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  chorus::cli::register_service_commands(app);
  chorus::cli::register_data_commands(app);
  chorus::cli::register_training_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const chorus::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
