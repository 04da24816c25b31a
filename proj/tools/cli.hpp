#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "demix/rng.hpp"

namespace demix::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kBadInput = 2, kDiverged = 3, kAssertionFailed = 4 };

/// Raised for malformed inputs the library does not catch itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::vector<RngSeed> seeds;
  std::vector<std::string> artifacts;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Each registers a subcommand; the callback stores its exit code in `*code`.
void add_generate(CLI::App& app, Manifest& manifest, int& code);
void add_demix(CLI::App& app, Manifest& manifest, int& code);
void add_mnist_demo(CLI::App& app, Manifest& manifest, int& code);
void add_render(CLI::App& app, Manifest& manifest, int& code);
void add_verify(CLI::App& app, Manifest& manifest, int& code);
void add_phase(CLI::App& app, Manifest& manifest, int& code);

/// Runs one command line; returns the process exit code.
int run(const std::vector<std::string>& argv);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace demix::cli
