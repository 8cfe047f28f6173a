#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selfrep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitMissingArtifact = 3;

const std::vector<std::string>& commands();

struct Options {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::optional<std::string> alphas;   // comma-separated list
  std::vector<std::string> sets;       // "key=value" config overrides
  std::optional<std::filesystem::path> input;  // feature CSV for `predict`
};

/// Runs one pipeline stage. Errors are reported on `err` and mapped to exit codes.
int run(const Options& opts, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and runs the command.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace selfrep::cli
