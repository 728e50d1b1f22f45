#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcsle/io.hpp"

namespace mcsle {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Command { Kernels, Identities, Winding, Partition, Sample, VerifyRestriction, Soup };
std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::Kernels;
  std::filesystem::path config_path;
  json config;  // raw document; command-specific fields are read lazily
  std::optional<DomainSpec> domain;
  double kappa = 4.0;
  std::int64_t n_samples = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir = "mcsle_out";
  json tolerances = json::object();
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> out_dir;
};

// Seed: --seed, then the config "seed", then MCSLE_SEED, then 0.
RunConfig load_run_config(Command command, const std::filesystem::path& config_path, const CliOverrides& cli);

// Writes the command outputs and manifest.json into config.out_dir; returns
// the output file names (manifest excluded).
std::vector<std::string> run(const RunConfig& config);

// 0 on success, 2 on a malformed config, 1 on any other failure. Errors are
// printed as JSON on stdout and, when possible, written to out_dir/error.json.
int cli_main(int argc, char** argv);

}  // namespace mcsle
