#pragma once
// Experiment configuration: INI text with sections [data], [network],
// [train], [levels] (defaults for every node), [level.N] (overrides for node
// N) and [theorem1]. Relative paths resolve against the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lpnet/core.hpp"
#include "lpnet/data.hpp"

namespace lpnet {

struct DataConfig {
  std::string source = "idx";  // idx | synthetic
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  int train_subset = 0;  // total samples kept, balanced; 0 keeps everything balanced
  int test_subset = 0;
  bool normalize = true;
  SyntheticSpec synthetic;
  int synthetic_test_per_class = 40;
};

struct GoalConfig {
  int level = 0;  // 0: no goal
  std::string kind = "dynamic";  // dynamic | none
  std::optional<double> discrimination;  // defaults to lambda_{l,0}
  std::optional<double> sparsity;        // defaults to lambda_{l,1}
  int sweeps = 3;
};

struct ExperimentConfig {
  DataConfig data;
  std::vector<Eigen::Index> dims;
  GoalConfig goal;
  HyperParams hyper;
  double theorem1_epsilon = 1e-3;
  std::string canonical;  // resolved key=value listing, input of the hash

  std::uint64_t hash() const;
};

/// Command-line overrides applied after parsing.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Mode> mode;
  std::optional<int> subset;
  std::optional<int> iterations;
};

/// Throws ConfigError with a diagnostic on malformed input or unknown keys.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// lambda_{l,1} = M_l / (2 l).
double default_sparsity(Eigen::Index dim, int level);

std::uint64_t fnv1a(const std::string& text);

}  // namespace lpnet
