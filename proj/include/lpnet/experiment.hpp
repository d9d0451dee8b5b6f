#pragma once
// End-to-end runners behind the command-line tool.

#include <filesystem>
#include <optional>

#include "lpnet/config.hpp"
#include "lpnet/training.hpp"

namespace lpnet {

struct PreparedData {
  RepresentationSet train;
  RepresentationSet test;
};

PreparedData prepare_data(const DataConfig& config);

Network build_from_config(const ExperimentConfig& config);

struct TrainSummary {
  double accuracy = 0.0;
  double baseline_accuracy = 0.0;  // k-NN on the normalized inputs
  int iterations = 0;
  double elapsed_ms = 0.0;
  std::uint64_t config_hash = 0;
};

/// Trains, then writes weights.lpw, metrics.csv, metrics.jsonl and
/// summary.json into out_dir.
TrainSummary run_train(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// k-NN accuracy of an archived network on the configured split.
TrainSummary run_eval(const ExperimentConfig& config, const std::filesystem::path& archive);

/// Writes theorem1.csv and theorem1.json into out_dir.
Theorem1Report run_theorem1(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Accuracy of `net` under the test protocol: gNT training representations
/// against sNT test representations.
double evaluate_network(const Network& net, const PreparedData& data, const HyperParams& hyper);

}  // namespace lpnet
