#include "lpnet/experiment.hpp"

#include <chrono>
#include <cstdio>

#include "lpnet/archive.hpp"
#include "lpnet/knn.hpp"
#include "lpnet/metrics.hpp"

namespace lpnet {

namespace {

RepresentationSet load_split(const std::filesystem::path& images, const std::filesystem::path& labels,
                             int subset, bool normalized) {
  LabeledDataset raw = load_idx(images, labels);
  if (normalized) raw = normalize(std::move(raw));
  int per_class = 0;
  if (subset > 0) {
    const int classes = raw.num_classes();
    if (subset % classes != 0)
      throw ConsistencyError("subset " + std::to_string(subset) + " is not a multiple of " +
                             std::to_string(classes) + " classes");
    per_class = subset / classes;
  }
  return balance(raw, per_class);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

PreparedData prepare_data(const DataConfig& config) {
  if (config.source == "synthetic") {
    auto [train, test] = synthetic_split(config.synthetic, config.synthetic_test_per_class);
    return {std::move(train), std::move(test)};
  }
  return {load_split(config.train_images, config.train_labels, config.train_subset, config.normalize),
          load_split(config.test_images, config.test_labels, config.test_subset, config.normalize)};
}

Network build_from_config(const ExperimentConfig& config) {
  std::map<int, GoalSpec> goals;
  if (config.goal.level > 0 && config.goal.kind == "dynamic") {
    const auto& w = config.hyper.level(config.goal.level);
    goals[config.goal.level] = DynamicGoal{config.goal.discrimination.value_or(w.discrimination),
                                           config.goal.sparsity.value_or(w.sparsity), config.goal.sweeps};
  }
  return build_network(config.dims, config.hyper, goals);
}

double evaluate_network(const Network& net, const PreparedData& data, const HyperParams& hyper) {
  const Matrix train = training_representations(net, data.train, hyper);
  const Matrix test = test_representations(net, data.test.data());
  return knn_evaluate(train, data.train.labels(), test, data.test.labels(), hyper.knn_k);
}

TrainSummary run_train(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  const PreparedData data = prepare_data(config.data);
  if (data.train.rows() != config.dims.front())
    throw ConfigError("data has " + std::to_string(data.train.rows()) + " rows but dims start at " +
                      std::to_string(config.dims.front()));
  const Network net = build_from_config(config);

  MetricsWriter metrics(out_dir / "metrics.csv", out_dir / "metrics.jsonl");
  const TrainState state =
      train(net, data.train, config.hyper, [&](const TrainState& s) { metrics.write(s.metrics.back()); });
  save_archive(state.weights_t, out_dir / "weights.lpw");

  TrainSummary summary;
  summary.accuracy = evaluate_network(state.weights_t, data, config.hyper);
  summary.baseline_accuracy = knn_evaluate(data.train.data(), data.train.labels(), data.test.data(),
                                           data.test.labels(), config.hyper.knn_k);
  summary.iterations = state.iteration;
  summary.config_hash = config.hash();
  summary.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  write_json({{"accuracy", summary.accuracy},
              {"baseline_accuracy", summary.baseline_accuracy},
              {"iterations", summary.iterations},
              {"seed", config.hyper.seed},
              {"mode", config.hyper.mode == Mode::synchronous ? "syn" : "asyn"},
              {"train_samples", data.train.cols()},
              {"test_samples", data.test.cols()},
              {"elapsed_ms", summary.elapsed_ms},
              {"config_hash", hex(summary.config_hash)}},
             out_dir / "summary.json");
  return summary;
}

TrainSummary run_eval(const ExperimentConfig& config, const std::filesystem::path& archive) {
  const PreparedData data = prepare_data(config.data);
  Network net = load_archive(archive);
  if (net.dims() != config.dims) throw ConsistencyError("archive dimensions differ from the config");
  const Network configured = build_from_config(config);
  for (int l = 1; l <= net.num_levels(); ++l) net.set_goal(l, configured.goal(l));
  TrainSummary summary;
  summary.accuracy = evaluate_network(net, data, config.hyper);
  summary.baseline_accuracy = knn_evaluate(data.train.data(), data.train.labels(), data.test.data(),
                                           data.test.labels(), config.hyper.knn_k);
  summary.config_hash = config.hash();
  return summary;
}

Theorem1Report run_theorem1(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  if (config.goal.level < 1) throw ConfigError("theorem1 needs [network] goal_level");
  std::filesystem::create_directories(out_dir);
  const PreparedData data = prepare_data(config.data);
  const Network net = build_from_config(config);
  const auto report =
      theorem1_experiment(net, data.train, config.hyper, config.goal.level, config.theorem1_epsilon);

  std::ofstream csv(out_dir / "theorem1.csv");
  if (!csv) throw IoError("cannot create theorem1.csv");
  csv << "iteration,goal_error\n";
  csv.precision(17);
  for (std::size_t i = 0; i < report.goal_error.size(); ++i) csv << i + 1 << ',' << report.goal_error[i] << '\n';
  nlohmann::json j{{"goal_level", config.goal.level},
                   {"iterations", report.goal_error.size()},
                   {"first", report.goal_error.empty() ? 0.0 : report.goal_error.front()},
                   {"final", report.goal_error.empty() ? 0.0 : report.goal_error.back()},
                   {"ratio", report.ratio()},
                   {"epsilon", config.theorem1_epsilon},
                   {"hypothesis_violated", report.hypothesis_violated},
                   {"config_hash", hex(config.hash())}};
  j["first_below"] = report.first_below ? nlohmann::json(*report.first_below) : nlohmann::json(nullptr);
  write_json(j, out_dir / "theorem1.json");
  return report;
}

}  // namespace lpnet
