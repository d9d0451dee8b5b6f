#pragma once

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "lpnet/training.hpp"

namespace lpnet {

inline constexpr const char* kMetricsHeader =
    "iteration,level,r1,r2,r3,a_term,u_term,total,goal_error,elapsed_ms";

/// One CSV row per (iteration, level) plus one JSON line per iteration.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& csv, const std::filesystem::path& jsonl);
  void write(const IterationMetrics& m);

 private:
  std::ofstream csv_;
  std::ofstream jsonl_;
};

nlohmann::json to_json(const IterationMetrics& m);

void write_json(const nlohmann::json& value, const std::filesystem::path& path);

}  // namespace lpnet
