#include "lpnet/metrics.hpp"

#include <iomanip>

namespace lpnet {

MetricsWriter::MetricsWriter(const std::filesystem::path& csv, const std::filesystem::path& jsonl)
    : csv_(csv), jsonl_(jsonl) {
  if (!csv_ || !jsonl_) throw IoError("cannot create metrics files in " + csv.parent_path().string());
  csv_ << kMetricsHeader << '\n' << std::setprecision(17);
}

void MetricsWriter::write(const IterationMetrics& m) {
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    const auto& o = m.levels[i];
    csv_ << m.iteration << ',' << i + 1 << ',' << o.r1 << ',' << o.r2 << ',' << o.r3 << ','
         << o.a_term << ',' << o.u_term << ',' << o.total << ',' << m.goal_errors[i] << ','
         << m.elapsed_ms << '\n';
  }
  jsonl_ << to_json(m).dump() << '\n';
  csv_.flush();
  jsonl_.flush();
  if (!csv_ || !jsonl_) throw IoError("failed writing metrics");
}

nlohmann::json to_json(const IterationMetrics& m) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    const auto& o = m.levels[i];
    const auto& c = m.cycles[i];
    levels.push_back({{"level", i + 1},
                      {"r1", o.r1},
                      {"r2", o.r2},
                      {"r3", o.r3},
                      {"a_term", o.a_term},
                      {"u_term", o.u_term},
                      {"total", o.total},
                      {"goal_error", m.goal_errors[i]},
                      {"skipped", c.skipped},
                      {"forward_accepted", c.forward_accepted}});
  }
  nlohmann::json j{{"iteration", m.iteration}, {"elapsed_ms", m.elapsed_ms}, {"levels", levels}};
  if (m.accuracy) j["accuracy"] = *m.accuracy;
  return j;
}

void write_json(const nlohmann::json& value, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace lpnet
