#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "lpnet/archive.hpp"
#include "lpnet/experiment.hpp"
#include "lpnet/kernels.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<int> subset;
  std::optional<int> iterations;
  std::string out = "run";
  std::string archive;
};

lpnet::ConfigOverrides overrides(const Options& o) {
  lpnet::ConfigOverrides ov;
  ov.seed = o.seed;
  ov.subset = o.subset;
  ov.iterations = o.iterations;
  if (o.mode == "syn") ov.mode = lpnet::Mode::synchronous;
  if (o.mode == "asyn") ov.mode = lpnet::Mode::asynchronous;
  return ov;
}

void add_run_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override [train] seed");
  cmd->add_option("--mode", o.mode, "override [train] mode")->check(CLI::IsMember({"syn", "asyn"}));
  cmd->add_option("--subset", o.subset, "balanced train/test subset size")->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", o.iterations, "override [train] iterations")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally decoupled training of sparsifying transform networks"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train a network and write weights, metrics and a summary");
  add_run_flags(train, o);
  train->add_option("--out", o.out, "output directory");

  auto* eval = app.add_subcommand("eval", "k-NN accuracy of an archived network");
  add_run_flags(eval, o);
  eval->add_option("--archive", o.archive, "weight archive")->required()->check(CLI::ExistingFile);

  auto* theorem1 = app.add_subcommand("theorem1", "single-goal propagation experiment");
  add_run_flags(theorem1, o);
  theorem1->add_option("--out", o.out, "output directory");

  auto* inspect = app.add_subcommand("inspect-archive", "describe a weight archive");
  inspect->add_option("archive", o.archive, "weight archive")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*inspect) {
      std::cout << lpnet::describe_archive(lpnet::load_archive(o.archive));
      return 0;
    }
    const auto config = lpnet::load_config(o.config, overrides(o));
    std::cerr << "kernels: " << lpnet::kernels::name(lpnet::kernels::active()) << '\n';
    if (*train) {
      const auto s = lpnet::run_train(config, o.out);
      std::printf("accuracy %.4f (raw-pixel baseline %.4f) after %d iterations, %.1f s\n", s.accuracy,
                  s.baseline_accuracy, s.iterations, s.elapsed_ms / 1000.0);
    } else if (*eval) {
      const auto s = lpnet::run_eval(config, o.archive);
      std::printf("accuracy %.4f (raw-pixel baseline %.4f)\n", s.accuracy, s.baseline_accuracy);
    } else if (*theorem1) {
      const auto r = lpnet::run_theorem1(config, o.out);
      std::printf("goal error %.6g -> %.6g (ratio %.4f)%s\n", r.goal_error.empty() ? 0.0 : r.goal_error.front(),
                  r.goal_error.empty() ? 0.0 : r.goal_error.back(), r.ratio(),
                  r.hypothesis_violated ? ", hypothesis violated: some lambda_b or lambda_f is zero" : "");
    }
  } catch (const lpnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
