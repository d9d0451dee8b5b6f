#pragma once
// Two-stage learning: a forward sNT pass, then independent local solves per
// node level on a shared random batch, followed by batch weight smoothing.

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "lpnet/core.hpp"
#include "lpnet/solvers.hpp"

namespace lpnet {

/// Objective of one node level around its alternating cycle.
struct LevelCycle {
  double before = 0.0;
  double after_representation = 0.0;
  double after_forward = 0.0;
  double after_backward = 0.0;
  bool forward_accepted = true;
  bool skipped = false;  // inactive in asynchronous mode
};

struct IterationMetrics {
  int iteration = 0;  // 1-based
  std::vector<ObjectiveBreakdown> levels;  // levels[l-1], after the cycle
  std::vector<LevelCycle> cycles;          // levels[l-1]
  std::vector<double> goal_errors;         // 1/2||U_l - G_l||^2, zero where no goal
  double elapsed_ms = 0.0;
  std::optional<double> accuracy;
};

struct AsyncMask {
  std::vector<int> psi;  // psi[l-1] in {-1, +1} for node l

  static AsyncMask all_active(int num_levels);
  static AsyncMask draw(int num_levels, double p, std::mt19937_64& rng);
  bool active(int level) const { return psi.at(static_cast<std::size_t>(level - 1)) > 0; }
};

struct TrainState {
  Network weights_t;
  Network weights_t_minus_1;
  std::vector<Matrix> u;  // u[l], l = 0..L; u[0] is the data
  std::vector<Matrix> y;  // y[l], l = 1..L; y[0] unused
  std::vector<Matrix> g;  // g[l], zeros where level l has no goal
  int iteration = 0;
  std::mt19937_64 batch_rng;
  std::mt19937_64 mask_rng;
  std::vector<IterationMetrics> metrics;
};

TrainState init_state(const Network& net, const RepresentationSet& data, const HyperParams& hyper);

/// Forward pass with the weight versions selected by the mask; recomputes
/// every configured goal from the linear representation of its level.
void stage_one(TrainState& state, const RepresentationSet& data, const AsyncMask& mask);

/// Column batch shared by all levels in one iteration, ascending.
std::vector<Eigen::Index> draw_batch(Eigen::Index columns, double fraction, std::mt19937_64& rng);

/// Local problem of node l restricted to the batch columns of the frozen
/// stage-one state.
LocalProblem local_problem(const TrainState& state, const RepresentationSet& data,
                           const HyperParams& hyper, int level,
                           const std::vector<Eigen::Index>& batch);

struct LevelUpdate {
  Matrix y;  // batch columns of Y_l
  Matrix a;  // A_{l-1}
  std::optional<Matrix> b;  // B_l when untied and l < L
  LevelCycle cycle;
  ObjectiveBreakdown objective;
};

/// One alternating cycle (representation, forward weight, backward weight)
/// of node l. Throws DescentError when an exact step increases the local
/// objective beyond 1e-6 relative and checking is enabled.
LevelUpdate solve_level(const TrainState& state, const RepresentationSet& data,
                        const HyperParams& hyper, int level,
                        const std::vector<Eigen::Index>& batch);

/// Solves every active level against the frozen state and writes the
/// results into weights_t and the batch columns of y.
std::vector<LevelUpdate> stage_two(TrainState& state, const RepresentationSet& data,
                                   const HyperParams& hyper, const AsyncMask& mask,
                                   const std::vector<Eigen::Index>& batch, bool parallel);

/// W_new = S - rho (S - W_old) per weight, with S the stage-two solution.
Network batch_smooth(const Network& solution, const Network& previous, double rho);

using TrainObserver = std::function<void(const TrainState&)>;

/// Runs hyper.iterations outer iterations starting from `net`.
TrainState train(const Network& net, const RepresentationSet& data, const HyperParams& hyper,
                 const TrainObserver& observer = {});

/// Runs one outer iteration in place.
void train_iteration(TrainState& state, const RepresentationSet& data, const HyperParams& hyper);

/// Node-L training representations: the representation step of the last
/// node over the full set, with the discrimination term when that node
/// carries a dynamic goal.
Matrix training_representations(const Network& net, const RepresentationSet& data,
                                const HyperParams& hyper);

/// Node-L test representations: the plain sNT pass.
Matrix test_representations(const Network& net, const Eigen::Ref<const Matrix>& data);

struct Theorem1Report {
  std::vector<double> goal_error;  // 1/2||D_L - U_L||^2 per iteration
  std::optional<int> first_below;  // first iteration under epsilon
  bool hypothesis_violated = false;  // some lambda_b or lambda_f is zero
  double ratio() const;              // final / first
};

/// Trains with a single goal at goal_level and tracks how close the last
/// node gets to the goal propagated through the learned sNTs.
Theorem1Report theorem1_experiment(const Network& net, const RepresentationSet& data,
                                   const HyperParams& hyper, int goal_level, double epsilon);

/// G_{l_G} pushed through the sNTs of levels l_G+1..L.
Matrix propagate_goal(const Network& net, const Eigen::Ref<const Matrix>& goal, int goal_level);

}  // namespace lpnet
