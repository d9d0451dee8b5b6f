#include "lpnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "lpnet/goal.hpp"
#include "lpnet/kernels.hpp"
#include "lpnet/transforms.hpp"

namespace lpnet {

namespace {

constexpr double kDescentTolerance = 1e-6;

Matrix gather(const Matrix& m, const std::vector<Eigen::Index>& cols) { return m(Eigen::all, cols); }

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<Eigen::Index>& cols) {
  std::vector<int> out;
  out.reserve(cols.size());
  for (auto j : cols) out.push_back(labels[static_cast<std::size_t>(j)]);
  return out;
}

[[noreturn]] void rethrow_at_level(int level) {
  const std::string where = "level " + std::to_string(level) + ": ";
  try {
    throw;
  } catch (const DescentError& e) {
    throw DescentError(where + e.what());
  } catch (const SingularityError& e) {
    throw SingularityError(where + e.what());
  } catch (const ConditioningError& e) {
    throw ConditioningError(where + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(where + e.what());
  } catch (const ContextError& e) {
    throw ContextError(where + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(where + e.what());
  }
}

void check_step(bool enabled, double before, double after, int level, const char* step) {
  if (!enabled) return;
  if (after - before > kDescentTolerance * std::max(1.0, std::fabs(before)))
    throw DescentError(std::string(step) + " step increased the local objective from " +
                       std::to_string(before) + " to " + std::to_string(after) + " at level " +
                       std::to_string(level));
}

const Matrix& selected_weight(const TrainState& state, const AsyncMask& mask, int level) {
  return mask.active(level) ? state.weights_t.forward_weight(level - 1)
                            : state.weights_t_minus_1.forward_weight(level - 1);
}

void compute_goals(TrainState& state, const RepresentationSet& data,
                   const std::vector<const Matrix*>& weights) {
  const Network& net = state.weights_t;
  const auto labels = data.labels();
  for (int l = 1; l <= net.num_levels(); ++l) {
    const auto& spec = net.goal(l);
    auto& g = state.g[static_cast<std::size_t>(l)];
    if (!has_goal(spec)) {
      g.setZero(net.dim(l), data.cols());
      continue;
    }
    const Matrix q = *weights[static_cast<std::size_t>(l - 1)] * state.u[static_cast<std::size_t>(l - 1)];
    g = resolve_goal(spec, q, labels);
  }
}

std::vector<const Matrix*> current_weights(const TrainState& state, const AsyncMask& mask) {
  std::vector<const Matrix*> weights;
  for (int l = 1; l <= state.weights_t.num_levels(); ++l)
    weights.push_back(&selected_weight(state, mask, l));
  return weights;
}

}  // namespace

AsyncMask AsyncMask::all_active(int num_levels) {
  return {std::vector<int>(static_cast<std::size_t>(num_levels), 1)};
}

AsyncMask AsyncMask::draw(int num_levels, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  AsyncMask mask;
  for (int l = 0; l < num_levels; ++l) mask.psi.push_back(coin(rng) ? 1 : -1);
  return mask;
}

TrainState init_state(const Network& net, const RepresentationSet& data, const HyperParams& hyper) {
  if (data.rows() != net.dim(0))
    throw TopologyError("data has " + std::to_string(data.rows()) + " rows, network expects " +
                        std::to_string(net.dim(0)));
  hyper.validate(net.num_levels());
  data.check_finite("training data");
  TrainState state;
  state.weights_t = net;
  state.weights_t_minus_1 = net;
  state.batch_rng.seed(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  state.mask_rng.seed(hyper.seed ^ 0xc2b2ae3d27d4eb4fULL);
  const auto levels = static_cast<std::size_t>(net.num_levels());
  state.g.resize(levels + 1);
  state.g[0] = Matrix::Zero(net.dim(0), data.cols());
  state.u = forward_pass(net, data.data(), net.num_levels());
  state.y = state.u;
  compute_goals(state, data, current_weights(state, AsyncMask::all_active(net.num_levels())));
  return state;
}

void stage_one(TrainState& state, const RepresentationSet& data, const AsyncMask& mask) {
  const Network& net = state.weights_t;
  const auto weights = current_weights(state, mask);
  std::vector<double> taus;
  for (int l = 1; l <= net.num_levels(); ++l) taus.push_back(net.threshold(l));
  state.u = forward_pass(weights, taus, data.data(), net.num_levels());
  compute_goals(state, data, weights);
}

std::vector<Eigen::Index> draw_batch(Eigen::Index columns, double fraction, std::mt19937_64& rng) {
  if (columns <= 0) throw ParameterError("cannot draw a batch from an empty set");
  const auto size = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(columns))), 1, columns);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(columns));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, columns - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

LocalProblem local_problem(const TrainState& state, const RepresentationSet& data,
                           const HyperParams& hyper, int level,
                           const std::vector<Eigen::Index>& batch) {
  const Network& net = state.weights_t;
  const int top = net.num_levels();
  if (level < 1 || level > top) throw IndexError("level " + std::to_string(level));
  const auto l = static_cast<std::size_t>(level);

  LocalProblem p;
  p.level = level;
  p.u_prev = gather(state.u[l - 1], batch);
  p.g_prev = gather(state.g[l - 1], batch);
  if (level < top) {
    p.u_next = gather(state.u[l + 1], batch);
    p.g_next = gather(state.g[l + 1], batch);
    p.a_next = net.forward_weight(level);
  }
  p.tied = net.tied();
  if (!p.tied) p.b_prev = net.backward_weight(level - 1);
  p.weights = hyper.level(level);
  p.gamma = hyper.gamma;
  p.discriminative = is_dynamic(net.goal(level));
  p.labels = gather_labels(data.labels(), batch);
  p.num_classes = data.num_classes();
  return p;
}

LevelUpdate solve_level(const TrainState& state, const RepresentationSet& data,
                        const HyperParams& hyper, int level,
                        const std::vector<Eigen::Index>& batch) {
  try {
    const Network& net = state.weights_t;
    const LocalProblem problem = local_problem(state, data, hyper, level, batch);
    LocalVariables vars{gather(state.y[static_cast<std::size_t>(level)], batch),
                        net.forward_weight(level - 1), std::nullopt};
    const bool free_backward = !net.tied() && problem.has_next();
    if (free_backward) vars.b = net.backward_weight(level);

    LevelUpdate out;
    ObjectiveBreakdown current = eval_objective_local(problem, vars);
    out.cycle.before = current.total;
    for (int c = 0; c < hyper.cycles_per_iteration; ++c) {
      vars.y = estimate_representations(problem, vars);
      const auto after_rep = eval_objective_local(problem, vars);
      check_step(hyper.check_descent, current.total, after_rep.total, level, "representation");
      current = after_rep;
      out.cycle.after_representation = current.total;

      LocalVariables trial = vars;
      trial.a_prev = estimate_forward_weight(problem, vars.y, vars.b);
      bool accepted = false;
      try {
        const auto after_fwd = eval_objective_local(problem, trial);
        accepted = std::isfinite(after_fwd.total) && after_fwd.total <= current.total;
        if (accepted) {
          vars.a_prev = std::move(trial.a_prev);
          current = after_fwd;
        }
      } catch (const SingularityError&) {
      }
      out.cycle.forward_accepted = accepted;
      out.cycle.after_forward = current.total;

      if (free_backward) {
        vars.b = estimate_backward_weight(problem, vars.y, vars.a_prev);
        const auto after_bwd = eval_objective_local(problem, vars);
        check_step(hyper.check_descent, current.total, after_bwd.total, level, "backward-weight");
        current = after_bwd;
      }
      out.cycle.after_backward = current.total;
    }
    out.objective = current;
    out.y = std::move(vars.y);
    out.a = std::move(vars.a_prev);
    out.b = std::move(vars.b);
    return out;
  } catch (const Error&) {
    rethrow_at_level(level);
  }
}

std::vector<LevelUpdate> stage_two(TrainState& state, const RepresentationSet& data,
                                   const HyperParams& hyper, const AsyncMask& mask,
                                   const std::vector<Eigen::Index>& batch, bool parallel) {
  const int top = state.weights_t.num_levels();
  std::vector<LevelUpdate> updates(static_cast<std::size_t>(top));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(top));

  auto work = [&](int level) {
    auto& slot = updates[static_cast<std::size_t>(level - 1)];
    try {
      if (mask.active(level)) {
        slot = solve_level(state, data, hyper, level, batch);
        return;
      }
      const LocalProblem problem = local_problem(state, data, hyper, level, batch);
      LocalVariables vars{gather(state.y[static_cast<std::size_t>(level)], batch),
                          state.weights_t.forward_weight(level - 1), std::nullopt};
      if (!state.weights_t.tied() && problem.has_next())
        vars.b = state.weights_t.backward_weight(level);
      slot.objective = eval_objective_local(problem, vars);
      slot.cycle.skipped = true;
      slot.cycle.before = slot.cycle.after_representation = slot.cycle.after_forward =
          slot.cycle.after_backward = slot.objective.total;
    } catch (...) {
      errors[static_cast<std::size_t>(level - 1)] = std::current_exception();
    }
  };

  if (parallel && top > 1) {
    std::vector<std::thread> workers;
    for (int l = 1; l <= top; ++l) workers.emplace_back(work, l);
    for (auto& w : workers) w.join();
  } else {
    for (int l = 1; l <= top; ++l) work(l);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int l = 1; l <= top; ++l) {
    auto& up = updates[static_cast<std::size_t>(l - 1)];
    if (up.cycle.skipped) continue;
    state.weights_t.forward_weight(l - 1) = up.a;
    if (up.b) state.weights_t.set_backward_weight(l, *up.b);
    state.y[static_cast<std::size_t>(l)](Eigen::all, batch) = up.y;
  }
  return updates;
}

Network batch_smooth(const Network& solution, const Network& previous, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
  if (solution.dims() != previous.dims() || solution.tied() != previous.tied())
    throw TopologyError("smoothing networks of different shape");
  auto smooth = [rho](const Matrix& s, const Matrix& p) {
    Matrix out(s.rows(), s.cols());
    const auto n = static_cast<std::size_t>(s.size());
    kernels::step_back({s.data(), n}, {p.data(), n}, rho, {out.data(), n});
    return out;
  };
  Network out = solution;
  for (int l = 0; l < out.num_levels(); ++l) {
    out.forward_weight(l) = smooth(solution.forward_weight(l), previous.forward_weight(l));
    if (!out.tied())
      out.set_backward_weight(l, smooth(solution.backward_weight(l), previous.backward_weight(l)));
  }
  return out;
}

void train_iteration(TrainState& state, const RepresentationSet& data, const HyperParams& hyper) {
  const auto start = std::chrono::steady_clock::now();
  const int top = state.weights_t.num_levels();
  const AsyncMask mask = hyper.mode == Mode::asynchronous
                             ? AsyncMask::draw(top, hyper.bernoulli_p, state.mask_rng)
                             : AsyncMask::all_active(top);
  if (hyper.goals_in_stage_two) {
    const Network& net = state.weights_t;
    std::vector<double> taus;
    for (int l = 1; l <= top; ++l) taus.push_back(net.threshold(l));
    state.u = forward_pass(current_weights(state, mask), taus, data.data(), top);
  } else {
    stage_one(state, data, mask);
  }
  const auto batch = draw_batch(data.cols(), hyper.batch_fraction, state.batch_rng);

  const Network previous = state.weights_t;
  const auto updates = stage_two(state, data, hyper, mask, batch, hyper.parallel_stage_two);
  state.weights_t = batch_smooth(state.weights_t, previous, hyper.rho);
  state.weights_t_minus_1 = previous;
  if (hyper.goals_in_stage_two) compute_goals(state, data, current_weights(state, AsyncMask::all_active(top)));
  ++state.iteration;

  bool finite = state.weights_t.finite();
  for (int l = 0; l <= top && finite; ++l) {
    const auto i = static_cast<std::size_t>(l);
    finite = state.u[i].allFinite() && state.y[i].allFinite() && state.g[i].allFinite();
  }
  if (!finite) throw DivergenceError("non-finite state at iteration " + std::to_string(state.iteration));

  IterationMetrics m;
  m.iteration = state.iteration;
  for (int l = 1; l <= top; ++l) {
    const auto& up = updates[static_cast<std::size_t>(l - 1)];
    m.levels.push_back(up.objective);
    m.cycles.push_back(up.cycle);
    const auto i = static_cast<std::size_t>(l);
    m.goal_errors.push_back(has_goal(state.weights_t.goal(l)) ? 0.5 * (state.u[i] - state.g[i]).squaredNorm()
                                                              : 0.0);
  }
  m.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  state.metrics.push_back(std::move(m));
}

TrainState train(const Network& net, const RepresentationSet& data, const HyperParams& hyper,
                 const TrainObserver& observer) {
  TrainState state = init_state(net, data, hyper);
  for (int t = 0; t < hyper.iterations; ++t) {
    train_iteration(state, data, hyper);
    if (observer) observer(state);
  }
  return state;
}

Matrix training_representations(const Network& net, const RepresentationSet& data,
                                const HyperParams& hyper) {
  const int top = net.num_levels();
  const auto u = forward_pass(net, data.data(), top);
  const auto labels = data.labels();
  LocalProblem p;
  p.level = top;
  p.u_prev = u[static_cast<std::size_t>(top - 1)];
  if (top > 1 && has_goal(net.goal(top - 1)))
    p.g_prev = resolve_goal(net.goal(top - 1), net.forward_weight(top - 2) * u[static_cast<std::size_t>(top - 2)],
                            labels);
  else
    p.g_prev = Matrix::Zero(p.u_prev.rows(), p.u_prev.cols());
  p.tied = net.tied();
  if (!p.tied) p.b_prev = net.backward_weight(top - 1);
  p.weights = hyper.level(top);
  p.gamma = hyper.gamma;
  p.discriminative = is_dynamic(net.goal(top));
  p.labels = labels;
  p.num_classes = data.num_classes();
  return estimate_representations(p, {u.back(), net.forward_weight(top - 1), std::nullopt});
}

Matrix test_representations(const Network& net, const Eigen::Ref<const Matrix>& data) {
  return forward_pass(net, data, net.num_levels()).back();
}

double Theorem1Report::ratio() const {
  if (goal_error.empty()) return 1.0;
  return goal_error.front() == 0.0 ? 0.0 : goal_error.back() / goal_error.front();
}

Matrix propagate_goal(const Network& net, const Eigen::Ref<const Matrix>& goal, int goal_level) {
  if (goal_level < 1 || goal_level > net.num_levels())
    throw IndexError("goal level " + std::to_string(goal_level));
  if (goal.rows() != net.dim(goal_level)) throw ShapeError("goal rows do not match its level");
  Matrix d = goal;
  for (int l = goal_level + 1; l <= net.num_levels(); ++l)
    d = snt_columns(net.forward_weight(l - 1) * d, net.threshold(l));
  return d;
}

Theorem1Report theorem1_experiment(const Network& net, const RepresentationSet& data,
                                   const HyperParams& hyper, int goal_level, double epsilon) {
  const int top = net.num_levels();
  if (goal_level < 1 || goal_level > top) throw IndexError("goal level " + std::to_string(goal_level));
  if (!has_goal(net.goal(goal_level))) throw ParameterError("the goal level carries no goal");
  for (int l = 1; l <= top; ++l)
    if (l != goal_level && has_goal(net.goal(l)))
      throw ParameterError("the experiment expects a single goal level");

  Theorem1Report report;
  for (int l = 1; l <= top; ++l) {
    const auto& w = hyper.level(l);
    if (w.backward_prop <= 0.0 || w.forward_prop <= 0.0) report.hypothesis_violated = true;
  }
  const auto labels = data.labels();
  train(net, data, hyper, [&](const TrainState& state) {
    const Network& current = state.weights_t;
    const auto u = forward_pass(current, data.data(), top);
    const auto gl = static_cast<std::size_t>(goal_level);
    const Matrix goal = resolve_goal(current.goal(goal_level),
                                     current.forward_weight(goal_level - 1) * u[gl - 1], labels);
    const double err = 0.5 * (propagate_goal(current, goal, goal_level) - u.back()).squaredNorm();
    report.goal_error.push_back(err);
    if (!report.first_below && err < epsilon) report.first_below = state.iteration;
  });
  return report;
}

}  // namespace lpnet
