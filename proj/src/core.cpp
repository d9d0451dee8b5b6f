#include "lpnet/core.hpp"

#include <iostream>
#include <mutex>
#include <random>

namespace lpnet {

namespace {

std::mutex g_sink_mutex;
std::function<void(const std::string&)> g_sink;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // Row-major fill order so the draw sequence is independent of storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink)
    g_sink(message);
  else
    std::cerr << "[lpnet warning] " << message << '\n';
}

void set_warning_sink(std::function<void(const std::string&)> sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

// --- RepresentationSet ------------------------------------------------------

Eigen::Index column_index(int c, int k, int num_classes, int samples_per_class) {
  if (c < 1 || c > num_classes)
    throw IndexError("class " + std::to_string(c) + " outside 1.." + std::to_string(num_classes));
  if (k < 1 || k > samples_per_class)
    throw IndexError("sample " + std::to_string(k) + " outside 1.." +
                     std::to_string(samples_per_class));
  return static_cast<Eigen::Index>(c - 1) * samples_per_class + (k - 1);
}

RepresentationSet::RepresentationSet(Matrix data, int num_classes, int samples_per_class)
    : data_(std::move(data)), num_classes_(num_classes), samples_per_class_(samples_per_class) {
  if (num_classes <= 0 || samples_per_class <= 0)
    throw ParameterError("class and sample counts must be positive");
  if (data_.cols() != static_cast<Eigen::Index>(num_classes) * samples_per_class)
    throw ShapeError("representation has " + std::to_string(data_.cols()) + " columns, expected " +
                     std::to_string(num_classes * samples_per_class));
}

RepresentationSet RepresentationSet::zeros(Eigen::Index rows, int num_classes,
                                           int samples_per_class) {
  return {Matrix::Zero(rows, static_cast<Eigen::Index>(num_classes) * samples_per_class),
          num_classes, samples_per_class};
}

Eigen::Index RepresentationSet::column_index(int c, int k) const {
  return lpnet::column_index(c, k, num_classes_, samples_per_class_);
}

int RepresentationSet::class_of(Eigen::Index column) const {
  if (column < 0 || column >= data_.cols())
    throw IndexError("column " + std::to_string(column) + " out of range");
  return static_cast<int>(column / samples_per_class_) + 1;
}

int RepresentationSet::sample_of(Eigen::Index column) const {
  if (column < 0 || column >= data_.cols())
    throw IndexError("column " + std::to_string(column) + " out of range");
  return static_cast<int>(column % samples_per_class_) + 1;
}

std::vector<int> RepresentationSet::labels() const {
  std::vector<int> out(static_cast<std::size_t>(data_.cols()));
  for (Eigen::Index j = 0; j < data_.cols(); ++j)
    out[static_cast<std::size_t>(j)] = static_cast<int>(j / samples_per_class_);
  return out;
}

void RepresentationSet::check_finite(const char* what) const {
  if (!data_.allFinite()) throw ParameterError(std::string(what) + ": non-finite entry");
}

// --- HyperParams --------------------------------------------------------------

const LevelWeights& HyperParams::level(int l) const {
  if (l < 1 || l > static_cast<int>(levels.size()))
    throw IndexError("no hyperparameters for level " + std::to_string(l));
  return levels[static_cast<std::size_t>(l - 1)];
}

LevelWeights& HyperParams::level(int l) {
  return const_cast<LevelWeights&>(static_cast<const HyperParams&>(*this).level(l));
}

void HyperParams::validate(int num_levels) const {
  if (static_cast<int>(levels.size()) != num_levels)
    throw ParameterError("hyperparameters cover " + std::to_string(levels.size()) +
                         " levels, network has " + std::to_string(num_levels));
  for (const auto& w : levels) {
    for (double v : {w.discrimination, w.sparsity, w.frobenius, w.orthogonality, w.log_det,
                     w.tying, w.backward_prop, w.forward_prop})
      if (!(v >= 0.0)) throw ParameterError("regularization weights must be nonnegative");
  }
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0))
    throw ParameterError("batch fraction must lie in (0, 1]");
  if (iterations < 0) throw ParameterError("iterations must be nonnegative");
  if (!(bernoulli_p > 0.0 && bernoulli_p <= 1.0))
    throw ParameterError("bernoulli_p must lie in (0, 1]");
  if (knn_k < 1) throw ParameterError("knn_k must be positive");
  if (cycles_per_iteration < 1) throw ParameterError("cycles_per_iteration must be positive");
}

// --- Network ------------------------------------------------------------------

Eigen::Index Network::dim(int level) const {
  if (level < 0 || level > num_levels()) throw IndexError("level " + std::to_string(level));
  return dims_[static_cast<std::size_t>(level)];
}

const Matrix& Network::forward_weight(int l) const {
  if (l < 0 || l >= num_levels()) throw IndexError("forward weight A_" + std::to_string(l));
  return forward_[static_cast<std::size_t>(l)];
}

Matrix& Network::forward_weight(int l) {
  return const_cast<Matrix&>(static_cast<const Network&>(*this).forward_weight(l));
}

Matrix Network::backward_weight(int l) const {
  if (l < 0 || l >= num_levels()) throw IndexError("backward weight B_" + std::to_string(l));
  if (tied_) return forward_[static_cast<std::size_t>(l)].transpose();
  return *backward_[static_cast<std::size_t>(l)];
}

void Network::set_backward_weight(int l, Matrix b) {
  if (tied_) throw ParameterError("tied network has no stored backward weights");
  if (l < 0 || l >= num_levels()) throw IndexError("backward weight B_" + std::to_string(l));
  if (b.rows() != dim(l) || b.cols() != dim(l + 1)) throw ShapeError("B_" + std::to_string(l));
  backward_[static_cast<std::size_t>(l)] = std::move(b);
}

Matrix Network::apply_backward(int l, const Eigen::Ref<const Matrix>& x) const {
  if (l < 0 || l >= num_levels()) throw IndexError("backward weight B_" + std::to_string(l));
  if (x.rows() != dim(l + 1)) throw ShapeError("backward product at level " + std::to_string(l));
  if (tied_) return forward_[static_cast<std::size_t>(l)].transpose() * x;
  return *backward_[static_cast<std::size_t>(l)] * x;
}

double Network::threshold(int level) const {
  if (level < 1 || level > num_levels()) throw IndexError("threshold tau_" + std::to_string(level));
  return thresholds_[static_cast<std::size_t>(level - 1)];
}

void Network::set_threshold(int level, double tau) {
  if (level < 1 || level > num_levels()) throw IndexError("threshold tau_" + std::to_string(level));
  if (!(tau >= 0.0)) throw ParameterError("threshold must be nonnegative");
  thresholds_[static_cast<std::size_t>(level - 1)] = tau;
}

const GoalSpec& Network::goal(int level) const {
  if (level < 1 || level > num_levels()) throw IndexError("goal level " + std::to_string(level));
  return goals_[static_cast<std::size_t>(level - 1)];
}

void Network::set_goal(int level, GoalSpec goal) {
  if (level < 1 || level > num_levels()) throw IndexError("goal level " + std::to_string(level));
  if (const auto* fixed = std::get_if<FixedGoal>(&goal); fixed && fixed->goal.rows() != dim(level))
    throw ShapeError("fixed goal rows do not match M_" + std::to_string(level));
  goals_[static_cast<std::size_t>(level - 1)] = std::move(goal);
}

bool Network::finite() const {
  for (const auto& a : forward_)
    if (!a.allFinite()) return false;
  for (const auto& b : backward_)
    if (b && !b->allFinite()) return false;
  return true;
}

Network build_network(const std::vector<Eigen::Index>& dims, const HyperParams& hyper,
                      const std::map<int, GoalSpec>& goal_levels) {
  if (dims.size() < 2) throw TopologyError("a network needs at least two dimensions");
  for (auto d : dims)
    if (d <= 0) throw TopologyError("dimensions must be positive");
  const int levels = static_cast<int>(dims.size()) - 1;
  hyper.validate(levels);

  Network net;
  net.dims_ = dims;
  net.tied_ = hyper.tie_backward;
  net.goals_.assign(static_cast<std::size_t>(levels), NoGoal{});
  net.thresholds_.resize(static_cast<std::size_t>(levels));
  net.backward_.resize(static_cast<std::size_t>(levels));

  std::mt19937_64 rng(hyper.seed);
  for (int l = 0; l < levels; ++l)
    net.forward_.push_back(gaussian(dims[static_cast<std::size_t>(l + 1)],
                                    dims[static_cast<std::size_t>(l)], rng));
  if (!net.tied_)
    for (int l = 0; l < levels; ++l)
      net.backward_[static_cast<std::size_t>(l)] =
          gaussian(dims[static_cast<std::size_t>(l)], dims[static_cast<std::size_t>(l + 1)], rng);

  for (int level = 1; level <= levels; ++level) net.set_threshold(level, hyper.level(level).sparsity);
  for (const auto& [level, goal] : goal_levels) {
    if (level < 1 || level > levels)
      throw TopologyError("goal level " + std::to_string(level) + " outside 1.." +
                          std::to_string(levels));
    net.set_goal(level, goal);
  }
  return net;
}

// --- NetworkBuilder -------------------------------------------------------------

NetworkBuilder::NetworkBuilder(std::vector<Eigen::Index> dims, bool tied) {
  if (dims.size() < 2) throw TopologyError("a network needs at least two dimensions");
  const auto levels = dims.size() - 1;
  net_.dims_ = std::move(dims);
  net_.tied_ = tied;
  net_.goals_.assign(levels, NoGoal{});
  net_.thresholds_.assign(levels, 0.0);
  net_.backward_.resize(levels);
  for (std::size_t l = 0; l < levels; ++l)
    net_.forward_.push_back(Matrix::Zero(net_.dims_[l + 1], net_.dims_[l]));
  if (!tied)
    for (std::size_t l = 0; l < levels; ++l)
      net_.backward_[l] = Matrix::Zero(net_.dims_[l], net_.dims_[l + 1]);
}

NetworkBuilder& NetworkBuilder::forward(int l, Matrix a) {
  if (a.rows() != net_.dim(l + 1) || a.cols() != net_.dim(l))
    throw ShapeError("A_" + std::to_string(l) + " shape");
  net_.forward_weight(l) = std::move(a);
  return *this;
}

NetworkBuilder& NetworkBuilder::backward(int l, Matrix b) {
  net_.set_backward_weight(l, std::move(b));
  return *this;
}

NetworkBuilder& NetworkBuilder::threshold(int level, double tau) {
  net_.set_threshold(level, tau);
  return *this;
}

NetworkBuilder& NetworkBuilder::goal(int level, GoalSpec goal) {
  net_.set_goal(level, std::move(goal));
  return *this;
}

Network NetworkBuilder::build() const { return net_; }

}  // namespace lpnet
