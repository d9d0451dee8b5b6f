#pragma once
// Network topology, representation storage and parameter containers.
//
// Levels are numbered 0..L. Level 0 holds the data, levels 1..L are the
// transform nodes. Forward weight A_l maps level l to level l+1 and has shape
// (M_{l+1}, M_l); backward weight B_l maps level l+1 back to level l and has
// shape (M_l, M_{l+1}). Both exist for l = 0..L-1.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lpnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LPNET_DECLARE_ERROR(Name) \
  class Name : public Error {     \
   public:                        \
    using Error::Error;           \
  }

LPNET_DECLARE_ERROR(TopologyError);
LPNET_DECLARE_ERROR(IndexError);
LPNET_DECLARE_ERROR(ParameterError);
LPNET_DECLARE_ERROR(RangeError);
LPNET_DECLARE_ERROR(ShapeError);
LPNET_DECLARE_ERROR(SingularityError);
LPNET_DECLARE_ERROR(ConditioningError);
LPNET_DECLARE_ERROR(ContextError);
LPNET_DECLARE_ERROR(DivergenceError);
LPNET_DECLARE_ERROR(DescentError);
LPNET_DECLARE_ERROR(FormatError);
LPNET_DECLARE_ERROR(IoError);
LPNET_DECLARE_ERROR(ConsistencyError);
LPNET_DECLARE_ERROR(ConfigError);

#undef LPNET_DECLARE_ERROR

/// Sends a warning line to the installed sink (stderr by default).
void warn(const std::string& message);

/// Replaces the warning sink; pass an empty function to restore stderr.
void set_warning_sink(std::function<void(const std::string&)> sink);

// ---------------------------------------------------------------------------
// RepresentationSet
// ---------------------------------------------------------------------------

/// Column-per-sample matrix grouped by class: sample (c, k) lives in column
/// (c-1)*K + (k-1). Classes and samples are 1-based.
class RepresentationSet {
 public:
  RepresentationSet() = default;
  RepresentationSet(Matrix data, int num_classes, int samples_per_class);

  static RepresentationSet zeros(Eigen::Index rows, int num_classes, int samples_per_class);

  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }
  int num_classes() const { return num_classes_; }
  int samples_per_class() const { return samples_per_class_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }

  Eigen::Index column_index(int c, int k) const;
  int class_of(Eigen::Index column) const;
  int sample_of(Eigen::Index column) const;

  /// 0-based class label of every column.
  std::vector<int> labels() const;

  /// Throws ParameterError on NaN or Inf.
  void check_finite(const char* what) const;

 private:
  Matrix data_;
  int num_classes_ = 0;
  int samples_per_class_ = 0;
};

Eigen::Index column_index(int c, int k, int num_classes, int samples_per_class);

// ---------------------------------------------------------------------------
// Goals and hyperparameters
// ---------------------------------------------------------------------------

struct NoGoal {};

struct FixedGoal {
  Matrix goal;
};

struct DynamicGoal {
  double discrimination = 0.0;  // lambda_0
  double sparsity = 0.0;        // lambda_1
  int sweeps = 3;
};

using GoalSpec = std::variant<NoGoal, FixedGoal, DynamicGoal>;

inline bool is_dynamic(const GoalSpec& g) { return std::holds_alternative<DynamicGoal>(g); }
inline bool has_goal(const GoalSpec& g) { return !std::holds_alternative<NoGoal>(g); }

/// Regularization weights of one node level.
struct LevelWeights {
  double discrimination = 0.0;   // lambda_{l,0}
  double sparsity = 0.0;         // lambda_{l,1}
  double frobenius = 0.0;        // lambda_{l,2}
  double orthogonality = 0.0;    // lambda_{l,3}
  double log_det = 0.0;          // lambda_{l,4}
  double tying = 0.0;            // lambda_{l,5}
  double backward_prop = 0.0;    // lambda_{l,b}
  double forward_prop = 0.0;     // lambda_{l,f}

  /// lambda_2 + lambda_5 - lambda_3; derived on every read.
  double pi() const { return frobenius + tying - orthogonality; }
};

enum class Mode { synchronous, asynchronous };

struct HyperParams {
  std::vector<LevelWeights> levels;  // levels[l-1] for node l
  double gamma = 1.0;
  double rho = 0.5;
  double batch_fraction = 0.15;
  int iterations = 120;
  Mode mode = Mode::synchronous;
  double bernoulli_p = 0.5;
  int knn_k = 3;
  std::uint64_t seed = 0;
  bool tie_backward = true;

  int cycles_per_iteration = 1;
  bool goals_in_stage_two = false;
  bool parallel_stage_two = true;
  bool check_descent = true;

  const LevelWeights& level(int l) const;
  LevelWeights& level(int l);
  void validate(int num_levels) const;
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

/// Chain of L transform nodes. Value type; copies are deep.
class Network {
 public:
  Network() = default;

  int num_levels() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<Eigen::Index>& dims() const { return dims_; }
  Eigen::Index dim(int level) const;
  bool tied() const { return tied_; }

  /// A_l, shape (M_{l+1}, M_l), l = 0..L-1.
  const Matrix& forward_weight(int l) const;
  Matrix& forward_weight(int l);

  /// B_l, shape (M_l, M_{l+1}). Resolves to A_l^T on tied networks.
  Matrix backward_weight(int l) const;
  /// Stores B_l. Throws ParameterError on tied networks.
  void set_backward_weight(int l, Matrix b);
  /// B_l * X without materializing A_l^T on tied networks.
  Matrix apply_backward(int l, const Eigen::Ref<const Matrix>& x) const;

  /// Threshold tau_l of node l = 1..L.
  double threshold(int level) const;
  void set_threshold(int level, double tau);

  const GoalSpec& goal(int level) const;
  void set_goal(int level, GoalSpec goal);

  /// True when every stored entry is finite.
  bool finite() const;

  friend Network build_network(const std::vector<Eigen::Index>& dims, const HyperParams& hyper,
                               const std::map<int, GoalSpec>& goal_levels);
  friend class NetworkBuilder;

 private:
  std::vector<Eigen::Index> dims_;
  std::vector<Matrix> forward_;
  std::vector<std::optional<Matrix>> backward_;
  std::vector<double> thresholds_;
  std::vector<GoalSpec> goals_;
  bool tied_ = true;
};

/// Gaussian N(0, 1) initialization seeded from hyper.seed; tau_l = lambda_{l,1}.
Network build_network(const std::vector<Eigen::Index>& dims, const HyperParams& hyper,
                      const std::map<int, GoalSpec>& goal_levels);

/// Assembles a network from explicit weights (archive loading, tests).
class NetworkBuilder {
 public:
  explicit NetworkBuilder(std::vector<Eigen::Index> dims, bool tied);
  NetworkBuilder& forward(int l, Matrix a);
  NetworkBuilder& backward(int l, Matrix b);
  NetworkBuilder& threshold(int level, double tau);
  NetworkBuilder& goal(int level, GoalSpec goal);
  Network build() const;

 private:
  Network net_;
};

}  // namespace lpnet
