#pragma once
// Small networks and data sets shared by the training and io suites.

#include <map>

#include "lpnet/core.hpp"
#include "lpnet/data.hpp"

namespace fixture {

inline lpnet::HyperParams toy_hyper(int levels, bool tied, std::uint64_t seed) {
  lpnet::HyperParams h;
  lpnet::LevelWeights w;
  w.discrimination = 0.01;
  w.sparsity = 0.001;
  w.frobenius = w.orthogonality = w.log_det = w.tying = 34.0;
  w.backward_prop = w.forward_prop = 1.0;
  h.levels.assign(static_cast<std::size_t>(levels), w);
  h.gamma = 2.0;
  h.tie_backward = tied;
  h.seed = seed;
  h.iterations = 5;
  h.batch_fraction = 0.3;
  return h;
}

inline lpnet::RepresentationSet toy_data(Eigen::Index dim, int classes, int per_class, std::uint64_t seed) {
  lpnet::SyntheticSpec s;
  s.dim = dim;
  s.num_classes = classes;
  s.samples_per_class = per_class;
  s.separation = 0.05;
  s.spread = 0.02;
  s.seed = seed;
  return lpnet::synthetic_gaussians(s);
}

/// Network of equal-width levels with a dynamic goal at goal_level (0: none).
inline lpnet::Network toy_network(int levels, Eigen::Index dim, const lpnet::HyperParams& h, int goal_level) {
  std::map<int, lpnet::GoalSpec> goals;
  if (goal_level > 0) goals[goal_level] = lpnet::DynamicGoal{0.01, 0.001, 3};
  return lpnet::build_network(std::vector<Eigen::Index>(static_cast<std::size_t>(levels + 1), dim), h, goals);
}

}  // namespace fixture
