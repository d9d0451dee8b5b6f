#pragma once

#include <span>
#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

/// Majority vote among the k nearest training columns (Euclidean). Ties go to
/// the class with the smallest mean neighbor distance, then the lowest index.
std::vector<int> knn_predict(const Eigen::Ref<const Matrix>& train, std::span<const int> train_labels,
                             const Eigen::Ref<const Matrix>& test, int k);

/// Fraction of test columns whose predicted label matches.
double knn_evaluate(const Eigen::Ref<const Matrix>& train, std::span<const int> train_labels,
                    const Eigen::Ref<const Matrix>& test, std::span<const int> test_labels, int k);

}  // namespace lpnet
