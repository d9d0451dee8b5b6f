#include "lpnet/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lpnet/kernels.hpp"

namespace lpnet {

namespace {

int vote(const std::vector<std::pair<double, int>>& nearest, int num_classes) {
  std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
  std::vector<double> dist(static_cast<std::size_t>(num_classes), 0.0);
  for (const auto& [d, label] : nearest) {
    ++count[static_cast<std::size_t>(label)];
    dist[static_cast<std::size_t>(label)] += std::sqrt(d);
  }
  int best = -1;
  for (int c = 0; c < num_classes; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (count[i] == 0) continue;
    if (best < 0) {
      best = c;
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    // Compare mean distances without dividing: dist[i]/count[i] < dist[b]/count[b].
    if (count[i] > count[b] || (count[i] == count[b] && dist[i] < dist[b])) best = c;
  }
  return best;
}

}  // namespace

std::vector<int> knn_predict(const Eigen::Ref<const Matrix>& train, std::span<const int> train_labels,
                             const Eigen::Ref<const Matrix>& test, int k) {
  if (static_cast<Eigen::Index>(train_labels.size()) != train.cols())
    throw ShapeError("one training label per column required");
  if (k < 1) throw ParameterError("k must be positive");
  if (k > train.cols()) throw ParameterError("k exceeds the number of training points");
  if (test.rows() != train.rows()) throw ShapeError("train and test dimensions differ");
  int classes = 0;
  for (int l : train_labels) {
    if (l < 0) throw ParameterError("negative label");
    classes = std::max(classes, l + 1);
  }

  // Contiguous copies so every column is a plain span.
  const Matrix tr = train;
  const Matrix te = test;
  const auto m = static_cast<std::size_t>(tr.rows());
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(te.cols()));
  std::vector<std::pair<double, int>> cand(static_cast<std::size_t>(tr.cols()));
  for (Eigen::Index j = 0; j < te.cols(); ++j) {
    const std::span<const double> q{te.col(j).data(), m};
    for (Eigen::Index i = 0; i < tr.cols(); ++i)
      cand[static_cast<std::size_t>(i)] = {kernels::squared_distance({tr.col(i).data(), m}, q),
                                           train_labels[static_cast<std::size_t>(i)]};
    // (distance, label) order keeps the neighbor set independent of the
    // training order.
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    out.push_back(vote({cand.begin(), cand.begin() + k}, classes));
  }
  return out;
}

double knn_evaluate(const Eigen::Ref<const Matrix>& train, std::span<const int> train_labels,
                    const Eigen::Ref<const Matrix>& test, std::span<const int> test_labels, int k) {
  if (static_cast<Eigen::Index>(test_labels.size()) != test.cols())
    throw ShapeError("one test label per column required");
  if (test.cols() == 0) throw ParameterError("no test points");
  const auto pred = knn_predict(train, train_labels, test, k);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) correct += pred[j] == test_labels[j];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace lpnet
