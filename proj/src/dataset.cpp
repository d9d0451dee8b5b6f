#include <algorithm>
#include <cmath>
#include <random>

#include "lpnet/data.hpp"

namespace lpnet {

int LabeledDataset::num_classes() const {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

std::vector<int> LabeledDataset::histogram() const {
  std::vector<int> h(static_cast<std::size_t>(num_classes()), 0);
  for (int l : labels) ++h[static_cast<std::size_t>(l)];
  return h;
}

LabeledDataset normalize(LabeledDataset data) {
  const Eigen::Index m = data.images.rows();
  if (m < 2) throw ShapeError("sample variance needs at least two entries per column");
  int constant = 0;
  for (Eigen::Index j = 0; j < data.images.cols(); ++j) {
    auto col = data.images.col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(m - 1);
    if (var > 0.0) {
      col /= std::sqrt(var);
    } else {
      col.setZero();
      ++constant;
    }
  }
  if (constant > 0) warn(std::to_string(constant) + " constant sample(s) set to zero by normalization");
  return data;
}

RepresentationSet balance(const LabeledDataset& data, int per_class) {
  if (static_cast<std::size_t>(data.images.cols()) != data.labels.size())
    throw ConsistencyError("image and label counts differ");
  for (int l : data.labels)
    if (l < 0) throw RangeError("negative label");
  const auto hist = data.histogram();
  if (hist.empty()) throw ConsistencyError("dataset is empty");
  const int smallest = *std::min_element(hist.begin(), hist.end());
  if (per_class == 0) per_class = smallest;
  if (per_class < 1 || per_class > smallest)
    throw ConsistencyError("cannot keep " + std::to_string(per_class) + " samples per class; smallest class has " +
                           std::to_string(smallest));
  const int classes = static_cast<int>(hist.size());
  Matrix out(data.images.rows(), static_cast<Eigen::Index>(classes) * per_class);
  std::vector<int> taken(hist.size(), 0);
  for (Eigen::Index j = 0; j < data.images.cols(); ++j) {
    const int c = data.labels[static_cast<std::size_t>(j)];
    int& k = taken[static_cast<std::size_t>(c)];
    if (k == per_class) continue;
    out.col(column_index(c + 1, k + 1, classes, per_class)) = data.images.col(j);
    ++k;
  }
  return {std::move(out), classes, per_class};
}

namespace {

Matrix class_means(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, spec.separation);
  Matrix means(spec.dim, spec.num_classes);
  for (Eigen::Index c = 0; c < means.cols(); ++c)
    for (Eigen::Index i = 0; i < means.rows(); ++i) means(i, c) = normal(rng);
  return means;
}

RepresentationSet draw_around(const Matrix& means, const SyntheticSpec& spec, int per_class,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, spec.spread);
  Matrix out(spec.dim, static_cast<Eigen::Index>(spec.num_classes) * per_class);
  for (int c = 0; c < spec.num_classes; ++c)
    for (int k = 0; k < per_class; ++k) {
      auto col = out.col(column_index(c + 1, k + 1, spec.num_classes, per_class));
      for (Eigen::Index i = 0; i < spec.dim; ++i) col[i] = means(i, c) + normal(rng);
    }
  return {std::move(out), spec.num_classes, per_class};
}

void check(const SyntheticSpec& spec) {
  if (spec.dim < 1 || spec.num_classes < 1 || spec.samples_per_class < 1)
    throw ParameterError("synthetic data needs positive dimensions and counts");
  if (!(spec.separation >= 0.0) || !(spec.spread >= 0.0))
    throw ParameterError("synthetic deviations must be nonnegative");
}

}  // namespace

RepresentationSet synthetic_gaussians(const SyntheticSpec& spec) {
  check(spec);
  std::mt19937_64 rng(spec.seed);
  const Matrix means = class_means(spec, rng);
  return draw_around(means, spec, spec.samples_per_class, rng);
}

std::pair<RepresentationSet, RepresentationSet> synthetic_split(const SyntheticSpec& spec,
                                                                int test_per_class) {
  check(spec);
  if (test_per_class < 1) throw ParameterError("test split needs samples");
  std::mt19937_64 rng(spec.seed);
  const Matrix means = class_means(spec, rng);
  auto train = draw_around(means, spec, spec.samples_per_class, rng);
  auto test = draw_around(means, spec, test_per_class, rng);
  return {std::move(train), std::move(test)};
}

}  // namespace lpnet
