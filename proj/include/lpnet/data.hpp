#pragma once
// Labeled image sets: IDX files, variance normalization, class balancing and
// synthetic Gaussian classes.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

struct LabeledDataset {
  Matrix images;            // one sample per column
  std::vector<int> labels;  // 0-based

  int num_classes() const;
  std::vector<int> histogram() const;
};

/// Reads big-endian IDX image (0x803) and label (0x801) files. Pixels keep
/// their byte values 0..255.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes `images` (entries rounded and clamped to 0..255) as an IDX pair
/// with the given image geometry.
void write_idx(const LabeledDataset& data, std::uint32_t rows, std::uint32_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels);

/// Scales every column to unit sample variance (unbiased); no centering.
/// Constant columns become zero with a warning.
LabeledDataset normalize(LabeledDataset data);

/// Keeps the first `per_class` samples of every class in original order and
/// arranges them class-major. per_class = 0 uses the smallest class count.
RepresentationSet balance(const LabeledDataset& data, int per_class = 0);

struct SyntheticSpec {
  Eigen::Index dim = 32;
  int num_classes = 3;
  int samples_per_class = 40;
  double separation = 3.0;  // std of the class means
  double spread = 1.0;      // std around each mean
  std::uint64_t seed = 1;
};

/// Class means are drawn first, then samples class by class.
RepresentationSet synthetic_gaussians(const SyntheticSpec& spec);

/// A second draw around the same class means, e.g. for a test split.
std::pair<RepresentationSet, RepresentationSet> synthetic_split(const SyntheticSpec& spec,
                                                                int test_per_class);

}  // namespace lpnet
