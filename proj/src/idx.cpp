#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "lpnet/data.hpp"

namespace lpnet {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                       const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw IoError(path.string() + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  if (const auto magic = read_u32(img, 0, images); magic != kImageMagic)
    throw FormatError(images.string() + ": image magic " + std::to_string(magic));
  if (const auto magic = read_u32(lab, 0, labels); magic != kLabelMagic)
    throw FormatError(labels.string() + ": label magic " + std::to_string(magic));

  const std::size_t count = read_u32(img, 4, images);
  const std::size_t rows = read_u32(img, 8, images);
  const std::size_t cols = read_u32(img, 12, images);
  const std::size_t label_count = read_u32(lab, 4, labels);
  if (count != label_count)
    throw ConsistencyError(std::to_string(count) + " images but " + std::to_string(label_count) +
                           " labels");
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw IoError(images.string() + ": truncated pixel data");
  if (lab.size() < 8 + count) throw IoError(labels.string() + ": truncated label data");

  LabeledDataset out;
  out.images.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t i = 0; i < pixels; ++i)
      out.images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img[16 + j * pixels + i];
  out.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  return out;
}

void write_idx(const LabeledDataset& data, std::uint32_t rows, std::uint32_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels) {
  if (static_cast<std::size_t>(data.images.cols()) != data.labels.size())
    throw ConsistencyError("image and label counts differ");
  if (data.images.rows() != static_cast<Eigen::Index>(rows) * cols)
    throw ShapeError("image geometry does not match the rows of the matrix");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw IoError("cannot create IDX files");
  const auto count = static_cast<std::uint32_t>(data.labels.size());
  put_u32(img, kImageMagic);
  put_u32(img, count);
  put_u32(img, rows);
  put_u32(img, cols);
  for (Eigen::Index j = 0; j < data.images.cols(); ++j)
    for (Eigen::Index i = 0; i < data.images.rows(); ++i) {
      const double v = std::clamp(std::round(data.images(i, j)), 0.0, 255.0);
      img.put(static_cast<char>(static_cast<std::uint8_t>(v)));
    }
  put_u32(lab, kLabelMagic);
  put_u32(lab, count);
  for (int l : data.labels) {
    if (l < 0 || l > 255) throw RangeError("label " + std::to_string(l) + " does not fit a byte");
    lab.put(static_cast<char>(static_cast<std::uint8_t>(l)));
  }
  if (!img || !lab) throw IoError("failed writing IDX files");
}

}  // namespace lpnet
