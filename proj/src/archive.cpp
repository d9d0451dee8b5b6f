#include "lpnet/archive.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

namespace lpnet {

namespace {

constexpr char kMagic[8] = {'L', 'P', 'N', 'E', 'T', 'W', '0', '1'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes(b), end(end) {}
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[pos++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
  std::size_t pos = sizeof(kMagic);

 private:
  void need(std::size_t n) const {
    if (pos + n > end) throw IoError("weight archive is truncated");
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t end;
};

std::uint64_t checksum(const std::vector<std::uint8_t>& bytes, std::size_t begin, std::size_t end) {
  std::uint64_t sum = 0;
  for (std::size_t i = begin; i < end; ++i) sum += bytes[i];
  return sum;
}

}  // namespace

std::vector<std::uint8_t> encode_archive(const Network& net) {
  Writer w;
  w.bytes.assign(std::begin(kMagic), std::end(kMagic));
  const int levels = net.num_levels();
  w.u64(static_cast<std::uint64_t>(levels));
  for (auto d : net.dims()) w.u64(static_cast<std::uint64_t>(d));
  for (int l = 1; l <= levels; ++l) {
    w.f64(net.threshold(l));
    w.u8(net.tied() ? 1 : 0);
    w.matrix(net.forward_weight(l - 1));
    if (!net.tied()) w.matrix(net.backward_weight(l - 1));
  }
  w.u64(checksum(w.bytes, sizeof(kMagic), w.bytes.size()));
  return std::move(w.bytes);
}

Network decode_archive(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw FormatError("not a weight archive (bad magic)");
  if (bytes.size() < sizeof(kMagic) + 16) throw IoError("weight archive is truncated");
  const std::size_t payload_end = bytes.size() - 8;
  Reader r(bytes, payload_end);

  const auto levels = r.u64();
  if (levels < 1 || levels > 4096) throw FormatError("implausible level count " + std::to_string(levels));
  std::vector<Eigen::Index> dims;
  for (std::uint64_t i = 0; i <= levels; ++i) {
    const auto d = r.u64();
    if (d < 1 || d > (std::uint64_t{1} << 24)) throw FormatError("implausible dimension " + std::to_string(d));
    dims.push_back(static_cast<Eigen::Index>(d));
  }

  std::optional<NetworkBuilder> builder;
  for (int l = 1; l <= static_cast<int>(levels); ++l) {
    const double tau = r.f64();
    const bool tied = r.u8() != 0;
    if (!builder) builder.emplace(dims, tied);
    else if (builder->build().tied() != tied) throw FormatError("inconsistent tie flags");
    const auto lo = dims[static_cast<std::size_t>(l - 1)];
    const auto hi = dims[static_cast<std::size_t>(l)];
    builder->threshold(l, tau);
    builder->forward(l - 1, r.matrix(hi, lo));
    if (!tied) builder->backward(l - 1, r.matrix(lo, hi));
  }
  if (r.pos != payload_end) throw FormatError("trailing bytes in weight archive");
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[payload_end + static_cast<std::size_t>(i)]} << (8 * i);
  if (stored != checksum(bytes, sizeof(kMagic), payload_end))
    throw FormatError("weight archive checksum mismatch");
  return builder->build();
}

void save_archive(const Network& net, const std::filesystem::path& path) {
  const auto bytes = encode_archive(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Network load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_archive(bytes);
}

std::string describe_archive(const Network& net) {
  std::ostringstream os;
  os << "levels " << net.num_levels() << ", dims";
  for (auto d : net.dims()) os << ' ' << d;
  os << ", " << (net.tied() ? "tied" : "untied") << " backward weights\n";
  for (int l = 1; l <= net.num_levels(); ++l) {
    const Matrix& a = net.forward_weight(l - 1);
    os << "  node " << l << ": tau " << net.threshold(l) << ", A_" << l - 1 << ' ' << a.rows() << 'x'
       << a.cols() << " |A|_F " << a.norm();
    if (!net.tied()) os << ", |B_" << l - 1 << "|_F " << net.backward_weight(l - 1).norm();
    os << '\n';
  }
  return os.str();
}

}  // namespace lpnet
