#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "doctest.h"
#include "lpnet/archive.hpp"
#include "lpnet/config.hpp"
#include "lpnet/data.hpp"
#include "lpnet/experiment.hpp"
#include "lpnet/knn.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace lpnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lpnet-tests-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LabeledDataset fixture_images() {
  LabeledDataset d;
  d.images.resize(784, 4);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index i = 0; i < 784; ++i) d.images(i, j) = static_cast<double>((i * 7 + j * 31) % 256);
  d.labels = {3, 1, 4, 1};
  return d;
}

const char* kTinyConfig = R"(
[data]
source = synthetic
synthetic_dim = 8
synthetic_classes = 2
synthetic_per_class = 6
synthetic_test_per_class = 4
synthetic_separation = 0.05
synthetic_spread = 0.02
synthetic_seed = 3

[network]
dims = 8,8,8
goal_level = 2

[train]
iterations = 3
seed = 2
gamma = 2
batch_fraction = 0.5

[levels]
lambda0 = 0.01
lambda1 = 0.001
)";

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("IDX round trip") {
    const auto d = fixture_images();
    write_idx(d, 28, 28, scratch("img.idx"), scratch("lab.idx"));
    const auto back = load_idx(scratch("img.idx"), scratch("lab.idx"));
    CHECK(back.images.rows() == 784);
    CHECK(back.images.cols() == 4);
    CHECK(back.images == d.images);
    CHECK(back.labels == d.labels);
    CHECK(back.num_classes() == 5);
    CHECK(back.histogram() == std::vector<int>{0, 2, 0, 1, 1});
  }

  TEST_CASE("IDX errors") {
    const auto d = fixture_images();
    write_idx(d, 28, 28, scratch("img2.idx"), scratch("lab2.idx"));
    CHECK_THROWS_AS(load_idx(scratch("img2.idx"), scratch("img2.idx")), FormatError);

    LabeledDataset fewer = d;
    fewer.images.conservativeResize(784, 3);
    fewer.labels.resize(3);
    write_idx(fewer, 28, 28, scratch("img3.idx"), scratch("lab3.idx"));
    CHECK_THROWS_AS(load_idx(scratch("img3.idx"), scratch("lab2.idx")), ConsistencyError);

    auto bytes = slurp(scratch("img2.idx"));
    bytes.resize(bytes.size() - 100);
    spit(scratch("img4.idx"), bytes);
    CHECK_THROWS_AS(load_idx(scratch("img4.idx"), scratch("lab2.idx")), IoError);
    CHECK_THROWS_AS(load_idx(scratch("missing.idx"), scratch("lab2.idx")), IoError);
  }

  TEST_CASE("normalize") {
    LabeledDataset d;
    d.images.resize(4, 3);
    d.images.col(0) << 1, 1, 1, 1;
    d.images.col(1) << 0, 4, 0, 4;  // sample variance 16/3
    d.images.col(2) << 1, -1, 1, -1;
    d.images.col(2) *= std::sqrt(3.0) / 2.0;  // unit sample variance
    d.labels = {0, 1, 0};
    auto var = [](const Vector& v) { return (v.array() - v.mean()).square().sum() / (v.size() - 1); };
    const Vector before = d.images.col(2);
    std::string warning;
    set_warning_sink([&](const std::string& m) { warning = m; });
    const auto n = normalize(d);
    set_warning_sink({});
    CHECK(!warning.empty());
    CHECK(n.images.col(0).isZero(0.0));
    CHECK(var(n.images.col(1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((n.images.col(2) - before).cwiseAbs().maxCoeff() <= 1e-12);

    LabeledDataset four;
    four.images.resize(5, 1);
    four.images.col(0) << 2, -2, 2, -2, 0;
    four.images *= std::sqrt(4.0 / var(four.images.col(0)));
    four.labels = {0};
    const auto half = normalize(four);
    CHECK((half.images - 0.5 * four.images).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("balance keeps the first samples of every class") {
    LabeledDataset d;
    d.images = Matrix::Zero(1, 7);
    for (Eigen::Index j = 0; j < 7; ++j) d.images(0, j) = static_cast<double>(j);
    d.labels = {1, 0, 1, 0, 1, 0, 0};
    const auto set = balance(d, 2);
    CHECK(set.num_classes() == 2);
    CHECK(set.samples_per_class() == 2);
    CHECK(set.data() == (Matrix(1, 4) << 1, 3, 0, 2).finished());
    CHECK(balance(d).samples_per_class() == 3);
  }

  TEST_CASE("kNN") {
    std::mt19937_64 rng(1);
    const Matrix train = oracle::gaussian(3, 10, rng);
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    CHECK(knn_predict(train, labels, train.col(4), 1)[0] == 1);
    CHECK_THROWS_AS(knn_predict(train, labels, train.col(0), 11), ParameterError);

    const Matrix test = oracle::gaussian(3, 30, rng);
    for (int k : {1, 3, 5, 10}) {
      const auto pred = knn_predict(train, labels, test, k);
      for (Eigen::Index j = 0; j < test.cols(); ++j)
        CHECK(pred[static_cast<std::size_t>(j)] == oracle::knn_label(train, labels, test.col(j), k));
    }
    // k = N with balanced classes goes down the tie-break path
    const Matrix even = oracle::gaussian(3, 6, rng);
    const std::vector<int> halves{0, 0, 0, 1, 1, 1};
    CHECK(knn_predict(even, halves, test, 6) == knn_predict(even, halves, test, 6));

    std::vector<Eigen::Index> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> permuted;
    for (auto p : perm) permuted.push_back(labels[static_cast<std::size_t>(p)]);
    const std::vector<int> truth(30, 0);
    CHECK(knn_evaluate(train(Eigen::all, perm), permuted, test, truth, 3) ==
          knn_evaluate(train, labels, test, truth, 3));
  }

  TEST_CASE("kNN separates distant clusters") {
    std::mt19937_64 rng(2);
    Matrix train(5, 200), test(5, 200);
    std::vector<int> labels;
    for (Eigen::Index j = 0; j < 200; ++j) {
      const double centre = j < 100 ? -50.0 : 50.0;
      train.col(j) = oracle::gaussian(5, 1, rng).array() + centre;
      test.col(j) = oracle::gaussian(5, 1, rng).array() + centre;
      labels.push_back(j < 100 ? 0 : 1);
    }
    CHECK(knn_evaluate(train, labels, test, labels, 3) == 1.0);
  }

  TEST_CASE("archive round trip and corruption") {
    auto h = fixture::toy_hyper(2, false, 4);
    auto net = build_network({5, 4, 3}, h, {});
    net.set_threshold(2, 0.125);
    save_archive(net, scratch("net.lpw"));
    const auto back = load_archive(scratch("net.lpw"));
    CHECK(back.dims() == net.dims());
    CHECK(!back.tied());
    for (int l = 0; l < 2; ++l) {
      CHECK(back.forward_weight(l) == net.forward_weight(l));
      CHECK(back.backward_weight(l) == net.backward_weight(l));
    }
    CHECK(back.threshold(2) == 0.125);
    CHECK(describe_archive(back).find("level") != std::string::npos);

    auto bytes = encode_archive(net);
    auto flipped = bytes;
    flipped[40] ^= 0x10;
    CHECK_THROWS_AS(decode_archive(flipped), FormatError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_archive(magic), FormatError);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_archive(bytes), IoError);

    const auto tied = fixture::toy_network(2, 4, fixture::toy_hyper(2, true, 5), 0);
    CHECK(decode_archive(encode_archive(tied)).tied());
  }

  TEST_CASE("config parsing") {
    const auto cfg = parse_config(kTinyConfig, ".");
    CHECK(cfg.dims == std::vector<Eigen::Index>{8, 8, 8});
    CHECK(cfg.hyper.levels.size() == 2);
    CHECK(cfg.hyper.level(1).sparsity == 0.001);
    CHECK(cfg.hyper.level(1).frobenius == 34.0);
    CHECK(cfg.hash() == parse_config(kTinyConfig, ".").hash());

    ConfigOverrides o;
    o.seed = 99;
    o.iterations = 1;
    const auto over = parse_config(kTinyConfig, ".", o);
    CHECK(over.hyper.seed == 99);
    CHECK(over.hyper.iterations == 1);
    CHECK(over.hash() != cfg.hash());

    CHECK(default_sparsity(784, 2) == 196.0);
    CHECK_THROWS_AS(parse_config("[train]\nbogus = 1\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("[nowhere]\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("[train\niterations = 3\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\niterations = many\n", "."), ConfigError);
  }

  TEST_CASE("training run artifacts are reproducible") {
    const auto cfg = parse_config(kTinyConfig, ".");
    const auto a = scratch("run-a"), b = scratch("run-b");
    const auto summary = run_train(cfg, a);
    run_train(cfg, b);
    for (const char* f : {"weights.lpw", "metrics.csv", "metrics.jsonl", "summary.json"})
      CHECK(fs::exists(a / f));
    CHECK(slurp(a / "weights.lpw") == slurp(b / "weights.lpw"));
    CHECK(summary.iterations == 3);
    CHECK(summary.accuracy >= 0.0);
    CHECK(summary.accuracy <= 1.0);
    std::ifstream csv(a / "metrics.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "iteration,level,r1,r2,r3,a_term,u_term,total,goal_error,elapsed_ms");
  }

  TEST_CASE("command line exit codes") {
    const auto bad = scratch("bad.ini");
    std::ofstream(bad) << "[train]\nbogus = 1\n";
    const std::string cli = LPNET_CLI_PATH;
    const auto run = [](const std::string& cmd) {
      const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
      return WEXITSTATUS(status);
    };
    CHECK(run(cli + " train --config " + bad.string() + " --out " + scratch("cli-bad").string()) == 2);
    CHECK(run(cli + " frobnicate") == 2);

    const auto good = scratch("good.ini");
    std::ofstream(good) << kTinyConfig;
    CHECK(run(cli + " train --config " + good.string() + " --out " + scratch("cli-good").string()) == 0);
    CHECK(run(cli + " inspect-archive " + (scratch("cli-good") / "weights.lpw").string()) == 0);
    CHECK(run(cli + " inspect-archive " + bad.string()) == 1);
  }
}
