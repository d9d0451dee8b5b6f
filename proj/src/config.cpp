#include "lpnet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lpnet {

namespace {

using boost::property_tree::ptree;

class Section {
 public:
  Section(std::string name, const ptree* tree) : name_(std::move(name)), tree_(tree) {}

  template <class T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    if (!tree_) return;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return;
    out = parse<T>(key, it->second.data());
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    used_.insert(key);
    if (!tree_) return;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return;
    out = parse<T>(key, it->second.data());
  }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_)
      if (!used_.count(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
  }

  template <class T>
  T parse(const std::string& key, const std::string& text) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      return std::filesystem::path(text);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw ConfigError("[" + name_ + "] " + key + ": expected a boolean, got '" + text + "'");
    } else {
      std::istringstream is(text);
      T v{};
      is >> v;
      if (!is || !(is >> std::ws).eof())
        throw ConfigError("[" + name_ + "] " + key + ": cannot parse '" + text + "'");
      return v;
    }
  }

 private:
  std::string name_;
  const ptree* tree_;
  std::set<std::string> used_;
};

const ptree* child(const ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

std::vector<Eigen::Index> parse_dims(const std::string& text) {
  std::vector<Eigen::Index> dims;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::istringstream one(item);
    long long d = 0;
    one >> d;
    if (!one || !(one >> std::ws).eof() || d < 1) throw ConfigError("[network] dims: bad entry '" + item + "'");
    dims.push_back(static_cast<Eigen::Index>(d));
  }
  if (dims.size() < 2) throw ConfigError("[network] dims needs at least two entries");
  return dims;
}

Mode parse_mode(const std::string& text) {
  if (text == "syn") return Mode::synchronous;
  if (text == "asyn") return Mode::asynchronous;
  throw ConfigError("[train] mode must be syn or asyn, got '" + text + "'");
}

void read_level(Section& s, LevelWeights& w, std::optional<double>& sparsity) {
  s.read("lambda0", w.discrimination);
  if (auto v = s.raw("lambda1")) {
    if (*v == "auto")
      sparsity.reset();
    else
      sparsity = s.parse<double>("lambda1", *v);
  }
  s.read("lambda2", w.frobenius);
  s.read("lambda3", w.orthogonality);
  s.read("lambda4", w.log_det);
  s.read("lambda5", w.tying);
  s.read("lambda_b", w.backward_prop);
  s.read("lambda_f", w.forward_prop);
}

}  // namespace

double default_sparsity(Eigen::Index dim, int level) {
  if (level < 1) throw IndexError("level " + std::to_string(level));
  return static_cast<double>(dim) / (2.0 * level);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical); }

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const ConfigOverrides& overrides) {
  ptree root;
  try {
    std::istringstream is(text);
    boost::property_tree::read_ini(is, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, tree] : root) {
    if (!tree.data().empty()) throw ConfigError("key '" + name + "' outside a section");
    const bool known = name == "data" || name == "network" || name == "train" || name == "levels" ||
                       name == "theorem1" || name.rfind("level.", 0) == 0;
    if (!known) throw ConfigError("unknown section [" + name + "]");
  }

  ExperimentConfig cfg;
  auto& d = cfg.data;
  Section data("data", child(root, "data"));
  data.read("source", d.source);
  data.read("train_images", d.train_images);
  data.read("train_labels", d.train_labels);
  data.read("test_images", d.test_images);
  data.read("test_labels", d.test_labels);
  data.read("train_subset", d.train_subset);
  data.read("test_subset", d.test_subset);
  data.read("normalize", d.normalize);
  data.read("synthetic_dim", d.synthetic.dim);
  data.read("synthetic_classes", d.synthetic.num_classes);
  data.read("synthetic_per_class", d.synthetic.samples_per_class);
  data.read("synthetic_test_per_class", d.synthetic_test_per_class);
  data.read("synthetic_separation", d.synthetic.separation);
  data.read("synthetic_spread", d.synthetic.spread);
  data.read("synthetic_seed", d.synthetic.seed);
  data.reject_unknown();
  if (d.source != "idx" && d.source != "synthetic")
    throw ConfigError("[data] source must be idx or synthetic");
  for (auto* p : {&d.train_images, &d.train_labels, &d.test_images, &d.test_labels})
    if (!p->empty() && p->is_relative()) *p = base_dir / *p;
  if (d.source == "idx" && (d.train_images.empty() || d.train_labels.empty() ||
                            d.test_images.empty() || d.test_labels.empty()))
    throw ConfigError("[data] idx source needs train/test image and label paths");
  if (d.train_subset < 0 || d.test_subset < 0) throw ConfigError("[data] subsets must be nonnegative");

  Section network("network", child(root, "network"));
  if (auto dims = network.raw("dims"))
    cfg.dims = parse_dims(*dims);
  else
    throw ConfigError("[network] dims is required");
  network.read("tie_backward", cfg.hyper.tie_backward);
  network.read("goal_level", cfg.goal.level);
  network.read("goal", cfg.goal.kind);
  network.read("goal_discrimination", cfg.goal.discrimination);
  network.read("goal_sparsity", cfg.goal.sparsity);
  network.read("goal_sweeps", cfg.goal.sweeps);
  network.reject_unknown();
  const int levels = static_cast<int>(cfg.dims.size()) - 1;
  if (cfg.goal.kind != "dynamic" && cfg.goal.kind != "none")
    throw ConfigError("[network] goal must be dynamic or none");
  if (cfg.goal.level < 0 || cfg.goal.level > levels)
    throw ConfigError("[network] goal_level outside 0.." + std::to_string(levels));
  if (cfg.goal.sweeps < 1) throw ConfigError("[network] goal_sweeps must be positive");

  auto& h = cfg.hyper;
  Section train("train", child(root, "train"));
  std::string mode = "syn";
  train.read("iterations", h.iterations);
  train.read("mode", mode);
  train.read("rho", h.rho);
  train.read("batch_fraction", h.batch_fraction);
  train.read("bernoulli_p", h.bernoulli_p);
  train.read("gamma", h.gamma);
  train.read("seed", h.seed);
  train.read("knn_k", h.knn_k);
  train.read("cycles", h.cycles_per_iteration);
  train.read("goals_in_stage_two", h.goals_in_stage_two);
  train.read("parallel", h.parallel_stage_two);
  train.read("check_descent", h.check_descent);
  train.reject_unknown();
  h.mode = parse_mode(mode);

  LevelWeights defaults{34, 0, 34, 34, 34, 34, 1, 1};
  std::optional<double> default_l1;
  Section shared("levels", child(root, "levels"));
  read_level(shared, defaults, default_l1);
  shared.reject_unknown();
  h.levels.assign(static_cast<std::size_t>(levels), defaults);
  for (int l = 1; l <= levels; ++l) {
    std::optional<double> l1 = default_l1;
    Section own("level." + std::to_string(l), child(root, "level." + std::to_string(l)));
    read_level(own, h.level(l), l1);
    own.reject_unknown();
    h.level(l).sparsity = l1 ? *l1 : default_sparsity(cfg.dims[static_cast<std::size_t>(l)], l);
  }
  for (const auto& [name, tree] : root)
    if (name.rfind("level.", 0) == 0) {
      const auto suffix = name.substr(6);
      int l = 0;
      std::istringstream is(suffix);
      if (!(is >> l) || !(is >> std::ws).eof() || l < 1 || l > levels)
        throw ConfigError("section [" + name + "] does not name a node 1.." + std::to_string(levels));
    }

  Section thm("theorem1", child(root, "theorem1"));
  thm.read("epsilon", cfg.theorem1_epsilon);
  thm.reject_unknown();

  if (overrides.seed) h.seed = *overrides.seed;
  if (overrides.mode) h.mode = *overrides.mode;
  if (overrides.iterations) h.iterations = *overrides.iterations;
  if (overrides.subset) d.train_subset = d.test_subset = *overrides.subset;

  try {
    h.validate(levels);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  std::ostringstream c;
  c.precision(17);
  c << "source=" << d.source << "\ntrain_images=" << d.train_images.filename().string()
    << "\ntrain_labels=" << d.train_labels.filename().string()
    << "\ntest_images=" << d.test_images.filename().string()
    << "\ntest_labels=" << d.test_labels.filename().string() << "\ntrain_subset=" << d.train_subset
    << "\ntest_subset=" << d.test_subset << "\nnormalize=" << d.normalize
    << "\nsynthetic=" << d.synthetic.dim << ',' << d.synthetic.num_classes << ','
    << d.synthetic.samples_per_class << ',' << d.synthetic_test_per_class << ','
    << d.synthetic.separation << ',' << d.synthetic.spread << ',' << d.synthetic.seed << "\ndims=";
  for (auto dim : cfg.dims) c << dim << ',';
  c << "\ntie_backward=" << h.tie_backward << "\ngoal=" << cfg.goal.kind << '@' << cfg.goal.level << ','
    << cfg.goal.discrimination.value_or(-1) << ',' << cfg.goal.sparsity.value_or(-1) << ','
    << cfg.goal.sweeps << "\niterations=" << h.iterations << "\nmode=" << static_cast<int>(h.mode)
    << "\nrho=" << h.rho << "\nbatch_fraction=" << h.batch_fraction << "\nbernoulli_p=" << h.bernoulli_p
    << "\ngamma=" << h.gamma << "\nseed=" << h.seed << "\nknn_k=" << h.knn_k
    << "\ncycles=" << h.cycles_per_iteration << "\ngoals_in_stage_two=" << h.goals_in_stage_two
    << "\nepsilon=" << cfg.theorem1_epsilon << '\n';
  for (int l = 1; l <= levels; ++l) {
    const auto& w = h.level(l);
    c << "level" << l << '=' << w.discrimination << ',' << w.sparsity << ',' << w.frobenius << ','
      << w.orthogonality << ',' << w.log_det << ',' << w.tying << ',' << w.backward_prop << ','
      << w.forward_prop << '\n';
  }
  cfg.canonical = c.str();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path(), overrides);
}

}  // namespace lpnet
