#include "poal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"

#include "poal/csv.hpp"

namespace poal {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Pool

Pool::Pool(std::size_t num_nodes, std::vector<Pair> pairs, Eigen::MatrixXd features,
           std::optional<GroundTruth> truth)
    : n_(num_nodes), pairs_(std::move(pairs)), features_(std::move(features)), truth_(std::move(truth)) {
  if (static_cast<std::size_t>(features_.rows()) != pairs_.size())
    throw std::invalid_argument("feature rows do not match pair count");
  if (!pairs_.empty() && features_.cols() == 0) throw std::invalid_argument("zero-dimensional features");
  if (!features_.allFinite()) throw std::invalid_argument("non-finite feature value");
  if (truth_ && truth_->num_nodes() != n_) throw std::invalid_argument("ground truth node count mismatch");
  index_.assign(n_ * n_, -1);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const Pair& p = pairs_[i];
    if (p.src >= n_ || p.dst >= n_) throw std::invalid_argument("pool pair outside node range");
    if (p.reflexive()) throw std::invalid_argument("pool contains a reflexive pair");
    auto& slot = index_[std::size_t{p.src} * n_ + p.dst];
    if (slot >= 0) throw std::invalid_argument("duplicate pool pair");
    slot = static_cast<std::int32_t>(i);
  }
}

std::int64_t Pool::index_of(Pair p) const {
  if (p.src >= n_ || p.dst >= n_) return -1;
  return index_[std::size_t{p.src} * n_ + p.dst];
}

const GroundTruth& Pool::truth() const {
  if (!truth_) throw std::logic_error("pool has no ground truth attached");
  return *truth_;
}

double Pool::positive_rate() const {
  if (pairs_.empty()) return 0.0;
  std::size_t pos = 0;
  for (const Pair& p : pairs_) pos += truth().contains(p);
  return static_cast<double>(pos) / static_cast<double>(pairs_.size());
}

// ---------------------------------------------------------------------------
// Synthetic generation

Pool generate_synthetic(const SyntheticParams& prm) {
  if (prm.num_layers < 2) throw std::invalid_argument("need at least 2 layers");
  if (prm.num_nodes < prm.num_layers) throw std::invalid_argument("fewer nodes than layers");
  if (!(prm.edge_prob > 0.0 && prm.edge_prob <= 1.0)) throw std::invalid_argument("edge_prob must be in (0, 1]");
  if (prm.embedding_dim < 2) throw std::invalid_argument("embedding_dim must be >= 2");
  if (!(prm.noise >= 0.0) || !(prm.drift >= 0.0)) throw std::invalid_argument("noise and drift must be >= 0");
  if (!(prm.pair_fraction > 0.0 && prm.pair_fraction <= 1.0))
    throw std::invalid_argument("pair_fraction must be in (0, 1]");

  const std::size_t n = prm.num_nodes;
  const auto k = static_cast<Eigen::Index>(prm.embedding_dim);
  std::mt19937_64 rng(prm.seed);
  std::bernoulli_distribution edge(prm.edge_prob);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Layers are contiguous id ranges, so every edge goes from a lower id.
  std::vector<std::size_t> layer(n);
  for (std::size_t i = 0; i < n; ++i) layer[i] = i * prm.num_layers / n;

  std::vector<Pair> edges;
  std::vector<std::vector<NodeId>> parents(n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (layer[u] < layer[v] && edge(rng)) {
        edges.push_back({u, v});
        parents[v].push_back(u);
      }
  if (edges.empty()) throw std::invalid_argument("generated graph has no edges");
  GroundTruth truth(n, edges);

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), k);
  for (std::size_t v = 0; v < n; ++v) {
    Eigen::RowVectorXd own(k);
    for (Eigen::Index j = 0; j < k; ++j) own(j) = gauss(rng);
    const auto row = static_cast<Eigen::Index>(v);
    if (parents[v].empty()) {
      z.row(row) = own;
    } else {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(k);
      for (NodeId p : parents[v]) mean += z.row(p);
      z.row(row) = mean / static_cast<double>(parents[v].size()) + prm.drift * own;
    }
  }

  std::vector<bool> active(n, false);
  for (const Pair& e : edges) active[e.src] = active[e.dst] = true;
  std::vector<Pair> pairs;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = 0; v < n; ++v)
      if (u != v && active[u] && active[v]) pairs.push_back({u, v});
  if (prm.pair_fraction < 1.0) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(prm.pair_fraction * static_cast<double>(pairs.size()))));
    pairs.resize(keep);
    std::sort(pairs.begin(), pairs.end());
  }

  const Eigen::Index d = 3 * k + 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [u, v] = pairs[i];
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).segment(0, k) = z.row(u);
    x.row(r).segment(k, k) = z.row(v);
    x.row(r).segment(2 * k, k) = z.row(v) - z.row(u);
    x(r, 3 * k) = static_cast<double>(layer[v]) - static_cast<double>(layer[u]);
    for (Eigen::Index j = 0; j < d; ++j) x(r, j) += prm.noise * gauss(rng);
  }
  return Pool(n, std::move(pairs), std::move(x), std::move(truth));
}

// ---------------------------------------------------------------------------
// File I/O

namespace {

struct FeatureRows {
  std::vector<Pair> pairs;
  std::vector<std::vector<double>> rows;
  std::size_t max_node = 0;
};

FeatureRows read_features(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  FeatureRows out;
  std::set<Pair> seen;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = csv::split(line);
    if (fields.empty()) continue;
    if (line_no == 1 && !csv::is_integer(fields[0])) continue;  // header
    if (fields.size() < 3) throw csv::ParseError(path, line_no, "expected src,dst and at least one feature");
    if (width && fields.size() != *width)
      throw csv::ParseError(path, line_no,
                            "ragged row: " + std::to_string(fields.size() - 2) + " features, expected " +
                                std::to_string(*width - 2));
    width = fields.size();
    const Pair p{csv::parse_node(fields[0], path, line_no), csv::parse_node(fields[1], path, line_no)};
    if (p.reflexive()) throw csv::ParseError(path, line_no, "reflexive pair");
    if (!seen.insert(p).second) throw csv::ParseError(path, line_no, "duplicate pair");
    std::vector<double> row;
    row.reserve(fields.size() - 2);
    for (std::size_t j = 2; j < fields.size(); ++j) row.push_back(csv::parse_real(fields[j], path, line_no));
    out.max_node = std::max<std::size_t>(out.max_node, std::max(p.src, p.dst));
    out.pairs.push_back(p);
    out.rows.push_back(std::move(row));
  }
  if (out.pairs.empty()) throw csv::ParseError(path, line_no, "no feature rows");
  return out;
}

Pool assemble(FeatureRows fr, std::optional<fs::path> edges_path) {
  std::size_t n = fr.max_node + 1;
  std::optional<GroundTruth> truth;
  if (edges_path) {
    GroundTruth g = load_ground_truth_csv(*edges_path, n);
    n = std::max(n, g.num_nodes());
    truth = g.num_nodes() == n ? std::move(g) : GroundTruth(n, g.pairs());
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(fr.rows.size()), static_cast<Eigen::Index>(fr.rows[0].size()));
  for (std::size_t i = 0; i < fr.rows.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(
        fr.rows[i].data(), static_cast<Eigen::Index>(fr.rows[i].size()));
  return Pool(n, std::move(fr.pairs), std::move(x), std::move(truth));
}

}  // namespace

Pool load_pool(const fs::path& edges_path, const fs::path& features_path) {
  return assemble(read_features(features_path), edges_path);
}

Pool load_pool_dir(const fs::path& dir) {
  const fs::path edges = dir / "edges.csv";
  const fs::path feats = dir / "features.csv";
  if (!fs::exists(feats)) {
    if (fs::exists(dir / "pool.json")) return load_pool_json(dir / "pool.json");
    throw std::runtime_error("dataset " + dir.string() + " has no features.csv");
  }
  return assemble(read_features(feats), fs::exists(edges) ? std::optional<fs::path>(edges) : std::nullopt);
}

void save_pool(const Pool& pool, const fs::path& dir) {
  fs::create_directories(dir);
  if (pool.has_truth()) {
    std::ofstream e(dir / "edges.csv");
    e << "src,dst\n";
    for (const Pair& p : transitive_reduction(pool.truth())) e << p.src << ',' << p.dst << '\n';
  }
  std::ofstream f(dir / "features.csv");
  f << "src,dst";
  for (std::size_t j = 0; j < pool.dim(); ++j) f << ",f" << j + 1;
  f << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    f << pool.pair(i).src << ',' << pool.pair(i).dst;
    for (std::size_t j = 0; j < pool.dim(); ++j) f << ',' << pool.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    f << '\n';
  }
  save_pool_json(pool, dir / "pool.json");
}

void save_pool_json(const Pool& pool, const fs::path& path) {
  json j;
  j["num_nodes"] = pool.num_nodes();
  json edges = json::array();
  if (pool.has_truth())
    for (const Pair& p : transitive_reduction(pool.truth())) edges.push_back({p.src, p.dst});
  j["edges"] = pool.has_truth() ? edges : json(nullptr);
  json pairs = json::array();
  json feats = json::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pairs.push_back({pool.pair(i).src, pool.pair(i).dst});
    const auto row = pool.feature(i);
    feats.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["pairs"] = std::move(pairs);
  j["features"] = std::move(feats);
  std::ofstream(path) << j.dump() << '\n';
}

Pool load_pool_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(in);
  const auto n = j.at("num_nodes").get<std::size_t>();
  std::optional<GroundTruth> truth;
  if (!j.at("edges").is_null()) {
    std::vector<Pair> edges;
    for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    truth = GroundTruth(n, edges);
  }
  std::vector<Pair> pairs;
  for (const auto& p : j.at("pairs")) pairs.push_back({p.at(0).get<NodeId>(), p.at(1).get<NodeId>()});
  const auto& fj = j.at("features");
  const auto d = fj.empty() ? 0 : fj.at(0).size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (fj.at(i).size() != d) throw std::runtime_error(path.string() + ": ragged feature row " + std::to_string(i));
    for (std::size_t c = 0; c < d; ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = fj.at(i).at(c).get<double>();
  }
  return Pool(n, std::move(pairs), std::move(x), std::move(truth));
}

// ---------------------------------------------------------------------------
// Split

Split split(const Pool& pool, double train_fraction, std::size_t n_seeds, std::uint64_t seed, bool balanced_seeds) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<Pair> order = pool.pairs();
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  if (n_seeds > n_train)
    throw std::invalid_argument("pool too small: " + std::to_string(n_train) + " training pairs for " +
                                std::to_string(n_seeds) + " seeds");
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  std::vector<Pair> shuffled = s.train;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  if (!balanced_seeds) {
    s.seeds.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_seeds));
    return s;
  }
  std::vector<Pair> pos, neg;
  for (const Pair& p : shuffled) (pool.truth().contains(p) ? pos : neg).push_back(p);
  std::size_t ip = 0, in = 0;
  while (s.seeds.size() < n_seeds) {
    const bool want_pos = s.seeds.size() % 2 == 0;
    if ((want_pos && ip < pos.size()) || in >= neg.size())
      s.seeds.push_back(pos[ip++]);
    else
      s.seeds.push_back(neg[in++]);
  }
  return s;
}

}  // namespace poal
