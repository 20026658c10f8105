#include "poal/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <tbb/parallel_for.h>

#include "poal/random.hpp"

namespace poal {

namespace {

void check_dim(std::size_t dim, Eigen::Index got) {
  if (static_cast<Eigen::Index>(dim) != got) throw std::invalid_argument("tree: feature dimension mismatch");
}

class Builder {
 public:
  Builder(const Eigen::MatrixXd& X, std::span<const Label> y, const TreeParams& prm, std::uint64_t seed)
      : X_(X), y_(y), prm_(prm), rng_(seed) {
    const auto d = static_cast<std::size_t>(X.cols());
    n_try_ = (prm.max_features == 0 || prm.max_features >= d) ? d : prm.max_features;
    features_.resize(d);
  }

  std::vector<TreeModel::Node> build(std::vector<std::size_t> idx) {
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  std::int32_t grow(std::vector<std::size_t>& idx, int depth) {
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::size_t pos = 0;
    for (std::size_t i : idx) pos += y_[i] == Label::Positive;
    const std::size_t n = idx.size();
    nodes_[self].positive_fraction = n == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(n);
    if (pos == 0 || pos == n || depth >= prm_.max_depth || n < 2 * std::max<std::size_t>(prm_.min_leaf, 1))
      return self;

    const Split s = best_split(idx);
    if (s.feature < 0) return self;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) (X_(static_cast<Eigen::Index>(i), s.feature) <= s.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    nodes_[self].feature = s.feature;
    nodes_[self].threshold = s.threshold;
    const std::int32_t l = grow(left, depth + 1);
    nodes_[self].left = l;
    const std::int32_t r = grow(right, depth + 1);
    nodes_[self].right = r;
    return self;
  }

  Split best_split(const std::vector<std::size_t>& idx) {
    std::iota(features_.begin(), features_.end(), 0);
    if (n_try_ < features_.size()) {
      for (std::size_t i = 0; i < n_try_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
        std::swap(features_[i], features_[pick(rng_)]);
      }
      std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(n_try_));
    }

    const std::size_t n = idx.size();
    const std::size_t min_leaf = std::max<std::size_t>(prm_.min_leaf, 1);
    std::size_t total_pos = 0;
    for (std::size_t i : idx) total_pos += y_[i] == Label::Positive;

    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    vals_.resize(n);
    for (std::size_t k = 0; k < n_try_; ++k) {
      const auto f = static_cast<Eigen::Index>(features_[k]);
      for (std::size_t j = 0; j < n; ++j)
        vals_[j] = {X_(static_cast<Eigen::Index>(idx[j]), f), y_[idx[j]] == Label::Positive};
      std::sort(vals_.begin(), vals_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t left_pos = 0;
      for (std::size_t i = 1; i < n; ++i) {
        left_pos += vals_[i - 1].second;
        if (!(vals_[i - 1].first < vals_[i].first) || i < min_leaf || n - i < min_leaf) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
        const double lp = static_cast<double>(left_pos), rp = static_cast<double>(total_pos - left_pos);
        // n times the weighted Gini impurity, up to a factor of 2.
        const double imp = lp * (nl - lp) / nl + rp * (nr - rp) / nr;
        if (imp < best.impurity - 1e-12) {
          best.impurity = imp;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = vals_[i - 1].first + (vals_[i].first - vals_[i - 1].first) / 2;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  std::span<const Label> y_;
  const TreeParams& prm_;
  std::mt19937_64 rng_;
  std::size_t n_try_ = 0;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, bool>> vals_;
  std::vector<TreeModel::Node> nodes_;
};

void check_training(const Eigen::MatrixXd& X, std::span<const Label> y) {
  if (X.rows() == 0) throw std::invalid_argument("tree: empty training set");
  if (X.cols() == 0) throw std::invalid_argument("tree: zero-dimensional features");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("tree: label count mismatch");
}

}  // namespace

int TreeModel::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  // Children always follow their parent in storage.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double TreeModel::leaf_fraction(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  check_dim(dim_, x.size());
  std::size_t i = 0;
  while (nodes_[i].feature >= 0)
    i = static_cast<std::size_t>(x(nodes_[i].feature) <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right);
  return nodes_[i].positive_fraction;
}

TreeModel fit_tree(const Eigen::MatrixXd& X, std::span<const Label> y, std::span<const std::size_t> sample,
                   const TreeParams& params, std::uint64_t seed) {
  check_training(X, y);
  if (sample.empty()) throw std::invalid_argument("tree: empty sample");
  if (params.max_depth < 0) throw std::invalid_argument("tree: negative max_depth");
  Builder b(X, y, params, seed);
  return TreeModel(b.build(std::vector<std::size_t>(sample.begin(), sample.end())),
                   static_cast<std::size_t>(X.cols()));
}

TreeModel fit_tree(const Eigen::MatrixXd& X, std::span<const Label> y, const TreeParams& params) {
  std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
  std::iota(all.begin(), all.end(), 0);
  return fit_tree(X, y, all, params, 0);
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<Label> Committee::votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::vector<Label> out;
  out.reserve(members_.size());
  for (const auto& t : members_) out.push_back(t.predict(x));
  return out;
}

int Committee::positive_votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int k = 0;
  for (const auto& t : members_) k += t.predict(x) == Label::Positive;
  return k;
}

Committee fit_committee(const Eigen::MatrixXd& X, std::span<const Label> y, std::size_t size, std::uint64_t seed,
                        const TreeParams& params) {
  check_training(X, y);
  if (size == 0) throw std::invalid_argument("committee: size must be positive");
  std::vector<TreeModel> members;
  for (std::size_t k = 0; k < size; ++k) {
    const std::uint64_t s = derive_seed(seed, k);
    const auto sample = bootstrap_sample(static_cast<std::size_t>(X.rows()), s);
    members.push_back(fit_tree(X, y, sample, params, derive_seed(s, 1)));
  }
  return Committee(std::move(members));
}

double ForestModel::score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (trees_.empty()) throw std::logic_error("forest: no trees");
  std::size_t pos = 0;
  for (const auto& t : trees_) pos += t.predict(x) == Label::Positive;
  return static_cast<double>(pos) / static_cast<double>(trees_.size());
}

Eigen::VectorXd ForestModel::score_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = score(X.row(i));
  return out;
}

ForestModel fit_forest(const Eigen::MatrixXd& X, std::span<const Label> y, std::size_t num_trees, std::uint64_t seed,
                       TreeParams params) {
  check_training(X, y);
  if (num_trees == 0) throw std::invalid_argument("forest: need at least one tree");
  if (params.max_features == 0)
    params.max_features = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
  std::vector<TreeModel> trees(num_trees);
  tbb::parallel_for(std::size_t{0}, num_trees, [&](std::size_t t) {
    const std::uint64_t s = derive_seed(seed, t);
    const auto sample = bootstrap_sample(static_cast<std::size_t>(X.rows()), s);
    trees[t] = fit_tree(X, y, sample, params, derive_seed(s, 1));
  });
  return ForestModel(std::move(trees));
}

}  // namespace poal
