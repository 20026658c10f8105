#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "poal/order.hpp"

namespace poal {

struct TreeParams {
  int max_depth = 8;
  std::size_t min_leaf = 1;
  /// Features tried per split; 0 means all of them.
  std::size_t max_features = 0;
};

/// CART classifier with Gini splits at midpoints between distinct values.
class TreeModel {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 for a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double positive_fraction = 0.0;
  };

  TreeModel() = default;
  TreeModel(std::vector<Node> nodes, std::size_t dim) : nodes_(std::move(nodes)), dim_(dim) {}

  std::size_t dim() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;

  /// Leaf positive fraction; the vote is +1 only above one half.
  double leaf_fraction(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Label predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return leaf_fraction(x) > 0.5 ? Label::Positive : Label::Negative;
  }

 private:
  std::vector<Node> nodes_;
  std::size_t dim_ = 0;
};

/// Fits on rows `sample` of X (repeats allowed, e.g. a bootstrap draw).
/// `seed` only matters when max_features subsamples the features.
TreeModel fit_tree(const Eigen::MatrixXd& X, std::span<const Label> y, std::span<const std::size_t> sample,
                   const TreeParams& params, std::uint64_t seed);
TreeModel fit_tree(const Eigen::MatrixXd& X, std::span<const Label> y, const TreeParams& params = {});

/// Bootstrap indices of size n, reproducible from seed.
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed);

class Committee {
 public:
  Committee() = default;
  explicit Committee(std::vector<TreeModel> members) : members_(std::move(members)) {}
  std::size_t size() const { return members_.size(); }
  const std::vector<TreeModel>& members() const { return members_; }
  std::vector<Label> votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Number of members voting +1.
  int positive_votes(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

 private:
  std::vector<TreeModel> members_;
};

/// Bagged trees, one bootstrap per member.
Committee fit_committee(const Eigen::MatrixXd& X, std::span<const Label> y, std::size_t size, std::uint64_t seed,
                        const TreeParams& params = {});

class ForestModel {
 public:
  ForestModel() = default;
  explicit ForestModel(std::vector<TreeModel> trees) : trees_(std::move(trees)) {}
  std::size_t size() const { return trees_.size(); }
  const std::vector<TreeModel>& trees() const { return trees_; }
  /// Fraction of trees voting +1.
  double score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd score_rows(const Eigen::MatrixXd& X) const;

 private:
  std::vector<TreeModel> trees_;
};

/// Random forest: bootstrap per tree and sqrt(d) features per split unless
/// params.max_features says otherwise. Trees are fitted in parallel with
/// per-tree seeds, so the result does not depend on scheduling.
ForestModel fit_forest(const Eigen::MatrixXd& X, std::span<const Label> y, std::size_t num_trees, std::uint64_t seed,
                       TreeParams params = {});

}  // namespace poal
