#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "poal/ground_truth.hpp"
#include "poal/order.hpp"

namespace poal {

/// Candidate pairs with one feature row each, plus the order they are drawn from.
class Pool {
 public:
  Pool() = default;
  /// Validates: pairs distinct, non-reflexive, in range; one row per pair; finite values.
  Pool(std::size_t num_nodes, std::vector<Pair> pairs, Eigen::MatrixXd features,
       std::optional<GroundTruth> truth);

  std::size_t num_nodes() const { return n_; }
  std::size_t size() const { return pairs_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features_.cols()); }

  const std::vector<Pair>& pairs() const { return pairs_; }
  const Pair& pair(std::size_t i) const { return pairs_[i]; }
  const Eigen::MatrixXd& features() const { return features_; }
  auto feature(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }

  /// Row index of p, or -1 when p is not in the pool.
  std::int64_t index_of(Pair p) const;
  bool contains(Pair p) const { return index_of(p) >= 0; }

  bool has_truth() const { return truth_.has_value(); }
  /// Throws std::logic_error when the pool has no ground truth attached.
  const GroundTruth& truth() const;
  Label label(std::size_t i) const { return oracle_label(truth(), pairs_[i]); }
  double positive_rate() const;

 private:
  std::size_t n_ = 0;
  std::vector<Pair> pairs_;
  Eigen::MatrixXd features_;
  std::optional<GroundTruth> truth_;
  std::vector<std::int32_t> index_;  // n*n, -1 if absent
};

struct SyntheticParams {
  std::size_t num_nodes = 60;
  std::size_t num_layers = 5;
  double edge_prob = 0.15;
  std::size_t embedding_dim = 4;  // pair features have 3 * dim + 1 components
  double noise = 0.5;
  std::uint64_t seed = 1;
  /// Fraction of eligible pairs kept in the pool (uniform subsample).
  double pair_fraction = 1.0;
  /// Spread of a node's embedding around the mean of its parents'.
  double drift = 0.6;
};

/// Layered random DAG with structure-aware node embeddings. Throws
/// std::invalid_argument on bad parameters or when no edge is drawn.
Pool generate_synthetic(const SyntheticParams& params);

/// Reads features.csv (`src,dst,f1..fd`) and, when present, edges.csv.
Pool load_pool(const std::filesystem::path& edges_path, const std::filesystem::path& features_path);
/// Loads edges.csv (optional) and features.csv from a dataset directory.
Pool load_pool_dir(const std::filesystem::path& dir);

/// Writes edges.csv (transitive reduction), features.csv and pool.json.
void save_pool(const Pool& pool, const std::filesystem::path& dir);
void save_pool_json(const Pool& pool, const std::filesystem::path& path);
Pool load_pool_json(const std::filesystem::path& path);

struct Split {
  std::vector<Pair> train;
  std::vector<Pair> test;
  std::vector<Pair> seeds;  // subset of train
};

/// Uniform train/test partition and seed draw. With `balanced_seeds`, seeds
/// alternate classes while both remain available in the training part.
Split split(const Pool& pool, double train_fraction, std::size_t n_seeds, std::uint64_t seed,
            bool balanced_seeds = false);

}  // namespace poal
