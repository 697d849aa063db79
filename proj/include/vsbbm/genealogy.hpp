#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "vsbbm/rng.hpp"

namespace vsbbm {

// Offspring law {p_k}_{k>=1}, normalized to mean 2 so that E n(t) = e^t
// with unit branching rate. The degenerate law p_1 = 1 is also accepted.
class OffspringDistribution {
 public:
  // probabilities[k-1] = p_k.
  explicit OffspringDistribution(std::vector<double> probabilities);
  static OffspringDistribution binary();

  double p(int k) const noexcept;
  int max_children() const noexcept { return static_cast<int>(p_.size()); }
  std::span<const double> probabilities() const noexcept { return p_; }
  double mean() const noexcept { return mean_; }
  // K = sum k(k-1) p_k
  double second_factorial_moment() const noexcept { return k2_; }
  bool degenerate() const noexcept { return degenerate_; }

  int sample(CounterRng& rng) const noexcept;

  // Size-biased law of the number of extra children at a spine branch point:
  // entry j is P(nu = j) = (j+1) p_{j+1} / mean.
  std::vector<double> size_biased() const;
  int sample_size_biased(CounterRng& rng) const noexcept;

  // Branching nonlinearity F(u) = (1-u) - sum_k p_k (1-u)^k and F(u)/u,
  // the latter evaluated without cancellation for small u.
  double reaction(double u) const noexcept;
  double reaction_over_u(double u) const noexcept;

 private:
  std::vector<double> p_;
  std::vector<double> cdf_;
  std::vector<double> biased_cdf_;
  double mean_ = 0.0;
  double k2_ = 0.0;
  bool degenerate_ = false;
};

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();
inline constexpr std::size_t kDefaultNodeCap = 100'000'000;

// Continuous-time Galton-Watson realization on [0, horizon]. Nodes are stored
// in breadth-first order, so parent(i) < i and the children of a node occupy a
// contiguous id range.
class GenealogyTree {
 public:
  double horizon() const noexcept { return horizon_; }
  std::size_t node_count() const noexcept { return birth_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  double birth(NodeId n) const { return birth_.at(n); }
  double death(NodeId n) const { return death_.at(n); }
  NodeId parent(NodeId n) const { return parent_.at(n); }
  NodeId first_child(NodeId n) const { return first_child_.at(n); }
  std::uint32_t child_count(NodeId n) const { return n_children_.at(n); }
  bool is_leaf(NodeId n) const { return n_children_.at(n) == 0; }

  std::span<const double> births() const noexcept { return birth_; }
  std::span<const double> deaths() const noexcept { return death_; }
  std::span<const NodeId> parents() const noexcept { return parent_; }

  // Leaf labels are 0..n(t)-1; leaf_node maps a label to its node id.
  std::span<const NodeId> leaves() const noexcept { return leaves_; }
  NodeId leaf_node(std::size_t label) const;

  // Time of the most recent common ancestor of two leaves; horizon if k == l.
  double mrca(std::size_t k, std::size_t l) const;

  // Node ids of every lineage alive at time s (birth <= s < death, or the
  // leaf set at s = horizon).
  std::vector<NodeId> leaves_at(double s) const;

  // Ancestral line of a leaf from the root down to the leaf node.
  std::vector<NodeId> lineage(std::size_t label) const;

  void write_ndjson(std::ostream& os) const;

  // Assembles a tree from raw arrays (tests and fixtures). Validates the
  // structural invariants.
  static GenealogyTree from_parents(double horizon, std::vector<double> birth,
                                    std::vector<double> death, std::vector<NodeId> parent);

 private:
  friend GenealogyTree sample_tree(const OffspringDistribution&, double, std::uint64_t,
                                   std::size_t);
  void finalize();

  double horizon_ = 0.0;
  std::vector<double> birth_;
  std::vector<double> death_;
  std::vector<NodeId> parent_;
  std::vector<NodeId> first_child_;
  std::vector<std::uint32_t> n_children_;
  std::vector<NodeId> leaves_;
};

// Exp(1) lifetimes; at death, k children with probability p_k. Each node's
// draws come from a stream keyed by (seed, node id).
GenealogyTree sample_tree(const OffspringDistribution& offspring, double t, std::uint64_t seed,
                          std::size_t node_cap = kDefaultNodeCap);

}  // namespace vsbbm
