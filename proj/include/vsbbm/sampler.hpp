#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vsbbm/genealogy.hpp"
#include "vsbbm/speed.hpp"

namespace vsbbm {

struct PathPoint {
  double s = 0.0;
  double x = 0.0;
};

// Positions at uniform grid times strictly inside each edge. The grid is
// {k * step}; branch times are carried by the configuration itself.
class PathSkeleton {
 public:
  PathSkeleton(double step, std::vector<std::uint32_t> offsets, std::vector<double> times,
               std::vector<double> positions);
  double step() const noexcept { return step_; }
  std::span<const double> times(NodeId n) const;
  std::span<const double> positions(NodeId n) const;

 private:
  double step_;
  std::vector<std::uint32_t> offsets_;
  std::vector<double> times_;
  std::vector<double> positions_;
};

// Leaf positions of one realization at horizon t, bound to its tree and profile.
class ParticleConfiguration {
 public:
  ParticleConfiguration(std::shared_ptr<const GenealogyTree> tree,
                        std::shared_ptr<const SpeedProfile> profile, double t,
                        std::vector<double> node_end_positions,
                        std::optional<PathSkeleton> skeleton = std::nullopt);

  // Configuration given only leaf positions (no per-node path information).
  static ParticleConfiguration from_leaf_positions(std::shared_ptr<const GenealogyTree> tree,
                                                   std::shared_ptr<const SpeedProfile> profile,
                                                   double t, std::vector<double> leaf_positions);

  const GenealogyTree& tree() const noexcept { return *tree_; }
  const std::shared_ptr<const GenealogyTree>& tree_ptr() const noexcept { return tree_; }
  const SpeedProfile& profile() const noexcept { return *profile_; }
  const std::shared_ptr<const SpeedProfile>& profile_ptr() const noexcept { return profile_; }
  double horizon() const noexcept { return t_; }
  std::span<const double> leaf_positions() const noexcept { return leaf_positions_; }
  std::size_t size() const noexcept { return leaf_positions_.size(); }
  double max_position() const;

  bool has_node_positions() const noexcept { return !node_end_.empty(); }
  double position_at_death(NodeId n) const;
  const std::optional<PathSkeleton>& skeleton() const noexcept { return skeleton_; }

  // Path of a leaf's ancestral line from (0, 0) through every branch time and
  // grid point to (t, x_leaf). Requires skeleton mode.
  std::vector<PathPoint> lineage_path(std::size_t leaf) const;

  void write_csv(std::ostream& os) const;
  void write_skeleton_csv(std::ostream& os) const;

 private:
  std::shared_ptr<const GenealogyTree> tree_;
  std::shared_ptr<const SpeedProfile> profile_;
  double t_;
  std::vector<double> node_end_;
  std::vector<double> leaf_positions_;
  std::optional<PathSkeleton> skeleton_;
};

// Per-edge variances Sigma^2(death) - Sigma^2(birth) for one (tree, profile)
// pair, reusable for many Gaussian redraws on the same tree.
class EdgeSampler {
 public:
  EdgeSampler(const GenealogyTree& tree, const SpeedProfile& profile, double t);

  // End positions of every node; edge increments drawn from the stream keyed
  // by (seed, node id), first draw of each node.
  void draw_nodes(std::uint64_t seed, std::span<double> node_end) const;
  // Leaf positions only.
  void draw_leaves(std::uint64_t seed, std::span<double> leaves) const;

  std::span<const double> edge_sd() const noexcept { return sd_; }

 private:
  const GenealogyTree* tree_;
  std::vector<double> sd_;
};

inline constexpr int kDefaultSkeletonDivisions = 512;

// Exact variable-speed BBM on a fixed tree. When `skeleton_step` is set, each
// edge is additionally filled in on the grid by Brownian-bridge draws in
// Sigma^2-time (leaf positions are unchanged by this).
ParticleConfiguration sample_bbm(std::shared_ptr<const GenealogyTree> tree,
                                 std::shared_ptr<const SpeedProfile> profile, double t,
                                 std::uint64_t seed,
                                 std::optional<double> skeleton_step = std::nullopt);

// E[x_k(t) x_l(t)] = t A(d(k,l)/t).
double covariance_oracle(const GenealogyTree& tree, const SpeedProfile& profile, std::size_t k,
                         std::size_t l, double t);

}  // namespace vsbbm
