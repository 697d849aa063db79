#include "vsbbm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "vsbbm/error.hpp"

namespace vsbbm {

PathSkeleton::PathSkeleton(double step, std::vector<std::uint32_t> offsets,
                           std::vector<double> times, std::vector<double> positions)
    : step_(step),
      offsets_(std::move(offsets)),
      times_(std::move(times)),
      positions_(std::move(positions)) {}

std::span<const double> PathSkeleton::times(NodeId n) const {
  return std::span<const double>(times_).subspan(offsets_.at(n), offsets_.at(n + 1) - offsets_[n]);
}

std::span<const double> PathSkeleton::positions(NodeId n) const {
  return std::span<const double>(positions_)
      .subspan(offsets_.at(n), offsets_.at(n + 1) - offsets_[n]);
}

ParticleConfiguration::ParticleConfiguration(std::shared_ptr<const GenealogyTree> tree,
                                             std::shared_ptr<const SpeedProfile> profile,
                                             double t, std::vector<double> node_end_positions,
                                             std::optional<PathSkeleton> skeleton)
    : tree_(std::move(tree)),
      profile_(std::move(profile)),
      t_(t),
      node_end_(std::move(node_end_positions)),
      skeleton_(std::move(skeleton)) {
  if (!tree_ || !profile_) throw ValidationError("configuration: null tree or profile");
  if (node_end_.size() != tree_->node_count())
    throw ValidationError("configuration: one end position per node required");
  leaf_positions_.reserve(tree_->leaf_count());
  for (NodeId leaf : tree_->leaves()) leaf_positions_.push_back(node_end_[leaf]);
}

ParticleConfiguration ParticleConfiguration::from_leaf_positions(
    std::shared_ptr<const GenealogyTree> tree, std::shared_ptr<const SpeedProfile> profile,
    double t, std::vector<double> leaf_positions) {
  if (!tree || leaf_positions.size() != tree->leaf_count())
    throw ValidationError("configuration: one position per leaf required");
  std::vector<double> node_end(tree->node_count(), std::nan(""));
  for (std::size_t i = 0; i < leaf_positions.size(); ++i)
    node_end[tree->leaves()[i]] = leaf_positions[i];
  ParticleConfiguration c(std::move(tree), std::move(profile), t, std::move(node_end));
  c.node_end_.clear();
  return c;
}

double ParticleConfiguration::max_position() const {
  return *std::max_element(leaf_positions_.begin(), leaf_positions_.end());
}

double ParticleConfiguration::position_at_death(NodeId n) const {
  if (node_end_.empty()) throw LookupError("configuration carries leaf positions only");
  return node_end_.at(n);
}

std::vector<PathPoint> ParticleConfiguration::lineage_path(std::size_t leaf) const {
  if (!skeleton_)
    throw ValidationError("lineage path requested but the configuration was sampled without a "
                          "skeleton; sample with a skeleton step");
  std::vector<PathPoint> path{{0.0, 0.0}};
  for (NodeId n : tree_->lineage(leaf)) {
    const auto ts = skeleton_->times(n);
    const auto xs = skeleton_->positions(n);
    for (std::size_t i = 0; i < ts.size(); ++i) path.push_back({ts[i], xs[i]});
    path.push_back({tree_->death(n), node_end_[n]});
  }
  return path;
}

void ParticleConfiguration::write_csv(std::ostream& os) const {
  os.precision(17);
  os << "leaf,position\n";
  for (std::size_t i = 0; i < leaf_positions_.size(); ++i)
    os << i << ',' << leaf_positions_[i] << '\n';
}

void ParticleConfiguration::write_skeleton_csv(std::ostream& os) const {
  os.precision(17);
  os << "leaf,s,position\n";
  for (std::size_t i = 0; i < leaf_positions_.size(); ++i)
    for (const PathPoint& p : lineage_path(i)) os << i << ',' << p.s << ',' << p.x << '\n';
}

EdgeSampler::EdgeSampler(const GenealogyTree& tree, const SpeedProfile& profile, double t)
    : tree_(&tree), sd_(tree.node_count()) {
  if (std::fabs(tree.horizon() - t) > 1e-12 * std::max(1.0, t)) {
    std::ostringstream msg;
    msg << "sample_bbm: tree horizon " << tree.horizon() << " does not match t = " << t;
    throw ValidationError(msg.str());
  }
  for (NodeId n = 0; n < tree.node_count(); ++n) {
    const double var = sigma2(profile, tree.death(n), t) - sigma2(profile, tree.birth(n), t);
    if (var < 0.0) {
      std::ostringstream msg;
      msg << "sample_bbm: negative variance " << var << " on edge " << n
          << "; the profile is not non-decreasing";
      throw ValidationError(msg.str());
    }
    sd_[n] = std::sqrt(var);
  }
}

void EdgeSampler::draw_nodes(std::uint64_t seed, std::span<double> node_end) const {
  const auto parents = tree_->parents();
  for (NodeId n = 0; n < sd_.size(); ++n) {
    CounterRng rng(derive_key(seed, n));
    const double start = n == 0 ? 0.0 : node_end[parents[n]];
    node_end[n] = start + sd_[n] * rng.normal();
  }
}

void EdgeSampler::draw_leaves(std::uint64_t seed, std::span<double> leaves) const {
  std::vector<double> ends(sd_.size());
  draw_nodes(seed, ends);
  const auto ids = tree_->leaves();
  for (std::size_t i = 0; i < ids.size(); ++i) leaves[i] = ends[ids[i]];
}

ParticleConfiguration sample_bbm(std::shared_ptr<const GenealogyTree> tree,
                                 std::shared_ptr<const SpeedProfile> profile, double t,
                                 std::uint64_t seed, std::optional<double> skeleton_step) {
  if (!tree || !profile) throw ValidationError("sample_bbm: null tree or profile");
  const EdgeSampler sampler(*tree, *profile, t);
  std::vector<double> ends(tree->node_count());
  sampler.draw_nodes(seed, ends);
  if (!skeleton_step) {
    return ParticleConfiguration(std::move(tree), std::move(profile), t, std::move(ends));
  }
  const double step = *skeleton_step;
  if (!(step > 0.0) || step > t) throw ValidationError("sample_bbm: skeleton step must be in (0, t]");

  std::vector<std::uint32_t> offsets(tree->node_count() + 1, 0);
  std::vector<double> times, positions;
  for (NodeId n = 0; n < tree->node_count(); ++n) {
    offsets[n] = static_cast<std::uint32_t>(times.size());
    const double birth = tree->birth(n), death = tree->death(n);
    auto k = static_cast<long>(std::floor(birth / step)) + 1;
    double s = static_cast<double>(k) * step;
    if (!(s < death)) continue;
    CounterRng rng(derive_key(seed, n));
    rng.normal();  // endpoint draw, consumed by EdgeSampler
    double x_prev = n == 0 ? 0.0 : ends[tree->parent(n)];
    double v_prev = sigma2(*profile, birth, t);
    const double x_end = ends[n];
    const double v_end = sigma2(*profile, death, t);
    for (; s < death; s = static_cast<double>(++k) * step) {
      const double v = sigma2(*profile, s, t);
      double x = x_prev;
      const double span = v_end - v_prev;
      if (span > 0.0) {
        const double w = (v - v_prev) / span;
        const double var = (v - v_prev) * (v_end - v) / span;
        x = x_prev + w * (x_end - x_prev) + std::sqrt(std::max(var, 0.0)) * rng.normal();
      }
      times.push_back(s);
      positions.push_back(x);
      x_prev = x;
      v_prev = v;
    }
  }
  offsets.back() = static_cast<std::uint32_t>(times.size());
  PathSkeleton skel(step, std::move(offsets), std::move(times), std::move(positions));
  return ParticleConfiguration(std::move(tree), std::move(profile), t, std::move(ends),
                               std::move(skel));
}

double covariance_oracle(const GenealogyTree& tree, const SpeedProfile& profile, std::size_t k,
                         std::size_t l, double t) {
  return sigma2(profile, tree.mrca(k, l), t);
}

}  // namespace vsbbm
