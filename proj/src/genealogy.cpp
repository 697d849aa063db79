#include "vsbbm/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "vsbbm/error.hpp"

namespace vsbbm {

namespace {
constexpr double kNormTol = 1e-12;
}

OffspringDistribution::OffspringDistribution(std::vector<double> probabilities)
    : p_(std::move(probabilities)) {
  while (!p_.empty() && p_.back() == 0.0) p_.pop_back();
  if (p_.empty()) throw ValidationError("offspring: empty distribution");
  double total = 0.0;
  int support = 0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    if (!(p_[i] >= 0.0) || !std::isfinite(p_[i]))
      throw ValidationError("offspring: probabilities must be finite and non-negative");
    total += p_[i];
    mean_ += k * p_[i];
    k2_ += k * (k - 1.0) * p_[i];
    if (p_[i] > 0.0) ++support;
  }
  if (std::fabs(total - 1.0) > kNormTol) {
    std::ostringstream msg;
    msg << "offspring: probabilities sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
  // p_1 = 1 (a single immortal line) is the one law accepted off mean 2.
  const bool chain = p_.size() == 1;
  if (!chain && std::fabs(mean_ - 2.0) > kNormTol) {
    std::ostringstream msg;
    msg << "offspring: mean is " << mean_ << ", expected 2";
    throw ValidationError(msg.str());
  }
  degenerate_ = support == 1;
  cdf_.resize(p_.size());
  biased_cdf_.resize(p_.size());
  double c = 0.0, bc = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    c += p_[i];
    bc += static_cast<double>(i + 1) * p_[i] / mean_;
    cdf_[i] = c;
    biased_cdf_[i] = bc;
  }
  cdf_.back() = 1.0;
  biased_cdf_.back() = 1.0;
}

OffspringDistribution OffspringDistribution::binary() { return OffspringDistribution({0.0, 1.0}); }

double OffspringDistribution::p(int k) const noexcept {
  if (k < 1 || k > max_children()) return 0.0;
  return p_[static_cast<std::size_t>(k - 1)];
}

int OffspringDistribution::sample(CounterRng& rng) const noexcept {
  if (degenerate_) return max_children();
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), max_children() - 1)) + 1;
}

std::vector<double> OffspringDistribution::size_biased() const {
  std::vector<double> q(p_.size());
  for (std::size_t i = 0; i < p_.size(); ++i) q[i] = static_cast<double>(i + 1) * p_[i] / mean_;
  return q;
}

int OffspringDistribution::sample_size_biased(CounterRng& rng) const noexcept {
  if (degenerate_) return max_children() - 1;
  const double u = rng.uniform();
  const auto it = std::upper_bound(biased_cdf_.begin(), biased_cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - biased_cdf_.begin(), max_children() - 1));
}

double OffspringDistribution::reaction(double u) const noexcept {
  return u * reaction_over_u(u);
}

double OffspringDistribution::reaction_over_u(double u) const noexcept {
  // F(u) = sum_k p_k (1-u) u sum_{j=0}^{k-2} (1-u)^j
  const double v = 1.0 - u;
  double total = 0.0;
  double geometric = 0.0;  // sum_{j=0}^{k-2} v^j
  double power = 1.0;
  for (std::size_t i = 1; i < p_.size(); ++i) {
    geometric += power;
    power *= v;
    total += p_[i] * geometric;
  }
  return v * total;
}

NodeId GenealogyTree::leaf_node(std::size_t label) const {
  if (label >= leaves_.size()) {
    std::ostringstream msg;
    msg << "leaf label " << label << " out of range (n(t) = " << leaves_.size() << ")";
    throw LookupError(msg.str());
  }
  return leaves_[label];
}

double GenealogyTree::mrca(std::size_t k, std::size_t l) const {
  NodeId a = leaf_node(k);
  NodeId b = leaf_node(l);
  while (a != b) {
    if (a > b)
      a = parent_[a];
    else
      b = parent_[b];
  }
  return death_[a];
}

std::vector<NodeId> GenealogyTree::leaves_at(double s) const {
  if (!(s >= 0.0 && s <= horizon_)) {
    std::ostringstream msg;
    msg << "leaves_at: s = " << s << " outside [0, " << horizon_ << "]";
    throw RangeError(msg.str());
  }
  if (s == horizon_) return leaves_;
  std::vector<NodeId> alive;
  for (NodeId n = 0; n < birth_.size(); ++n)
    if (birth_[n] <= s && s < death_[n]) alive.push_back(n);
  return alive;
}

std::vector<NodeId> GenealogyTree::lineage(std::size_t label) const {
  std::vector<NodeId> line;
  for (NodeId n = leaf_node(label); n != kNoParent; n = parent_[n]) line.push_back(n);
  std::reverse(line.begin(), line.end());
  return line;
}

void GenealogyTree::write_ndjson(std::ostream& os) const {
  os.precision(17);
  for (NodeId n = 0; n < birth_.size(); ++n) {
    os << "{\"node\":" << n << ",\"parent\":";
    if (parent_[n] == kNoParent)
      os << "null";
    else
      os << parent_[n];
    os << ",\"birth\":" << birth_[n] << ",\"death\":" << death_[n]
       << ",\"n_children\":" << n_children_[n] << "}\n";
  }
}

void GenealogyTree::finalize() {
  const std::size_t n = birth_.size();
  first_child_.assign(n, kNoParent);
  n_children_.assign(n, 0);
  leaves_.clear();
  for (NodeId i = 1; i < n; ++i) {
    const NodeId p = parent_[i];
    if (first_child_[p] == kNoParent) first_child_[p] = i;
    ++n_children_[p];
  }
  for (NodeId i = 0; i < n; ++i)
    if (n_children_[i] == 0) leaves_.push_back(i);
}

GenealogyTree GenealogyTree::from_parents(double horizon, std::vector<double> birth,
                                          std::vector<double> death,
                                          std::vector<NodeId> parent) {
  const std::size_t n = birth.size();
  if (n == 0 || death.size() != n || parent.size() != n)
    throw ValidationError("tree: node arrays must be non-empty and of equal length");
  if (parent[0] != kNoParent || birth[0] != 0.0)
    throw ValidationError("tree: node 0 must be the root born at time 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (parent[i] >= i) throw ValidationError("tree: nodes must be in breadth-first order");
    if (parent[i] < parent[i - 1] && i > 1)
      throw ValidationError("tree: children of a node must be contiguous");
    if (birth[i] != death[parent[i]])
      throw ValidationError("tree: child birth must equal parent death");
  }
  GenealogyTree tree;
  tree.horizon_ = horizon;
  tree.birth_ = std::move(birth);
  tree.death_ = std::move(death);
  tree.parent_ = std::move(parent);
  tree.finalize();
  for (NodeId i = 0; i < n; ++i) {
    const bool leaf = tree.n_children_[i] == 0;
    if (leaf && tree.death_[i] != horizon)
      throw ValidationError("tree: leaves must terminate at the horizon");
    if (!leaf && !(tree.death_[i] > tree.birth_[i] && tree.death_[i] < horizon))
      throw ValidationError("tree: internal nodes need positive lifetime ending before t");
  }
  return tree;
}

GenealogyTree sample_tree(const OffspringDistribution& offspring, double t, std::uint64_t seed,
                          std::size_t node_cap) {
  if (!(t > 0.0) || !std::isfinite(t)) throw RangeError("sample_tree: horizon must be positive");
  node_cap = std::min<std::size_t>(node_cap, kNoParent);
  GenealogyTree tree;
  tree.horizon_ = t;
  tree.birth_.push_back(0.0);
  tree.parent_.push_back(kNoParent);
  tree.death_.push_back(0.0);
  for (NodeId i = 0; i < tree.birth_.size(); ++i) {
    CounterRng rng(derive_key(seed, i));
    const double death = tree.birth_[i] + rng.exponential();
    if (death >= t) {
      tree.death_[i] = t;
      continue;
    }
    tree.death_[i] = death;
    const int k = offspring.sample(rng);
    if (tree.birth_.size() + static_cast<std::size_t>(k) > node_cap) {
      std::ostringstream msg;
      msg << "sample_tree: population cap of " << node_cap << " nodes exceeded at time " << death
          << " (horizon " << t << ")";
      throw OverflowError(msg.str());
    }
    for (int c = 0; c < k; ++c) {
      tree.birth_.push_back(death);
      tree.death_.push_back(0.0);
      tree.parent_.push_back(i);
    }
  }
  tree.finalize();
  return tree;
}

}  // namespace vsbbm
