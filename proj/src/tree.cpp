#include "sbmc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <sstream>

#include "sbmc/errors.hpp"

namespace sbmc {

namespace {

constexpr std::uint64_t kRootTag = 0x726f6f74;  // "root"

}  // namespace

// ---------------------------------------------------------------------------
// Labels and lines

NodeLabel::NodeLabel(std::vector<std::uint32_t> path) : path_(std::move(path)) {
  for (auto i : path_) {
    if (i == 0) throw DomainError("node labels use 1-based child indices");
  }
}

NodeLabel NodeLabel::child(std::uint32_t i) const {
  if (i == 0) throw DomainError("node labels use 1-based child indices");
  NodeLabel out = *this;
  out.path_.push_back(i);
  return out;
}

NodeLabel NodeLabel::mother() const {
  if (path_.empty()) throw DomainError("the root has no mother");
  NodeLabel out = *this;
  out.path_.pop_back();
  return out;
}

bool NodeLabel::is_ancestor_of(const NodeLabel& other) const {
  return path_.size() <= other.path_.size() && std::equal(path_.begin(), path_.end(), other.path_.begin());
}

std::string NodeLabel::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(path_[i]);
  }
  return out + ")";
}

Line::Line(std::vector<NodeLabel> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  // In lexicographic order a prefix pair always has an adjacent witness.
  for (std::size_t i = 0; i + 1 < labels_.size(); ++i) {
    if (labels_[i].is_ancestor_of(labels_[i + 1])) {
      throw InvalidLine("not a line: " + labels_[i].to_string() + " is an ancestor of " +
                        labels_[i + 1].to_string());
    }
  }
}

Line Line::generation(std::size_t n, const MarkedTree& tree) {
  if (n > tree.covered_generation()) {
    throw NotGrown("generation " + std::to_string(n) + " is not fully realized");
  }
  std::vector<NodeLabel> labels;
  for (NodeIndex i = 0; i < tree.node_count(); ++i) {
    if (tree.node(i).generation == n) labels.push_back(tree.label_of(i));
  }
  return Line(std::move(labels));
}

std::size_t Line::max_generation() const {
  std::size_t g = 0;
  for (const auto& l : labels_) g = std::max(g, l.generation());
  return g;
}

bool Line::contains(const NodeLabel& u) const { return std::binary_search(labels_.begin(), labels_.end(), u); }

// ---------------------------------------------------------------------------
// Tree

MarkedTree::MarkedTree(ReproductionLaw law, double alpha, double root_size, std::uint64_t seed, std::size_t cap)
    : law_(std::move(law)), alpha_(alpha), root_size_(root_size), seed_(seed), cap_(cap) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
  if (!(root_size > 0.0) || !std::isfinite(root_size)) throw DomainError("root size must be finite and > 0");
  if (cap == 0) throw DomainError("node cap must be positive");
  MarkedNode root;
  root.size = root_size;
  root.key = derive_key(seed, kRootTag);
  Stream life(derive_key(root.key, substream::kLifetime));
  root.lifetime = std::pow(root_size, -alpha) * unit_exponential(life);
  nodes_.push_back(root);
  frontier_.push_back(0);
}

void MarkedTree::expand(NodeIndex i) {
  const MarkedNode mother = nodes_[i];
  Stream rng(derive_key(mother.key, substream::kOffspring));
  const FinitePointMeasure offspring = law_.sample(rng);
  const std::size_t k = offspring.count();
  if (nodes_.size() + k > cap_) {
    throw CapExceeded("node cap of " + std::to_string(cap_) + " exceeded while expanding " +
                          label_of(i).to_string() + " (born " + std::to_string(mother.birth) + ")",
                      nodes_.size(), mother.death(), mother.generation);
  }
  const auto first = static_cast<NodeIndex>(nodes_.size());
  const auto atoms = offspring.atoms();
  for (std::size_t j = 0; j < k; ++j) {
    MarkedNode child;
    child.size = mother.size * atoms[j];
    child.birth = mother.death();
    child.key = derive_key(mother.key, j + 1);
    Stream life(derive_key(child.key, substream::kLifetime));
    child.lifetime = std::pow(child.size, -alpha_) * unit_exponential(life);
    child.parent = i;
    child.child_index = static_cast<std::uint32_t>(j + 1);
    child.generation = mother.generation + 1;
    nodes_.push_back(child);
  }
  MarkedNode& m = nodes_[i];
  m.first_child = first;
  m.child_count = static_cast<std::uint32_t>(k);
  m.expanded = true;
}

void MarkedTree::grow_while(const std::function<bool(const MarkedNode&)>& should_expand) {
  std::deque<NodeIndex> queue(frontier_.begin(), frontier_.end());
  std::vector<NodeIndex> kept;
  while (!queue.empty()) {
    const NodeIndex i = queue.front();
    if (!should_expand(nodes_[i])) {
      kept.push_back(i);
      queue.pop_front();
      continue;
    }
    try {
      expand(i);
    } catch (const CapExceeded&) {
      kept.insert(kept.end(), queue.begin(), queue.end());
      frontier_ = std::move(kept);
      throw;
    }
    queue.pop_front();
    const auto& m = nodes_[i];
    for (std::uint32_t c = 0; c < m.child_count; ++c) queue.push_back(m.first_child + c);
  }
  frontier_ = std::move(kept);
}

void MarkedTree::grow_to_generation(std::size_t n) {
  grow_while([n](const MarkedNode& m) { return m.generation < n; });
}

void MarkedTree::grow_to_time(double t) {
  if (!(t >= 0.0)) throw DomainError("time horizon must be >= 0");
  // Earliest death first, so a cap failure leaves a tree that is complete up
  // to the reported time.
  const auto later = [this](NodeIndex a, NodeIndex b) { return nodes_[a].death() > nodes_[b].death(); };
  std::vector<NodeIndex> heap = std::move(frontier_);
  frontier_.clear();
  std::make_heap(heap.begin(), heap.end(), later);
  while (!heap.empty() && nodes_[heap.front()].death() <= t) {
    std::pop_heap(heap.begin(), heap.end(), later);
    const NodeIndex i = heap.back();
    try {
      expand(i);
    } catch (const CapExceeded&) {
      frontier_ = std::move(heap);
      throw;
    }
    heap.pop_back();
    const auto& m = nodes_[i];
    for (std::uint32_t c = 0; c < m.child_count; ++c) {
      heap.push_back(m.first_child + c);
      std::push_heap(heap.begin(), heap.end(), later);
    }
  }
  frontier_ = std::move(heap);
}

NodeLabel MarkedTree::label_of(NodeIndex i) const {
  std::vector<std::uint32_t> path;
  while (i != 0) {
    path.push_back(nodes_[i].child_index);
    i = nodes_[i].parent;
  }
  std::reverse(path.begin(), path.end());
  return NodeLabel(std::move(path));
}

double MarkedTree::covered_time() const {
  double t = std::numeric_limits<double>::infinity();
  for (auto i : frontier_) t = std::min(t, nodes_[i].death());
  return t;
}

std::size_t MarkedTree::covered_generation() const {
  std::size_t g = std::numeric_limits<std::size_t>::max();
  for (auto i : frontier_) g = std::min<std::size_t>(g, nodes_[i].generation);
  return g;
}

std::optional<NodeIndex> MarkedTree::find(const NodeLabel& label) const {
  NodeIndex i = 0;
  for (auto c : label.path()) {
    const auto& m = nodes_[i];
    if (!m.expanded) throw NotGrown("label " + label.to_string() + " lies beyond the realized tree");
    if (c > m.child_count) return std::nullopt;
    i = m.first_child + c - 1;
  }
  return i;
}

std::vector<NodeIndex> MarkedTree::alive_at(double t) const {
  if (!(t >= 0.0)) throw DomainError("time must be >= 0");
  if (!(t < covered_time())) {
    throw NotGrown("time " + std::to_string(t) + " lies beyond the realized horizon " +
                   std::to_string(covered_time()));
  }
  std::vector<NodeIndex> out;
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].alive_at(t)) out.push_back(i);
  }
  return out;
}

void MarkedTree::require_generation(std::size_t n) const {
  if (n > covered_generation()) {
    throw NotGrown("generation " + std::to_string(n) + " is not fully realized (covered up to " +
                   std::to_string(covered_generation()) + ")");
  }
}

std::size_t MarkedTree::generation_count(std::size_t n) const {
  require_generation(n);
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [n](const MarkedNode& m) { return m.generation == n; }));
}

double MarkedTree::generation_power_sum(std::size_t n, double p) const {
  require_generation(n);
  double total = 0.0;
  for (const auto& m : nodes_) {
    if (m.generation == n) total += p == 1.0 ? m.size : std::pow(m.size, p);
  }
  return total;
}

void MarkedTree::write_jsonl(std::ostream& os) const {
  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    const auto& m = nodes_[i];
    nlohmann::json j = {{"label", label_of(i).path()}, {"size", m.size}, {"birth", m.birth}, {"lifetime", m.lifetime}};
    os << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Free functions

MarkedTree grow_to_generation(double x, const ReproductionLaw& law, double alpha, std::size_t n,
                              std::uint64_t seed, std::size_t cap) {
  MarkedTree tree(law, alpha, x, seed, cap);
  tree.grow_to_generation(n);
  return tree;
}

MarkedTree grow_to_time(double x, const ReproductionLaw& law, double alpha, double horizon, std::uint64_t seed,
                        std::size_t cap) {
  MarkedTree tree(law, alpha, x, seed, cap);
  tree.grow_to_time(horizon);
  return tree;
}

FinitePointMeasure snapshot(const MarkedTree& tree, double t) {
  std::vector<double> sizes;
  for (auto i : tree.alive_at(t)) sizes.push_back(tree.node(i).size);
  return FinitePointMeasure(std::move(sizes));
}

double intrinsic_martingale_gen(const MarkedTree& tree, double p0, std::size_t n) {
  return tree.generation_power_sum(n, p0);
}

double intrinsic_martingale_time(const MarkedTree& tree, double p0, double t) {
  return power_mass(snapshot(tree, t), p0);
}

double line_mass(const MarkedTree& tree, const Line& q, double p0) {
  double total = 0.0;
  for (const auto& label : q.labels()) {
    if (const auto i = tree.find(label)) total += std::pow(tree.node(*i).size, p0);
  }
  return total;
}

bool is_covering(const MarkedTree& tree, const Line& q) {
  const std::size_t depth = q.max_generation();
  std::vector<std::uint32_t> path;
  // Depth-first walk; returns false as soon as a surviving lineage passes the
  // line's deepest generation without meeting it.
  const std::function<bool(NodeIndex)> covered = [&](NodeIndex i) -> bool {
    if (q.contains(NodeLabel(path))) return true;
    const auto& m = tree.node(i);
    if (m.generation >= depth) return false;
    if (!m.expanded) {
      throw NotGrown("is_covering: node " + NodeLabel(path).to_string() + " has not been expanded");
    }
    for (std::uint32_t c = 0; c < m.child_count; ++c) {
      path.push_back(c + 1);
      const bool ok = covered(m.first_child + c);
      path.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  return covered(0);
}

Line stopping_line(MarkedTree& tree, double p0, std::size_t max_generation, double mass_floor) {
  const double root_mass = std::pow(tree.root_size(), p0);
  const auto go_on = [&](const MarkedNode& m) {
    return m.generation < max_generation && std::pow(m.size, p0) > mass_floor * root_mass;
  };
  tree.grow_while(go_on);
  std::vector<NodeLabel> labels;
  std::vector<NodeIndex> stack{0};
  while (!stack.empty()) {
    const NodeIndex i = stack.back();
    stack.pop_back();
    const auto& m = tree.node(i);
    if (!go_on(m)) {
      labels.push_back(tree.label_of(i));
      continue;
    }
    for (std::uint32_t c = 0; c < m.child_count; ++c) stack.push_back(m.first_child + c);
  }
  return Line(std::move(labels));
}

}  // namespace sbmc
