#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sbmc/measures.hpp"
#include "sbmc/replaw.hpp"

namespace sbmc {

// Ulam-Harris label: the path of 1-based child indices from the root.
class NodeLabel {
 public:
  NodeLabel() = default;
  explicit NodeLabel(std::vector<std::uint32_t> path);

  static NodeLabel root() { return {}; }

  std::size_t generation() const { return path_.size(); }
  const std::vector<std::uint32_t>& path() const { return path_; }
  bool is_root() const { return path_.empty(); }

  NodeLabel child(std::uint32_t i) const;
  // Label with the last index dropped; throws DomainError on the root.
  NodeLabel mother() const;
  // u.is_ancestor_of(v): u is a prefix of v (every label is its own ancestor).
  bool is_ancestor_of(const NodeLabel& other) const;

  std::string to_string() const;

  friend auto operator<=>(const NodeLabel&, const NodeLabel&) = default;

 private:
  std::vector<std::uint32_t> path_;
};

// An antichain of labels: no label is a prefix of another.
class Line {
 public:
  Line() = default;
  // Throws InvalidLine if two labels are prefix-related.
  explicit Line(std::vector<NodeLabel> labels);

  static Line generation(std::size_t n, const class MarkedTree& tree);

  const std::vector<NodeLabel>& labels() const { return labels_; }
  std::size_t max_generation() const;
  bool contains(const NodeLabel& u) const;

 private:
  std::vector<NodeLabel> labels_;  // sorted
};

using NodeIndex = std::uint32_t;

struct MarkedNode {
  double size = 0.0;
  double birth = 0.0;
  double lifetime = 0.0;
  std::uint64_t key = 0;  // per-node random stream key
  NodeIndex parent = 0;
  std::uint32_t child_index = 0;  // 1-based position among siblings; 0 for the root
  NodeIndex first_child = 0;
  std::uint32_t child_count = 0;
  std::uint32_t generation = 0;
  bool expanded = false;

  double death() const { return birth + lifetime; }
  bool alive_at(double t) const { return birth <= t && t < birth + lifetime; }
};

// A realization of the marked tree: sizes multiply along lineages, children are
// born when their mother dies, and a node of size s lives s^-alpha times a unit
// exponential. Dead children (beyond the offspring count) are not stored.
//
// Growth is lazy. Every node owns a random stream keyed by (seed, label), so a
// tree is the same realization whatever order or extent it is grown in.
class MarkedTree {
 public:
  static constexpr std::size_t kDefaultCap = 10'000'000;

  MarkedTree(ReproductionLaw law, double alpha, double root_size, std::uint64_t seed,
             std::size_t cap = kDefaultCap);

  // Realize every node of generation <= n.
  void grow_to_generation(std::size_t n);
  // Realize every node born at or before t.
  void grow_to_time(double t);
  // Expand nodes while `expand` says so (children of expanded nodes are
  // examined in turn). Used for stopping lines.
  void grow_while(const std::function<bool(const MarkedNode&)>& expand);

  double alpha() const { return alpha_; }
  double root_size() const { return root_size_; }
  const ReproductionLaw& law() const { return law_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t node_count() const { return nodes_.size(); }
  const MarkedNode& node(NodeIndex i) const { return nodes_[i]; }
  const std::vector<MarkedNode>& nodes() const { return nodes_; }
  NodeLabel label_of(NodeIndex i) const;

  // Every node alive at any t < covered_time() is realized.
  double covered_time() const;
  // Every node of generation <= covered_generation() is realized.
  std::size_t covered_generation() const;

  // Index of the node with this label. nullopt if the label denotes a dead
  // (never-born) individual; NotGrown if its mother has not been expanded.
  std::optional<NodeIndex> find(const NodeLabel& label) const;

  // Labels of nodes alive at t (the line tau_t).
  std::vector<NodeIndex> alive_at(double t) const;

  // Z_n, number of generation-n individuals with positive size.
  std::size_t generation_count(std::size_t n) const;
  // sum over generation n of size^p.
  double generation_power_sum(std::size_t n, double p) const;

  // JSON-lines export, one node per line.
  void write_jsonl(std::ostream& os) const;

 private:
  void expand(NodeIndex i);
  void require_generation(std::size_t n) const;

  ReproductionLaw law_;
  double alpha_;
  double root_size_;
  std::uint64_t seed_;
  std::size_t cap_;
  std::vector<MarkedNode> nodes_;
  std::vector<NodeIndex> frontier_;  // unexpanded nodes
};

MarkedTree grow_to_generation(double x, const ReproductionLaw& law, double alpha, std::size_t n,
                              std::uint64_t seed, std::size_t cap = MarkedTree::kDefaultCap);
MarkedTree grow_to_time(double x, const ReproductionLaw& law, double alpha, double horizon, std::uint64_t seed,
                        std::size_t cap = MarkedTree::kDefaultCap);

// X(t): sizes of the individuals alive at t. NotGrown if t is not covered.
FinitePointMeasure snapshot(const MarkedTree& tree, double t);

// M_n = sum over generation n of size^p0.
double intrinsic_martingale_gen(const MarkedTree& tree, double p0, std::size_t n);
// M(t) = <x^p0, X(t)>.
double intrinsic_martingale_time(const MarkedTree& tree, double p0, double t);

// M_Q = sum over Q of size^p0; dead labels contribute 0.
double line_mass(const MarkedTree& tree, const Line& q, double p0);

// True iff every surviving lineage meets Q at or before Q's maximal
// generation. Lineages that die out before reaching Q are ignored.
bool is_covering(const MarkedTree& tree, const Line& q);

// The covering line of the first individuals on each lineage whose size^p0
// drops to `mass_floor` (relative to the root) or whose generation reaches
// `max_generation`. Grows the tree as needed. If the root has no offspring the
// line is empty (and M_Q = 0, matching the extinct tree).
Line stopping_line(MarkedTree& tree, double p0, std::size_t max_generation, double mass_floor);

}  // namespace sbmc
