#ifndef MCAST_STEINER_HPP
#define MCAST_STEINER_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mcast/instance.hpp"

namespace mcast {

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum Steiner tree rooted at the instance root.
struct SteinerTree {
  std::vector<EdgeIdx> edges;  // sorted
  Rational total_cost;
  // parent_vertex[v] / parent_edge[v] are kNone for the root and for vertices
  // outside the tree.
  std::vector<VertexId> parent_vertex;
  std::vector<EdgeIdx> parent_edge;
  std::vector<int> depth;  // -1 outside the tree

  bool contains_vertex(VertexId v) const { return depth[v] >= 0; }
  bool contains_edge(EdgeIdx e) const;
  std::vector<VertexId> vertices() const;
  /// Children of v in ascending vertex id.
  std::vector<VertexId> children(VertexId v) const;
};

/// Builds parent/depth tables for an edge set that forms a tree containing the root.
SteinerTree make_rooted_tree(const Instance& instance, std::vector<EdgeIdx> edges);

inline constexpr std::size_t kDefaultTerminalCap = 14;

/// Dreyfus-Wagner over terminal subsets. Among optimal trees the one with the
/// lexicographically smallest sorted edge-id list is returned.
SteinerTree exact_steiner(const Instance& instance, std::size_t terminal_cap = kDefaultTerminalCap);

/// Exhaustive branch-and-bound over edge subsets (oracle, |E| <= edge_cap).
SteinerTree brute_force_steiner(const Instance& instance, std::size_t edge_cap = 20);

/// Vertices and edges of the unique tree path from x to y (x first).
struct TreePath {
  std::vector<VertexId> vertices;
  std::vector<EdgeIdx> edges;
};
TreePath tree_path(const SteinerTree& tree, VertexId x, VertexId y);

/// Closed depth-first Euler tour of the tree from the root, children visited in
/// ascending vertex id. vertices has one more entry than edges and ends where it
/// started; every tree edge occurs exactly twice.
struct MainCycle {
  std::vector<VertexId> vertices;
  std::vector<EdgeIdx> edges;
  std::map<VertexId, std::vector<std::size_t>> positions;

  std::size_t length() const { return edges.size(); }
  /// First tour index of v; throws std::out_of_range when v is not on the tour.
  std::size_t first_index(VertexId v) const;
};
MainCycle main_cycle(const SteinerTree& tree, VertexId root);

/// Cheapest incident edge sigma_v of every nonterminal v and its terminal end t_v.
struct SigmaEntry {
  EdgeIdx edge = kNone;
  VertexId terminal = kNone;
};
struct SigmaMap {
  std::vector<SigmaEntry> entries;  // indexed by vertex; edge == kNone for terminals

  bool has(VertexId v) const { return v < entries.size() && entries[v].edge != kNone; }
  const SigmaEntry& at(VertexId v) const;
  /// Nonterminal whose sigma edge is e, if any.
  std::optional<VertexId> owner_of(EdgeIdx e) const;
};
SigmaMap sigma_edges(const Instance& instance);

/// Maximal MC interval around a vertex whose per-side class budget
/// 2 * sum_a 256^(a+1) * H_{n_a}^2 stays within y. Repeated edges count each time.
struct Interval {
  VertexId anchor = 0;
  Rational budget;
  std::size_t start = 0;       // first MC index of the anchor
  std::size_t right_len = 0;   // MC edges start, start+1, ... (mod L)
  std::size_t left_len = 0;    // MC edges start-1, start-2, ... (mod L)
  std::map<unsigned, std::size_t> right_counts;
  std::map<unsigned, std::size_t> left_counts;

  /// MC edge indices of the right side in tour order.
  std::vector<std::size_t> right_positions(std::size_t cycle_length) const;
  std::vector<std::size_t> left_positions(std::size_t cycle_length) const;
  /// All MC vertices covered by the interval (anchor included).
  std::vector<VertexId> vertices(const MainCycle& mc) const;
};

/// 2 * sum over classes of 256^(a+1) * H_{count}^2.
Rational interval_weight(const std::map<unsigned, std::size_t>& class_counts);

Interval interval(const Instance& instance, const MainCycle& mc, VertexId anchor,
                  const Rational& y);

/// T* plus the sigma edges of nonterminals outside T*. Each such nonterminal
/// hangs off its terminal t_w, so the result is again a tree rooted at r.
struct ExtendedTree {
  std::vector<VertexId> parent_vertex;
  std::vector<EdgeIdx> parent_edge;
  std::vector<int> depth;
  std::vector<std::vector<std::pair<VertexId, EdgeIdx>>> adjacency;

  bool contains(VertexId v) const { return depth[v] >= 0; }
  std::vector<VertexId> path(VertexId x, VertexId y) const;
  std::optional<EdgeIdx> edge_between(VertexId x, VertexId y) const;
};

/// Everything the scheduled dynamics is anchored to.
struct OptStructures {
  SteinerTree tree;
  MainCycle mc;
  SigmaMap sigma;
  ExtendedTree tplus;
};

OptStructures build_opt_structures(const Instance& instance, SteinerTree tree);

}  // namespace mcast

#endif  // MCAST_STEINER_HPP
