#ifndef MCAST_INSTANCE_HPP
#define MCAST_INSTANCE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcast/rational.hpp"

namespace mcast {

using VertexId = std::uint32_t;
// Position of an edge inside Instance::edges(). Edges are stored sorted by
// their external id, so index order and id order coincide.
using EdgeIdx = std::uint32_t;

inline constexpr std::uint32_t kNone = static_cast<std::uint32_t>(-1);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  std::int64_t id = 0;
  VertexId u = 0;
  VertexId v = 0;
  Rational cost;

  VertexId other(VertexId x) const { return x == u ? v : u; }
  bool touches(VertexId x) const { return x == u || x == v; }
  bool operator==(const Edge&) const = default;
};

struct EdgeClass {
  unsigned index = 0;  // alpha
  Rational low;        // 256^alpha
  Rational upp;        // 256^(alpha+1)
};

/// Class alpha with 256^alpha <= cost < 256^(alpha+1). Throws std::domain_error
/// when cost < 1.
EdgeClass edge_class(const Rational& cost);

/// Immutable quasi-bipartite multigraph with a terminal set and a root.
class Instance {
 public:
  struct Incidence {
    EdgeIdx edge;
    VertexId neighbor;
  };

  /// Validates every invariant; throws ValidationError naming the violation.
  /// Pruning may strand a nonterminal, which is only accepted when asked for.
  Instance(std::size_t vertex_count, std::vector<Edge> edges, std::vector<VertexId> terminals,
           VertexId root, std::map<VertexId, std::string> labels = {},
           bool allow_isolated_nonterminals = false);

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeIdx e) const { return edges_[e]; }
  const Rational& cost(EdgeIdx e) const { return edges_[e].cost; }
  std::optional<EdgeIdx> find_edge_id(std::int64_t id) const;

  /// Sorted terminal ids, root included.
  const std::vector<VertexId>& terminals() const { return terminals_; }
  bool is_terminal(VertexId v) const { return is_terminal_[v]; }
  VertexId root() const { return root_; }
  const std::map<VertexId, std::string>& labels() const { return labels_; }

  /// Incident edges of v sorted by edge index.
  std::span<const Incidence> incident(VertexId v) const { return adjacency_[v]; }

  Rational total_cost() const;
  Rational min_cost() const;

  bool operator==(const Instance& other) const;

 private:
  std::size_t vertex_count_;
  std::vector<Edge> edges_;
  std::vector<VertexId> terminals_;
  std::vector<bool> is_terminal_;
  VertexId root_;
  std::map<VertexId, std::string> labels_;
  std::vector<std::vector<Incidence>> adjacency_;
};

Instance parse_instance(std::string_view text);
std::string serialize_instance(const Instance& instance);

struct Normalized {
  Instance instance;
  Rational scale;  // new cost = scale * old cost
};

/// Rescales all costs so the cheapest edge costs exactly 1.
Normalized normalize_costs(const Instance& instance);

/// Drops every edge strictly more expensive than `bound`. Nonterminals left
/// without edges stay as isolated vertices.
Instance prune_heavy_edges(const Instance& instance, const Rational& bound);

/// Lower-bound family with price of anarchy linear in n: n agents on spokes of
/// cost delta around a nonterminal hub, which reaches the root through two
/// parallel edges of cost n and 1 + eps. Vertex 0 is the root, 1 the hub.
Instance gen_poa_chain(int n, const Rational& eps, const Rational& delta);

/// kClustered splits vertices into random groups: edges inside a group draw
/// uniformly from [lo, min(hi, 4*lo)], edges between groups log-uniformly from
/// [max(lo, hi/16), hi].
enum class CostSpread { kUniform, kLogUniform, kClustered };

struct RandomInstanceParams {
  int n_terminals = 5;  // root included
  int n_nonterminals = 3;
  double edge_prob = 0.5;
  std::int64_t cost_lo = 1;
  std::int64_t cost_hi = 20;
  CostSpread spread = CostSpread::kUniform;
  std::uint64_t seed = 0;
};

/// Random connected quasi-bipartite instance. Terminals are 0..n_terminals-1
/// with root 0; nonterminals follow. Throws std::invalid_argument on bad params.
Instance gen_random_quasi_bipartite(const RandomInstanceParams& params);

}  // namespace mcast

#endif  // MCAST_INSTANCE_HPP
