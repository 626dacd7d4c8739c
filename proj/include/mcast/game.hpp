#ifndef MCAST_GAME_HPP
#define MCAST_GAME_HPP

#include <optional>
#include <vector>

#include "mcast/instance.hpp"
#include "mcast/steiner.hpp"
#include "mcast/trace.hpp"

namespace mcast {

/// Removes cycles: whenever a vertex repeats, the walk between its visits is cut.
Path loop_erase(const Path& walk);

/// Joins a path ending at x with a path starting at x.
Path concat(const Path& head, const Path& tail);

/// Builds the walk from `start` along `edges`; throws std::invalid_argument
/// when consecutive edges do not connect.
Path walk_from_edges(const Instance& instance, VertexId start, const std::vector<EdgeIdx>& edges);

class InvalidPath : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One simple path per terminal; the root's path is the single vertex r.
class State {
 public:
  State(const Instance& instance, std::vector<Path> paths);

  const Instance& instance() const { return *instance_; }
  const Path& path(VertexId u) const { return paths_[u]; }
  const std::vector<Path>& paths() const { return paths_; }

  std::uint32_t usage(EdgeIdx e) const { return usage_[e]; }
  const std::vector<std::uint32_t>& usage() const { return usage_; }
  /// Number of terminal paths through v.
  std::uint32_t load(VertexId v) const { return load_[v]; }
  bool contains_vertex(VertexId v) const { return load_[v] > 0; }
  bool contains_edge(EdgeIdx e) const { return usage_[e] > 0; }
  std::vector<EdgeIdx> edge_set() const;
  std::vector<VertexId> vertex_set() const;

  /// Replaces u's path; returns Phi(after) - Phi(before). Throws InvalidPath.
  Rational reroute(VertexId u, Path path);

  Rational potential() const;
  Rational social_cost() const;
  Rational player_cost(VertexId u) const;
  /// What u would pay on `path` with every other player fixed.
  Rational deviation_cost(VertexId u, const Path& path) const;
  /// Share of one user on the given edges at current usage.
  Rational share(const std::vector<EdgeIdx>& edges) const;

  /// Terminals (root excluded) whose path visits v, ascending.
  std::vector<VertexId> users_through(VertexId v) const;
  std::vector<VertexId> users_of_edge(EdgeIdx e) const;

  /// p_v(S): the terminal's own path, or the common v->r suffix of every path
  /// through a nonterminal v. Empty when undefined.
  std::optional<Path> suffix(VertexId v) const;
  std::optional<Rational> vertex_cost(VertexId v) const;
  std::optional<EdgeIdx> first_edge(VertexId v) const;

  bool is_tree() const;
  /// Tree test on the union of paths of terminals not in `excluded`.
  bool is_tree_excluding(const std::vector<VertexId>& excluded) const;

  bool operator==(const State& other) const { return paths_ == other.paths_; }

 private:
  void check_path(VertexId u, const Path& path) const;
  void add_path(const Path& path, int sign);

  const Instance* instance_;
  std::vector<Path> paths_;
  std::vector<std::uint32_t> usage_;
  std::vector<std::uint32_t> load_;
};

/// State file: `mcast-pos-state v1`, then one `path <terminal> <edge id>...`
/// line per non-root terminal; `#` starts a comment.
std::string serialize_state(const State& state);
/// Throws ParseError on syntax errors and InvalidPath on paths that do not fit.
State parse_state(const Instance& instance, std::string_view text);

/// Every terminal routes along its T* path to the root.
State tree_state(const Instance& instance, const SteinerTree& tree);

/// Exact sum_e c(e) * H_{n_e}.
Rational potential(const State& state);

/// Applies a move, asserting Phi(after) - Phi(before) = c_u(after) - c_u(before)
/// exactly, and records it when a trace is supplied.
const MoveRecord* apply_move(State& state, Trace* trace, VertexId mover, Path new_path,
                             MoveKind kind, const std::string& tag);

struct BestResponse {
  Path path;
  Rational cost;
};

/// Minimum-cost u->r path under marginal weights c(e)/(n_e^{-u}+1). Among
/// minima the lexicographically smallest vertex sequence is returned. When
/// `allowed` is given only edges with allowed[e] are used.
std::optional<BestResponse> best_response(const State& state, VertexId u,
                                          const std::vector<bool>* allowed = nullptr);

struct NashVerdict {
  bool nash = true;
  VertexId witness = kNone;
  Path improving_path;
  Rational current_cost;
  Rational deviation_cost;
};
NashVerdict is_nash(const State& state);

struct ScheduledMove {
  MoveKind kind = MoveKind::kSafe;
  VertexId mover = 0;
  Path path;
  Rational gain;
  std::vector<EdgeIdx> new_edges;
  std::vector<MainLoopJob> jobs;  // in execution order
};

/// Most improving safe move over S u T*, otherwise the most improving critical
/// candidate. Requires a tree state; throws std::logic_error otherwise.
std::optional<ScheduledMove> find_scheduled_move(const State& state, const SteinerTree& tree);

struct MakeTreeReport {
  std::size_t switches = 0;
  bool potential_ok = true;
  bool subset_ok = true;
  bool tree_ok = true;
  bool protected_ok = true;
};

/// Merges diverging suffixes of non-excluded paths onto the cheaper suffix until
/// their union is a tree. `protected_edges` must not gain users.
MakeTreeReport make_tree(State& state, const std::vector<VertexId>& excluded,
                         const std::vector<EdgeIdx>& protected_edges, Trace* trace);

}  // namespace mcast

#endif  // MCAST_GAME_HPP
