#ifndef MCAST_DYNAMICS_HPP
#define MCAST_DYNAMICS_HPP

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcast/game.hpp"
#include "mcast/steiner.hpp"
#include "mcast/trace.hpp"

namespace mcast {

class LemmaViolation : public std::runtime_error {
 public:
  LemmaViolation(std::string tag, const std::string& detail, std::string snapshot)
      : std::runtime_error(tag + ": " + detail), tag_(std::move(tag)), snapshot_(std::move(snapshot)) {}
  const std::string& tag() const { return tag_; }
  /// State file of the state at the failure.
  const std::string& snapshot() const { return snapshot_; }

 private:
  std::string tag_;
  std::string snapshot_;
};

class GuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AbsorbOrder { kFromV, kFromR };

struct RunConfig {
  std::size_t guard = 1'000'000;  // maximum number of recorded moves
  AbsorbOrder absorb_order = AbsorbOrder::kFromV;
  bool stop_on_violation = true;
  std::size_t terminal_cap = kDefaultTerminalCap;
  LogLevel log_level = LogLevel::kQuiet;
  std::ostream* log = nullptr;
};

/// Nonterminals w in the state, outside T*, with c(sigma_w) <= low(e_w)/64.
std::vector<VertexId> z_set(const State& state, const OptStructures& opt);

struct Neighborhood {
  VertexId center = kNone;
  VertexId anchor = kNone;
  EdgeIdx e_v = kNone;
  EdgeClass cls;
  Interval interval;
  std::vector<VertexId> tree_vertices;  // MC vertices covered by the interval
  std::vector<VertexId> satellites;

  bool contains(VertexId x) const;
  /// tree_vertices and satellites, ascending.
  std::vector<VertexId> members() const;
};

/// N(v) in the current state. `class_cost` replaces c(e_v) when choosing the
/// class. Throws std::invalid_argument when v has no first edge.
Neighborhood neighborhood(const State& state, VertexId v, const OptStructures& opt,
                          const std::optional<Rational>& class_cost = std::nullopt);

/// |c_x - c_y| <= 4 * sum_a 256^(a+1) H^2_{n_a} over the classes of X's edges.
/// Empty when an endpoint cost is undefined.
std::optional<bool> is_path_homogeneous(const State& state, const TreePath& x_path);

/// Ready-to-run instance: normalized, heavy edges pruned at c(T*), T* recomputed.
struct Prepared {
  std::shared_ptr<const Instance> instance;
  Rational scale;  // prepared cost = scale * original cost
  OptStructures opt;
};
Prepared prepare(const Instance& raw, std::size_t terminal_cap = kDefaultTerminalCap);

enum class RunStatus { kCompleted, kViolation, kGuardExceeded };
std::string to_string(RunStatus status);

struct RunResult {
  std::shared_ptr<const Instance> instance;
  std::optional<State> final_state;
  Trace trace;
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  std::string snapshot;  // state file at the failure, if any
  std::size_t critical_moves = 0;
};

/// Runs the scheduled dynamics from T* until no safe or critical move remains.
RunResult run(const Prepared& prepared, const RunConfig& config);

/// The individual steps, exposed for tests. Each operates on `state` and
/// records into `trace`; lemma checks land in the trace and throw
/// LemmaViolation when config.stop_on_violation is set.
class Dynamics {
 public:
  Dynamics(const OptStructures& opt, State& state, Trace& trace, const RunConfig& config);

  /// Applies a move unless it is a no-op. `declared` lists the edges a critical
  /// move is allowed to introduce.
  const MoveRecord* apply(VertexId mover, Path path, MoveKind kind, const std::string& tag,
                          const std::vector<EdgeIdx>& declared = {});

  /// Terminals that follow q's route from q; for a nonterminal with diverging
  /// suffixes every path through q. q itself comes first.
  std::vector<VertexId> group(VertexId q) const;

  /// Prefix search along X = p_T*(x, y); true when a prefix committed.
  bool homogenize(const TreePath& x_path, const std::vector<VertexId>& frozen);

  void main_loop(const MainLoopJob& job);
  void absorb(VertexId v, VertexId u_v);

  /// One scheduled step from a tree state; false when none is left.
  bool step();

 private:
  void check(bool ok, const std::string& tag, const std::string& detail = {});
  void abort_if_failed(const MoveRecord* record);
  std::size_t move_group(VertexId q, const Path& target, const std::string& tag,
                         const std::vector<VertexId>& frozen, const std::string& lemma = {},
                         const std::string& note = {});
  /// Diagnostic suffix naming a v outside T* whose sigma edge is not cheap.
  std::string center_note(VertexId v, const Rational& low, EdgeIdx e_v) const;
  std::vector<VertexId> bfs_order(VertexId from, bool tree_only) const;

  const OptStructures& opt_;
  State& state_;
  Trace& trace_;
  const RunConfig& config_;
};

/// Rebuilds usage from the paths; any edge with no user is gone afterwards.
State cleanup_unused(const State& state);

}  // namespace mcast

#endif  // MCAST_DYNAMICS_HPP
