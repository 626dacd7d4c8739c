#ifndef MCAST_TRACE_HPP
#define MCAST_TRACE_HPP

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcast/instance.hpp"

namespace mcast {

/// Simple routing path: vertices[0] is the source, vertices.back() the root and
/// edges[i] joins vertices[i] and vertices[i+1].
struct Path {
  std::vector<VertexId> vertices;
  std::vector<EdgeIdx> edges;

  VertexId source() const { return vertices.front(); }
  std::size_t length() const { return edges.size(); }
  bool contains_vertex(VertexId v) const;
  bool contains_edge(EdgeIdx e) const;
  std::optional<std::size_t> index_of(VertexId v) const;
  /// Tail starting at vertices[i].
  Path tail(std::size_t i) const;

  bool operator==(const Path&) const = default;
  auto operator<=>(const Path&) const = default;
};

std::string to_string(const Path& path);

enum class MoveKind { kSafe, kCritical, kScripted };
std::string to_string(MoveKind kind);

enum class LogLevel { kQuiet, kMoves, kAssertions, kFull };
/// Reads MCAST_POS_LOG; unknown or missing values mean quiet.
LogLevel log_level_from_env();

struct MoveRecord {
  std::size_t index = 0;
  MoveKind kind = MoveKind::kScripted;
  std::string tag;
  VertexId mover = 0;
  Path old_path;
  Path new_path;
  Rational phi_before;
  Rational phi_after;
  Rational social_cost;  // after the move
  std::vector<EdgeIdx> added;
  std::vector<EdgeIdx> removed;
  std::vector<std::string> failed;  // assertion tags that failed at this move

  bool improving() const { return phi_after < phi_before; }
};

struct AssertionOutcome {
  std::string tag;
  bool passed = true;
  std::string detail;
  std::size_t at_move = 0;  // number of moves recorded when checked
};

/// One MainLoop invocation scheduled by a critical move.
struct MainLoopJob {
  VertexId v = kNone;
  EdgeIdx e_v = kNone;
  VertexId u_v = kNone;  // kNone when v is a terminal
};

struct CriticalEvent {
  std::size_t move_index = 0;
  VertexId mover = 0;
  std::vector<EdgeIdx> new_edges;
  std::vector<MainLoopJob> jobs;
};

struct SigmaEvent {
  std::size_t move_index = 0;
  VertexId w = 0;
  EdgeIdx sigma = kNone;
  std::optional<EdgeIdx> prior_first_edge;  // e_w just before sigma_w appeared
  std::size_t snapshot = 0;                 // moves recorded before the addition
};

struct EdgeOrigin {
  enum Kind { kCritical, kSigma } kind = kCritical;
  std::size_t event = 0;
};

class Trace {
 public:
  std::vector<MoveRecord> moves;
  std::vector<CriticalEvent> critical_events;
  std::vector<SigmaEvent> sigma_events;
  std::vector<AssertionOutcome> assertions;
  std::map<EdgeIdx, EdgeOrigin> last_addition;
  std::vector<std::pair<std::size_t, EdgeIdx>> main_loops_run;  // (critical event, e_v) per MainLoop run

  LogLevel level = LogLevel::kQuiet;
  std::ostream* live = nullptr;
  const Instance* instance = nullptr;  // maps edge indices to ids when printing

  /// Records the outcome; failures are also attached to the latest move.
  bool check(bool ok, const std::string& tag, const std::string& detail = {});
  std::size_t failure_count() const;
  std::size_t failure_count(const std::string& tag) const;
  const AssertionOutcome* first_failure() const;

  /// Tab-separated, one line per move.
  std::string to_log() const;
  void announce(const MoveRecord& record) const;
};

}  // namespace mcast

#endif  // MCAST_TRACE_HPP
