#include "mcast/trace.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <sstream>

namespace mcast {

bool Path::contains_vertex(VertexId v) const {
  return std::find(vertices.begin(), vertices.end(), v) != vertices.end();
}

bool Path::contains_edge(EdgeIdx e) const {
  return std::find(edges.begin(), edges.end(), e) != edges.end();
}

std::optional<std::size_t> Path::index_of(VertexId v) const {
  auto it = std::find(vertices.begin(), vertices.end(), v);
  if (it == vertices.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vertices.begin());
}

Path Path::tail(std::size_t i) const {
  Path out;
  out.vertices.assign(vertices.begin() + static_cast<std::ptrdiff_t>(i), vertices.end());
  out.edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(i), edges.end());
  return out;
}

std::string to_string(const Path& path) {
  std::string out;
  for (std::size_t i = 0; i < path.vertices.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(path.vertices[i]);
  }
  return out;
}

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::kSafe:
      return "safe";
    case MoveKind::kCritical:
      return "critical";
    case MoveKind::kScripted:
      return "scripted";
  }
  return "unknown";
}

LogLevel log_level_from_env() {
  const char* raw = std::getenv("MCAST_POS_LOG");
  if (raw == nullptr) return LogLevel::kQuiet;
  const std::string value(raw);
  if (value == "moves") return LogLevel::kMoves;
  if (value == "assertions") return LogLevel::kAssertions;
  if (value == "full") return LogLevel::kFull;
  return LogLevel::kQuiet;
}

namespace {

std::string edge_list(const std::vector<EdgeIdx>& edges, const Instance* instance) {
  if (edges.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) out += ',';
    out += instance ? std::to_string(instance->edge(edges[i]).id) : std::to_string(edges[i]);
  }
  return out;
}

std::string move_line(const MoveRecord& m, const Instance* instance) {
  std::ostringstream os;
  os << m.index << '\t' << to_string(m.kind) << '\t' << (m.tag.empty() ? "-" : m.tag) << '\t'
     << m.mover << '\t' << to_string(Rational(m.phi_after - m.phi_before)) << '\t'
     << edge_list(m.added, instance) << '\t' << edge_list(m.removed, instance) << '\t';
  if (m.failed.empty()) {
    os << "ok";
  } else {
    for (std::size_t i = 0; i < m.failed.size(); ++i) os << (i ? "," : "") << m.failed[i];
  }
  return os.str();
}

}  // namespace

bool Trace::check(bool ok, const std::string& tag, const std::string& detail) {
  assertions.push_back({tag, ok, detail, moves.size()});
  if (!ok && !moves.empty()) moves.back().failed.push_back(tag);
  if (live && (level == LogLevel::kFull || (!ok && level >= LogLevel::kAssertions))) {
    *live << "assert " << tag << (ok ? " ok" : " FAILED") << (detail.empty() ? "" : ": ")
          << detail << '\n';
  }
  return ok;
}

std::size_t Trace::failure_count() const {
  return static_cast<std::size_t>(
      std::count_if(assertions.begin(), assertions.end(), [](const auto& a) { return !a.passed; }));
}

std::size_t Trace::failure_count(const std::string& tag) const {
  return static_cast<std::size_t>(std::count_if(assertions.begin(), assertions.end(),
                                                [&](const auto& a) { return !a.passed && a.tag == tag; }));
}

const AssertionOutcome* Trace::first_failure() const {
  for (const auto& a : assertions) {
    if (!a.passed) return &a;
  }
  return nullptr;
}

std::string Trace::to_log() const {
  std::string out = "index\tkind\ttag\tmover\tdelta_phi\tadded\tremoved\tassertions\n";
  for (const auto& m : moves) out += move_line(m, instance) + '\n';
  return out;
}

void Trace::announce(const MoveRecord& record) const {
  if (!live || level == LogLevel::kQuiet) return;
  *live << move_line(record, instance);
  if (level == LogLevel::kFull) {
    *live << '\t' << to_string(record.old_path) << " -> " << to_string(record.new_path);
  }
  *live << '\n';
}

}  // namespace mcast
