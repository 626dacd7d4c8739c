#include "mcast/game.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mcast {

Path loop_erase(const Path& walk) {
  Path out;
  if (walk.vertices.empty()) return out;
  out.vertices.push_back(walk.vertices.front());
  for (std::size_t i = 0; i < walk.edges.size(); ++i) {
    const VertexId v = walk.vertices[i + 1];
    if (auto pos = out.index_of(v)) {
      out.vertices.resize(*pos + 1);
      out.edges.resize(*pos);
    } else {
      out.edges.push_back(walk.edges[i]);
      out.vertices.push_back(v);
    }
  }
  return out;
}

Path concat(const Path& head, const Path& tail) {
  if (head.vertices.empty()) return tail;
  if (tail.vertices.empty()) return head;
  if (head.vertices.back() != tail.vertices.front()) {
    throw std::invalid_argument("concat: paths do not meet");
  }
  Path out = head;
  out.vertices.insert(out.vertices.end(), tail.vertices.begin() + 1, tail.vertices.end());
  out.edges.insert(out.edges.end(), tail.edges.begin(), tail.edges.end());
  return out;
}

Path walk_from_edges(const Instance& instance, VertexId start, const std::vector<EdgeIdx>& edges) {
  Path out;
  out.vertices.push_back(start);
  for (EdgeIdx e : edges) {
    if (e >= instance.edge_count()) throw std::invalid_argument("unknown edge index");
    const Edge& ed = instance.edge(e);
    const VertexId at = out.vertices.back();
    if (!ed.touches(at)) {
      throw std::invalid_argument("edge " + std::to_string(ed.id) + " does not touch vertex " +
                                  std::to_string(at));
    }
    out.edges.push_back(e);
    out.vertices.push_back(ed.other(at));
  }
  return out;
}

State::State(const Instance& instance, std::vector<Path> paths)
    : instance_(&instance),
      paths_(std::move(paths)),
      usage_(instance.edge_count(), 0),
      load_(instance.vertex_count(), 0) {
  if (paths_.size() != instance.vertex_count()) {
    throw InvalidPath("state needs one path slot per vertex");
  }
  for (VertexId v = 0; v < paths_.size(); ++v) {
    if (!instance.is_terminal(v)) {
      if (!paths_[v].vertices.empty()) throw InvalidPath("nonterminal " + std::to_string(v) + " has a path");
      continue;
    }
    if (v == instance.root() && paths_[v].vertices.empty()) paths_[v].vertices = {v};
    check_path(v, paths_[v]);
    add_path(paths_[v], 1);
  }
}

void State::check_path(VertexId u, const Path& path) const {
  const Instance& inst = *instance_;
  if (!inst.is_terminal(u)) throw InvalidPath("vertex " + std::to_string(u) + " is not a terminal");
  if (path.vertices.empty() || path.vertices.front() != u || path.vertices.back() != inst.root()) {
    throw InvalidPath("path of " + std::to_string(u) + " must run from it to the root");
  }
  if (path.edges.size() + 1 != path.vertices.size()) throw InvalidPath("path shape mismatch");
  std::set<VertexId> seen(path.vertices.begin(), path.vertices.end());
  if (seen.size() != path.vertices.size()) {
    throw InvalidPath("path of " + std::to_string(u) + " is not simple");
  }
  for (std::size_t i = 0; i < path.edges.size(); ++i) {
    if (path.edges[i] >= inst.edge_count()) throw InvalidPath("unknown edge index");
    const Edge& e = inst.edge(path.edges[i]);
    if (!(e.touches(path.vertices[i]) && e.other(path.vertices[i]) == path.vertices[i + 1])) {
      throw InvalidPath("edge " + std::to_string(e.id) + " does not join consecutive path vertices");
    }
  }
}

void State::add_path(const Path& path, int sign) {
  for (EdgeIdx e : path.edges) usage_[e] = static_cast<std::uint32_t>(usage_[e] + sign);
  for (VertexId v : path.vertices) load_[v] = static_cast<std::uint32_t>(load_[v] + sign);
}

std::vector<EdgeIdx> State::edge_set() const {
  std::vector<EdgeIdx> out;
  for (EdgeIdx e = 0; e < usage_.size(); ++e) {
    if (usage_[e] > 0) out.push_back(e);
  }
  return out;
}

std::vector<VertexId> State::vertex_set() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < load_.size(); ++v) {
    if (load_[v] > 0) out.push_back(v);
  }
  return out;
}

Rational State::reroute(VertexId u, Path path) {
  if (u == instance_->root()) throw InvalidPath("the root does not move");
  check_path(u, path);
  Rational delta(0);
  const Path& old = paths_[u];
  for (EdgeIdx e : old.edges) {
    if (!path.contains_edge(e)) delta -= instance_->cost(e) / usage_[e];
  }
  for (EdgeIdx e : path.edges) {
    if (!old.contains_edge(e)) delta += instance_->cost(e) / (usage_[e] + 1);
  }
  add_path(old, -1);
  paths_[u] = std::move(path);
  add_path(paths_[u], 1);
  return delta;
}

Rational State::potential() const {
  Rational phi(0);
  for (EdgeIdx e = 0; e < usage_.size(); ++e) {
    if (usage_[e] > 0) phi += instance_->cost(e) * harmonic(usage_[e]);
  }
  return phi;
}

Rational State::social_cost() const {
  Rational total(0);
  for (EdgeIdx e = 0; e < usage_.size(); ++e) {
    if (usage_[e] > 0) total += instance_->cost(e);
  }
  return total;
}

Rational State::share(const std::vector<EdgeIdx>& edges) const {
  Rational total(0);
  for (EdgeIdx e : edges) total += instance_->cost(e) / std::max<std::uint32_t>(usage_[e], 1);
  return total;
}

Rational State::player_cost(VertexId u) const { return share(paths_[u].edges); }

Rational State::deviation_cost(VertexId u, const Path& path) const {
  const Path& own = paths_[u];
  Rational total(0);
  for (EdgeIdx e : path.edges) {
    const std::uint32_t others = usage_[e] - (own.contains_edge(e) ? 1U : 0U);
    total += instance_->cost(e) / (others + 1);
  }
  return total;
}

std::vector<VertexId> State::users_through(VertexId v) const {
  std::vector<VertexId> out;
  if (load_[v] == 0) return out;
  for (VertexId t : instance_->terminals()) {
    if (t != instance_->root() && paths_[t].contains_vertex(v)) out.push_back(t);
  }
  return out;
}

std::vector<VertexId> State::users_of_edge(EdgeIdx e) const {
  std::vector<VertexId> out;
  if (usage_[e] == 0) return out;
  for (VertexId t : instance_->terminals()) {
    if (paths_[t].contains_edge(e)) out.push_back(t);
  }
  return out;
}

std::optional<Path> State::suffix(VertexId v) const {
  if (instance_->is_terminal(v)) return paths_[v];
  std::optional<Path> common;
  for (VertexId t : users_through(v)) {
    Path tail = paths_[t].tail(*paths_[t].index_of(v));
    if (!common) {
      common = std::move(tail);
    } else if (*common != tail) {
      return std::nullopt;
    }
  }
  return common;
}

std::optional<Rational> State::vertex_cost(VertexId v) const {
  auto s = suffix(v);
  if (!s) return std::nullopt;
  return share(s->edges);
}

std::optional<EdgeIdx> State::first_edge(VertexId v) const {
  auto s = suffix(v);
  if (!s || s->edges.empty()) return std::nullopt;
  return s->edges.front();
}

bool State::is_tree() const {
  std::size_t edges = 0;
  std::size_t vertices = 0;
  for (auto u : usage_) edges += u > 0 ? 1 : 0;
  for (auto l : load_) vertices += l > 0 ? 1 : 0;
  return edges + 1 == vertices;
}

bool State::is_tree_excluding(const std::vector<VertexId>& excluded) const {
  std::set<EdgeIdx> edges;
  std::set<VertexId> vertices{instance_->root()};
  for (VertexId t : instance_->terminals()) {
    if (std::find(excluded.begin(), excluded.end(), t) != excluded.end()) continue;
    edges.insert(paths_[t].edges.begin(), paths_[t].edges.end());
    vertices.insert(paths_[t].vertices.begin(), paths_[t].vertices.end());
  }
  return edges.size() + 1 == vertices.size();
}

State tree_state(const Instance& instance, const SteinerTree& tree) {
  std::vector<Path> paths(instance.vertex_count());
  for (VertexId t : instance.terminals()) {
    TreePath tp = tree_path(tree, t, instance.root());
    paths[t] = Path{std::move(tp.vertices), std::move(tp.edges)};
  }
  return State(instance, std::move(paths));
}

Rational potential(const State& state) { return state.potential(); }

const MoveRecord* apply_move(State& state, Trace* trace, VertexId mover, Path new_path,
                             MoveKind kind, const std::string& tag) {
  const Path old_path = state.path(mover);
  const Rational phi_before = state.potential();
  const Rational cost_before = state.player_cost(mover);
  std::vector<EdgeIdx> added;
  std::vector<EdgeIdx> removed;
  for (EdgeIdx e : new_path.edges) {
    if (state.usage(e) == 0) added.push_back(e);
  }
  for (EdgeIdx e : old_path.edges) {
    if (state.usage(e) == 1 && !new_path.contains_edge(e)) removed.push_back(e);
  }
  const Rational delta = state.reroute(mover, std::move(new_path));
  const Rational phi_after = state.potential();
  const Rational cost_after = state.player_cost(mover);
  if (phi_after - phi_before != cost_after - cost_before || delta != phi_after - phi_before) {
    throw std::logic_error("potential identity violated for player " + std::to_string(mover));
  }
  if (trace == nullptr) return nullptr;
  std::sort(added.begin(), added.end());
  std::sort(removed.begin(), removed.end());
  MoveRecord record;
  record.index = trace->moves.size();
  record.kind = kind;
  record.tag = tag;
  record.mover = mover;
  record.old_path = old_path;
  record.new_path = state.path(mover);
  record.phi_before = phi_before;
  record.phi_after = phi_after;
  record.social_cost = state.social_cost();
  record.added = std::move(added);
  record.removed = std::move(removed);
  trace->moves.push_back(std::move(record));
  const MoveRecord& stored = trace->moves.back();
  trace->announce(stored);
  trace->check(stored.improving(), "strict-decrease",
               tag + " move of " + std::to_string(mover) + " changed potential by " +
                   to_string(Rational(phi_after - phi_before)));
  return &trace->moves.back();
}

std::optional<BestResponse> best_response(const State& state, VertexId u,
                                          const std::vector<bool>* allowed) {
  const Instance& inst = state.instance();
  const std::size_t n = inst.vertex_count();
  const Path& own = state.path(u);
  std::vector<Rational> weight(inst.edge_count());
  for (EdgeIdx e = 0; e < inst.edge_count(); ++e) {
    const std::uint32_t others = state.usage(e) - (own.contains_edge(e) ? 1U : 0U);
    weight[e] = inst.cost(e) / (others + 1);
  }
  auto usable = [&](EdgeIdx e) { return allowed == nullptr || (*allowed)[e]; };

  std::vector<std::optional<Rational>> dist(n);
  std::vector<bool> done(n, false);
  dist[inst.root()] = Rational(0);
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v] && dist[v] && (best == n || *dist[v] < *dist[best])) best = v;
    }
    if (best == n) break;
    done[best] = true;
    for (const auto& inc : inst.incident(static_cast<VertexId>(best))) {
      if (!usable(inc.edge) || done[inc.neighbor]) continue;
      Rational cand = *dist[best] + weight[inc.edge];
      if (!dist[inc.neighbor] || cand < *dist[inc.neighbor]) dist[inc.neighbor] = std::move(cand);
    }
  }
  if (!dist[u]) return std::nullopt;

  BestResponse out;
  out.cost = *dist[u];
  out.path.vertices.push_back(u);
  VertexId at = u;
  while (at != inst.root()) {
    VertexId next = kNone;
    EdgeIdx via = kNone;
    for (const auto& inc : inst.incident(at)) {
      if (!usable(inc.edge) || !dist[inc.neighbor]) continue;
      if (*dist[at] != weight[inc.edge] + *dist[inc.neighbor]) continue;
      if (next == kNone || inc.neighbor < next) {
        next = inc.neighbor;
        via = inc.edge;
      }
    }
    out.path.edges.push_back(via);
    out.path.vertices.push_back(next);
    at = next;
  }
  return out;
}

NashVerdict is_nash(const State& state) {
  NashVerdict verdict;
  const Instance& inst = state.instance();
  for (VertexId u : inst.terminals()) {
    if (u == inst.root()) continue;
    auto br = best_response(state, u);
    const Rational current = state.player_cost(u);
    if (br && br->cost < current) {
      verdict.nash = false;
      verdict.witness = u;
      verdict.improving_path = br->path;
      verdict.current_cost = current;
      verdict.deviation_cost = br->cost;
      return verdict;
    }
  }
  return verdict;
}

namespace {

bool better_candidate(const ScheduledMove& a, const std::optional<ScheduledMove>& b) {
  if (!b) return true;
  if (a.gain != b->gain) return a.gain > b->gain;
  if (a.mover != b->mover) return a.mover < b->mover;
  return a.path < b->path;
}

}  // namespace

std::optional<ScheduledMove> find_scheduled_move(const State& state, const SteinerTree& tree) {
  if (!state.is_tree()) throw std::logic_error("find_scheduled_move needs a tree state");
  const Instance& inst = state.instance();
  std::vector<bool> allowed(inst.edge_count());
  for (EdgeIdx e = 0; e < inst.edge_count(); ++e) {
    allowed[e] = state.contains_edge(e) || tree.contains_edge(e);
  }

  std::optional<ScheduledMove> best;
  for (VertexId u : inst.terminals()) {
    if (u == inst.root()) continue;
    auto br = best_response(state, u, &allowed);
    if (!br) continue;
    ScheduledMove cand;
    cand.kind = MoveKind::kSafe;
    cand.mover = u;
    cand.gain = state.player_cost(u) - br->cost;
    cand.path = std::move(br->path);
    if (cand.gain > 0 && better_candidate(cand, best)) best = std::move(cand);
  }
  if (best) return best;

  auto consider = [&](VertexId u, Path path, std::vector<EdgeIdx> new_edges,
                      std::vector<MainLoopJob> jobs) {
    ScheduledMove cand;
    cand.kind = MoveKind::kCritical;
    cand.mover = u;
    cand.gain = state.player_cost(u) - state.deviation_cost(u, path);
    if (cand.gain <= 0) return;
    cand.path = std::move(path);
    cand.new_edges = std::move(new_edges);
    cand.jobs = std::move(jobs);
    if (better_candidate(cand, best)) best = std::move(cand);
  };

  for (VertexId u : inst.terminals()) {
    if (u == inst.root()) continue;
    for (const auto& first : inst.incident(u)) {
      const VertexId x = first.neighbor;
      const bool first_new = !allowed[first.edge];
      if (state.contains_vertex(x) && first_new) {
        auto tail = state.suffix(x);
        if (!tail || tail->contains_vertex(u)) continue;
        Path head{{u, x}, {first.edge}};
        consider(u, concat(head, *tail), {first.edge}, {{u, first.edge, kNone}});
        continue;
      }
      // Relay through a nonterminal; when it is already in the state the
      // second edge must be the new one.
      if (inst.is_terminal(x)) continue;
      const VertexId b = x;
      const bool relay_in_state = state.contains_vertex(b);
      for (const auto& second : inst.incident(b)) {
        const VertexId y = second.neighbor;
        if (y == u || !state.contains_vertex(y)) continue;
        const bool second_new = !allowed[second.edge];
        if (!first_new && !second_new) continue;
        if (relay_in_state && !second_new) continue;
        auto tail = state.suffix(y);
        if (!tail || tail->contains_vertex(u) || tail->contains_vertex(b)) continue;
        Path head{{u, b, y}, {first.edge, second.edge}};
        std::vector<EdgeIdx> fresh;
        std::vector<MainLoopJob> jobs;
        if (first_new) fresh.push_back(first.edge);
        if (second_new) {
          fresh.push_back(second.edge);
          jobs.push_back({b, second.edge, u});
        }
        if (first_new) jobs.push_back({u, first.edge, kNone});
        consider(u, concat(head, *tail), std::move(fresh), std::move(jobs));
      }
    }
  }
  return best;
}

namespace {

bool is_excluded(const std::vector<VertexId>& excluded, VertexId t) {
  return std::find(excluded.begin(), excluded.end(), t) != excluded.end();
}

}  // namespace

MakeTreeReport make_tree(State& state, const std::vector<VertexId>& excluded,
                         const std::vector<EdgeIdx>& protected_edges, Trace* trace) {
  MakeTreeReport report;
  const Instance& inst = state.instance();
  const Rational phi_before = state.potential();
  const std::vector<EdgeIdx> edges_before = state.edge_set();

  while (true) {
    bool changed = false;
    for (VertexId x = 0; x < inst.vertex_count() && !changed; ++x) {
      if (!state.contains_vertex(x) || x == inst.root()) continue;
      std::map<Path, std::vector<VertexId>> groups;
      for (VertexId t : state.users_through(x)) {
        if (is_excluded(excluded, t)) continue;
        groups[state.path(t).tail(*state.path(t).index_of(x))].push_back(t);
      }
      if (groups.size() < 2) continue;
      const Path* target = nullptr;
      Rational target_share;
      for (const auto& [tail, members] : groups) {
        Rational s = state.share(tail.edges);
        // std::map iterates tails in lexicographic order, so strict < keeps the
        // smallest tail among equal shares.
        if (target == nullptr || s < target_share) {
          target = &tail;
          target_share = std::move(s);
        }
      }
      const Path goal = *target;
      for (const auto& [tail, members] : groups) {
        if (tail == goal) continue;
        for (VertexId t : members) {
          const Path& cur = state.path(t);
          Path head = cur;
          const std::size_t at = *cur.index_of(x);
          head.vertices.resize(at + 1);
          head.edges.resize(at);
          Path next = loop_erase(concat(head, goal));
          for (EdgeIdx e : protected_edges) {
            if (next.contains_edge(e) && !cur.contains_edge(e)) {
              report.protected_ok = false;
              if (trace) trace->check(false, "make-tree-protected", "edge gains a user");
            }
          }
          apply_move(state, trace, t, std::move(next), MoveKind::kScripted, "make-tree");
          ++report.switches;
        }
      }
      changed = true;
    }
    if (!changed) break;
  }

  const std::vector<EdgeIdx> edges_after = state.edge_set();
  report.potential_ok = state.potential() <= phi_before;
  report.subset_ok = std::includes(edges_before.begin(), edges_before.end(), edges_after.begin(),
                                   edges_after.end());
  report.tree_ok = state.is_tree_excluding(excluded);
  if (trace) {
    trace->check(report.potential_ok, "make-tree-potential");
    trace->check(report.subset_ok, "make-tree-subset");
    trace->check(report.tree_ok, "make-tree-tree");
  }
  return report;
}

}  // namespace mcast

namespace mcast {

std::string serialize_state(const State& state) {
  const Instance& inst = state.instance();
  std::string out = "mcast-pos-state v1\n";
  for (VertexId t : inst.terminals()) {
    if (t == inst.root()) continue;
    out += "path " + std::to_string(t);
    for (EdgeIdx e : state.path(t).edges) out += ' ' + std::to_string(inst.edge(e).id);
    out += '\n';
  }
  return out;
}

State parse_state(const Instance& instance, std::string_view text) {
  std::vector<Path> paths(instance.vertex_count());
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string word;
    if (!(words >> word)) continue;
    if (!header) {
      std::string version;
      if (word != "mcast-pos-state" || !(words >> version) || version != "v1") {
        throw ParseError(line_no, "expected header 'mcast-pos-state v1'");
      }
      header = true;
      continue;
    }
    if (word != "path") throw ParseError(line_no, "unknown directive '" + word + "'");
    long long terminal = -1;
    if (!(words >> terminal) || terminal < 0 ||
        static_cast<std::size_t>(terminal) >= instance.vertex_count()) {
      throw ParseError(line_no, "bad terminal id");
    }
    std::vector<EdgeIdx> edges;
    std::string token;
    while (words >> token) {
      std::int64_t id = 0;
      try {
        std::size_t used = 0;
        id = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad edge id '" + token + "'");
      }
      auto idx = instance.find_edge_id(id);
      if (!idx) throw ParseError(line_no, "unknown edge id " + token);
      edges.push_back(*idx);
    }
    const auto u = static_cast<VertexId>(terminal);
    if (!paths[u].vertices.empty()) throw ParseError(line_no, "duplicate path for terminal");
    try {
      paths[u] = walk_from_edges(instance, u, edges);
    } catch (const std::invalid_argument& e) {
      throw InvalidPath(e.what());
    }
  }
  if (!header) throw ParseError(line_no, "missing header");
  for (VertexId t : instance.terminals()) {
    if (t != instance.root() && paths[t].vertices.empty()) {
      throw InvalidPath("no path for terminal " + std::to_string(t));
    }
  }
  return State(instance, std::move(paths));
}

}  // namespace mcast
