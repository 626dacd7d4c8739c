#include "mcast/dynamics.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace mcast {

namespace {

Path as_path(TreePath tp) { return Path{std::move(tp.vertices), std::move(tp.edges)}; }

Path head_until(const Path& path, VertexId q) {
  const std::size_t i = *path.index_of(q);
  Path head = path;
  head.vertices.resize(i + 1);
  head.edges.resize(i);
  return head;
}

bool has(const std::vector<VertexId>& set, VertexId x) {
  return std::find(set.begin(), set.end(), x) != set.end();
}

Path single_edge(const Instance& inst, VertexId from, EdgeIdx e) {
  return Path{{from, inst.edge(e).other(from)}, {e}};
}

std::vector<VertexId> group_in(const State& state, VertexId q) {
  const Instance& inst = state.instance();
  std::vector<VertexId> out;
  if (q == inst.root()) return out;
  if (inst.is_terminal(q)) out.push_back(q);
  const auto route = state.suffix(q);
  for (VertexId t : state.users_through(q)) {
    if (t == q) continue;
    const Path& p = state.path(t);
    if (!route || p.tail(*p.index_of(q)) == *route) out.push_back(t);
  }
  return out;
}

std::string vertex_pair(VertexId x, VertexId y) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

}  // namespace

std::vector<VertexId> z_set(const State& state, const OptStructures& opt) {
  const Instance& inst = state.instance();
  std::vector<VertexId> out;
  for (VertexId w = 0; w < inst.vertex_count(); ++w) {
    if (inst.is_terminal(w) || !state.contains_vertex(w) || opt.tree.contains_vertex(w)) continue;
    if (!opt.sigma.has(w)) continue;
    const auto e = state.first_edge(w);
    if (!e) continue;
    if (inst.cost(opt.sigma.at(w).edge) * 64 <= edge_class(inst.cost(*e)).low) out.push_back(w);
  }
  return out;
}

bool Neighborhood::contains(VertexId x) const {
  return std::binary_search(tree_vertices.begin(), tree_vertices.end(), x) ||
         std::binary_search(satellites.begin(), satellites.end(), x);
}

std::vector<VertexId> Neighborhood::members() const {
  std::vector<VertexId> out;
  std::set_union(tree_vertices.begin(), tree_vertices.end(), satellites.begin(), satellites.end(),
                 std::back_inserter(out));
  return out;
}

Neighborhood neighborhood(const State& state, VertexId v, const OptStructures& opt,
                          const std::optional<Rational>& class_cost) {
  const Instance& inst = state.instance();
  const auto e = state.first_edge(v);
  if (!e) throw std::invalid_argument("vertex " + std::to_string(v) + " has no first edge");
  Neighborhood n;
  n.center = v;
  n.e_v = *e;
  n.cls = edge_class(class_cost.value_or(inst.cost(*e)));
  if (opt.tree.contains_vertex(v)) {
    n.anchor = v;
  } else if (opt.sigma.has(v)) {
    n.anchor = opt.sigma.at(v).terminal;
  } else {
    throw std::invalid_argument("vertex " + std::to_string(v) + " has no sigma edge");
  }
  n.interval = interval(inst, opt.mc, n.anchor, n.cls.low / 56);
  n.tree_vertices = n.interval.vertices(opt.mc);
  for (VertexId w : z_set(state, opt)) {
    const auto& s = opt.sigma.at(w);
    if (std::binary_search(n.tree_vertices.begin(), n.tree_vertices.end(), s.terminal) &&
        inst.cost(s.edge) * 64 <= n.cls.low) {
      n.satellites.push_back(w);
    }
  }
  return n;
}

std::optional<bool> is_path_homogeneous(const State& state, const TreePath& x_path) {
  const auto cx = state.vertex_cost(x_path.vertices.front());
  const auto cy = state.vertex_cost(x_path.vertices.back());
  if (!cx || !cy) return std::nullopt;
  std::map<unsigned, std::size_t> counts;
  for (EdgeIdx e : x_path.edges) ++counts[edge_class(state.instance().cost(e)).index];
  const Rational gap = *cx > *cy ? Rational(*cx - *cy) : Rational(*cy - *cx);
  return gap <= 2 * interval_weight(counts);
}

Prepared prepare(const Instance& raw, std::size_t terminal_cap) {
  Normalized norm = normalize_costs(raw);
  const SteinerTree first = exact_steiner(norm.instance, terminal_cap);
  auto pruned = std::make_shared<const Instance>(prune_heavy_edges(norm.instance, first.total_cost));
  // Edge indices shift when edges are dropped, so T* is recomputed on the
  // pruned instance; its cost and edge ids are unchanged.
  SteinerTree tree = exact_steiner(*pruned, terminal_cap);
  Prepared out{pruned, norm.scale, build_opt_structures(*pruned, std::move(tree))};
  return out;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted:
      return "completed";
    case RunStatus::kViolation:
      return "violation";
    case RunStatus::kGuardExceeded:
      return "guard-exceeded";
  }
  return "unknown";
}

Dynamics::Dynamics(const OptStructures& opt, State& state, Trace& trace, const RunConfig& config)
    : opt_(opt), state_(state), trace_(trace), config_(config) {}

void Dynamics::check(bool ok, const std::string& tag, const std::string& detail) {
  trace_.check(ok, tag, detail);
  if (!ok && config_.stop_on_violation) throw LemmaViolation(tag, detail, serialize_state(state_));
}

void Dynamics::abort_if_failed(const MoveRecord* record) {
  if (record == nullptr || record->failed.empty() || !config_.stop_on_violation) return;
  throw LemmaViolation(record->failed.front(),
                       "at move " + std::to_string(record->index) + " (" + record->tag + ")",
                       serialize_state(state_));
}

const MoveRecord* Dynamics::apply(VertexId mover, Path path, MoveKind kind, const std::string& tag,
                                  const std::vector<EdgeIdx>& declared) {
  if (path == state_.path(mover)) return nullptr;
  if (trace_.moves.size() >= config_.guard) {
    throw GuardExceeded("iteration guard of " + std::to_string(config_.guard) + " moves exceeded");
  }
  const Instance& inst = state_.instance();
  std::map<EdgeIdx, std::pair<VertexId, std::optional<EdgeIdx>>> sigma_before;
  for (EdgeIdx e : path.edges) {
    if (state_.contains_edge(e) || opt_.tree.contains_edge(e)) continue;
    if (auto w = opt_.sigma.owner_of(e); w && !opt_.tree.contains_vertex(*w)) {
      sigma_before[e] = {*w, state_.first_edge(*w)};
    }
  }
  const MoveRecord* rec = apply_move(state_, &trace_, mover, std::move(path), kind, tag);
  const std::size_t index = rec->index;
  for (EdgeIdx e : std::vector<EdgeIdx>(rec->added)) {
    if (opt_.tree.contains_edge(e)) continue;
    if (std::find(declared.begin(), declared.end(), e) != declared.end()) {
      trace_.last_addition[e] = {EdgeOrigin::kCritical, trace_.critical_events.size() - 1};
    } else if (auto it = sigma_before.find(e); it != sigma_before.end()) {
      trace_.sigma_events.push_back({index, it->second.first, e, it->second.second, index});
      trace_.last_addition[e] = {EdgeOrigin::kSigma, trace_.sigma_events.size() - 1};
    } else {
      trace_.check(false, "attribution",
                   "edge " + std::to_string(inst.edge(e).id) + " added by " + tag + " move");
    }
  }
  abort_if_failed(&trace_.moves[index]);
  return &trace_.moves[index];
}

std::vector<VertexId> Dynamics::group(VertexId q) const { return group_in(state_, q); }

std::string Dynamics::center_note(VertexId v, const Rational& low, EdgeIdx e_v) const {
  if (opt_.tree.contains_vertex(v) || !opt_.sigma.has(v)) return {};
  const auto& s = opt_.sigma.at(v);
  if (s.edge == e_v) return " (e_v is sigma_v)";
  if (state_.instance().cost(s.edge) * 64 > low) return " (c(sigma_v) > low(e_v)/64)";
  return {};
}

std::size_t Dynamics::move_group(VertexId q, const Path& target, const std::string& tag,
                                 const std::vector<VertexId>& frozen, const std::string& lemma,
                                 const std::string& note) {
  std::size_t moved = 0;
  for (VertexId t : group(q)) {
    if (has(frozen, t)) continue;
    Path next = loop_erase(concat(head_until(state_.path(t), q), target));
    const MoveRecord* rec = apply(t, std::move(next), MoveKind::kScripted, tag);
    if (rec == nullptr) continue;
    ++moved;
    if (!lemma.empty()) {
      const bool ok = rec->improving();
      std::string detail = tag + " switch of " + std::to_string(t) + " at move " +
                           std::to_string(rec->index);
      if (!ok) detail += note;
      check(ok, lemma, detail);
    }
  }
  return moved;
}

std::vector<VertexId> Dynamics::bfs_order(VertexId from, bool /*tree_only*/) const {
  std::vector<VertexId> order{from};
  std::vector<bool> seen(opt_.tplus.adjacency.size(), false);
  seen[from] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& [next, edge] : opt_.tplus.adjacency[order[i]]) {
      if (seen[next]) continue;
      seen[next] = true;
      order.push_back(next);
    }
  }
  return order;
}

bool Dynamics::homogenize(const TreePath& x_path, const std::vector<VertexId>& frozen) {
  const auto& xs = x_path.vertices;
  const State snapshot = state_;
  const Rational phi0 = snapshot.potential();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const auto route = snapshot.suffix(xs[i]);
    if (!route) continue;
    State trial = snapshot;
    std::vector<std::pair<VertexId, Path>> plan;
    for (std::size_t j = i; j-- > 0;) {
      const VertexId q = xs[j];
      const Path target = concat(as_path(tree_path(opt_.tree, q, xs[i])), *route);
      for (VertexId t : group_in(trial, q)) {
        if (has(frozen, t)) continue;
        Path next = loop_erase(concat(head_until(trial.path(t), q), target));
        if (next == trial.path(t)) continue;
        trial.reroute(t, next);
        plan.emplace_back(t, std::move(next));
      }
    }
    if (trial.potential() < phi0) {
      for (auto& [t, p] : plan) apply(t, std::move(p), MoveKind::kScripted, "homogenize");
      return true;
    }
  }
  check(false, "homogenize-prefix",
        "no prefix of " + to_string(Path{x_path.vertices, x_path.edges}) + " lowers the potential");
  return false;
}

void Dynamics::main_loop(const MainLoopJob& job) {
  const Instance& inst = state_.instance();
  const VertexId v = job.v;
  const VertexId u_v = job.u_v;
  const bool steiner = u_v != kNone;
  if (state_.first_edge(v) != std::optional<EdgeIdx>(job.e_v)) return;
  trace_.main_loops_run.emplace_back(trace_.critical_events.size() - 1, job.e_v);

  std::vector<EdgeIdx> protected_edges{job.e_v};
  if (steiner && !state_.path(u_v).edges.empty()) {
    protected_edges.push_back(state_.path(u_v).edges.front());
  }
  auto frozen_set = [&] {
    std::vector<VertexId> frozen = state_.users_of_edge(job.e_v);
    if (inst.is_terminal(v)) frozen.push_back(v);
    if (steiner) frozen.push_back(u_v);
    std::sort(frozen.begin(), frozen.end());
    frozen.erase(std::unique(frozen.begin(), frozen.end()), frozen.end());
    return frozen;
  };
  auto excluded = [&](VertexId x) { return x == v || x == u_v; };

  Neighborhood n;
  while (true) {
    const std::vector<VertexId> frozen = frozen_set();
    n = neighborhood(state_, v, opt_);

    // Non-homogeneous T* segment inside the interval that avoids v and u_v.
    std::optional<TreePath> bad;
    for (std::size_t a = 0; a < n.tree_vertices.size() && !bad; ++a) {
      for (std::size_t b = a + 1; b < n.tree_vertices.size() && !bad; ++b) {
        const VertexId x = n.tree_vertices[a];
        const VertexId y = n.tree_vertices[b];
        if (excluded(x) || excluded(y)) continue;
        TreePath X = tree_path(opt_.tree, x, y);
        if (std::any_of(X.vertices.begin(), X.vertices.end(), excluded)) continue;
        const auto verdict = is_path_homogeneous(state_, X);
        if (!verdict || *verdict) continue;
        if (*state_.vertex_cost(y) > *state_.vertex_cost(x)) X = tree_path(opt_.tree, y, x);
        bad = std::move(X);
      }
    }
    if (bad) {
      if (!homogenize(*bad, frozen)) {
        throw LemmaViolation("homogenize-prefix", "no improving prefix", serialize_state(state_));
      }
      continue;
    }

    bool acted = false;
    if (steiner) {
      std::vector<std::pair<VertexId, EdgeIdx>> around;
      for (VertexId x : n.members()) {
        if (excluded(x)) continue;
        if (auto e = opt_.tplus.edge_between(x, u_v)) around.emplace_back(x, *e);
      }
      for (const auto& [x, ex] : around) {
        for (const auto& [y, ey] : around) {
          if (acted || x == y) continue;
          const auto cx = state_.vertex_cost(x);
          const auto cy = state_.vertex_cost(y);
          if (!cx || !cy || *cx - *cy <= inst.cost(ex) + inst.cost(ey)) continue;
          const Path target = concat(Path{{x, u_v, y}, {ex, ey}}, *state_.suffix(y));
          acted = move_group(x, target, "adjacent", frozen) > 0;
        }
      }
    }
    if (acted) continue;

    for (VertexId w : n.satellites) {
      if (acted || w == v) continue;
      const auto& s = opt_.sigma.at(w);
      if (excluded(s.terminal)) continue;
      const auto cw = state_.vertex_cost(w);
      const auto ct = state_.vertex_cost(s.terminal);
      if (!cw || !ct) continue;
      const Rational gap = *cw > *ct ? Rational(*cw - *ct) : Rational(*ct - *cw);
      if (gap <= inst.cost(s.edge)) continue;
      if (*ct > *cw) {
        const Path target = concat(single_edge(inst, s.terminal, s.edge), *state_.suffix(w));
        acted = move_group(s.terminal, target, "satellite", frozen) > 0;
      } else {
        const Path target = concat(single_edge(inst, w, s.edge), *state_.suffix(s.terminal));
        acted = move_group(w, target, "satellite", frozen) > 0;
      }
    }
    if (acted) continue;

    if (!state_.is_tree_excluding(frozen)) {
      const std::size_t before = trace_.failure_count();
      const MakeTreeReport report = make_tree(state_, frozen, protected_edges, &trace_);
      if (trace_.failure_count() > before && config_.stop_on_violation) {
        throw LemmaViolation(trace_.assertions[before].tag, "make-tree contract",
                             serialize_state(state_));
      }
      if (report.switches > 0) continue;
    }
    break;
  }

  const Rational low = n.cls.low;
  const std::vector<VertexId> members = n.members();

  // Homogeneity of N(v) once the repairs are exhausted.
  std::string worst;
  for (std::size_t a = 0; a < members.size() && worst.empty(); ++a) {
    for (std::size_t b = a + 1; b < members.size() && worst.empty(); ++b) {
      const VertexId x = members[a];
      const VertexId y = members[b];
      if (excluded(x) || excluded(y)) continue;
      if (!opt_.tplus.contains(x) || !opt_.tplus.contains(y)) continue;
      if (has(opt_.tplus.path(x, y), v)) continue;
      const auto cx = state_.vertex_cost(x);
      const auto cy = state_.vertex_cost(y);
      if (!cx || !cy) continue;
      const Rational gap = *cx > *cy ? Rational(*cx - *cy) : Rational(*cy - *cx);
      if (gap * 112 > 23 * low) worst = vertex_pair(x, y) + " differ by " + to_string(gap);
    }
  }
  check(worst.empty(), "homogeneity", worst);

  // Deletion: v (or u_v) leaves e_v through a cheaper T+ neighbour.
  const Rational cv = *state_.vertex_cost(v);
  for (VertexId q : members) {
    if (excluded(q)) continue;
    const auto cq = state_.vertex_cost(q);
    if (!cq) continue;
    if (auto e = opt_.tplus.edge_between(v, q); e && inst.cost(*e) + *cq < cv) {
      move_group(v, concat(single_edge(inst, v, *e), *state_.suffix(q)), "delete", {});
      return;
    }
    if (!steiner) continue;
    if (auto e = opt_.tplus.edge_between(u_v, q);
        e && inst.cost(*e) + *cq < *state_.vertex_cost(u_v)) {
      move_group(u_v, concat(single_edge(inst, u_v, *e), *state_.suffix(q)), "delete", {});
      return;
    }
  }

  std::string low_member;
  for (VertexId q : members) {
    if (q == u_v) continue;
    const auto cq = state_.vertex_cost(q);
    if (cq && *cq * 7 < cv * 7 - 2 * low) {
      low_member = "c_" + std::to_string(q) + " = " + to_string(*cq) + " vs c_v = " + to_string(cv);
      break;
    }
  }
  if (!low_member.empty()) low_member += center_note(v, low, job.e_v);
  check(low_member.empty(), "absorb-precondition", low_member);

  const std::vector<VertexId> users = state_.users_of_edge(job.e_v);
  const std::vector<VertexId> expected{steiner ? u_v : v};
  check(users == expected, "sole-usage",
        "e_v has " + std::to_string(users.size()) + " users at absorb entry");

  absorb(v, u_v);
}

void Dynamics::absorb(VertexId v, VertexId u_v) {
  const Instance& inst = state_.instance();
  const Neighborhood n = neighborhood(state_, v, opt_);
  const bool v_in_tree = opt_.tree.contains_vertex(v);
  const std::string note = center_note(v, n.cls.low, n.e_v);

  std::map<VertexId, unsigned> entry_class;
  for (VertexId s : n.satellites) {
    if (auto e = state_.first_edge(s)) entry_class[s] = edge_class(inst.cost(*e)).index;
  }

  const VertexId start = config_.absorb_order == AbsorbOrder::kFromV ? v : inst.root();
  for (VertexId q : bfs_order(start, true)) {
    if (q == v || q == u_v) continue;
    if (!std::binary_search(n.tree_vertices.begin(), n.tree_vertices.end(), q)) continue;
    Path target = as_path(tree_path(opt_.tree, q, n.anchor));
    if (!v_in_tree) target = concat(target, single_edge(inst, n.anchor, opt_.sigma.at(v).edge));
    target = concat(target, *state_.suffix(v));
    move_group(q, target, "absorb-tree", {}, "ab1", note);
  }

  // Reverse breadth-first order from r over the intermediate state's edges.
  std::vector<VertexId> order{inst.root()};
  {
    std::vector<std::vector<VertexId>> adj(inst.vertex_count());
    for (EdgeIdx e : state_.edge_set()) {
      adj[inst.edge(e).u].push_back(inst.edge(e).v);
      adj[inst.edge(e).v].push_back(inst.edge(e).u);
    }
    std::vector<bool> seen(inst.vertex_count(), false);
    seen[inst.root()] = true;
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::sort(adj[order[i]].begin(), adj[order[i]].end());
      for (VertexId y : adj[order[i]]) {
        if (!seen[y]) {
          seen[y] = true;
          order.push_back(y);
        }
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId s = *it;
    if (s == v || !std::binary_search(n.satellites.begin(), n.satellites.end(), s)) continue;
    const auto& sig = opt_.sigma.at(s);
    const Path target = concat(single_edge(inst, s, sig.edge), state_.path(sig.terminal));
    move_group(s, target, "absorb-satellite", {}, "ab2", note);
  }

  std::string stray;
  for (const auto& [s, cls] : entry_class) {
    if (s == v || cls > n.cls.index || !state_.contains_vertex(s)) continue;
    if (state_.first_edge(s) != std::optional<EdgeIdx>(opt_.sigma.at(s).edge)) {
      stray = "satellite " + std::to_string(s) + " does not start with its sigma edge";
      break;
    }
  }
  check(stray.empty(), "ab2-sigma-first", stray);
}

bool Dynamics::step() {
  if (!state_.is_tree()) {
    const std::size_t before = trace_.failure_count();
    make_tree(state_, {}, {}, &trace_);
    if (trace_.failure_count() > before && config_.stop_on_violation) {
      throw LemmaViolation(trace_.assertions[before].tag, "make-tree contract",
                           serialize_state(state_));
    }
  }
  auto move = find_scheduled_move(state_, opt_.tree);
  if (!move) return false;
  if (move->kind == MoveKind::kSafe) {
    apply(move->mover, std::move(move->path), MoveKind::kSafe, "safe");
    return true;
  }
  trace_.critical_events.push_back({trace_.moves.size(), move->mover, move->new_edges, move->jobs});
  apply(move->mover, std::move(move->path), MoveKind::kCritical, "critical", move->new_edges);
  for (const MainLoopJob& job : move->jobs) main_loop(job);
  return true;
}

RunResult run(const Prepared& prepared, const RunConfig& config) {
  RunResult result;
  result.instance = prepared.instance;
  result.trace.level = config.log_level;
  result.trace.live = config.log;
  result.trace.instance = prepared.instance.get();
  State state = tree_state(*prepared.instance, prepared.opt.tree);
  Dynamics dynamics(prepared.opt, state, result.trace, config);
  try {
    while (dynamics.step()) {
    }
    const NashVerdict verdict = is_nash(state);
    result.trace.check(verdict.nash, "final-nash",
                       verdict.nash ? "" : "terminal " + std::to_string(verdict.witness) + " can improve");
    result.trace.check(state.is_tree(), "final-tree");
    result.status = result.trace.failure_count() == 0 ? RunStatus::kCompleted : RunStatus::kViolation;
    if (const auto* f = result.trace.first_failure()) result.message = f->tag + ": " + f->detail;
  } catch (const LemmaViolation& e) {
    result.status = RunStatus::kViolation;
    result.message = e.what();
    result.snapshot = e.snapshot();
  } catch (const GuardExceeded& e) {
    result.status = RunStatus::kGuardExceeded;
    result.message = e.what();
    result.snapshot = serialize_state(state);
  }
  result.critical_moves = result.trace.critical_events.size();
  result.final_state = std::move(state);
  return result;
}

State cleanup_unused(const State& state) { return State(state.instance(), state.paths()); }

}  // namespace mcast
