#include "mcast/analysis.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace mcast {

namespace {

std::string edge_name(const Instance& inst, EdgeIdx e) { return std::to_string(inst.edge(e).id); }

BigInt pow2(unsigned k) {
  BigInt out = 1;
  out <<= k;
  return out;
}

Rational taylor_partial(const Rational& x, unsigned terms) {
  Rational sum(0);
  Rational term(1);
  for (unsigned k = 0; k <= terms; ++k) {
    if (k > 0) term = term * x / k;
    sum += term;
  }
  return sum;
}

// Lower bound on e^x for x >= 0: the larger of a Taylor partial sum and
// 2^floor(1.4426 x), since log2(e) > 1.4426.
Rational exp_lower(const Rational& x) {
  Rational best = taylor_partial(x, 40);
  const Rational scaled = x * Rational(14426, 10000);
  const BigInt whole = numerator(scaled) / denominator(scaled);
  const Rational binary(pow2(static_cast<unsigned>(whole)));
  return binary > best ? binary : best;
}

// Upper bound on e^y for 0 <= y <= 1: Taylor sum plus the remainder bound
// y^(N+1) e^y / (N+1)! <= 3 / (N+1)!.
Rational exp_upper_unit(const Rational& y) {
  constexpr unsigned kTerms = 30;
  Rational factorial(1);
  for (unsigned k = 2; k <= kTerms + 1; ++k) factorial *= k;
  return taylor_partial(y, kTerms) + Rational(3) / factorial;
}

void add_check(std::vector<AuditCheck>& checks, bool ok, std::string tag, std::string detail = {}) {
  checks.push_back({std::move(tag), ok, ok ? std::string() : std::move(detail)});
}

std::set<std::size_t> right_vertex_positions(const Interval& iv, std::size_t len) {
  std::set<std::size_t> out{len == 0 ? 0 : iv.start};
  for (std::size_t j = 1; j <= iv.right_len && len > 0; ++j) out.insert((iv.start + j) % len);
  return out;
}

Rational cost_for_class(const Instance& inst, EdgeIdx e, const std::map<EdgeIdx, Rational>& inflation) {
  auto it = inflation.find(e);
  return it == inflation.end() ? inst.cost(e) : it->second;
}

}  // namespace

std::vector<Path> simple_paths_to_root(const Instance& instance, VertexId from, std::size_t cap) {
  std::vector<Path> out;
  const VertexId root = instance.root();
  if (from == root) return {Path{{root}, {}}};
  std::vector<std::vector<Instance::Incidence>> adj(instance.vertex_count());
  for (VertexId v = 0; v < instance.vertex_count(); ++v) {
    auto inc = instance.incident(v);
    adj[v].assign(inc.begin(), inc.end());
    std::sort(adj[v].begin(), adj[v].end(), [](const auto& a, const auto& b) {
      return std::tie(a.neighbor, a.edge) < std::tie(b.neighbor, b.edge);
    });
  }
  std::vector<bool> on_path(instance.vertex_count(), false);
  Path cur{{from}, {}};
  on_path[from] = true;
  auto dfs = [&](auto&& self, VertexId v) -> void {
    for (const auto& inc : adj[v]) {
      if (on_path[inc.neighbor]) continue;
      cur.vertices.push_back(inc.neighbor);
      cur.edges.push_back(inc.edge);
      if (inc.neighbor == root) {
        if (out.size() >= cap) throw CapExceeded("more than " + std::to_string(cap) + " simple paths");
        out.push_back(cur);
      } else {
        on_path[inc.neighbor] = true;
        self(self, inc.neighbor);
        on_path[inc.neighbor] = false;
      }
      cur.vertices.pop_back();
      cur.edges.pop_back();
    }
  };
  dfs(dfs, from);
  return out;
}

NashVerdict is_nash_exhaustive(const State& state, const OracleCaps& caps) {
  const Instance& inst = state.instance();
  for (VertexId u : inst.terminals()) {
    if (u == inst.root()) continue;
    const Rational current = state.player_cost(u);
    std::optional<std::pair<Rational, Path>> best;
    for (Path& p : simple_paths_to_root(inst, u, caps.paths_per_terminal)) {
      Rational d = state.deviation_cost(u, p);
      if (d < current && (!best || d < best->first)) best.emplace(std::move(d), std::move(p));
    }
    if (best) return NashVerdict{false, u, best->second, current, best->first};
  }
  return NashVerdict{};
}

EquilibriumCatalog enumerate_nash(const Instance& instance, const OracleCaps& caps) {
  EquilibriumCatalog cat;
  std::vector<VertexId> players;
  for (VertexId t : instance.terminals()) {
    if (t != instance.root()) players.push_back(t);
  }
  std::vector<std::vector<Path>> options;
  std::size_t product = 1;
  for (VertexId t : players) {
    options.push_back(simple_paths_to_root(instance, t, caps.paths_per_terminal));
    if (options.back().empty()) throw std::invalid_argument("terminal cannot reach the root");
    if (product > caps.profiles / options.back().size()) {
      throw CapExceeded("profile space exceeds " + std::to_string(caps.profiles));
    }
    product *= options.back().size();
  }
  cat.opt_cost = exact_steiner(instance).total_cost;

  std::vector<Path> paths(instance.vertex_count());
  paths[instance.root()] = Path{{instance.root()}, {}};
  for (std::size_t i = 0; i < players.size(); ++i) paths[players[i]] = options[i].front();
  State state(instance, paths);
  std::vector<std::size_t> digit(players.size(), 0);
  bool first = true;
  while (true) {
    ++cat.profiles_examined;
    bool nash = true;
    for (std::size_t i = 0; i < players.size() && nash; ++i) {
      const Rational current = state.player_cost(players[i]);
      for (const Path& p : options[i]) {
        if (state.deviation_cost(players[i], p) < current) {
          nash = false;
          break;
        }
      }
    }
    if (nash) {
      Rational cost = state.social_cost();
      if (first || cost < cat.min_cost) cat.min_cost = cost;
      if (first || cost > cat.max_cost) cat.max_cost = cost;
      first = false;
      cat.equilibria.push_back({state.paths(), std::move(cost)});
    }
    std::size_t i = 0;
    while (i < players.size() && ++digit[i] == options[i].size()) {
      digit[i] = 0;
      state.reroute(players[i], options[i][0]);
      ++i;
    }
    if (i == players.size()) break;
    state.reroute(players[i], options[i][digit[i]]);
  }
  if (!cat.equilibria.empty() && cat.opt_cost > 0) {
    cat.pos = cat.min_cost / cat.opt_cost;
    cat.poa = cat.max_cost / cat.opt_cost;
  }
  return cat;
}

Rational pos_ratio(const State& final_state, const SteinerTree& tree) {
  if (!is_nash(final_state).nash) throw std::invalid_argument("final state is not a Nash equilibrium");
  if (tree.total_cost == 0) return Rational(1);
  return final_state.social_cost() / tree.total_cost;
}

std::string to_string(ChargeRule rule) {
  switch (rule) {
    case ChargeRule::kSigma:
      return "e-sigma";
    case ChargeRule::kDropSigma:
      return "drop-sigma";
    case ChargeRule::kDropPair:
      return "drop-pair";
    case ChargeRule::kWholeCycle:
      return "whole-cycle";
    case ChargeRule::kCase1:
      return "case1";
    case ChargeRule::kCase2:
      return "case2";
  }
  return "unknown";
}

bool AuditReport::passed() const { return first_failure() == nullptr; }

const AuditCheck* AuditReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

VertexId TreeShape::lower_end(const Instance& instance, EdgeIdx e) const {
  const Edge& ed = instance.edge(e);
  if (parent_edge[ed.u] == e) return ed.u;
  if (parent_edge[ed.v] == e) return ed.v;
  throw std::invalid_argument("edge " + std::to_string(ed.id) + " is not in the tree");
}

TreeShape tree_shape(const State& state) {
  const Instance& inst = state.instance();
  TreeShape shape;
  shape.parent_edge.assign(inst.vertex_count(), kNone);
  shape.parent.assign(inst.vertex_count(), kNone);
  shape.children.assign(inst.vertex_count(), {});
  std::vector<std::vector<std::pair<VertexId, EdgeIdx>>> adj(inst.vertex_count());
  for (EdgeIdx e : state.edge_set()) {
    adj[inst.edge(e).u].emplace_back(inst.edge(e).v, e);
    adj[inst.edge(e).v].emplace_back(inst.edge(e).u, e);
  }
  std::vector<bool> seen(inst.vertex_count(), false);
  std::deque<VertexId> queue{inst.root()};
  seen[inst.root()] = true;
  while (!queue.empty()) {
    const VertexId x = queue.front();
    queue.pop_front();
    std::sort(adj[x].begin(), adj[x].end());
    for (const auto& [y, e] : adj[x]) {
      if (seen[y]) continue;
      seen[y] = true;
      shape.parent[y] = x;
      shape.parent_edge[y] = e;
      shape.children[x].push_back(y);
      queue.push_back(y);
    }
  }
  return shape;
}

ESigmaResult audit_e_sigma(const State& final_state, const OptStructures& opt) {
  const Instance& inst = final_state.instance();
  const TreeShape shape = tree_shape(final_state);
  ESigmaResult out;
  std::set<EdgeIdx> targets;
  for (EdgeIdx e : final_state.edge_set()) {
    if (opt.tree.contains_edge(e)) continue;
    const VertexId v = shape.lower_end(inst, e);
    if (inst.is_terminal(v) || !opt.sigma.has(v)) continue;
    if (edge_class(inst.cost(e)).low > 64 * inst.cost(opt.sigma.at(v).edge)) continue;
    out.edges.push_back(e);
    if (shape.children[v].empty()) {
      add_check(out.checks, false, "e-sigma-leaf", "edge " + edge_name(inst, e) + " ends at a leaf");
      continue;
    }
    const EdgeIdx target = shape.parent_edge[shape.children[v].front()];
    out.charges.push_back({e, target, inst.cost(e), ChargeRule::kSigma});
    add_check(out.checks, inst.cost(e) <= 64 * inst.cost(target), "e-sigma-ratio",
              "edge " + edge_name(inst, e) + " exceeds 64 times its child edge");
    add_check(out.checks, targets.insert(target).second, "e-sigma-unique",
              "edge " + edge_name(inst, target) + " charged twice");
  }
  return out;
}

EStarResult build_e_star(const State& final_state, const Trace& trace, const OptStructures& opt,
                         const std::vector<EdgeIdx>& e_sigma) {
  const Instance& inst = final_state.instance();
  const TreeShape shape = tree_shape(final_state);
  EStarResult out;
  std::set<EdgeIdx> rest;
  for (EdgeIdx e : final_state.edge_set()) {
    if (!opt.tree.contains_edge(e) && !std::binary_search(e_sigma.begin(), e_sigma.end(), e)) {
      rest.insert(e);
    }
  }

  // A nonterminal touching several remaining edges, one of them sigma_v.
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    if (inst.is_terminal(v) || !opt.sigma.has(v)) continue;
    const EdgeIdx sigma = opt.sigma.at(v).edge;
    if (!rest.count(sigma)) continue;
    std::vector<EdgeIdx> around;
    for (const auto& inc : inst.incident(v)) {
      if (rest.count(inc.edge) && inc.edge != sigma) around.push_back(inc.edge);
    }
    if (around.empty()) continue;
    std::sort(around.begin(), around.end());
    rest.erase(sigma);
    out.charges.push_back({sigma, around.front(), inst.cost(sigma), ChargeRule::kDropSigma});
  }

  // Pairs e_u, e_v where terminal u added e_v: the cheaper one goes.
  for (EdgeIdx ev : std::vector<EdgeIdx>(rest.begin(), rest.end())) {
    if (!rest.count(ev)) continue;
    auto origin = trace.last_addition.find(ev);
    if (origin == trace.last_addition.end() || origin->second.kind != EdgeOrigin::kCritical) continue;
    const VertexId u = trace.critical_events.at(origin->second.event).mover;
    const VertexId v = shape.lower_end(inst, ev);
    if (u == v) continue;
    const EdgeIdx eu = shape.parent_edge[u];
    if (eu == kNone || !rest.count(eu)) continue;
    const bool drop_u = inst.cost(eu) <= inst.cost(ev);
    const EdgeIdx dropped = drop_u ? eu : ev;
    const EdgeIdx kept = drop_u ? ev : eu;
    rest.erase(dropped);
    out.charges.push_back({dropped, kept, inst.cost(dropped), ChargeRule::kDropPair});
  }

  out.edges.assign(rest.begin(), rest.end());
  std::map<EdgeIdx, int> absorbed;
  for (const Charge& c : out.charges) {
    const bool survives = rest.count(*c.target) > 0;
    add_check(out.checks, survives, "drop-target",
              "edge " + edge_name(inst, c.source) + " charged to dropped edge " +
                  edge_name(inst, *c.target));
    ++absorbed[*c.target];
  }
  for (const auto& [e, n] : absorbed) {
    add_check(out.checks, n <= 2, "drop-count",
              "edge " + edge_name(inst, e) + " absorbs " + std::to_string(n) + " drops");
  }

  for (EdgeIdx e : out.edges) {
    auto origin = trace.last_addition.find(e);
    if (origin == trace.last_addition.end()) {
      add_check(out.checks, false, "attribution", "edge " + edge_name(inst, e) + " has no origin");
      continue;
    }
    if (origin->second.kind != EdgeOrigin::kSigma) continue;
    const SigmaEvent& ev = trace.sigma_events.at(origin->second.event);
    if (!ev.prior_first_edge) {
      add_check(out.checks, false, "sigma-context",
                "sigma edge " + edge_name(inst, e) + " has no recorded first edge");
      continue;
    }
    out.inflation[e] = inst.cost(*ev.prior_first_edge);
  }
  return out;
}

Neighborhood final_neighborhood(const State& final_state, const OptStructures& opt, EdgeIdx e,
                                const Rational& class_cost) {
  const VertexId v = tree_shape(final_state).lower_end(final_state.instance(), e);
  return neighborhood(final_state, v, opt, class_cost);
}

std::vector<OverlapVerdict> audit_overlap(const State& final_state, const OptStructures& opt,
                                          const std::vector<EdgeIdx>& e_star,
                                          const std::map<EdgeIdx, Rational>& inflation) {
  const Instance& inst = final_state.instance();
  const std::size_t len = opt.mc.length();
  struct Entry {
    EdgeIdx e;
    unsigned cls;
    std::set<std::size_t> positions;
  };
  std::vector<Entry> entries;
  for (EdgeIdx e : e_star) {
    const Rational c = cost_for_class(inst, e, inflation);
    const Neighborhood n = final_neighborhood(final_state, opt, e, c);
    entries.push_back({e, n.cls.index, right_vertex_positions(n.interval, len)});
  }
  std::vector<OverlapVerdict> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].cls != entries[j].cls) continue;
      std::vector<std::size_t> common;
      std::set_intersection(entries[i].positions.begin(), entries[i].positions.end(),
                            entries[j].positions.begin(), entries[j].positions.end(),
                            std::back_inserter(common));
      out.push_back({entries[i].e, entries[j].e, entries[i].cls, common.empty()});
    }
  }
  return out;
}

std::vector<unsigned> heavy_classes(const std::map<unsigned, std::size_t>& counts, unsigned alpha) {
  std::vector<unsigned> out;
  for (unsigned beta = 0; beta + 2 <= alpha; ++beta) {
    auto it = counts.find(beta);
    if (it == counts.end() || it->second == 0) continue;
    // 256^(beta+1) H^2 / 256^(alpha-1) * 16^(alpha-beta) >= 1
    const Rational lhs = pow_int(Rational(256), beta + 1) * harmonic_sq(it->second) *
                         pow_int(Rational(16), alpha - beta) / pow_int(Rational(256), alpha - 1);
    if (lhs >= 1) out.push_back(beta);
  }
  return out;
}

NeighborhoodCharges charge_to_neighborhood(const State& final_state, const OptStructures& opt,
                                           const std::vector<EdgeIdx>& e_star,
                                           const std::map<EdgeIdx, Rational>& inflation) {
  const Instance& inst = final_state.instance();
  const std::size_t len = opt.mc.length();
  NeighborhoodCharges out;
  for (EdgeIdx e : e_star) {
    const Rational amount = inst.cost(e);
    const Neighborhood n = final_neighborhood(final_state, opt, e, cost_for_class(inst, e, inflation));
    const unsigned alpha = n.cls.index;
    if (len == 0 || n.interval.right_len >= len) {
      out.whole_cycle_total += amount;
      out.charges.push_back({e, std::nullopt, amount, ChargeRule::kWholeCycle});
      continue;
    }
    const EdgeIdx a = opt.mc.edges[(n.interval.start + n.interval.right_len) % len];
    const unsigned mu = edge_class(inst.cost(a)).index;
    if (mu + 1 >= alpha) {
      LedgerEntry& entry = out.ledger[a];
      entry.cost = inst.cost(a);
      entry.case1 += amount;
      out.charges.push_back({e, a, amount, ChargeRule::kCase1});
      continue;
    }
    const std::vector<unsigned> betas = heavy_classes(n.interval.right_counts, alpha);
    if (betas.empty()) {
      std::ostringstream hist;
      for (const auto& [cls, count] : n.interval.right_counts) hist << ' ' << cls << ':' << count;
      add_check(out.checks, false, "heavy-class",
                "edge " + edge_name(inst, e) + " class " + std::to_string(alpha) + " histogram" +
                    hist.str());
      continue;
    }
    // Among admissible classes take the one with the smallest worst per-edge ratio.
    const auto positions = n.interval.right_positions(len);
    std::optional<std::pair<Rational, unsigned>> pick;
    for (unsigned beta : betas) {
      const std::size_t count = n.interval.right_counts.at(beta);
      Rational worst(0);
      for (std::size_t p : positions) {
        const EdgeIdx x = opt.mc.edges[p];
        if (edge_class(inst.cost(x)).index != beta) continue;
        worst = std::max(worst, Rational(amount / count / inst.cost(x)));
      }
      if (!pick || worst < pick->first) pick.emplace(worst, beta);
    }
    const unsigned beta = pick->second;
    const Rational share = amount / n.interval.right_counts.at(beta);
    std::map<EdgeIdx, Rational> spread;
    for (std::size_t p : positions) {
      const EdgeIdx x = opt.mc.edges[p];
      if (edge_class(inst.cost(x)).index == beta) spread[x] += share;
    }
    for (const auto& [x, part] : spread) {
      LedgerEntry& entry = out.ledger[x];
      entry.cost = inst.cost(x);
      entry.case2 += part;
      out.charges.push_back({e, x, part, ChargeRule::kCase2});
    }
  }
  const Rational case1_cap = 2 * pow_int(Rational(256), 3);
  for (const auto& [x, entry] : out.ledger) {
    add_check(out.checks, entry.case1 <= case1_cap * entry.cost, "case1-bound",
              "edge " + edge_name(inst, x) + " carries " + to_string(entry.case1));
    add_check(out.checks, entry.case2 <= case2_constant() * entry.cost, "case2-bound",
              "edge " + edge_name(inst, x) + " carries " + to_string(entry.case2));
  }
  add_check(out.checks, out.whole_cycle_total <= 2 * opt.tree.total_cost, "whole-cycle-bound",
            "whole-cycle charges " + to_string(out.whole_cycle_total));
  return out;
}

const Rational& case2_constant() {
  static const Rational k = [] {
    const Rational cutoff(Rational(1) / Rational(pow2(64)));
    Rational sum(0);
    for (unsigned z = 0;; ++z) {
      const Rational x = (z >= 2 ? pow_int(Rational(4), z - 2) : Rational(1) / pow_int(Rational(4), 2 - z)) - 1;
      const Rational scale = pow_int(Rational(256), z + 3);
      const Rational term = x < 0 ? Rational(scale * exp_upper_unit(-x)) : Rational(scale / exp_lower(x));
      sum += term;
      // From z = 4 on consecutive terms shrink by more than half, so the
      // tail is bounded by the last term.
      if (z >= 4 && term < cutoff) {
        sum += term;
        break;
      }
    }
    return Rational(2 * sum);
  }();
  return k;
}

const Rational& implied_pos_bound() {
  static const Rational bound =
      65 * (1 + 3 * (2 * pow_int(Rational(256), 3) + case2_constant() + 2));
  return bound;
}

AuditReport audit(const State& final_state, const Trace& trace, const OptStructures& opt) {
  const Instance& inst = final_state.instance();
  AuditReport report;
  report.opt_cost = opt.tree.total_cost;
  report.final_cost = final_state.social_cost();
  report.pos_ratio = report.opt_cost > 0 ? Rational(report.final_cost / report.opt_cost) : Rational(1);
  add_check(report.checks, report.pos_ratio >= 1, "pos-ratio", "ratio " + to_string(report.pos_ratio));
  if (!final_state.is_tree()) {
    add_check(report.checks, false, "final-tree", "final state is not a tree");
    return report;
  }

  ESigmaResult sigma = audit_e_sigma(final_state, opt);
  EStarResult star = build_e_star(final_state, trace, opt, sigma.edges);
  report.e_sigma = sigma.edges;
  report.e_star = star.edges;
  report.inflation = star.inflation;
  report.charges = sigma.charges;
  report.charges.insert(report.charges.end(), star.charges.begin(), star.charges.end());
  report.checks.insert(report.checks.end(), sigma.checks.begin(), sigma.checks.end());
  report.checks.insert(report.checks.end(), star.checks.begin(), star.checks.end());

  report.overlaps = audit_overlap(final_state, opt, star.edges, star.inflation);
  for (const auto& o : report.overlaps) {
    add_check(report.checks, o.disjoint, "overlap",
              "edges " + edge_name(inst, o.first) + " and " + edge_name(inst, o.second) +
                  " of class " + std::to_string(o.cls));
  }

  NeighborhoodCharges spread = charge_to_neighborhood(final_state, opt, star.edges, star.inflation);
  report.ledger = spread.ledger;
  report.whole_cycle_total = spread.whole_cycle_total;
  report.charges.insert(report.charges.end(), spread.charges.begin(), spread.charges.end());
  report.checks.insert(report.checks.end(), spread.checks.begin(), spread.checks.end());

  Rational charged(0);
  for (const Charge& c : report.charges) charged += c.amount;
  Rational outside(0);
  for (EdgeIdx e : final_state.edge_set()) {
    if (!opt.tree.contains_edge(e)) outside += inst.cost(e);
  }
  add_check(report.checks, charged == outside, "conservation",
            "charged " + to_string(charged) + " vs c(S_f \\ T*) " + to_string(outside));
  return report;
}

std::string csv_header() {
  return "seed,n,|U|,c(T*),c(S_f),pos_ratio_num,pos_ratio_den,moves,critical_moves,audit_pass\n";
}

std::string csv_row(const RunSummary& row) {
  std::ostringstream os;
  os << row.name << ',' << row.vertices << ',' << row.terminals << ',' << to_string(row.opt_cost)
     << ',' << to_string(row.final_cost) << ',' << numerator(row.pos_ratio).str() << ','
     << denominator(row.pos_ratio).str() << ',' << row.moves << ',' << row.critical_moves << ','
     << (row.audit_pass ? "true" : "false") << '\n';
  return os.str();
}

nlohmann::json rational_to_json(const Rational& value) {
  return {{"num", numerator(value).str()},
          {"den", denominator(value).str()},
          {"approx", to_double(value)}};
}

Rational rational_from_json(const nlohmann::json& value) {
  return parse_rational(value.at("num").get<std::string>() + "/" + value.at("den").get<std::string>());
}

nlohmann::json report_to_json(const AuditReport& report, const Instance& instance) {
  using nlohmann::json;
  auto id = [&](EdgeIdx e) { return instance.edge(e).id; };
  auto ids = [&](const std::vector<EdgeIdx>& edges) {
    json out = json::array();
    for (EdgeIdx e : edges) out.push_back(id(e));
    return out;
  };
  json doc;
  doc["opt_cost"] = rational_to_json(report.opt_cost);
  doc["final_cost"] = rational_to_json(report.final_cost);
  doc["pos_ratio"] = rational_to_json(report.pos_ratio);
  doc["e_sigma"] = ids(report.e_sigma);
  doc["e_star"] = ids(report.e_star);
  doc["inflation"] = json::array();
  for (const auto& [e, c] : report.inflation) {
    doc["inflation"].push_back({{"edge", id(e)}, {"cost", rational_to_json(c)}});
  }
  doc["overlaps"] = json::array();
  for (const auto& o : report.overlaps) {
    doc["overlaps"].push_back(
        {{"first", id(o.first)}, {"second", id(o.second)}, {"class", o.cls}, {"disjoint", o.disjoint}});
  }
  doc["charges"] = json::array();
  for (const auto& c : report.charges) {
    doc["charges"].push_back({{"source", id(c.source)},
                              {"target", c.target ? json(id(*c.target)) : json(nullptr)},
                              {"amount", rational_to_json(c.amount)},
                              {"rule", to_string(c.rule)}});
  }
  doc["ledger"] = json::array();
  for (const auto& [e, entry] : report.ledger) {
    doc["ledger"].push_back({{"edge", id(e)},
                             {"cost", rational_to_json(entry.cost)},
                             {"case1", rational_to_json(entry.case1)},
                             {"case2", rational_to_json(entry.case2)}});
  }
  doc["whole_cycle_total"] = rational_to_json(report.whole_cycle_total);
  doc["checks"] = json::array();
  for (const auto& c : report.checks) {
    doc["checks"].push_back({{"tag", c.tag}, {"passed", c.passed}, {"detail", c.detail}});
  }
  doc["audit_pass"] = report.passed();
  return doc;
}

AuditReport report_from_json(const nlohmann::json& doc, const Instance& instance) {
  auto idx = [&](const nlohmann::json& v) {
    auto e = instance.find_edge_id(v.get<std::int64_t>());
    if (!e) throw std::invalid_argument("report names unknown edge " + v.dump());
    return *e;
  };
  static const std::map<std::string, ChargeRule> rules{
      {"e-sigma", ChargeRule::kSigma},           {"drop-sigma", ChargeRule::kDropSigma},
      {"drop-pair", ChargeRule::kDropPair},      {"whole-cycle", ChargeRule::kWholeCycle},
      {"case1", ChargeRule::kCase1},             {"case2", ChargeRule::kCase2}};
  AuditReport r;
  r.opt_cost = rational_from_json(doc.at("opt_cost"));
  r.final_cost = rational_from_json(doc.at("final_cost"));
  r.pos_ratio = rational_from_json(doc.at("pos_ratio"));
  for (const auto& v : doc.at("e_sigma")) r.e_sigma.push_back(idx(v));
  for (const auto& v : doc.at("e_star")) r.e_star.push_back(idx(v));
  for (const auto& v : doc.at("inflation")) r.inflation[idx(v.at("edge"))] = rational_from_json(v.at("cost"));
  for (const auto& v : doc.at("overlaps")) {
    r.overlaps.push_back({idx(v.at("first")), idx(v.at("second")), v.at("class").get<unsigned>(),
                          v.at("disjoint").get<bool>()});
  }
  for (const auto& v : doc.at("charges")) {
    Charge c;
    c.source = idx(v.at("source"));
    if (!v.at("target").is_null()) c.target = idx(v.at("target"));
    c.amount = rational_from_json(v.at("amount"));
    c.rule = rules.at(v.at("rule").get<std::string>());
    r.charges.push_back(std::move(c));
  }
  for (const auto& v : doc.at("ledger")) {
    r.ledger[idx(v.at("edge"))] = {rational_from_json(v.at("case1")), rational_from_json(v.at("case2")),
                                   rational_from_json(v.at("cost"))};
  }
  r.whole_cycle_total = rational_from_json(doc.at("whole_cycle_total"));
  for (const auto& v : doc.at("checks")) {
    r.checks.push_back({v.at("tag").get<std::string>(), v.at("passed").get<bool>(),
                        v.at("detail").get<std::string>()});
  }
  return r;
}

}  // namespace mcast
