#ifndef MCAST_TESTS_SUPPORT_HPP
#define MCAST_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

#include "mcast/game.hpp"
#include "mcast/instance.hpp"
#include "mcast/trace.hpp"

namespace mcast::testing {

struct E {
  std::int64_t id;
  VertexId u;
  VertexId v;
  Rational cost;
};

inline Instance make_instance(std::size_t vertices, std::vector<VertexId> terminals,
                              std::initializer_list<E> edges, VertexId root = 0) {
  std::vector<Edge> list;
  for (const auto& e : edges) list.push_back({e.id, e.u, e.v, e.cost});
  return Instance(vertices, std::move(list), std::move(terminals), root);
}

/// Path from the vertex sequence; edges are looked up by id.
inline Path make_path(const Instance& instance, std::vector<VertexId> vertices,
                      std::vector<std::int64_t> edge_ids) {
  Path p;
  p.vertices = std::move(vertices);
  for (auto id : edge_ids) p.edges.push_back(*instance.find_edge_id(id));
  return p;
}

inline Path root_path(VertexId root) { return Path{{root}, {}}; }

/// Every simple path from `from` to the root by plain recursion.
inline std::vector<Path> simple_paths(const Instance& instance, VertexId from) {
  std::vector<Path> out;
  Path current{{from}, {}};
  std::vector<bool> on(instance.vertex_count(), false);
  on[from] = true;
  std::function<void(VertexId)> walk = [&](VertexId x) {
    if (x == instance.root()) {
      out.push_back(current);
      return;
    }
    for (const auto& inc : instance.incident(x)) {
      if (on[inc.neighbor]) continue;
      on[inc.neighbor] = true;
      current.vertices.push_back(inc.neighbor);
      current.edges.push_back(inc.edge);
      walk(inc.neighbor);
      current.vertices.pop_back();
      current.edges.pop_back();
      on[inc.neighbor] = false;
    }
  };
  walk(from);
  return out;
}

/// Share u would pay on `path` if every other player stays put, counted from
/// the paths directly.
inline Rational oracle_cost(const State& state, VertexId u, const Path& path) {
  const Instance& inst = state.instance();
  Rational total = 0;
  for (EdgeIdx e : path.edges) {
    std::size_t users = 1;
    for (VertexId t : inst.terminals()) {
      if (t != u && t != inst.root() && state.path(t).contains_edge(e)) ++users;
    }
    total += inst.cost(e) / Rational(users);
  }
  return total;
}

/// True iff no terminal has a strictly cheaper simple path.
inline bool oracle_nash(const State& state) {
  const Instance& inst = state.instance();
  for (VertexId u : inst.terminals()) {
    if (u == inst.root()) continue;
    const Rational now = oracle_cost(state, u, state.path(u));
    for (const Path& p : simple_paths(inst, u)) {
      if (oracle_cost(state, u, p) < now) return false;
    }
  }
  return true;
}

/// Tree state on a random spanning tree of the instance.
inline State random_tree_state(const Instance& inst, std::mt19937_64& rng) {
  std::vector<EdgeIdx> order(inst.edge_count());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<VertexId> comp(inst.vertex_count());
  std::iota(comp.begin(), comp.end(), 0);
  std::function<VertexId(VertexId)> find = [&](VertexId x) {
    return comp[x] == x ? x : comp[x] = find(comp[x]);
  };
  std::vector<std::vector<std::pair<VertexId, EdgeIdx>>> adj(inst.vertex_count());
  for (EdgeIdx e : order) {
    VertexId a = find(inst.edge(e).u);
    VertexId b = find(inst.edge(e).v);
    if (a == b) continue;
    comp[a] = b;
    adj[inst.edge(e).u].push_back({inst.edge(e).v, e});
    adj[inst.edge(e).v].push_back({inst.edge(e).u, e});
  }
  std::vector<VertexId> parent(inst.vertex_count(), kNone);
  std::vector<EdgeIdx> via(inst.vertex_count(), kNone);
  std::vector<VertexId> stack{inst.root()};
  parent[inst.root()] = inst.root();
  while (!stack.empty()) {
    VertexId x = stack.back();
    stack.pop_back();
    for (auto [y, e] : adj[x]) {
      if (parent[y] != kNone) continue;
      parent[y] = x;
      via[y] = e;
      stack.push_back(y);
    }
  }
  std::vector<Path> paths(inst.vertex_count());
  for (VertexId t : inst.terminals()) {
    Path p{{t}, {}};
    for (VertexId x = t; x != inst.root(); x = parent[x]) {
      p.edges.push_back(via[x]);
      p.vertices.push_back(parent[x]);
    }
    paths[t] = std::move(p);
  }
  return State(inst, std::move(paths));
}

/// Parameters of the seeded acceptance batch: at most 8 terminals (root
/// included) and 6 nonterminals, cost spread rotating with the seed.
inline RandomInstanceParams batch_params(std::uint64_t seed) {
  RandomInstanceParams p;
  p.seed = seed;
  p.n_terminals = 3 + static_cast<int>(seed % 6);
  p.n_nonterminals = 1 + static_cast<int>((seed / 6) % 6);
  p.edge_prob = 0.5;
  switch (seed % 3) {
    case 0:
      p.spread = CostSpread::kUniform;
      p.cost_lo = 1;
      p.cost_hi = 20;
      break;
    case 1:
      p.spread = CostSpread::kLogUniform;
      p.cost_lo = 1;
      p.cost_hi = std::int64_t{1} << 20;
      break;
    default:
      p.spread = CostSpread::kClustered;
      p.cost_lo = 1;
      p.cost_hi = std::int64_t{1} << 24;
      break;
  }
  return p;
}

}  // namespace mcast::testing

#endif  // MCAST_TESTS_SUPPORT_HPP
