#include "mcast/steiner.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <limits>

namespace mcast {

namespace {

// Cost with a lexicographic tie-break: among equal costs the larger bonus wins.
// Edge i carries bonus 2^(m-1-i), so maximizing the bonus over optimal trees
// selects the lexicographically smallest sorted edge-index list.
struct TieCost {
  Rational cost;
  BigInt bonus;
  bool finite = false;

  friend bool operator<(const TieCost& a, const TieCost& b) {
    if (!a.finite) return false;
    if (!b.finite) return true;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.bonus > b.bonus;
  }
  friend TieCost operator+(const TieCost& a, const TieCost& b) {
    if (!a.finite || !b.finite) return {};
    return {a.cost + b.cost, a.bonus + b.bonus, true};
  }
};

TieCost zero_cost() { return {Rational(0), BigInt(0), true}; }

struct Back {
  enum Kind : std::uint8_t { kNoneKind, kBase, kEdge, kSplit } kind = kNoneKind;
  std::uint32_t arg = 0;  // edge index for kEdge, subset for kSplit
  VertexId from = 0;      // predecessor vertex for kEdge
};

void check_tree_shape(const Instance& instance, const std::vector<EdgeIdx>& edges) {
  std::vector<VertexId> parent(instance.vertex_count());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<VertexId(VertexId)> find = [&](VertexId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (EdgeIdx e : edges) {
    auto a = find(instance.edge(e).u);
    auto b = find(instance.edge(e).v);
    if (a == b) throw std::logic_error("edge set is not a forest");
    parent[a] = b;
  }
}

}  // namespace

bool SteinerTree::contains_edge(EdgeIdx e) const {
  return std::binary_search(edges.begin(), edges.end(), e);
}

std::vector<VertexId> SteinerTree::vertices() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < depth.size(); ++v) {
    if (depth[v] >= 0) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> SteinerTree::children(VertexId v) const {
  std::vector<VertexId> out;
  for (VertexId w = 0; w < parent_vertex.size(); ++w) {
    if (parent_vertex[w] == v) out.push_back(w);
  }
  return out;
}

SteinerTree make_rooted_tree(const Instance& instance, std::vector<EdgeIdx> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  check_tree_shape(instance, edges);
  const std::size_t n = instance.vertex_count();
  SteinerTree tree;
  tree.parent_vertex.assign(n, kNone);
  tree.parent_edge.assign(n, kNone);
  tree.depth.assign(n, -1);
  std::vector<std::vector<std::pair<VertexId, EdgeIdx>>> adj(n);
  tree.total_cost = 0;
  for (EdgeIdx e : edges) {
    const Edge& ed = instance.edge(e);
    adj[ed.u].emplace_back(ed.v, e);
    adj[ed.v].emplace_back(ed.u, e);
    tree.total_cost += ed.cost;
  }
  std::vector<VertexId> queue{instance.root()};
  tree.depth[instance.root()] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    VertexId x = queue[i];
    for (auto [y, e] : adj[x]) {
      if (tree.depth[y] >= 0) continue;
      tree.depth[y] = tree.depth[x] + 1;
      tree.parent_vertex[y] = x;
      tree.parent_edge[y] = e;
      queue.push_back(y);
    }
  }
  for (EdgeIdx e : edges) {
    if (tree.depth[instance.edge(e).u] < 0) {
      throw std::logic_error("tree edge not connected to the root");
    }
  }
  tree.edges = std::move(edges);
  return tree;
}

SteinerTree exact_steiner(const Instance& instance, std::size_t terminal_cap) {
  const auto& terms = instance.terminals();
  if (terms.size() > terminal_cap) {
    throw CapExceeded("exact_steiner: " + std::to_string(terms.size()) +
                      " terminals exceed cap " + std::to_string(terminal_cap));
  }
  std::vector<VertexId> keys;
  for (VertexId t : terms) {
    if (t != instance.root()) keys.push_back(t);
  }
  if (keys.empty()) return make_rooted_tree(instance, {});

  const std::size_t n = instance.vertex_count();
  const std::size_t m = instance.edge_count();
  std::vector<TieCost> weight(m);
  for (std::size_t i = 0; i < m; ++i) {
    weight[i] = {instance.cost(static_cast<EdgeIdx>(i)), BigInt(1) << (m - 1 - i), true};
  }

  const std::size_t k = keys.size();
  const std::uint32_t full = (1U << k) - 1;
  std::vector<std::vector<TieCost>> dp(full + 1, std::vector<TieCost>(n));
  std::vector<std::vector<Back>> back(full + 1, std::vector<Back>(n));

  // Multi-source Dijkstra relaxation in place over dp[s].
  auto relax = [&](std::uint32_t s) {
    std::vector<bool> done(n, false);
    for (std::size_t round = 0; round < n; ++round) {
      std::size_t best = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (!done[v] && dp[s][v].finite && (best == n || dp[s][v] < dp[s][best])) best = v;
      }
      if (best == n) break;
      done[best] = true;
      const auto x = static_cast<VertexId>(best);
      for (const auto& inc : instance.incident(x)) {
        if (done[inc.neighbor]) continue;
        TieCost cand = dp[s][x] + weight[inc.edge];
        if (cand < dp[s][inc.neighbor]) {
          dp[s][inc.neighbor] = std::move(cand);
          back[s][inc.neighbor] = {Back::kEdge, inc.edge, x};
        }
      }
    }
  };

  for (std::uint32_t s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) {
      const auto i = static_cast<std::size_t>(__builtin_ctz(s));
      dp[s][keys[i]] = zero_cost();
      back[s][keys[i]] = {Back::kBase, 0, 0};
    } else {
      const std::uint32_t low = s & (~s + 1);
      for (std::uint32_t sub = (s - 1) & s; sub != 0; sub = (sub - 1) & s) {
        if ((sub & low) == 0) continue;
        const std::uint32_t rest = s ^ sub;
        for (std::size_t v = 0; v < n; ++v) {
          TieCost cand = dp[sub][v] + dp[rest][v];
          if (cand < dp[s][v]) {
            dp[s][v] = std::move(cand);
            back[s][v] = {Back::kSplit, sub, 0};
          }
        }
      }
    }
    relax(s);
  }

  std::vector<EdgeIdx> edges;
  std::vector<std::pair<std::uint32_t, VertexId>> work{{full, instance.root()}};
  while (!work.empty()) {
    auto [s, v] = work.back();
    work.pop_back();
    const Back& b = back[s][v];
    switch (b.kind) {
      case Back::kBase:
        break;
      case Back::kEdge:
        edges.push_back(b.arg);
        work.emplace_back(s, b.from);
        break;
      case Back::kSplit:
        work.emplace_back(b.arg, v);
        work.emplace_back(s ^ b.arg, v);
        break;
      case Back::kNoneKind:
        throw std::logic_error("exact_steiner: broken reconstruction");
    }
  }
  SteinerTree tree = make_rooted_tree(instance, std::move(edges));
  if (tree.total_cost != dp[full][instance.root()].cost) {
    throw std::logic_error("exact_steiner: reconstructed cost mismatch");
  }
  return tree;
}

SteinerTree brute_force_steiner(const Instance& instance, std::size_t edge_cap) {
  const std::size_t m = instance.edge_count();
  if (m > edge_cap) {
    throw CapExceeded("brute_force_steiner: " + std::to_string(m) + " edges exceed cap " +
                      std::to_string(edge_cap));
  }
  const std::size_t n = instance.vertex_count();
  const auto& terms = instance.terminals();
  // 0 = undecided, 1 = chosen, 2 = excluded
  std::vector<int> status(m, 0);
  std::optional<std::vector<EdgeIdx>> best;
  Rational best_cost;

  auto terminals_connected = [&](bool allow_undecided) {
    std::vector<VertexId> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](VertexId x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < m; ++i) {
      if (status[i] == 1 || (allow_undecided && status[i] == 0)) {
        const Edge& e = instance.edge(static_cast<EdgeIdx>(i));
        parent[find(e.u)] = find(e.v);
      }
    }
    const VertexId r = find(instance.root());
    return std::all_of(terms.begin(), terms.end(), [&](VertexId t) { return find(t) == r; });
  };

  // Include-first DFS visits equal-cost minimal sets in lexicographic order, so
  // the first optimum found is kept.
  std::function<void(std::size_t, const Rational&)> search = [&](std::size_t i,
                                                                 const Rational& cost) {
    if (best && cost > best_cost) return;
    if (!terminals_connected(true)) return;
    if (i == m) {
      if (!terminals_connected(false)) return;
      if (!best || cost < best_cost) {
        std::vector<EdgeIdx> chosen;
        for (std::size_t j = 0; j < m; ++j) {
          if (status[j] == 1) chosen.push_back(static_cast<EdgeIdx>(j));
        }
        best = std::move(chosen);
        best_cost = cost;
      }
      return;
    }
    status[i] = 1;
    search(i + 1, cost + instance.cost(static_cast<EdgeIdx>(i)));
    status[i] = 2;
    search(i + 1, cost);
    status[i] = 0;
  };
  search(0, Rational(0));
  if (!best) throw std::logic_error("brute_force_steiner: instance not connected");

  // A minimum-cost connected spanning set has no cycles and no stray components
  // once non-terminal leaves are gone; trim defensively anyway.
  std::vector<EdgeIdx> edges = *best;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> degree(n, 0);
    for (EdgeIdx e : edges) {
      ++degree[instance.edge(e).u];
      ++degree[instance.edge(e).v];
    }
    for (auto it = edges.begin(); it != edges.end(); ++it) {
      const Edge& e = instance.edge(*it);
      if ((degree[e.u] == 1 && !instance.is_terminal(e.u)) ||
          (degree[e.v] == 1 && !instance.is_terminal(e.v))) {
        edges.erase(it);
        changed = true;
        break;
      }
    }
  }
  return make_rooted_tree(instance, std::move(edges));
}

TreePath tree_path(const SteinerTree& tree, VertexId x, VertexId y) {
  if (x >= tree.depth.size() || y >= tree.depth.size() || !tree.contains_vertex(x) ||
      !tree.contains_vertex(y)) {
    throw std::out_of_range("tree_path: vertex not in tree");
  }
  std::vector<VertexId> left{x};
  std::vector<EdgeIdx> left_edges;
  std::vector<VertexId> right{y};
  std::vector<EdgeIdx> right_edges;
  VertexId a = x;
  VertexId b = y;
  while (a != b) {
    if (tree.depth[a] >= tree.depth[b]) {
      left_edges.push_back(tree.parent_edge[a]);
      a = tree.parent_vertex[a];
      left.push_back(a);
    } else {
      right_edges.push_back(tree.parent_edge[b]);
      b = tree.parent_vertex[b];
      right.push_back(b);
    }
  }
  TreePath path;
  path.vertices = std::move(left);
  for (auto it = right.rbegin() + 1; it != right.rend(); ++it) path.vertices.push_back(*it);
  path.edges = std::move(left_edges);
  for (auto it = right_edges.rbegin(); it != right_edges.rend(); ++it) path.edges.push_back(*it);
  return path;
}

std::size_t MainCycle::first_index(VertexId v) const {
  auto it = positions.find(v);
  if (it == positions.end()) throw std::out_of_range("vertex not on main cycle");
  return it->second.front();
}

MainCycle main_cycle(const SteinerTree& tree, VertexId root) {
  MainCycle mc;
  mc.vertices.push_back(root);
  std::vector<std::vector<VertexId>> kids(tree.parent_vertex.size());
  for (VertexId w = 0; w < tree.parent_vertex.size(); ++w) {
    if (tree.parent_vertex[w] != kNone) kids[tree.parent_vertex[w]].push_back(w);
  }
  // Explicit stack of (vertex, next child slot).
  std::vector<std::pair<VertexId, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (slot < kids[v].size()) {
      VertexId c = kids[v][slot++];
      mc.edges.push_back(tree.parent_edge[c]);
      mc.vertices.push_back(c);
      stack.emplace_back(c, 0);
    } else {
      const VertexId done = v;
      stack.pop_back();
      if (!stack.empty()) {
        mc.edges.push_back(tree.parent_edge[done]);
        mc.vertices.push_back(stack.back().first);
      }
    }
  }
  for (std::size_t i = 0; i + 1 < mc.vertices.size() || (mc.edges.empty() && i == 0); ++i) {
    mc.positions[mc.vertices[i]].push_back(i);
    if (mc.edges.empty()) break;
  }
  return mc;
}

const SigmaEntry& SigmaMap::at(VertexId v) const {
  if (!has(v)) throw std::out_of_range("no sigma edge for vertex " + std::to_string(v));
  return entries[v];
}

std::optional<VertexId> SigmaMap::owner_of(EdgeIdx e) const {
  for (VertexId v = 0; v < entries.size(); ++v) {
    if (entries[v].edge == e) return v;
  }
  return std::nullopt;
}

SigmaMap sigma_edges(const Instance& instance) {
  SigmaMap map;
  map.entries.assign(instance.vertex_count(), {});
  for (VertexId v = 0; v < instance.vertex_count(); ++v) {
    if (instance.is_terminal(v)) continue;
    const auto inc = instance.incident(v);
    if (inc.empty()) continue;
    const Instance::Incidence* best = &inc.front();
    for (const auto& x : inc) {
      if (instance.cost(x.edge) < instance.cost(best->edge)) best = &x;
    }
    map.entries[v] = {best->edge, best->neighbor};
  }
  return map;
}

Rational interval_weight(const std::map<unsigned, std::size_t>& class_counts) {
  Rational sum(0);
  for (const auto& [cls, count] : class_counts) {
    sum += pow_int(Rational(256), cls + 1) * harmonic_sq(count);
  }
  return 2 * sum;
}

std::vector<std::size_t> Interval::right_positions(std::size_t cycle_length) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < right_len; ++j) out.push_back((start + j) % cycle_length);
  return out;
}

std::vector<std::size_t> Interval::left_positions(std::size_t cycle_length) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < left_len; ++j) {
    out.push_back((start + cycle_length - 1 - j % cycle_length) % cycle_length);
  }
  return out;
}

std::vector<VertexId> Interval::vertices(const MainCycle& mc) const {
  std::vector<VertexId> out{anchor};
  const std::size_t len = mc.length();
  if (len == 0) return out;
  for (std::size_t j = 1; j <= right_len; ++j) out.push_back(mc.vertices[(start + j) % len]);
  for (std::size_t j = 1; j <= left_len; ++j) {
    out.push_back(mc.vertices[(start + len - j % len) % len]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Interval interval(const Instance& instance, const MainCycle& mc, VertexId anchor,
                  const Rational& y) {
  Interval iv;
  iv.anchor = anchor;
  iv.budget = y;
  const std::size_t len = mc.length();
  if (len == 0) return iv;
  iv.start = mc.first_index(anchor);

  auto grow = [&](auto position_of, std::size_t& side_len,
                  std::map<unsigned, std::size_t>& counts) {
    Rational weight(0);
    for (std::size_t j = 0; j < len; ++j) {
      const EdgeIdx e = mc.edges[position_of(j)];
      const unsigned cls = edge_class(instance.cost(e)).index;
      const std::size_t n = counts[cls];
      Rational next = weight + 2 * pow_int(Rational(256), cls + 1) *
                                   (harmonic_sq(n + 1) - harmonic_sq(n));
      if (next > y) break;
      weight = std::move(next);
      counts[cls] = n + 1;
      ++side_len;
    }
    std::erase_if(counts, [](const auto& kv) { return kv.second == 0; });
  };
  grow([&](std::size_t j) { return (iv.start + j) % len; }, iv.right_len, iv.right_counts);
  grow([&](std::size_t j) { return (iv.start + len - 1 - j) % len; }, iv.left_len,
       iv.left_counts);
  return iv;
}

std::vector<VertexId> ExtendedTree::path(VertexId x, VertexId y) const {
  if (!contains(x) || !contains(y)) throw std::out_of_range("T+ path: vertex not in T+");
  std::vector<VertexId> left{x};
  std::vector<VertexId> right{y};
  VertexId a = x;
  VertexId b = y;
  while (a != b) {
    if (depth[a] >= depth[b]) {
      a = parent_vertex[a];
      left.push_back(a);
    } else {
      b = parent_vertex[b];
      right.push_back(b);
    }
  }
  for (auto it = right.rbegin() + 1; it != right.rend(); ++it) left.push_back(*it);
  return left;
}

std::optional<EdgeIdx> ExtendedTree::edge_between(VertexId x, VertexId y) const {
  if (contains(x) && parent_vertex[x] == y) return parent_edge[x];
  if (contains(y) && parent_vertex[y] == x) return parent_edge[y];
  return std::nullopt;
}

OptStructures build_opt_structures(const Instance& instance, SteinerTree tree) {
  OptStructures opt;
  opt.mc = main_cycle(tree, instance.root());
  opt.sigma = sigma_edges(instance);
  const std::size_t n = instance.vertex_count();
  ExtendedTree& tp = opt.tplus;
  tp.parent_vertex = tree.parent_vertex;
  tp.parent_edge = tree.parent_edge;
  tp.depth = tree.depth;
  for (VertexId w = 0; w < n; ++w) {
    if (tree.contains_vertex(w) || !opt.sigma.has(w)) continue;
    const auto& s = opt.sigma.at(w);
    tp.parent_vertex[w] = s.terminal;
    tp.parent_edge[w] = s.edge;
    tp.depth[w] = tree.depth[s.terminal] + 1;
  }
  tp.adjacency.assign(n, {});
  for (VertexId w = 0; w < n; ++w) {
    if (tp.depth[w] > 0) {
      tp.adjacency[w].emplace_back(tp.parent_vertex[w], tp.parent_edge[w]);
      tp.adjacency[tp.parent_vertex[w]].emplace_back(w, tp.parent_edge[w]);
    }
  }
  for (auto& adj : tp.adjacency) std::sort(adj.begin(), adj.end());
  opt.tree = std::move(tree);
  return opt;
}

}  // namespace mcast
