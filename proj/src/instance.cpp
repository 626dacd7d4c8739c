#include "mcast/instance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mcast {

namespace {

const Rational kClassBase(256);

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::int64_t parse_int(std::string_view token, std::size_t line) {
  if (token.empty()) throw ParseError(line, "expected integer");
  std::size_t pos = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(std::string(token), &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected integer, got '" + std::string(token) + "'");
  }
  if (pos != token.size()) {
    throw ParseError(line, "expected integer, got '" + std::string(token) + "'");
  }
  return value;
}

VertexId parse_vertex(std::string_view token, std::size_t line) {
  std::int64_t v = parse_int(token, line);
  if (v < 0 || v > std::int64_t{0x7fffffff}) {
    throw ParseError(line, "vertex id out of range: " + std::string(token));
  }
  return static_cast<VertexId>(v);
}

}  // namespace

EdgeClass edge_class(const Rational& cost) {
  if (cost < 1) throw std::domain_error("edge_class: cost " + to_string(cost) + " < 1");
  EdgeClass cls;
  cls.low = 1;
  while (cls.low * kClassBase <= cost) {
    cls.low *= kClassBase;
    ++cls.index;
  }
  cls.upp = cls.low * kClassBase;
  return cls;
}

Instance::Instance(std::size_t vertex_count, std::vector<Edge> edges,
                   std::vector<VertexId> terminals, VertexId root,
                   std::map<VertexId, std::string> labels, bool allow_isolated_nonterminals)
    : vertex_count_(vertex_count),
      edges_(std::move(edges)),
      terminals_(std::move(terminals)),
      root_(root),
      labels_(std::move(labels)) {
  if (vertex_count_ == 0) throw ValidationError("instance has no vertices");
  std::sort(terminals_.begin(), terminals_.end());
  if (std::adjacent_find(terminals_.begin(), terminals_.end()) != terminals_.end()) {
    throw ValidationError("duplicate terminal");
  }
  is_terminal_.assign(vertex_count_, false);
  for (VertexId t : terminals_) {
    if (t >= vertex_count_) throw ValidationError("terminal out of range");
    is_terminal_[t] = true;
  }
  if (root_ >= vertex_count_ || !is_terminal_[root_]) {
    throw ValidationError("root not terminal");
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (i > 0 && edges_[i - 1].id == e.id) {
      throw ValidationError("duplicate edge id " + std::to_string(e.id));
    }
    if (e.u >= vertex_count_ || e.v >= vertex_count_) {
      throw ValidationError("edge " + std::to_string(e.id) + " endpoint out of range");
    }
    if (e.u == e.v) throw ValidationError("self-loop on edge " + std::to_string(e.id));
    if (e.cost <= 0) throw ValidationError("nonpositive cost on edge " + std::to_string(e.id));
    if (!is_terminal_[e.u] && !is_terminal_[e.v]) {
      throw ValidationError("quasi-bipartite violated by edge " + std::to_string(e.id));
    }
  }
  adjacency_.assign(vertex_count_, {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto idx = static_cast<EdgeIdx>(i);
    adjacency_[edges_[i].u].push_back({idx, edges_[i].v});
    adjacency_[edges_[i].v].push_back({idx, edges_[i].u});
  }
  // Connectivity over all vertices.
  std::vector<bool> seen(vertex_count_, false);
  std::vector<VertexId> stack{root_};
  seen[root_] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    VertexId x = stack.back();
    stack.pop_back();
    for (const auto& inc : adjacency_[x]) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = true;
        ++reached;
        stack.push_back(inc.neighbor);
      }
    }
  }
  for (VertexId v = 0; v < vertex_count_; ++v) {
    if (seen[v]) continue;
    if (allow_isolated_nonterminals && !is_terminal_[v] && adjacency_[v].empty()) continue;
    throw ValidationError("disconnected");
  }
}

std::optional<EdgeIdx> Instance::find_edge_id(std::int64_t id) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), id,
                             [](const Edge& e, std::int64_t x) { return e.id < x; });
  if (it == edges_.end() || it->id != id) return std::nullopt;
  return static_cast<EdgeIdx>(it - edges_.begin());
}

Rational Instance::total_cost() const {
  Rational sum(0);
  for (const auto& e : edges_) sum += e.cost;
  return sum;
}

Rational Instance::min_cost() const {
  if (edges_.empty()) return Rational(1);
  Rational m = edges_.front().cost;
  for (const auto& e : edges_) m = std::min(m, e.cost);
  return m;
}

bool Instance::operator==(const Instance& other) const {
  return vertex_count_ == other.vertex_count_ && edges_ == other.edges_ &&
         terminals_ == other.terminals_ && root_ == other.root_ && labels_ == other.labels_;
}

Instance parse_instance(std::string_view text) {
  std::size_t line_no = 0;
  bool saw_header = false;
  std::optional<std::size_t> vertices;
  std::optional<VertexId> root;
  std::optional<std::vector<VertexId>> terminals;
  std::vector<Edge> edges;
  std::map<VertexId, std::string> labels;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!saw_header) {
      if (tokens.size() != 2 || tokens[0] != "mcast-pos-instance" || tokens[1] != "v1") {
        throw ParseError(line_no, "expected header 'mcast-pos-instance v1'");
      }
      saw_header = true;
      continue;
    }
    const std::string_view key = tokens[0];
    if (key == "vertices") {
      if (tokens.size() != 2) throw ParseError(line_no, "usage: vertices <n>");
      std::int64_t n = parse_int(tokens[1], line_no);
      if (n <= 0) throw ParseError(line_no, "vertex count must be positive");
      vertices = static_cast<std::size_t>(n);
    } else if (key == "root") {
      if (tokens.size() != 2) throw ParseError(line_no, "usage: root <id>");
      root = parse_vertex(tokens[1], line_no);
    } else if (key == "terminals") {
      terminals.emplace();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        terminals->push_back(parse_vertex(tokens[i], line_no));
      }
    } else if (key == "edge") {
      if (tokens.size() != 5) throw ParseError(line_no, "usage: edge <id> <u> <v> <cost>");
      Edge e;
      e.id = parse_int(tokens[1], line_no);
      e.u = parse_vertex(tokens[2], line_no);
      e.v = parse_vertex(tokens[3], line_no);
      try {
        e.cost = parse_rational(tokens[4]);
      } catch (const std::invalid_argument& ex) {
        throw ParseError(line_no, ex.what());
      }
      edges.push_back(std::move(e));
    } else if (key == "label") {
      if (tokens.size() != 3) throw ParseError(line_no, "usage: label <id> <name>");
      labels[parse_vertex(tokens[1], line_no)] = std::string(tokens[2]);
    } else {
      throw ParseError(line_no, "unknown directive '" + std::string(key) + "'");
    }
    if (end == text.size()) break;
  }
  if (!saw_header) throw ParseError(line_no, "missing header");
  if (!vertices) throw ParseError(line_no, "missing 'vertices'");
  if (!root) throw ParseError(line_no, "missing 'root'");
  if (!terminals) throw ParseError(line_no, "missing 'terminals'");
  return Instance(*vertices, std::move(edges), std::move(*terminals), *root, std::move(labels));
}

std::string serialize_instance(const Instance& instance) {
  std::ostringstream out;
  out << "mcast-pos-instance v1\n";
  out << "vertices " << instance.vertex_count() << "\n";
  out << "root " << instance.root() << "\n";
  out << "terminals";
  for (VertexId t : instance.terminals()) out << ' ' << t;
  out << "\n";
  for (const auto& [v, name] : instance.labels()) out << "label " << v << ' ' << name << "\n";
  for (const auto& e : instance.edges()) {
    out << "edge " << e.id << ' ' << e.u << ' ' << e.v << ' ' << to_string(e.cost) << "\n";
  }
  return out.str();
}

Normalized normalize_costs(const Instance& instance) {
  Rational scale = 1 / instance.min_cost();
  std::vector<Edge> edges = instance.edges();
  for (auto& e : edges) e.cost *= scale;
  return {Instance(instance.vertex_count(), std::move(edges), instance.terminals(),
                   instance.root(), instance.labels()),
          scale};
}

Instance prune_heavy_edges(const Instance& instance, const Rational& bound) {
  std::vector<Edge> kept;
  for (const auto& e : instance.edges()) {
    if (e.cost <= bound) kept.push_back(e);
  }
  return Instance(instance.vertex_count(), std::move(kept), instance.terminals(),
                  instance.root(), instance.labels(), true);
}

Instance gen_poa_chain(int n, const Rational& eps, const Rational& delta) {
  if (n < 2) throw std::invalid_argument("gen_poa_chain: n must be >= 2");
  if (eps <= 0 || delta <= 0) throw std::invalid_argument("gen_poa_chain: eps, delta > 0");
  const VertexId root = 0;
  const VertexId hub = 1;
  std::vector<Edge> edges;
  edges.push_back({0, hub, root, Rational(n)});
  edges.push_back({1, hub, root, Rational(1) + eps});
  std::vector<VertexId> terminals{root};
  std::map<VertexId, std::string> labels{{root, "r"}, {hub, "hub"}};
  for (int i = 0; i < n; ++i) {
    const auto t = static_cast<VertexId>(2 + i);
    terminals.push_back(t);
    labels[t] = "t" + std::to_string(i + 1);
    edges.push_back({2 + i, t, hub, delta});
  }
  return Instance(static_cast<std::size_t>(n) + 2, std::move(edges), std::move(terminals), root,
                  std::move(labels));
}

Instance gen_random_quasi_bipartite(const RandomInstanceParams& p) {
  if (p.n_terminals < 1) throw std::invalid_argument("n_terminals must be >= 1");
  if (p.n_nonterminals < 0) throw std::invalid_argument("n_nonterminals must be >= 0");
  if (!(p.edge_prob >= 0.0 && p.edge_prob <= 1.0)) {
    throw std::invalid_argument("edge_prob must lie in [0,1]");
  }
  if (p.cost_lo < 1 || p.cost_hi < p.cost_lo) {
    throw std::invalid_argument("cost range must satisfy 1 <= lo <= hi");
  }
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> uniform_cost(p.cost_lo, p.cost_hi);
  auto log_uniform = [&](std::int64_t a, std::int64_t b) {
    const double lo = std::log(static_cast<double>(a));
    const double hi = std::log(static_cast<double>(b) + 1.0);
    auto c = static_cast<std::int64_t>(std::floor(std::exp(lo + (hi - lo) * unit(rng))));
    return std::clamp(c, a, b);
  };

  const auto nt = static_cast<VertexId>(p.n_terminals);
  const auto ns = static_cast<VertexId>(nt >= 2 ? p.n_nonterminals : 0);
  std::vector<VertexId> cluster(nt + ns, 0);
  if (p.spread == CostSpread::kClustered) {
    std::uniform_int_distribution<VertexId> pick_cluster(0, std::max<VertexId>(1, (nt + ns + 3) / 4) - 1);
    for (auto& c : cluster) c = pick_cluster(rng);
  }
  auto draw_cost = [&](VertexId a, VertexId b) -> Rational {
    switch (p.spread) {
      case CostSpread::kUniform:
        return Rational(uniform_cost(rng));
      case CostSpread::kLogUniform:
        return Rational(log_uniform(p.cost_lo, p.cost_hi));
      case CostSpread::kClustered:
        if (cluster[a] == cluster[b]) {
          std::uniform_int_distribution<std::int64_t> near(p.cost_lo, std::min(p.cost_hi, 4 * p.cost_lo));
          return Rational(near(rng));
        }
        return Rational(log_uniform(std::max(p.cost_lo, p.cost_hi / 16), p.cost_hi));
    }
    return Rational(p.cost_lo);
  };

  std::vector<std::pair<VertexId, VertexId>> pairs;
  std::set<std::pair<VertexId, VertexId>> present;
  auto add = [&](VertexId a, VertexId b) {
    auto key = std::minmax(a, b);
    if (present.insert(key).second) pairs.emplace_back(key.first, key.second);
  };

  std::vector<VertexId> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (VertexId i = 1; i < nt; ++i) {
    std::uniform_int_distribution<VertexId> pick(0, i - 1);
    add(order[i], order[pick(rng)]);
  }
  for (VertexId a = 0; a < nt; ++a) {
    for (VertexId b = a + 1; b < nt; ++b) {
      if (unit(rng) < p.edge_prob) add(a, b);
    }
  }
  for (VertexId s = nt; s < nt + ns; ++s) {
    for (VertexId t = 0; t < nt; ++t) {
      if (unit(rng) < p.edge_prob) add(t, s);
    }
    std::vector<VertexId> missing;
    for (VertexId t = 0; t < nt; ++t) {
      if (!present.count(std::minmax(t, s))) missing.push_back(t);
    }
    std::shuffle(missing.begin(), missing.end(), rng);
    std::size_t degree = nt - missing.size();
    for (std::size_t k = 0; degree < 2 && k < missing.size(); ++k, ++degree) {
      add(missing[k], s);
    }
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    edges.push_back({static_cast<std::int64_t>(i), pairs[i].first, pairs[i].second, draw_cost(pairs[i].first, pairs[i].second)});
  }
  std::vector<VertexId> terminals(nt);
  std::iota(terminals.begin(), terminals.end(), 0);
  return Instance(nt + ns, std::move(edges), std::move(terminals), 0);
}

}  // namespace mcast
