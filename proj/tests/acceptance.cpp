// Acceptance suite: one PASS/FAIL line per criterion. Thresholds and budgets
// are pinned below.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcast/analysis.hpp"
#include "mcast/dynamics.hpp"
#include "support.hpp"

using namespace mcast;
using mcast::testing::batch_params;

namespace {

constexpr double kPotentialBudgetSeconds = 5.0;
constexpr double kBatchBudgetSeconds = 120.0;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr std::size_t kPotentialTrials = 1000;
constexpr std::uint64_t kBatchSeeds = 100;
constexpr std::size_t kOracleInstances = 50;
constexpr std::size_t kOracleMaxTerminals = 6;
constexpr std::size_t kOracleMaxEdges = 20;
constexpr std::size_t kBatchMaxVertices = 14;
constexpr std::size_t kBatchMaxTerminals = 8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct BatchRun {
  std::uint64_t seed = 0;
  Prepared prepared;
  RunResult result;
};

struct Batch {
  std::vector<BatchRun> runs;
  double seconds = 0;
};

// Full runs on the seeded batch, shared by the criteria that inspect them.
const Batch& batch() {
  static const Batch b = [] {
    Batch out;
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < kBatchSeeds; ++seed) {
      Prepared p = prepare(gen_random_quasi_bipartite(batch_params(seed)));
      RunConfig config;
      config.stop_on_violation = false;
      RunResult r = run(p, config);
      out.runs.push_back({seed, std::move(p), std::move(r)});
    }
    out.seconds = seconds_since(start);
    return out;
  }();
  return b;
}

std::string tag_counts(const std::map<std::string, std::size_t>& counts) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [tag, n] : counts) {
    os << (first ? "" : ", ") << tag << " x" << n;
    first = false;
  }
  return os.str();
}

Path random_route(const Instance& inst, VertexId from, std::mt19937_64& rng) {
  Path walk{{from}, {}};
  VertexId x = from;
  while (x != inst.root()) {
    const auto inc = inst.incident(x);
    const auto& pick = inc[rng() % inc.size()];
    walk.edges.push_back(pick.edge);
    walk.vertices.push_back(pick.neighbor);
    x = pick.neighbor;
  }
  return loop_erase(walk);
}

// Phi from the paths alone.
Rational oracle_potential(const State& s) {
  const Instance& inst = s.instance();
  std::vector<std::size_t> users(inst.edge_count(), 0);
  for (VertexId t : inst.terminals()) {
    if (t == inst.root()) continue;
    for (EdgeIdx e : s.path(t).edges) ++users[e];
  }
  Rational phi(0);
  for (EdgeIdx e = 0; e < inst.edge_count(); ++e) {
    for (std::size_t k = 1; k <= users[e]; ++k) phi += inst.cost(e) / Rational(k);
  }
  return phi;
}

Verdict criterion_potential_identity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::size_t bad = 0;
  std::size_t trials = 0;
  for (std::uint64_t seed = 0; trials < kPotentialTrials; ++seed) {
    const Instance inst = gen_random_quasi_bipartite(batch_params(seed));
    std::vector<Path> paths(inst.vertex_count());
    paths[inst.root()] = Path{{inst.root()}, {}};
    std::vector<VertexId> players;
    for (VertexId t : inst.terminals()) {
      if (t == inst.root()) continue;
      players.push_back(t);
      paths[t] = random_route(inst, t, rng);
    }
    State s(inst, paths);
    for (int step = 0; step < 20 && trials < kPotentialTrials; ++step, ++trials) {
      const VertexId u = players[rng() % players.size()];
      const Path next = random_route(inst, u, rng);
      const Rational phi_before = oracle_potential(s);
      const Rational cu_before = mcast::testing::oracle_cost(s, u, s.path(u));
      const Rational reported = s.reroute(u, next);
      const Rational phi_after = oracle_potential(s);
      const Rational cu_after = mcast::testing::oracle_cost(s, u, s.path(u));
      if (phi_after - phi_before != cu_after - cu_before || reported != phi_after - phi_before ||
          potential(s) != phi_after) {
        ++bad;
      }
    }
  }
  const double secs = seconds_since(start);
  Verdict v;
  v.pass = bad == 0 && secs < kPotentialBudgetSeconds;
  v.detail = std::to_string(trials) + " moves, " + std::to_string(bad) + " mismatches, " +
             std::to_string(secs) + " s (budget " + std::to_string(kPotentialBudgetSeconds) + " s)";
  return v;
}

Verdict criterion_strict_decrease() {
  const Batch& b = batch();
  std::size_t moves = 0;
  std::size_t flat = 0;
  std::size_t guard = 0;
  std::size_t oversized = 0;
  std::optional<std::uint64_t> first_seed;
  for (const auto& r : b.runs) {
    const Instance& inst = *r.prepared.instance;
    if (inst.vertex_count() > kBatchMaxVertices || inst.terminals().size() > kBatchMaxTerminals) ++oversized;
    if (r.result.status == RunStatus::kGuardExceeded) ++guard;
    for (const auto& m : r.result.trace.moves) {
      ++moves;
      if (!m.improving()) {
        ++flat;
        if (!first_seed) first_seed = r.seed;
      }
    }
  }
  Verdict v;
  v.pass = flat == 0 && guard == 0 && oversized == 0 && b.seconds < kBatchBudgetSeconds;
  v.detail = std::to_string(moves) + " moves over " + std::to_string(b.runs.size()) + " runs, " +
             std::to_string(flat) + " non-improving, " + std::to_string(guard) + " guard stops, " +
             std::to_string(b.seconds) + " s";
  if (first_seed) v.detail += ", first non-improving move in seed " + std::to_string(*first_seed);
  return v;
}

Verdict criterion_final_equilibrium() {
  std::size_t bad = 0;
  std::size_t capped = 0;
  std::string first;
  for (const auto& r : batch().runs) {
    try {
      if (!r.result.final_state || !is_nash_exhaustive(*r.result.final_state).nash) {
        if (first.empty()) first = " (first: seed " + std::to_string(r.seed) + ")";
        ++bad;
      }
    } catch (const CapExceeded&) {
      ++capped;
    }
  }
  Verdict v;
  v.pass = bad == 0 && capped == 0;
  v.detail = std::to_string(bad) + " non-equilibrium final states, " + std::to_string(capped) +
             " beyond the path cap" + first;
  return v;
}

Verdict criterion_oracle_equivalence() {
  const auto start = Clock::now();
  std::size_t checked = 0;
  std::size_t bad = 0;
  std::size_t max_edges = 0;
  for (std::uint64_t seed = 0; checked < kOracleInstances; ++seed) {
    RandomInstanceParams p;
    p.seed = 10'000 + seed;
    p.n_terminals = 3 + static_cast<int>(seed % (kOracleMaxTerminals - 2));
    p.n_nonterminals = 1 + static_cast<int>(seed % 4);
    p.edge_prob = 0.3 + 0.1 * static_cast<double>(seed % 5);
    p.cost_lo = 1;
    p.cost_hi = 12;
    const Instance inst = gen_random_quasi_bipartite(p);
    if (inst.edge_count() > kOracleMaxEdges || inst.terminals().size() > kOracleMaxTerminals) continue;
    ++checked;
    max_edges = std::max(max_edges, inst.edge_count());
    if (exact_steiner(inst).total_cost != brute_force_steiner(inst, kOracleMaxEdges).total_cost) ++bad;
  }
  const double secs = seconds_since(start);
  Verdict v;
  v.pass = bad == 0 && secs < kOracleBudgetSeconds;
  v.detail = std::to_string(checked) + " instances (up to " + std::to_string(max_edges) + " edges), " +
             std::to_string(bad) + " cost mismatches, " +
             std::to_string(secs) + " s";
  return v;
}

Verdict criterion_chain() {
  const Rational eps(1, 2);
  const Rational delta(1, 100);
  Verdict v;
  std::ostringstream os;
  Rational previous(0);
  for (int n = 3; n <= 8; ++n) {
    const Instance inst = gen_poa_chain(n, eps, delta);
    const EquilibriumCatalog cat = enumerate_nash(inst);
    const Rational expect = (n + n * delta) / (1 + eps + n * delta);
    const bool poa_ok = cat.poa == expect && cat.poa > previous;
    previous = cat.poa;
    RunResult r = run(prepare(inst), RunConfig{});
    const Rational ratio = r.final_state
                               ? Rational(r.final_state->social_cost() / prepare(inst).opt.tree.total_cost)
                               : Rational(0);
    const bool pos_ok = r.status == RunStatus::kCompleted && ratio == 1;
    v.pass = v.pass && poa_ok && pos_ok;
    os << "n=" << n << " PoA " << to_string(cat.poa) << (poa_ok ? "" : " (expected " + to_string(expect) + ")")
       << " pos " << to_string(ratio) << (n < 8 ? "; " : "");
  }
  v.detail = os.str();
  return v;
}

Verdict criterion_lemmas() {
  const std::vector<std::string> tags{"homogeneity",     "absorb-precondition", "sole-usage",
                                      "make-tree-potential", "make-tree-subset", "make-tree-tree",
                                      "make-tree-protected"};
  std::map<std::string, std::size_t> checked;
  std::map<std::string, std::size_t> failed;
  std::map<std::string, std::uint64_t> first_seed;
  for (const auto& r : batch().runs) {
    for (const auto& a : r.result.trace.assertions) {
      if (std::find(tags.begin(), tags.end(), a.tag) == tags.end()) continue;
      ++checked[a.tag];
      if (!a.passed) {
        if (!failed.count(a.tag)) first_seed[a.tag] = r.seed;
        ++failed[a.tag];
      }
    }
  }
  Verdict v;
  v.pass = failed.empty();
  v.detail = "checked: " + tag_counts(checked);
  if (!failed.empty()) {
    v.detail += "; failed: " + tag_counts(failed) + "; first seeds:";
    for (const auto& [tag, seed] : first_seed) v.detail += " " + tag + "@" + std::to_string(seed);
  }
  return v;
}

struct AuditSummary {
  std::map<std::string, std::size_t> failed;
  std::size_t audited = 0;
  std::size_t case2 = 0;
  std::size_t not_tree = 0;
};

const AuditSummary& audits() {
  static const AuditSummary s = [] {
    AuditSummary out;
    for (const auto& r : batch().runs) {
      if (!r.result.final_state || !r.result.final_state->is_tree()) {
        ++out.not_tree;
        continue;
      }
      const AuditReport rep = audit(*r.result.final_state, r.result.trace, r.prepared.opt);
      ++out.audited;
      for (const auto& c : rep.charges) out.case2 += c.rule == ChargeRule::kCase2;
      for (const auto& c : rep.checks) {
        if (!c.passed) ++out.failed[c.tag];
      }
    }
    return out;
  }();
  return s;
}

Verdict criterion_audit() {
  const AuditSummary& s = audits();
  Verdict v;
  v.pass = s.failed.empty() && s.not_tree == 0;
  v.detail = std::to_string(s.audited) + " final states audited, " + std::to_string(s.case2) +
             " case-2 charges, " + std::to_string(s.not_tree) + " non-tree";
  if (!s.failed.empty()) v.detail += "; failed checks: " + tag_counts(s.failed);
  return v;
}

Verdict criterion_sandwich() {
  std::size_t states = 0;
  std::size_t bad = 0;
  std::size_t diverged = 0;
  for (const auto& r : batch().runs) {
    const Instance& inst = *r.prepared.instance;
    const Rational& h = harmonic(inst.terminals().size() - 1);
    State s = tree_state(inst, r.prepared.opt.tree);
    auto check = [&] {
      ++states;
      const Rational c = s.social_cost();
      const Rational phi = oracle_potential(s);
      if (!(c <= phi && phi <= h * c)) ++bad;
    };
    check();
    for (const auto& m : r.result.trace.moves) {
      s.reroute(m.mover, m.new_path);
      if (oracle_potential(s) != m.phi_after) ++diverged;
      check();
    }
    if (r.result.final_state && s.paths() != r.result.final_state->paths()) ++diverged;
  }
  Verdict v;
  v.pass = bad == 0 && diverged == 0;
  v.detail = std::to_string(states) + " traced states, " + std::to_string(bad) + " violations, " +
             std::to_string(diverged) + " replay mismatches";
  return v;
}

Verdict criterion_cross_oracle() {
  OracleCaps caps;
  caps.profiles = 200'000;
  std::size_t feasible = 0;
  std::size_t bad = 0;
  Rational max_ratio(0);
  std::optional<std::uint64_t> worst_seed;
  for (const auto& r : batch().runs) {
    if (!r.result.final_state) {
      ++bad;
      continue;
    }
    const Rational final_cost = r.result.final_state->social_cost();
    const Rational ratio = final_cost / r.prepared.opt.tree.total_cost;
    if (ratio > max_ratio) {
      max_ratio = ratio;
      worst_seed = r.seed;
    }
    try {
      const EquilibriumCatalog cat = enumerate_nash(*r.prepared.instance, caps);
      ++feasible;
      bool found = false;
      for (const auto& eq : cat.equilibria) found = found || eq.cost == final_cost;
      if (!found || cat.equilibria.empty() || final_cost < cat.min_cost) ++bad;
    } catch (const CapExceeded&) {
    }
  }
  Verdict v;
  v.pass = bad == 0 && max_ratio <= implied_pos_bound();
  v.detail = std::to_string(feasible) + " instances enumerated, " + std::to_string(bad) +
             " mismatches, max pos_ratio " + to_string(max_ratio) + " (~" +
             std::to_string(to_double(max_ratio)) + ")";
  if (worst_seed) v.detail += " at seed " + std::to_string(*worst_seed);
  v.detail += ", bound ~" + std::to_string(to_double(implied_pos_bound()));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::optional<int> only;
  app.add_option("--criterion", only, "run a single criterion")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict()>> criteria{
      criterion_potential_identity, criterion_strict_decrease, criterion_final_equilibrium,
      criterion_oracle_equivalence, criterion_chain,           criterion_lemmas,
      criterion_audit,              criterion_sandwich,        criterion_cross_oracle};

  bool all = true;
  for (int i = 1; i <= 9; ++i) {
    if (only && *only != i) continue;
    Verdict v;
    try {
      v = criteria[i - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << "criterion " << i << ": " << (v.pass ? "PASS" : "FAIL") << ' ' << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
