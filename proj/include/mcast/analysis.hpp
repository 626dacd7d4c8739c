#ifndef MCAST_ANALYSIS_HPP
#define MCAST_ANALYSIS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcast/dynamics.hpp"
#include "mcast/game.hpp"
#include "mcast/steiner.hpp"

namespace mcast {

struct OracleCaps {
  std::size_t paths_per_terminal = 100'000;
  std::size_t profiles = 1'000'000;
};

/// Every simple path from `from` to the root, neighbours visited in ascending
/// order. Throws CapExceeded past `cap` paths.
std::vector<Path> simple_paths_to_root(const Instance& instance, VertexId from, std::size_t cap);

/// Nash test by trying every simple path of every terminal.
NashVerdict is_nash_exhaustive(const State& state, const OracleCaps& caps = {});

struct NashProfile {
  std::vector<Path> paths;  // indexed by vertex, as in State
  Rational cost;
};

struct EquilibriumCatalog {
  std::vector<NashProfile> equilibria;
  std::size_t profiles_examined = 0;
  Rational opt_cost;
  Rational min_cost;
  Rational max_cost;
  Rational pos;  // min_cost / opt_cost
  Rational poa;  // max_cost / opt_cost
};

/// All pure Nash profiles by product enumeration. Throws CapExceeded when the
/// profile space exceeds caps.profiles.
EquilibriumCatalog enumerate_nash(const Instance& instance, const OracleCaps& caps = {});

/// c(S_f) / c(T*). Throws std::invalid_argument when the state is not Nash.
Rational pos_ratio(const State& final_state, const SteinerTree& tree);

enum class ChargeRule { kSigma, kDropSigma, kDropPair, kWholeCycle, kCase1, kCase2 };
std::string to_string(ChargeRule rule);

struct Charge {
  EdgeIdx source = kNone;
  std::optional<EdgeIdx> target;  // empty: charged to c(T*) as a whole
  Rational amount;
  ChargeRule rule = ChargeRule::kSigma;
  bool operator==(const Charge&) const = default;
};

struct AuditCheck {
  std::string tag;
  bool passed = true;
  std::string detail;
  bool operator==(const AuditCheck&) const = default;
};

struct OverlapVerdict {
  EdgeIdx first = kNone;
  EdgeIdx second = kNone;
  unsigned cls = 0;
  bool disjoint = true;
  bool operator==(const OverlapVerdict&) const = default;
};

struct LedgerEntry {
  Rational case1;
  Rational case2;
  Rational cost;
  bool operator==(const LedgerEntry&) const = default;
};

struct AuditReport {
  Rational opt_cost;
  Rational final_cost;
  Rational pos_ratio;
  std::vector<EdgeIdx> e_sigma;
  std::vector<EdgeIdx> e_star;
  std::map<EdgeIdx, Rational> inflation;  // sigma edge -> cost used for its class
  std::vector<OverlapVerdict> overlaps;
  std::vector<Charge> charges;
  std::map<EdgeIdx, LedgerEntry> ledger;  // T* edge -> neighborhood charges
  Rational whole_cycle_total;
  std::vector<AuditCheck> checks;

  bool passed() const;
  const AuditCheck* first_failure() const;
  bool operator==(const AuditReport&) const = default;
};

/// Vertex below e in a tree state, i.e. the v with e = e_v.
struct TreeShape {
  std::vector<EdgeIdx> parent_edge;  // kNone for the root and absent vertices
  std::vector<VertexId> parent;
  std::vector<std::vector<VertexId>> children;  // ascending
  VertexId lower_end(const Instance& instance, EdgeIdx e) const;
};
TreeShape tree_shape(const State& state);

struct ESigmaResult {
  std::vector<EdgeIdx> edges;
  std::vector<Charge> charges;
  std::vector<AuditCheck> checks;
};
ESigmaResult audit_e_sigma(const State& final_state, const OptStructures& opt);

struct EStarResult {
  std::vector<EdgeIdx> edges;
  std::vector<Charge> charges;
  std::map<EdgeIdx, Rational> inflation;
  std::vector<AuditCheck> checks;
};
EStarResult build_e_star(const State& final_state, const Trace& trace, const OptStructures& opt,
                         const std::vector<EdgeIdx>& e_sigma);

/// N(v) in the final state for the v with e = e_v, classed by `class_cost`.
Neighborhood final_neighborhood(const State& final_state, const OptStructures& opt, EdgeIdx e,
                                const Rational& class_cost);

std::vector<OverlapVerdict> audit_overlap(const State& final_state, const OptStructures& opt,
                                          const std::vector<EdgeIdx>& e_star,
                                          const std::map<EdgeIdx, Rational>& inflation);

struct NeighborhoodCharges {
  std::vector<Charge> charges;
  std::map<EdgeIdx, LedgerEntry> ledger;
  Rational whole_cycle_total;
  std::vector<AuditCheck> checks;
};
NeighborhoodCharges charge_to_neighborhood(const State& final_state, const OptStructures& opt,
                                           const std::vector<EdgeIdx>& e_star,
                                           const std::map<EdgeIdx, Rational>& inflation);

/// Heavy classes for a right neighborhood of class alpha: the
/// candidates beta in [0, alpha-2] meeting
/// 256^(beta+1) H^2_{n_beta} / 256^(alpha-1) >= 256^(-(alpha-beta)/2).
std::vector<unsigned> heavy_classes(const std::map<unsigned, std::size_t>& counts, unsigned alpha);

/// Certified rational upper bound on 2 * sum_{z>=0} 256^(z+3) / e^(sqrt(256^((z-2)/2)) - 1).
const Rational& case2_constant();

/// 65 * (1 + 3 * (2*256^3 + K + 2)): the PoS bound implied by the audited constants.
const Rational& implied_pos_bound();

/// Full post-hoc audit of a completed run.
AuditReport audit(const State& final_state, const Trace& trace, const OptStructures& opt);

struct RunSummary {
  std::string name;
  std::size_t vertices = 0;
  std::size_t terminals = 0;
  Rational opt_cost;
  Rational final_cost;
  Rational pos_ratio;
  std::size_t moves = 0;
  std::size_t critical_moves = 0;
  bool audit_pass = false;
};

std::string csv_header();
std::string csv_row(const RunSummary& row);

nlohmann::json rational_to_json(const Rational& value);
Rational rational_from_json(const nlohmann::json& value);
/// Edge references are written as instance edge ids.
nlohmann::json report_to_json(const AuditReport& report, const Instance& instance);
AuditReport report_from_json(const nlohmann::json& doc, const Instance& instance);

}  // namespace mcast

#endif  // MCAST_ANALYSIS_HPP
