#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcast/analysis.hpp"
#include "mcast/dynamics.hpp"

namespace fs = std::filesystem;
using namespace mcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitGuard = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Instance load_instance(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_instance(text);
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct RunOptions {
  std::size_t guard = 1'000'000;
  std::string absorb_order = "from-v";
  std::string format = "csv";
  std::string out_dir;
  std::size_t oracle_cap = 1'000'000;
  std::optional<std::uint64_t> seed;
};

RunConfig make_config(const RunOptions& opts) {
  RunConfig config;
  config.guard = opts.guard;
  config.absorb_order = opts.absorb_order == "from-r" ? AbsorbOrder::kFromR : AbsorbOrder::kFromV;
  config.log_level = log_level_from_env();
  config.log = &std::cerr;
  return config;
}

struct Outcome {
  RunResult result;
  AuditReport report;
  RunSummary summary;
  std::vector<std::string> oracle_failures;
  std::vector<std::string> notes;
};

// Runs the dynamics, the audit and the brute-force cross-checks that fit under the caps.
Outcome execute(const Instance& raw, const std::string& name, const RunOptions& opts) {
  Outcome out;
  const Prepared prepared = prepare(raw);
  out.result = run(prepared, make_config(opts));
  const State& final_state = *out.result.final_state;
  if (out.result.status == RunStatus::kCompleted || final_state.is_tree()) {
    out.report = audit(final_state, out.result.trace, prepared.opt);
  }
  const OracleCaps caps{opts.oracle_cap, opts.oracle_cap};
  if (out.result.status == RunStatus::kCompleted) {
    try {
      const NashVerdict v = is_nash_exhaustive(final_state, caps);
      if (!v.nash) out.oracle_failures.push_back("exhaustive deviation found for terminal " + std::to_string(v.witness));
    } catch (const CapExceeded& e) {
      out.notes.push_back(std::string("exhaustive Nash check skipped: ") + e.what());
    }
    try {
      const EquilibriumCatalog cat = enumerate_nash(*prepared.instance, caps);
      const Rational cost = final_state.social_cost();
      const bool member = std::any_of(cat.equilibria.begin(), cat.equilibria.end(),
                                      [&](const NashProfile& p) { return p.cost == cost; });
      if (!member) out.oracle_failures.push_back("final cost matches no enumerated equilibrium");
      if (!cat.equilibria.empty() && cost < cat.min_cost) {
        out.oracle_failures.push_back("final cost below the cheapest enumerated equilibrium");
      }
      out.notes.push_back("enumerated equilibria: " + std::to_string(cat.equilibria.size()) +
                          ", PoS " + to_string(cat.pos) + ", PoA " + to_string(cat.poa));
    } catch (const CapExceeded& e) {
      out.notes.push_back(std::string("equilibrium enumeration skipped: ") + e.what());
    }
  }
  out.summary.name = opts.seed ? std::to_string(*opts.seed) : name;
  out.summary.vertices = raw.vertex_count();
  out.summary.terminals = raw.terminals().size();
  out.summary.opt_cost = prepared.opt.tree.total_cost / prepared.scale;
  out.summary.final_cost = final_state.social_cost() / prepared.scale;
  out.summary.pos_ratio = prepared.opt.tree.total_cost > 0
                              ? Rational(final_state.social_cost() / prepared.opt.tree.total_cost)
                              : Rational(1);
  out.summary.moves = out.result.trace.moves.size();
  out.summary.critical_moves = out.result.critical_moves;
  out.summary.audit_pass = out.result.status == RunStatus::kCompleted && out.report.passed() &&
                           out.oracle_failures.empty();
  return out;
}

int exit_code(const Outcome& o) {
  if (o.result.status == RunStatus::kGuardExceeded) return kExitGuard;
  return o.summary.audit_pass ? kExitOk : kExitFailure;
}

std::string first_problem(const Outcome& o) {
  if (o.result.status != RunStatus::kCompleted) return o.result.message;
  if (const auto* f = o.report.first_failure()) return "audit " + f->tag + ": " + f->detail;
  if (!o.oracle_failures.empty()) return o.oracle_failures.front();
  return {};
}

int cmd_run(const std::string& path, const RunOptions& opts) {
  const Instance raw = load_instance(path);
  const Outcome o = execute(raw, fs::path(path).stem().string(), opts);
  const Instance& inst = *o.result.instance;

  std::string rendered;
  if (opts.format == "json") {
    nlohmann::json doc = report_to_json(o.report, inst);
    doc["status"] = to_string(o.result.status);
    doc["moves"] = o.summary.moves;
    doc["critical_moves"] = o.summary.critical_moves;
    doc["oracle_failures"] = o.oracle_failures;
    rendered = doc.dump(2) + "\n";
  } else {
    rendered = csv_header() + csv_row(o.summary);
  }

  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    const fs::path dir(opts.out_dir);
    write_file(dir / "trace.tsv", o.result.trace.to_log());
    write_file(dir / "final.state", serialize_state(*o.result.final_state));
    write_file(dir / "prepared.instance", serialize_instance(inst));
    write_file(dir / (opts.format == "json" ? "report.json" : "report.csv"), rendered);
    if (!o.result.snapshot.empty()) write_file(dir / "snapshot.state", o.result.snapshot);
  } else {
    std::cout << rendered;
  }

  for (const auto& note : o.notes) std::cerr << "note: " << note << '\n';
  std::cerr << "status: " << to_string(o.result.status) << ", pos_ratio " << to_string(o.summary.pos_ratio)
            << ", moves " << o.summary.moves << '\n';
  if (const std::string problem = first_problem(o); !problem.empty()) {
    std::cerr << "first failure: " << problem << '\n';
  }
  return exit_code(o);
}

int cmd_verify(const std::string& instance_path, const std::string& state_path) {
  const Instance inst = load_instance(instance_path);
  const std::string text = read_file(state_path);
  std::optional<State> state;
  try {
    state.emplace(parse_state(inst, text));
  } catch (const std::exception& e) {
    throw InputError(state_path + ": " + e.what());
  }
  const NashVerdict v = is_nash(*state);
  if (v.nash) {
    std::cout << "nash: yes\n";
    return kExitOk;
  }
  std::cout << "nash: no\nwitness: " << v.witness << "\ncurrent cost: " << to_string(v.current_cost)
            << "\ndeviation cost: " << to_string(v.deviation_cost)
            << "\nimproving path: " << to_string(v.improving_path) << '\n';
  return kExitFailure;
}

int cmd_bench(const std::string& dir, const RunOptions& opts) {
  if (!fs::is_directory(dir)) throw InputError(dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError(dir + " holds no instances");

  std::string csv = csv_header();
  nlohmann::json rows = nlohmann::json::array();
  bool all_pass = true;
  RunOptions per = opts;
  per.seed.reset();
  for (const auto& file : files) {
    RunSummary row;
    row.name = file.stem().string();
    std::string error;
    try {
      const Instance raw = load_instance(file.string());
      row = execute(raw, row.name, per).summary;
    } catch (const std::exception& e) {
      error = e.what();
      std::cerr << file.filename().string() << ": " << error << '\n';
    }
    all_pass = all_pass && row.audit_pass;
    csv += csv_row(row);
    rows.push_back({{"name", row.name},
                    {"n", row.vertices},
                    {"terminals", row.terminals},
                    {"opt_cost", rational_to_json(row.opt_cost)},
                    {"final_cost", rational_to_json(row.final_cost)},
                    {"pos_ratio", rational_to_json(row.pos_ratio)},
                    {"moves", row.moves},
                    {"critical_moves", row.critical_moves},
                    {"audit_pass", row.audit_pass},
                    {"error", error}});
  }
  const std::string rendered = opts.format == "json" ? rows.dump(2) + "\n" : csv;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    write_file(fs::path(opts.out_dir) / (opts.format == "json" ? "bench.json" : "bench.csv"), rendered);
  } else {
    std::cout << rendered;
  }
  return all_pass ? kExitOk : kExitFailure;
}

struct GenerateOptions {
  std::string kind;
  std::uint64_t seed = 0;
  int terminals = 6;
  int nonterminals = 4;
  double edge_prob = 0.5;
  std::int64_t cost_lo = 1;
  std::int64_t cost_hi = 20;
  std::string spread = "uniform";
  int n = 4;
  std::string eps = "1/2";
  std::string delta = "1/100";
  std::string out;
};

int cmd_generate(const GenerateOptions& g) {
  std::string header;
  std::optional<Instance> inst;
  try {
    if (g.kind == "poa-chain") {
      inst.emplace(gen_poa_chain(g.n, parse_rational(g.eps), parse_rational(g.delta)));
      header = "# poa-chain n: " + std::to_string(g.n) + " eps: " + g.eps + " delta: " + g.delta + "\n";
    } else {
      RandomInstanceParams p;
      p.n_terminals = g.terminals;
      p.n_nonterminals = g.kind == "broadcast" ? 0 : g.nonterminals;
      p.edge_prob = g.edge_prob;
      p.cost_lo = g.cost_lo;
      p.cost_hi = g.cost_hi;
      p.spread = g.spread == "log-uniform" ? CostSpread::kLogUniform
                 : g.spread == "clustered" ? CostSpread::kClustered
                                           : CostSpread::kUniform;
      p.seed = g.seed;
      inst.emplace(gen_random_quasi_bipartite(p));
      header = "# seed: " + std::to_string(g.seed) + "\n# " + g.kind + " terminals: " +
               std::to_string(g.terminals) + " nonterminals: " + std::to_string(p.n_nonterminals) +
               " spread: " + g.spread + "\n";
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const std::string text = header + serialize_instance(*inst);
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_file(g.out, text);
  }
  std::cerr << "valid instance: " << inst->vertex_count() << " vertices, " << inst->terminals().size()
            << " terminals, " << inst->edge_count() << " edges\n";
  return kExitOk;
}

void add_run_flags(CLI::App* cmd, RunOptions& opts) {
  cmd->add_option("--guard", opts.guard, "maximum number of moves")->check(CLI::PositiveNumber);
  cmd->add_option("--absorb-order", opts.absorb_order, "phase-1 absorb order")
      ->check(CLI::IsMember({"from-v", "from-r"}));
  cmd->add_option("--format", opts.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--oracle-caps", opts.oracle_cap, "path and profile cap for brute-force oracles")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "seed label for the report row");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair cost-sharing multicast game simulator"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "write an instance file");
  generate->add_option("kind", gen.kind, "instance family")
      ->required()
      ->check(CLI::IsMember({"random-qb", "poa-chain", "broadcast"}));
  generate->add_option("--seed", gen.seed, "random seed");
  generate->add_option("--terminals,-k", gen.terminals, "terminals including the root");
  generate->add_option("--nonterminals", gen.nonterminals, "nonterminal count (random-qb)");
  generate->add_option("--edge-prob", gen.edge_prob, "edge probability");
  generate->add_option("--cost-lo", gen.cost_lo, "smallest edge cost");
  generate->add_option("--cost-hi", gen.cost_hi, "largest edge cost");
  generate->add_option("--spread", gen.spread, "cost distribution")
      ->check(CLI::IsMember({"uniform", "log-uniform", "clustered"}));
  generate->add_option("-n", gen.n, "agents (poa-chain)");
  generate->add_option("--eps", gen.eps, "eps (poa-chain)");
  generate->add_option("--delta", gen.delta, "delta (poa-chain)");
  generate->add_option("--out", gen.out, "output file");

  RunOptions run_opts;
  std::string run_path;
  auto* run_cmd = app.add_subcommand("run", "run the dynamics and the audit");
  run_cmd->add_option("instance", run_path, "instance file")->required();
  add_run_flags(run_cmd, run_opts);

  std::string verify_instance;
  std::string verify_state;
  auto* verify = app.add_subcommand("verify", "check a state for equilibrium");
  verify->add_option("instance", verify_instance, "instance file")->required();
  verify->add_option("state", verify_state, "state file")->required();

  RunOptions bench_opts;
  std::string bench_dir;
  auto* bench = app.add_subcommand("bench", "run every instance in a directory");
  bench->add_option("dir", bench_dir, "instance directory")->required();
  add_run_flags(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*run_cmd) return cmd_run(run_path, run_opts);
    if (*verify) return cmd_verify(verify_instance, verify_state);
    if (*bench) return cmd_bench(bench_dir, bench_opts);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const CapExceeded& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitInput;
}
