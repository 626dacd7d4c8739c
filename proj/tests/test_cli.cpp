#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mcast/instance.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("mcast_cli_" + std::to_string(rd()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

// Runs the binary with `args`, stdout to `out` and stderr to `out`.err.
int invoke(const std::string& args, const std::string& out) {
  const std::string cmd =
      std::string("'") + MCAST_POS_BINARY + "' " + args + " > '" + out + "' 2> '" + out + ".err'";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& file, const std::string& text) { std::ofstream(file) << text; }

std::size_t lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const char* kTriangle =
    "mcast-pos-instance v1\nvertices 3\nroot 0\nterminals 0 1 2\n"
    "edge 0 0 1 1\nedge 1 1 2 1\nedge 2 0 2 10\n";

}  // namespace

TEST_CASE("generate and run the price of anarchy chain") {
  Sandbox box;
  const std::string inst = box.path("chain.inst");
  CHECK(invoke("generate poa-chain -n 4 --out '" + inst + "'", box.path("gen.txt")) == 0);
  CHECK(mcast::parse_instance(slurp(inst)).terminals().size() == 5);

  const std::string out = box.path("run.csv");
  CHECK(invoke("run '" + inst + "'", out) == 0);
  const std::string csv = slurp(out);
  CHECK(lines(csv) == 2);
  CHECK(csv.find(",1,1,") != std::string::npos);
  CHECK(csv.find("true") != std::string::npos);
}

TEST_CASE("malformed input exits with 2") {
  Sandbox box;
  write(box.path("bad.inst"), "this is not an instance\n");
  CHECK(invoke("run '" + box.path("bad.inst") + "'", box.path("out")) == 2);
  CHECK(invoke("run '" + box.path("missing.inst") + "'", box.path("out")) == 2);
  CHECK(invoke("generate random-qb --edge-prob 2", box.path("out")) == 2);
}

TEST_CASE("move guard exits with 3") {
  Sandbox box;
  const std::string inst = box.path("r.inst");
  CHECK(invoke("generate random-qb --seed 12 -k 8 --nonterminals 6 --out '" + inst + "'", box.path("g")) == 0);
  CHECK(invoke("run --guard 1 '" + inst + "'", box.path("out")) == 3);
  CHECK(invoke("run '" + inst + "'", box.path("out")) == 0);
}

TEST_CASE("run output directory and verify") {
  Sandbox box;
  const std::string inst = box.path("r.inst");
  const std::string dir = box.path("res");
  CHECK(invoke("generate random-qb --seed 12 -k 8 --nonterminals 6 --out '" + inst + "'", box.path("g")) == 0);
  CHECK(invoke("run --format json --out '" + dir + "' '" + inst + "'", box.path("out")) == 0);
  for (const char* name : {"final.state", "prepared.instance", "trace.tsv"}) {
    CHECK(fs::exists(fs::path(dir) / name));
  }
  CHECK(invoke("verify '" + dir + "/prepared.instance' '" + dir + "/final.state'", box.path("v")) == 0);
  CHECK(slurp(box.path("v")).find("nash: yes") != std::string::npos);
}

TEST_CASE("verify reports a witness or a broken path") {
  Sandbox box;
  write(box.path("t.inst"), kTriangle);
  write(box.path("tree.state"), "mcast-pos-state v1\npath 1 0\npath 2 1 0\n");
  write(box.path("dear.state"), "mcast-pos-state v1\npath 1 0\npath 2 2\n");
  write(box.path("broken.state"), "mcast-pos-state v1\npath 1 0\npath 2 1\n");
  CHECK(invoke("verify '" + box.path("t.inst") + "' '" + box.path("tree.state") + "'", box.path("a")) == 0);
  CHECK(invoke("verify '" + box.path("t.inst") + "' '" + box.path("dear.state") + "'", box.path("b")) == 1);
  const std::string report = slurp(box.path("b"));
  CHECK(report.find("witness: 2") != std::string::npos);
  CHECK(report.find("deviation cost: 3/2") != std::string::npos);
  CHECK(invoke("verify '" + box.path("t.inst") + "' '" + box.path("broken.state") + "'", box.path("c")) == 2);
}

TEST_CASE("bench is deterministic") {
  Sandbox box;
  fs::create_directories(box.path("set"));
  for (int seed : {1, 2, 3}) {
    const std::string inst = box.path("set/s" + std::to_string(seed) + ".inst");
    CHECK(invoke("generate random-qb --seed " + std::to_string(seed) + " -k 5 --nonterminals 3 --out '" +
                     inst + "'",
                 box.path("g")) == 0);
  }
  CHECK(invoke("bench '" + box.path("set") + "'", box.path("one.csv")) == 0);
  CHECK(invoke("bench '" + box.path("set") + "'", box.path("two.csv")) == 0);
  const std::string one = slurp(box.path("one.csv"));
  CHECK(lines(one) == 4);
  CHECK(one == slurp(box.path("two.csv")));
}

TEST_CASE("generators are reproducible") {
  Sandbox box;
  CHECK(invoke("generate random-qb --seed 7", box.path("a")) == 0);
  CHECK(invoke("generate random-qb --seed 7", box.path("b")) == 0);
  CHECK(slurp(box.path("a")) == slurp(box.path("b")));
  CHECK(invoke("generate random-qb --seed 8", box.path("c")) == 0);
  CHECK(slurp(box.path("a")) != slurp(box.path("c")));

  CHECK(invoke("generate broadcast -k 6 --seed 2", box.path("d")) == 0);
  mcast::Instance b = mcast::parse_instance(slurp(box.path("d")));
  CHECK(b.terminals().size() == b.vertex_count());
}
