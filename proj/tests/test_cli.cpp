#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "byzlearn/io.hpp"

namespace fs = std::filesystem;
using byzlearn::io::Json;
using Catch::Matchers::ContainsSubstring;

namespace {

const fs::path kScenarios = BYZLEARN_SCENARIOS;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("byzlearn-cli-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  Outcome run(const std::string& args, const std::string& env = "") const {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = env + " '" + std::string(BYZLEARN_CLI) + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = byzlearn::io::read_text(out);
    o.err = byzlearn::io::read_text(err);
    return o;
  }

  std::string path(const std::string& name) const { return "'" + (dir / name).string() + "'"; }
};

std::string scenario(const std::string& name) { return "'" + (kScenarios / name).string() + "'"; }

}  // namespace

TEST_CASE("run writes trace and summary") {
  Workspace ws;
  const auto o = ws.run("run --scenario " + scenario("ff_bfl.json") + " --out " + ws.path("out"));
  INFO(o.err);
  REQUIRE(o.code == 0);
  CHECK(fs::exists(ws.dir / "out" / "trace.csv"));
  const Json s = byzlearn::io::load_json(ws.dir / "out" / "summary.json");
  CHECK(s["rule"] == "ff_bfl");
  CHECK(s["rounds"] == 200);
  CHECK(s["success"] == true);
  CHECK(s["assumptions"]["passed"] == true);
  CHECK_THAT(o.out, ContainsSubstring("all honest agents decided"));
}

TEST_CASE("run refuses a scenario that fails the assumption check") {
  Workspace ws;
  const auto o = ws.run("run --scenario " + scenario("bfl_k5_m2_violation.json") + " --out " + ws.path("out"));
  CHECK(o.code == 2);
  CHECK_THAT(o.err, ContainsSubstring("reduced graph F={") && ContainsSubstring("removed={"));
  CHECK_FALSE(fs::exists(ws.dir / "out" / "trace.csv"));

  const auto forced =
      ws.run("run --scenario " + scenario("bfl_k5_m2_violation.json") + " --force --out " + ws.path("out"));
  CHECK(forced.code == 0);
  CHECK(fs::exists(ws.dir / "out" / "trace.csv"));
  const Json s = byzlearn::io::load_json(ws.dir / "out" / "summary.json");
  CHECK(s["assumptions"]["passed"] == false);
}

TEST_CASE("run with a fixed seed is byte-for-byte reproducible") {
  Workspace ws;
  const std::string base = "run --scenario " + scenario("ff_bfl.json") + " --seed 7 --rounds 60 --out ";
  REQUIRE(ws.run(base + ws.path("a")).code == 0);
  REQUIRE(ws.run(base + ws.path("b")).code == 0);
  for (const char* file : {"trace.csv", "summary.json"})
    CHECK(byzlearn::io::read_text(ws.dir / "a" / file) == byzlearn::io::read_text(ws.dir / "b" / file));
  const Json s = byzlearn::io::load_json(ws.dir / "a" / "summary.json");
  CHECK(s["seed"] == 7);
  CHECK(s["rounds"] == 60);
}

TEST_CASE("run reports bad input with exit 1") {
  Workspace ws;
  byzlearn::io::write_text(ws.dir / "broken.json", "{\n  \"rule\": \"bfl\",\n  \"graph\": \n}\n");
  const auto o = ws.run("run --scenario " + ws.path("broken.json") + " --out " + ws.path("out"));
  CHECK(o.code == 1);
  CHECK_THAT(o.err, ContainsSubstring("broken.json") && ContainsSubstring("line 4"));
  CHECK(ws.run("run --scenario " + ws.path("missing.json")).code == 1);
  CHECK(ws.run("run").code == 1);
  CHECK(ws.run("fly").code == 1);
}

TEST_CASE("check-graph on named graphs") {
  Workspace ws;
  SECTION("K4, f=1, m=1 passes") {
    const auto o = ws.run("check-graph --graph " + scenario("graph_k4.json") + " --f 1 --dim 1 --model " +
                          scenario("model_k4_binary.json") + " --out " + ws.path("k4.json"));
    CHECK(o.code == 0);
    CHECK_THAT(o.out, ContainsSubstring("PASS"));
    const Json r = byzlearn::io::load_json(ws.dir / "k4.json");
    CHECK(r["pass"] == true);
    CHECK(r["topology"]["assumption_holds"] == true);
    CHECK(r["identifiability"].size() == 2);
  }
  SECTION("K5, f=1, m=2 fails with a witness") {
    const auto o = ws.run("check-graph --graph " + scenario("graph_k5.json") + " --f 1 --dim 2");
    CHECK(o.code == 2);
    CHECK_THAT(o.out, ContainsSubstring("witness F={"));
  }
  SECTION("3-cycle, f=0, m=1 passes with chi 1 and gamma 3") {
    const auto o = ws.run("check-graph --graph " + scenario("graph_cycle3.json") + " --f 0 --dim 1 --out " +
                          ws.path("c3.json"));
    CHECK(o.code == 0);
    const Json r = byzlearn::io::load_json(ws.dir / "c3.json");
    CHECK(r["topology"]["chi"] == 1);
    CHECK(r["topology"]["gamma"] == 3);
  }
  SECTION("hitting the enumeration cap advises sampling") {
    const auto o = ws.run("check-graph --graph " + scenario("graph_k6.json") + " --f 1 --dim 2 --cap 10");
    CHECK(o.code == 1);
    CHECK_THAT(o.err, ContainsSubstring("--sample"));
    CHECK(ws.run("check-graph --graph " + scenario("graph_k6.json") + " --f 1 --dim 2 --sample 200").code == 0);
  }
  SECTION("dimension must be positive") {
    CHECK(ws.run("check-graph --graph " + scenario("graph_k4.json") + " --f 1 --dim 0").code == 1);
  }
}

TEST_CASE("sweep aggregates seeds") {
  Workspace ws;
  const auto o =
      ws.run("sweep --scenario " + scenario("ff_bfl.json") + " --seeds 1,2,3 --jobs 2 --out " + ws.path("sw"));
  INFO(o.err);
  REQUIRE(o.code == 0);
  CHECK_THAT(o.out, ContainsSubstring("success 3/3"));
  const Json a = byzlearn::io::load_json(ws.dir / "sw" / "aggregate.json");
  CHECK(a["runs"] == 3);
  CHECK(a["successes"] == 3);
  CHECK(a["success_fraction"] == 1.0);
  CHECK(a["fit_a"]["max"].get<double>() < 0.0);
  for (const char* seed : {"seed-1", "seed-2", "seed-3"}) CHECK(fs::exists(ws.dir / "sw" / seed / "trace.csv"));

  const auto serial = ws.run("sweep --scenario " + scenario("ff_bfl.json") + " --seeds 1,2,3 --out " + ws.path("s1"));
  REQUIRE(serial.code == 0);
  CHECK(byzlearn::io::read_text(ws.dir / "s1" / "seed-2" / "trace.csv") ==
        byzlearn::io::read_text(ws.dir / "sw" / "seed-2" / "trace.csv"));
}

TEST_CASE("sweep rejects an empty seed list") {
  Workspace ws;
  CHECK(ws.run("sweep --scenario " + scenario("ff_bfl.json") + " --seeds '' --out " + ws.path("sw")).code == 1);
  CHECK(ws.run("sweep --scenario " + scenario("ff_bfl.json") + " --seeds 1,x --out " + ws.path("sw")).code == 1);
}

TEST_CASE("report fits decay on a run trace") {
  Workspace ws;
  REQUIRE(ws.run("run --scenario " + scenario("ff_bfl.json") + " --out " + ws.path("out")).code == 0);
  const auto trace_before = byzlearn::io::read_text(ws.dir / "out" / "trace.csv");
  const auto o = ws.run("report --trace " + ws.path("out/trace.csv") + " --plots " + ws.path("plots") + " --json " +
                        ws.path("fits.json"));
  INFO(o.err);
  REQUIRE(o.code == 0);
  CHECK_THAT(o.out, ContainsSubstring("decay fits"));
  const Json r = byzlearn::io::load_json(ws.dir / "fits.json");
  CHECK(r["theta_star"] == "a");
  REQUIRE(r["fits"].size() == 12);
  for (const auto& fit : r["fits"]) {
    CHECK(fit["a"].get<double>() < 0.0);
    CHECK(fit["r_squared"].get<double>() >= 0.9);
  }
  CHECK(fs::exists(ws.dir / "plots" / "agent-1.dat"));
  CHECK(fs::exists(ws.dir / "plots" / "diameter.dat"));
  CHECK(byzlearn::io::read_text(ws.dir / "out" / "trace.csv") == trace_before);
}

TEST_CASE("report reads a pairwise trace") {
  Workspace ws;
  REQUIRE(ws.run("run --scenario " + scenario("pairwise_k5.json") + " --rounds 120 --out " + ws.path("out")).code ==
          0);
  const auto o = ws.run("report --trace " + ws.path("out/trace.csv"));
  CHECK(o.code == 0);
  CHECK_THAT(o.out, ContainsSubstring("pairwise rule") && ContainsSubstring("r(t1,t2)="));
}

TEST_CASE("report on short, empty and malformed traces") {
  Workspace ws;
  REQUIRE(ws.run("run --scenario " + scenario("ff_bfl.json") + " --rounds 10 --out " + ws.path("out")).code == 0);
  const auto short_run = ws.run("report --trace " + ws.path("out/trace.csv"));
  CHECK(short_run.code == 0);
  CHECK_THAT(short_run.out, ContainsSubstring("insufficient data"));

  byzlearn::io::write_text(ws.dir / "empty.csv", "");
  CHECK(ws.run("report --trace " + ws.path("empty.csv")).code == 1);

  byzlearn::io::write_text(ws.dir / "bad.csv", "round,agent,kind,key,value\n0,1,log_belief,a,zero\n");
  const auto bad = ws.run("report --trace " + ws.path("bad.csv"));
  CHECK(bad.code == 1);
  CHECK_THAT(bad.err, ContainsSubstring("line 2"));
}

TEST_CASE("log level comes from the environment") {
  Workspace ws;
  const std::string args = "run --scenario " + scenario("ff_bfl.json") + " --rounds 5 --out " + ws.path("out");
  const auto quiet = ws.run(args);
  CHECK(quiet.err.empty());
  const auto chatty = ws.run(args, "BYZLEARN_LOG=info");
  CHECK_THAT(chatty.err, ContainsSubstring("[info]"));
  const auto odd = ws.run(args, "BYZLEARN_LOG=loud");
  CHECK(odd.code == 0);
  CHECK_THAT(odd.err, ContainsSubstring("ignoring BYZLEARN_LOG"));
}
