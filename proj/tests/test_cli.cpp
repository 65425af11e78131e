#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "jpath/checks.hpp"
#include "jpath/io.hpp"

#ifndef JPATH_CLI_PATH
#error "JPATH_CLI_PATH must point at the CLI binary"
#endif
#ifndef JPATH_DATA_DIR
#error "JPATH_DATA_DIR must point at the sample networks"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "jpath_cli_test";
  fs::create_directories(dir);
  fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = std::string(JPATH_CLI_PATH) + " " + args + " > " +
                    out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = status;
#else
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string data_file(const std::string& name) {
  return (fs::path(JPATH_DATA_DIR) / name).string();
}

fs::path scratch_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "jpath_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("analyze prints the tandem invariants to 12 digits") {
  RunResult r = run_cli("analyze " + data_file("tandem.json"));
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("1.09861228867") != std::string::npos);  // ln 3
  REQUIRE(r.out.find("1.38629436112") != std::string::npos);  // ln 4
  REQUIRE(r.out.find("rho") != std::string::npos);
}

TEST_CASE("analyze writes a JSON report") {
  fs::path out = scratch_file("analyze.json");
  RunResult r = run_cli("analyze " + data_file("mm1.json") + " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  std::string body = slurp(out);
  REQUIRE(body.find("\"theta_star\"") != std::string::npos);
  REQUIRE(body.find("\"dual\"") != std::string::npos);
}

TEST_CASE("malformed input exits with code 2") {
  fs::path bad = scratch_file("bad.json");
  std::ofstream(bad) << "{ not json";
  RunResult r = run_cli("analyze " + bad.string());
  REQUIRE(r.exit_code == 2);
  REQUIRE(r.err.find("input error") != std::string::npos);

  fs::path unstable = scratch_file("unstable.json");
  std::ofstream(unstable)
      << R"({"lambda": [2.0], "mu": [1.0], "P": [[0.0]]})";
  RunResult r2 = run_cli("analyze " + unstable.string());
  REQUIRE(r2.exit_code == 2);

  RunResult r3 = run_cli("analyze " + scratch_file("missing.json").string());
  REQUIRE(r3.exit_code == 2);

  RunResult r4 = run_cli("definitely-not-a-subcommand");
  REQUIRE(r4.exit_code == 2);
}

TEST_CASE("trajectory emits csv files and the cost") {
  fs::path out = scratch_file("path.csv");
  RunResult r = run_cli("trajectory " + data_file("tandem.json") +
                        " --target 1,0 --format csv --out " + out.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("1.09861228867") != std::string::npos);

  std::string body = slurp(out);
  REQUIRE(body.rfind("t,q_1,q_2,face,theta_1,theta_2,segment_index", 0) == 0);
  REQUIRE(body.find("J=2") != std::string::npos);

  fs::path dual = out;
  dual.replace_filename("path.dual.csv");
  REQUIRE(fs::exists(dual));

  fs::path json_out = scratch_file("path.json");
  RunResult rj = run_cli("trajectory " + data_file("tandem.json") +
                         " --target 1,0.5 --format json --out " + json_out.string());
  REQUIRE(rj.exit_code == 0);
  std::string jbody = slurp(json_out);
  REQUIRE(jbody.find("\"optimal_path\"") != std::string::npos);
  REQUIRE(jbody.find("\"dual_fluid\"") != std::string::npos);
}

TEST_CASE("trajectory rejects bad targets") {
  RunResult r = run_cli("trajectory " + data_file("tandem.json") + " --target -1,0");
  REQUIRE(r.exit_code == 2);
  RunResult r2 = run_cli("trajectory " + data_file("tandem.json") + " --target 1");
  REQUIRE(r2.exit_code == 2);
  RunResult r3 = run_cli("trajectory " + data_file("tandem.json") + " --target 1,x");
  REQUIRE(r3.exit_code == 2);
}

TEST_CASE("faces lists every face with flags") {
  RunResult r = run_cli("faces " + data_file("mm1.json"));
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("J=") != std::string::npos);
  REQUIRE(r.out.find("J=1") != std::string::npos);
  REQUIRE(r.out.find("essential=yes") != std::string::npos);

  RunResult r2 = run_cli("faces " + data_file("two_node_feedback.json"));
  REQUIRE(r2.exit_code == 0);
  REQUIRE(r2.out.find("essential=no") != std::string::npos);
}

TEST_CASE("check passes on the shipped examples") {
  RunResult r = run_cli("check " + data_file("tandem.json") + " --level fast");
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out.find("all checks passed") != std::string::npos);
  REQUIRE(r.out.find("[FAIL]") == std::string::npos);
}

TEST_CASE("a corrupted intermediate trips the named check") {
  jpath::NetworkSpec spec = jpath::load_network(data_file("tandem.json"));
  auto net = jpath::validate(spec);

  jpath::CheckHooks hooks;
  hooks.corrupt_traffic = [](jpath::TrafficSolution& t) {
    t.C(1, 0) += 0.25;  // break the resolvent, leave nu alone
  };
  jpath::CheckReport report =
      jpath::run_checks(net, jpath::CheckLevel::fast, 2024, hooks);
  REQUIRE_FALSE(report.all_pass);
  bool resolvent_failed = false;
  for (const auto& res : report.results)
    if (res.name == "resolvent_identity" && !res.pass) resolvent_failed = true;
  REQUIRE(resolvent_failed);

  // the clean run passes every named check
  jpath::CheckReport clean = jpath::run_checks(net, jpath::CheckLevel::fast);
  REQUIRE(clean.all_pass);
}

TEST_CASE("simulate is deterministic under a fixed seed") {
  fs::path a = scratch_file("sim_a.json");
  fs::path b = scratch_file("sim_b.json");
  std::string base = "simulate " + data_file("tandem.json") +
                     " --seed 42 --replicas 3 --horizon 200 --out ";
  REQUIRE(run_cli(base + a.string()).exit_code == 0);
  REQUIRE(run_cli(base + b.string()).exit_code == 0);
  REQUIRE(slurp(a) == slurp(b));
  RunResult diff = run_cli("simulate " + data_file("tandem.json") +
                           " --seed 43 --replicas 3 --horizon 200 --out " +
                           a.string());
  REQUIRE(diff.exit_code == 0);
  REQUIRE(slurp(a) != slurp(b));
}
