#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "kinlab/experiments.hpp"

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::string field_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

RunOptions quiet(const std::string& dir) {
  RunOptions o;
  o.reproducible = true;
  o.out_dir = dir;
  return o;
}

const char* kHeat = R"({"problem":{"catalog":"heat"},"grid":{"points":64},"params":{"tau":0},
  "time":{"dt":0.00004,"T":0.02,"output_times":[0.01,0.02]},"output_dir":"cli_heat"})";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KINLAB_CLI_PATH) + " " + args + " >/dev/null 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("catalog keys all build") {
  for (const auto& key : catalog_keys()) {
    const auto desc = catalog_problem(key);
    const auto spec = build_spec(desc, 1, 2.0);
    CHECK(spec.flux.value);
    CHECK(spec.diffusion.matrix);
    CHECK(spec.initial.value);
  }
  CHECK_THROWS_AS(catalog_problem("no-such-problem"), Error);
}

TEST_CASE("config defaults") {
  const auto c = parse_config_text(R"({"problem":{"catalog":"burgers-degenerate"},"time":{"dt":0.000001,"T":0.001}})");
  CHECK(c.members == 64);
  CHECK(c.state_range == 8.0);
  CHECK(c.problem.noise.modes == 4);
  const auto d = parse_config_text(
      R"({"problem":{"flux":{"type":"burgers"},"noise":{"type":"additive"}},"grid":{"points":16},"time":{"dt":0.0001,"T":0.01}})");
  CHECK(d.problem.noise.modes == 16);
}

TEST_CASE("config errors name the offending field") {
  CHECK(field_of(R"({"grid":{"pointz":32}})") == "/grid/pointz");
  CHECK(field_of(R"({"grid":{"dim":3}})") == "/grid/dim");
  CHECK(field_of(R"({"problem":{"catalog":"burgers-degenerate"},"grid":{"points":128},"time":{"dt":0.01,"T":0.1}})") ==
        "/time/dt");
  CHECK(field_of(R"({"problem":{"catalog":"burgers-degenerate"},"grid":{"points":16},"time":{"dt":0.0001,"T":0.01},
                    "options":{"s":0.9}})") == "/options/s");
  CHECK(field_of(R"({"problem":{"catalog":"heat"},"grid":{"points":16},"state_range":2,"time":{"dt":0.0001,"T":0.01},
                    "options":{"velocity":{"min":-1,"max":1}}})") == "/options/velocity");
  CHECK(field_of(R"({"problem":{"catalog":"heat"},"grid":{"points":16},"time":{"dt":0.0001,"T":0.01,
                    "output_times":[0.00015]}})")
            .rfind("/time", 0) == 0);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("config round-trips through its JSON form") {
  const char* texts[] = {
      kHeat,
      R"({"problem":{"catalog":"burgers-degenerate","initial_b":{"type":"sine","amplitude":0.5}},"grid":{"points":32},
          "params":{"tau_list":[0.1,0.01],"R":"inf"},"time":{"dt":0.00005,"T":0.01,"output_every":10},"seed":99,
          "ensemble":{"members":8},"state_range":1.5,"options":{"p":4,"velocity":{"points":61}}})",
      R"({"problem":{"flux":{"type":"linear","velocity":[1,0.5]},"diffusion":{"type":"identity","scale":0.1}},
          "grid":{"dim":2,"points":16},"params":{"scheme":"eta","eta":0.0001,"R":3},"time":{"dt":0.0001,"T":0.01}})"};
  for (const char* t : texts) {
    const auto c = parse_config_text(t);
    const auto again = parse_config(to_json(c));
    CHECK(again == c);
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
  }
  auto a = parse_config_text(kHeat);
  auto b = a;
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("run: heat decay matches the Fourier oracle") {
  const auto c = parse_config_text(kHeat);
  const auto rep = run_experiment(c, "run", quiet("cli_heat"));
  CHECK(rep["command"] == "run");
  CHECK_FALSE(rep.contains("timestamp"));
  CHECK(parse_config(rep["config"]) == c);
  const auto rows = read_csv("cli_heat/fields.csv");
  REQUIRE(rows.size() == 3 * 64);
  const double h = 1.0 / 64;
  for (const auto& r : rows) {
    const double t = r[0], x = (r[1] + 0.5) * h;
    const double exact = std::exp(-4 * std::numbers::pi * std::numbers::pi * t) * std::sin(2 * std::numbers::pi * x);
    CHECK(std::abs(r[2] - exact) < 2e-3);
  }
  CHECK(fs::exists("cli_heat/norms.csv"));
  CHECK(fs::exists("cli_heat/noise.bin"));
}

TEST_CASE("audit on the degenerate Burgers catalog passes") {
  const auto c = parse_config_text(R"({"problem":{"catalog":"burgers-degenerate"},"grid":{"points":32},"state_range":1.5,
    "time":{"dt":0.00005,"T":0.001},"options":{"audit_samples":512}})");
  const auto rep = run_experiment(c, "audit", quiet("cli_audit"));
  CHECK(rep["results"]["all_pass"] == true);
  CHECK(fs::exists("cli_audit/audit.csv"));
}

TEST_CASE("contraction with identical data has an all-zero ratio column") {
  const auto c = parse_config_text(R"({"problem":{"catalog":"burgers-degenerate","initial_b":{"type":"sine"}},
    "grid":{"points":32},"state_range":1.5,"ensemble":{"members":8},"params":{"tau":0.001},
    "time":{"dt":0.00005,"T":0.01,"output_times":[0.005,0.01]}})");
  run_experiment(c, "contraction", quiet("cli_contraction"));
  const auto rows = read_csv("cli_contraction/contraction.csv");
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r[3] == 0.0);
}

TEST_CASE("reproducible reruns are byte-identical") {
  const std::string text = R"({"problem":{"catalog":"burgers-degenerate"},"grid":{"points":32},"state_range":1.5,
    "ensemble":{"members":8},"params":{"tau_list":[0.1,0.01,0.001]},"time":{"dt":0.00005,"T":0.005,"output_every":10}})";
  const auto c = parse_config_text(text);
  run_experiment(c, "cascade", quiet("cli_repro_a"));
  auto o = quiet("cli_repro_b");
  o.threads = 3;
  run_experiment(c, "cascade", o);
  for (const auto& name : {"report.json", "cascade.csv", "drops.csv"})
    CHECK(read_file(fs::path("cli_repro_a") / name) == read_file(fs::path("cli_repro_b") / name));
}

TEST_CASE("error JSON and exit codes") {
  try {
    parse_config_text(R"({"grid":{"points":2}})");
    FAIL("expected config error");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == 2);
    CHECK(error_json(e)["field"] == "/grid/points");
  }
  const BlowUpError b(17, "non-finite state");
  CHECK(exit_code_for(b) == 3);
  CHECK(error_json(b)["step"] == 17);
  CHECK_THROWS_AS(run_experiment(parse_config_text(kHeat), "bogus", quiet("cli_bogus")), Error);
}

TEST_CASE("binary: exit codes 0, 2 and 3") {
  {
    std::ofstream("cli_ok.json") << kHeat;
    CHECK(run_cli("run --config cli_ok.json --reproducible --out cli_bin_ok") == 0);
  }
  {
    std::ofstream("cli_bad.json") << R"({"problem":{"catalog":"heat"},"grid":{"points":64},"time":{"dt":0.01,"T":0.1}})";
    CHECK(run_cli("run --config cli_bad.json --out cli_bin_bad") == 2);
    CHECK(read_file("cli_stderr.txt").find("/time/dt") != std::string::npos);
  }
  {
    // The stability bound is checked over a state range far below the data.
    std::ofstream("cli_blow.json") << R"({"problem":{"catalog":"burgers","initial":{"type":"sine","amplitude":200}},
      "grid":{"points":64},"state_range":0.5,"params":{"tau":0},"time":{"dt":0.005,"T":2}})";
    CHECK(run_cli("run --config cli_blow.json --out cli_bin_blow") == 3);
    CHECK(read_file("cli_stderr.txt").find("\"step\"") != std::string::npos);
    CHECK(fs::exists("cli_bin_blow/norms.csv"));
  }
  CHECK(run_cli("nonsense --config cli_ok.json") != 0);
}
