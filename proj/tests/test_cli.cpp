#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef ISODIMER_CLI_PATH
#define ISODIMER_CLI_PATH "isodimer"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ISODIMER_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("same seed twice produces byte-identical sample files") {
  REQUIRE(run_cli("sample --lattice tri --extent 6 6 --hexagon 2 --samples 40 --seed 77 "
                  "--threads 2 --out /tmp/isodimer_cli_a") == 0);
  REQUIRE(run_cli("sample --lattice tri --extent 6 6 --hexagon 2 --samples 40 --seed 77 "
                  "--threads 1 --out /tmp/isodimer_cli_b") == 0);
  CHECK(slurp("/tmp/isodimer_cli_a/samples.jsonl") == slurp("/tmp/isodimer_cli_b/samples.jsonl"));

  REQUIRE(run_cli("sample --lattice tri --extent 6 6 --hexagon 2 --samples 40 --seed 78 "
                  "--out /tmp/isodimer_cli_c") == 0);
  CHECK(slurp("/tmp/isodimer_cli_a/samples.jsonl") != slurp("/tmp/isodimer_cli_c/samples.jsonl"));
}

TEST_CASE("probs emits the honeycomb edge probability") {
  REQUIRE(run_cli("probs --lattice tri --extent 8 8 --out /tmp/isodimer_cli_p") == 0);
  const std::string csv = slurp("/tmp/isodimer_cli_p/probs.csv");
  CHECK(csv.find("0.333333333333") != std::string::npos);
  CHECK(csv.find("# tool=isodimer") == 0);
  CHECK(csv.find("seed=") != std::string::npos);
}

TEST_CASE("exit codes: bad config 2, validation failure 4") {
  CHECK(run_cli("probs --lattice pentagonal") == 2);
  CHECK(run_cli("nonsense") == 2);
  CHECK(run_cli("--help") == 0);

  // A graph with a displaced primal vertex fails validation with exit 4.
  REQUIRE(run_cli("build --lattice tri --extent 3 3 --out /tmp/isodimer_cli_g") == 0);
  nlohmann::json j = nlohmann::json::parse(slurp("/tmp/isodimer_cli_g/graph.json"));
  j["primal_vertices"][5]["x"] = j["primal_vertices"][5]["x"].get<double>() + 0.1;
  {
    std::ofstream out("/tmp/isodimer_cli_g/broken.json", std::ios::trunc);
    out << j.dump();
  }
  CHECK(run_cli("validate --input /tmp/isodimer_cli_g/broken.json --out /tmp/isodimer_cli_g") ==
        4);
}

TEST_CASE("config file values are overridden by flags") {
  {
    std::ofstream cfg("/tmp/isodimer_cli.toml", std::ios::trunc);
    cfg << "lattice=\"square\"\nsamples=7\nseed=5\n";
  }
  REQUIRE(run_cli("sample --config /tmp/isodimer_cli.toml --extent 4 4 --out "
                  "/tmp/isodimer_cli_cfg1") == 0);
  const std::string a = slurp("/tmp/isodimer_cli_cfg1/samples.jsonl");
  CHECK(a.find("\"samples\":7") != std::string::npos);
  CHECK(a.find("\"lattice\":\"square\"") != std::string::npos);

  // Flag overrides the config value.
  REQUIRE(run_cli("sample --config /tmp/isodimer_cli.toml --extent 4 4 --samples 3 --out "
                  "/tmp/isodimer_cli_cfg2") == 0);
  const std::string b = slurp("/tmp/isodimer_cli_cfg2/samples.jsonl");
  CHECK(b.find("\"samples\":3") != std::string::npos);
}

TEST_CASE("graph json export and import round trip validates") {
  REQUIRE(run_cli("build --lattice lozenge-diag --extent 4 4 --seed 3 --out "
                  "/tmp/isodimer_cli_ld") == 0);
  CHECK(run_cli("validate --input /tmp/isodimer_cli_ld/graph.json --out "
                "/tmp/isodimer_cli_ld2") == 0);
}
