// End-to-end tests of the command-line binary: exit codes, artifact
// contracts, determinism across worker counts, and the manifest.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "alloylab/core.hpp"
#include "alloylab/io.hpp"

using namespace alloylab;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  fs::path dir;
};

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("alloylab_cli_" + tag);
  fs::remove_all(dir);
  return dir;
}

RunResult run_cli(const std::string& tag, const std::string& args, const json& config,
                  const std::string& env = "") {
  const fs::path dir = fresh_dir(tag);
  const fs::path cfg = fs::temp_directory_path() / ("alloylab_cfg_" + tag + ".json");
  write_text_file(cfg, config.dump(2));
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(ALLOYLAB_CLI_PATH) + " " +
                          args + " --config " + cfg.string() + " --out " + dir.string() +
                          " > " + (dir.string() + ".log") + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = raw < 0 ? raw : WEXITSTATUS(raw);
  r.dir = dir;
  return r;
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p)); }

}  // namespace

TEST_CASE("verify command passes and honors the manifest contract") {
  const RunResult r = run_cli("verify", "verify", json{{"seed", 5}});
  REQUIRE(r.exit_code == 0);
  const json manifest = read_json(r.dir / "manifest.json");
  CHECK(manifest.at("command") == "verify");
  CHECK(manifest.at("all_pass") == true);
  CHECK(manifest.at("seed") == 5);
  // Every artifact listed exists; every file present is listed.
  std::set<std::string> listed;
  for (const auto& a : manifest.at("artifacts")) {
    listed.insert(a.get<std::string>());
    CHECK(fs::exists(r.dir / a.get<std::string>()));
  }
  for (const auto& entry : fs::directory_iterator(r.dir))
    CHECK(listed.count(entry.path().filename().string()) == 1u);
  CHECK(listed.count("manifest.json") == 1u);
  CHECK(listed.count("report.json") == 1u);
}

TEST_CASE("invalid configuration exits with the config error code") {
  const RunResult r = run_cli("badL", "verify", json{{"L", 8}});
  CHECK(r.exit_code == 2);
  const RunResult bad_preset =
      run_cli("badpreset", "spectral-min", json{{"u", "wavelet(2)"}});
  CHECK(bad_preset.exit_code == 2);
  const RunResult bad_json = [&] {
    const fs::path dir = fresh_dir("badjson");
    const fs::path cfg = fs::temp_directory_path() / "alloylab_cfg_badjson.json";
    write_text_file(cfg, "{not json");
    const std::string cmd = std::string(ALLOYLAB_CLI_PATH) + " verify --config " + cfg.string() +
                            " --out " + dir.string() + " > /dev/null 2>&1";
    RunResult rr;
    rr.exit_code = WEXITSTATUS(std::system(cmd.c_str()));
    rr.dir = dir;
    return rr;
  }();
  CHECK(bad_json.exit_code == 2);
}

TEST_CASE("combinatorics totals are the frozen Fibonacci numbers") {
  const RunResult r = run_cli("comb", "combinatorics", json{{"L", 5}, {"mc_samples", 2000}});
  REQUIRE(r.exit_code == 0);
  const json rep = read_json(r.dir / "report.json");
  CHECK(rep.at("total") == 13);
  CHECK(rep.at("fibonacci_index") == 7);
  const CsvTable counts = read_csv_file(r.dir / "nonadjacent_counts.csv");
  long long sum = 0;
  const int c = counts.column("count");
  for (const auto& row : counts.rows) sum += parse_int(row[static_cast<std::size_t>(c)], "cli");
  CHECK(sum == 13);
}

TEST_CASE("worker count does not change any artifact byte") {
  json cfg{{"d", 1}, {"n", 8}, {"L", {3}}, {"R", 6}, {"seed", 9},
           {"e_grid", {{"min", -1.0}, {"max", 20.0}, {"points", 9}}}};
  const RunResult one = run_cli("ids_w1", "ids --workers 1", cfg);
  const RunResult two = run_cli("ids_w2", "ids --workers 3", cfg);
  REQUIRE(one.exit_code == 0);
  REQUIRE(two.exit_code == 0);
  for (const auto& entry : fs::directory_iterator(one.dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;  // carries the worker count
    CHECK(read_text_file(entry.path()) == read_text_file(two.dir / name));
  }
  // The environment override wins over the flag and still matches.
  const RunResult env = run_cli("ids_env", "ids --workers 1", cfg, "ALLOYLAB_WORKERS=2");
  REQUIRE(env.exit_code == 0);
  CHECK(read_json(env.dir / "manifest.json").at("workers") == 2);
  for (const auto& entry : fs::directory_iterator(one.dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    CHECK(read_text_file(entry.path()) == read_text_file(env.dir / name));
  }
}

TEST_CASE("seed priority: flag beats config, config beats default") {
  const RunResult flag = run_cli("seed_flag", "combinatorics --seed 11",
                                 json{{"seed", 4}, {"mc_samples", 500}});
  REQUIRE(flag.exit_code == 0);
  CHECK(read_json(flag.dir / "manifest.json").at("seed") == 11);
  const RunResult cfg = run_cli("seed_cfg", "combinatorics",
                                json{{"seed", 4}, {"mc_samples", 500}});
  REQUIRE(cfg.exit_code == 0);
  CHECK(read_json(cfg.dir / "manifest.json").at("seed") == 4);
  const RunResult def = run_cli("seed_def", "combinatorics", json{{"mc_samples", 500}});
  REQUIRE(def.exit_code == 0);
  CHECK(read_json(def.dir / "manifest.json").at("seed") == 1);
}

TEST_CASE("counterexample scan reports the flat minimum over all configurations") {
  const RunResult r = run_cli("cex", "counterexample", json{{"n", 16}, {"L", 3}});
  REQUIRE(r.exit_code == 0);
  const json rep = read_json(r.dir / "report.json");
  CHECK(rep.at("configurations") == 8);
  CHECK(rep.at("van_hove") == true);
  const CsvTable scan = read_csv_file(r.dir / "exhaustive_scan.csv");
  CHECK(scan.rows.size() == 8u);
  const int lam = scan.column("lambda_min");
  for (const auto& row : scan.rows)
    CHECK(std::abs(parse_double(row[static_cast<std::size_t>(lam)], "cli")) <= 5e-3);
}
