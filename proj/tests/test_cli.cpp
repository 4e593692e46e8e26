#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "erlab/cli.hpp"
#include "erlab/csv.hpp"

using namespace erlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "erlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const fs::path kRoot = fs::temp_directory_path() / "erlab_cli_test";

}  // namespace

TEST_CASE("gradcheck passes") {
  const Outcome o = run({"gradcheck", "--seed", "7", "--output-dir", kRoot.string(), "--tag", "g"});
  CHECK(o.code == 0);
  CHECK(o.out.find("max") != std::string::npos);
  CHECK(fs::exists(kRoot / "gradcheck" / "g" / "resolved_config.json"));
}

TEST_CASE("missing config file exits 1") {
  const Outcome o = run({"train", "--config", "missing.json", "--output-dir", kRoot.string()});
  CHECK(o.code == 1);
  CHECK(o.err.find("missing.json") != std::string::npos);
}

TEST_CASE("usage errors exit 1 and help exits 0") {
  CHECK(run({"train", "--no-such-flag"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"sweep", "--surrogates", "entropy", "--output-dir", kRoot.string()}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("two-beta sweep writes two trajectories and a two-row summary") {
  fs::remove_all(kRoot / "sweep" / "s");
  const Outcome o = run({"sweep", "--betas", "0,0.1", "--surrogates", "logdet", "--modes", "fixed", "--output-dir",
                         kRoot.string(), "--tag", "s", "--jobs", "2"});
  REQUIRE(o.code == 0);
  const fs::path dir = kRoot / "sweep" / "s";
  int trajectories = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().filename().string().rfind("traj_", 0) == 0) ++trajectories;
  CHECK(trajectories == 2);
  const CsvTable summary = read_csv_file((dir / "summary.csv").string());
  CHECK(summary.rows.size() == 2);
  for (const char* metric : {"test_loss", "gen_gap", "G", "beta_t", "reward"})
    CHECK(fs::exists(dir / (std::string(metric) + ".svg")));
}

TEST_CASE("seed override reaches the resolved config") {
  const Outcome o = run({"scaling", "--seed", "123", "--output-dir", kRoot.string(), "--tag", "sc"});
  REQUIRE(o.code == 0);
  const fs::path dir = kRoot / "scaling" / "sc";
  CHECK(fs::exists(dir / "scaling.csv"));
  std::ifstream in(dir / "resolved_config.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("123") != std::string::npos);
}
