#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include <fmt/format.h>

#include "test_support.hpp"

using namespace testsupport;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with fixture paths, capturing stdout (stderr is discarded).
Result cli(const std::string& args, const fs::path& out_dir = {}) {
  std::string cmd = fmt::format("'{}' --dataset-root '{}' --assets '{}' --questions '{}' --gold '{}' "
                                "--mock-responses '{}' --mock",
                                DRIVEVQA_CLI, (kFixtures / "dataset").string(), kAssets.string(),
                                (kFixtures / "questions.json").string(), (kFixtures / "gold.json").string(),
                                (kFixtures / "mock_responses.json").string());
  if (!out_dir.empty()) cmd += fmt::format(" --out '{}'", out_dir.string());
  cmd += " " + args + " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("context --scene scene-anchor").code == 1);
  CHECK(cli("--phase 3 run").code == 1);
  CHECK(cli("annotate --question q01 --kinds sparkles").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("data errors exit 2") {
  CHECK(cli("context --scene no-such-scene --frame 0").code == 2);
  CHECK(cli("context --scene scene-anchor --frame 99").code == 2);
  CHECK(cli("context --scene scene-street --frame 0 --poses").code == 2);
}

TEST_CASE("context prints the anchor block and ego line") {
  const Result r = cli("context --scene scene-anchor --frame 5 --refs '<c1,CAM_FRONT_LEFT,738.3,541.7>'");
  REQUIRE(r.code == 0);
  CHECK(r.out == slurp(kGolden / "anchor_context.txt") +
                     "Ego-vehicle speed: 8 m/s, accelerating; Ego heading: north-east (turning right).\n");

  const Result no_ego = cli("context --scene scene-street --frame 0");
  CHECK(no_ego.code == 0);
  CHECK(no_ego.out.find("Ego") == std::string::npos);
}

TEST_CASE("ingest-check lists routes") {
  const Result r = cli("ingest-check");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("question q06: planning_scene") != std::string::npos);
  CHECK(r.out.find("question q09: prediction") != std::string::npos);
  CHECK(r.out.find("12 questions ok") != std::string::npos);
}

TEST_CASE("run, report and score") {
  TempDir tmp("cli");
  const Result run = cli("--samples 3 run", tmp.path());
  REQUIRE(run.code == 0);
  const std::string first = run.out.substr(0, run.out.find('\n'));
  CHECK(first.find("12 questions, 36 requests issued") != std::string::npos);
  const std::string dir = run.out.substr(first.size() + 1, run.out.find('\n', first.size() + 1) - first.size() - 1);
  REQUIRE(fs::exists(fs::path(dir) / "predictions.jsonl"));

  const Result rep = cli(fmt::format("report '{}' --csv", dir));
  CHECK(rep.code == 0);
  CHECK(rep.out == slurp(fs::path(dir) / "report.csv"));

  const Result sc = cli(fmt::format("--samples 3 score --predictions '{}'", (fs::path(dir) / "predictions.jsonl").string()));
  CHECK(sc.code == 0);
  CHECK(sc.out == slurp(fs::path(dir) / "report.txt"));

  CHECK(cli(fmt::format("report '{}'", tmp.path().string())).code == 2);
}

TEST_CASE("ask dry run prints a bundle") {
  TempDir tmp("cliask");
  const Result r = cli("ask --question q02 --dry-run", tmp.path());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"category\": \"perception_obj\"") != std::string::npos);
  CHECK(cli("ask --question q99 --dry-run", tmp.path()).code != 0);
}

}
