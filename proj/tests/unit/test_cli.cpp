#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "synthetic.hpp"
#include "vkg/documents.hpp"
#include "vkg/store.hpp"

using namespace vkg;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured; stderr is discarded.
CliResult vkg_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + VKG_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

const fs::path kSampleConfig = fs::path(VKG_SOURCE_DIR) / "data/sample/job.json";

}  // namespace

TEST_CASE("build-kg on a data directory without trajectories yields an empty graph") {
  testing::TempDir tmp;
  auto r = vkg_cli("build-kg --data " + quoted(tmp.path));
  CHECK(r.code == 0);
  CHECK(r.out.rfind("0 nodes", 0) == 0);
  CHECK(fs::exists(tmp.path / store_files::kGraph));
}

TEST_CASE("ingest, build-kg and impute chain through the data directory") {
  testing::TempDir tmp;
  auto ing = vkg_cli("--format structured ingest --config " + quoted(kSampleConfig) + " --data " +
                     quoted(tmp.path));
  REQUIRE(ing.code == 0);
  const auto ij = Json::parse(ing.out);
  CHECK(ij.at("command") == "ingest");
  CHECK(ij.at("job").at("phase") == "done");
  CHECK(ij.at("job").at("counters").at("trajectories").get<int>() > 0);
  CHECK(fs::exists(tmp.path / store_files::kTrajectories));

  auto build = vkg_cli("--format structured build-kg --data " + quoted(tmp.path));
  REQUIRE(build.code == 0);
  const auto bj = Json::parse(build.out);
  CHECK(bj.at("nodes").get<int>() > 0);
  CHECK(bj.at("schema_version") == kSchemaVersion);

  auto imp = vkg_cli("--format structured impute --data " + quoted(tmp.path));
  REQUIRE(imp.code == 0);
  const auto mj = Json::parse(imp.out);
  CHECK(mj.at("gaps").get<int>() > 0);
  CHECK(mj.at("imputed_segments") == mj.at("gaps"));

  const auto snap = load_snapshot(tmp.path);
  CHECK(snap.imputed.size() == mj.at("gaps").get<std::size_t>());
  CHECK(integrity_problems(snap).empty());

  auto top = vkg_cli("kg top --data " + quoted(tmp.path) + " --attr vessel_type=Cargo -k 2");
  CHECK(top.code == 0);
  CHECK_FALSE(top.out.empty());
}

TEST_CASE("eval on straight tracks finds linear interpolation near exact") {
  testing::TempDir tmp;
  std::vector<Trajectory> trajectories;
  for (std::uint32_t i = 0; i < 3; ++i) {
    const auto mmsi = testing::kMmsiA + i;
    trajectories.push_back({Mmsi{mmsi}, testing::straight_track(mmsi, 14, 60, 12, 45.0 + 30 * i)});
  }
  save_trajectories(tmp.path, trajectories);
  REQUIRE(vkg_cli("build-kg --data " + quoted(tmp.path)).code == 0);

  auto ev = vkg_cli("--format structured eval --data " + quoted(tmp.path));
  REQUIRE(ev.code == 0);
  const auto j = Json::parse(ev.out);
  bool found = false;
  for (const auto& row : j.at("per_method"))
    if (row.at("label") == "linear") {
      found = true;
      CHECK(row.at("mean_error_m").get<double>() < 1.0);
    }
  CHECK(found);

  auto text = vkg_cli("eval --data " + quoted(tmp.path));
  CHECK(text.code == 0);
  CHECK(text.out.find("per method") != std::string::npos);
}

TEST_CASE("exit codes distinguish failure classes") {
  testing::TempDir tmp;
  CHECK(vkg_cli("").code == 2);
  CHECK(vkg_cli("frobnicate").code == 2);
  CHECK(vkg_cli("kg top --data " + quoted(tmp.path)).code == 2);  // --attr is required

  const auto bad = tmp.path / "bad.json";
  write_file_atomic(bad, R"({"source": {"url_template": "x-{date}.csv"}})");
  CHECK(vkg_cli("ingest --config " + quoted(bad)).code == 3);
  CHECK(vkg_cli("ingest").code == 3);

  CHECK(vkg_cli("build-kg --data " + quoted(tmp.path / "missing")).code == 6);
  CHECK(vkg_cli("impute --data " + quoted(tmp.path) + " --kg " + quoted(tmp.path / "none.json")).code == 6);

  write_file_atomic(tmp.path / store_files::kGraph, "{\"nodes\": 3}");
  CHECK(vkg_cli("kg node --data " + quoted(tmp.path) + " --id behavior/transit").code == 4);

  REQUIRE(vkg_cli("build-kg --data " + quoted(tmp.path)).code == 0);
  CHECK(vkg_cli("kg node --data " + quoted(tmp.path) + " --id \"behavior/transit: steady course\"").code == 6);

  auto structured = vkg_cli("--format structured build-kg --data " + quoted(tmp.path / "missing"));
  CHECK(structured.code == 6);
  const auto j = Json::parse(structured.out);
  CHECK(j.at("error").at("exit_code") == 6);
  CHECK(j.at("error").at("kind") == "not_found");
}

TEST_CASE("a missing rule file is a configuration error") {
  testing::TempDir tmp;
  CHECK(vkg_cli("build-kg --data " + quoted(tmp.path) + " --rules " + quoted(tmp.path / "none.conf")).code == 3);
  CHECK(vkg_cli("build-kg --data " + quoted(tmp.path) + " --ports " + quoted(tmp.path / "none.csv")).code == 3);
}
