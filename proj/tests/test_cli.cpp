#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli.hpp"
#include "support.hpp"
#include "wordalise/evalharness.hpp"

namespace fs = std::filesystem;
namespace t = wordalise::testing;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args, bool with_data = true) {
  if (with_data) {
    args.push_back("--data-dir");
    args.push_back(t::data_dir().string());
  }
  std::ostringstream out, err;
  const int code = wordalise::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("wordalise-cli-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
  CHECK(cli({"--help"}, false).code == 0);
  CHECK(cli({}, false).code == 2);
  CHECK(cli({"frobnicate"}, false).code == 2);
  const auto r = cli({"wordalise", "--app", "scout"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--entity") != std::string::npos);
  CHECK(cli({"evaluate", "--app", "scout", "--reps", "0"}).code == 2);
  CHECK(cli({"evaluate", "--app", "scout", "--fault-rate", "1.5"}).code == 2);
  CHECK(cli({"wordalise", "--app", "scout", "--entity", "kane", "--mock", "psychic"}).code == 2);
}

TEST_CASE("unknown app, entity and data dir") {
  CHECK(cli({"wordalise", "--app", "nope", "--entity", "kane"}).code == 2);
  auto r = cli({"wordalise", "--app", "scout", "--entity", "nobody"});
  CHECK(r.code == 2);
  CHECK(r.err.find("UnknownEntity") != std::string::npos);
  CHECK(cli({"wordalise", "--app", "scout", "--entity", "kane", "--data-dir", "/nonexistent/dir"}, false).code == 2);
}

TEST_CASE("wordalise text and json") {
  const auto& a = t::app("scout");
  const auto syn = a.synthetic(a.entity("kane"));
  auto r = cli({"wordalise", "--app", "scout", "--entity", "kane"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "Here is a statistical description of Hal Kane. " + syn.joined + "\n");

  r = cli({"wordalise", "--app", "scout", "--entity", "kane", "--control", "--format", "json", "--show-prompt"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["control"] == true);
  CHECK(j["text"] == "Here is a statistical description of Hal Kane.");
  CHECK(j["prompt"].is_array());

  r = cli({"wordalise", "--app", "scout", "--entity", "kane", "--show-prompt"});
  CHECK(r.out.rfind("[system/system] ", 0) == 0);
  CHECK(r.out.find("\n---\n") != std::string::npos);
}

TEST_CASE("live provider without a key is a runtime failure") {
  ::unsetenv("WORDALISE_API_KEY_ENV");
  ::unsetenv("OPENAI_API_KEY");
  const auto r = cli({"wordalise", "--app", "scout", "--entity", "kane", "--provider", "live"});
  CHECK(r.code == 1);
  CHECK(r.err.find("AuthError") != std::string::npos);
}

TEST_CASE("inspect-prompt") {
  auto r = cli({"inspect-prompt", "--app", "wvs", "--entity", t::app("wvs").entities[0].entity_id, "--format", "json"});
  REQUIRE(r.code == 0);
  const auto b = wordalise::bundle_from_inspect_json(json::parse(r.out));
  CHECK(b.count(wordalise::Tag::data) == 1);
}

TEST_CASE("validate") {
  auto r = cli({"validate"});
  CHECK(r.code == 0);
  CHECK(r.out.find("scout: ok") != std::string::npos);
  r = cli({"validate", "--app", "wvs", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["app_id"] == "wvs");
  CHECK(cli({"validate", "--app", "nope"}).code == 2);

  // A config with a gap in its bands.
  const auto dir = temp_dir("validate");
  fs::copy(t::data_dir() / "personality", dir / "personality", fs::copy_options::recursive);
  auto cfg = json::parse(slurp(dir / "personality" / "config.json"));
  auto& bands = cfg["normative_model"]["bands"];
  bands[1]["lower"] = 0.5;
  std::ofstream(dir / "personality" / "config.json") << cfg.dump(2);
  r = cli({"validate", "--data-dir", dir.string()}, false);
  CHECK(r.code == 2);
  CHECK(r.out.find("finding") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("evaluate writes report and records") {
  const auto dir = temp_dir("evaluate");
  const auto report = dir / "report.json", records = dir / "records.csv";
  auto r = cli({"evaluate", "--app", "personality", "--reps", "2", "--fault-rate", "0.2", "--seed", "4", "--out",
                report.string(), "--csv", records.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean") != std::string::npos);
  CHECK(r.out.find("test: generated") != std::string::npos);
  const auto rep = wordalise::report_from_json(json::parse(slurp(report)));
  CHECK(*rep.mean_test == 1.0);
  CHECK(rep.counts.at("test").valid == long(t::app("personality").entities.size()) * 2);
  CHECK(slurp(records).rfind("entity_id,condition,attempt,status", 0) == 0);

  // Worker count does not change the report.
  r = cli({"evaluate", "--app", "personality", "--reps", "2", "--fault-rate", "0.2", "--seed", "4", "--workers", "1",
           "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out) == json::parse(slurp(report)));
  fs::remove_all(dir);
}
