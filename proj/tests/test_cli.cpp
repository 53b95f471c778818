#include <doctest.h>

#include <algorithm>

#include "ddikg/cli.hpp"
#include "cli_pipeline.hpp"

using namespace ddikg::testing;

namespace {

std::string fixture(const char* name) { return (std::filesystem::path(DDIKG_FIXTURES) / name).string(); }

}  // namespace

TEST_CASE("kg-stats prints the node and edge table") {
  std::string out, err;
  REQUIRE(run_cli({"kg-stats", "--triples", fixture("tiny_triples.tsv"), "--types", fixture("tiny_types.tsv")}, &out,
                  &err) == 0);
  CHECK(out.find("Node Types") != std::string::npos);
  CHECK(out.find("drug-target") != std::string::npos);
  CHECK(out.find("Total") != std::string::npos);
  // Resolved configuration is echoed on stderr.
  CHECK(err.find("triples") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"kg-stats", "--types", fixture("tiny_types.tsv")}) == 1);
  CHECK(run_cli({"kg-stats", "--triples", "/nonexistent/t.tsv", "--types", fixture("tiny_types.tsv")}) == 2);
  CHECK(run_cli({"kge-train", "--model", "transx", "--triples", fixture("tiny_triples.tsv"), "--types",
                 fixture("tiny_types.tsv"), "--out", "/tmp/unused.json"}) == 1);
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({}) == 1);
}

TEST_CASE("help exits 0 for every subcommand") {
  for (const char* sub : {"kg-stats", "kg-split", "kge-train", "kge-eval", "kge-export", "rc-train", "rc-eval",
                          "rc-predict"}) {
    std::string out;
    INFO(sub);
    CHECK(run_cli({sub, "--help"}, &out) == 0);
    CHECK_FALSE(out.empty());
  }
  CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("config file supplies defaults and flags override it") {
  TempDir dir("cli_config");
  write_file(dir / "split.cfg", "# split settings\ntrain = 0.5\nvalid = 0.25\ntest = 0.25\nseed = 1\n");
  const std::vector<std::string> base = {"kg-split", "--config", (dir / "split.cfg").string(), "--triples",
                                         fixture("biokg_triples.tsv"), "--types", fixture("biokg_types.tsv")};
  auto a = base;
  a.insert(a.end(), {"--out-dir", (dir / "a").string()});
  auto b = base;
  b.insert(b.end(), {"--out-dir", (dir / "b").string(), "--train", "0.8", "--valid", "0.1", "--test", "0.1"});
  std::string err_a, err_b;
  REQUIRE(run_cli(a, nullptr, &err_a) == 0);
  REQUIRE(run_cli(b, nullptr, &err_b) == 0);
  CHECK(err_a.find("train=0.5") != std::string::npos);
  CHECK(err_b.find("train=0.8") != std::string::npos);
  CHECK(read_file(dir / "a/train.tsv").size() < read_file(dir / "b/train.tsv").size());

  write_file(dir / "bad.cfg", "no equals sign\n");
  CHECK(run_cli({"kg-stats", "--config", (dir / "bad.cfg").string()}) == 1);
  CHECK(run_cli({"kg-stats", "--config", (dir / "missing.cfg").string()}) == 2);
}

TEST_CASE("end-to-end pipeline is deterministic") {
  TempDir one("cli_one"), two("cli_two");
  const auto first = run_pipeline(one.path());
  INFO(first.failure);
  REQUIRE(first.failed_step == -1);
  const auto second = run_pipeline(two.path());
  REQUIRE(second.failed_step == -1);
  for (const auto& [name, content] : first.outputs) {
    INFO(name);
    CHECK_FALSE(content.empty());
    CHECK(content == second.outputs.at(name));
  }
  CHECK(first.outputs.at("rc_eval.txt").find("macro") != std::string::npos);
  // predictions.tsv: one line per unlabeled instance
  const auto& pred = first.outputs.at("predictions.tsv");
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 5);
}

TEST_CASE("rc-eval rejects a fused head without KG inputs") {
  TempDir dir("cli_rc");
  REQUIRE(run_cli({"rc-train", "--mode", "text", "--instances", fixture("instances_train.jsonl"), "--epochs", "2",
                   "--out", (dir / "rc.json").string(), "--log", (dir / "log.tsv").string()}) == 0);
  std::string out;
  REQUIRE(run_cli({"rc-eval", "--params", (dir / "rc.json").string(), "--instances", fixture("instances_test.jsonl")},
                  &out) == 0);
  CHECK(out.find("Advice") != std::string::npos);
  CHECK(run_cli({"rc-train", "--mode", "fused", "--instances", fixture("instances_train.jsonl"), "--out",
                 (dir / "f.json").string()}) == 1);
}

TEST_CASE("duplicate triples and lexicon collisions are reported") {
  TempDir dir("cli_warn");
  write_file(dir / "t.tsv", read_file(fixture("tiny_triples.tsv")) + "DB00001\tdrug-target\tP00001\n");
  std::string out, err;
  REQUIRE(run_cli({"kg-stats", "--triples", (dir / "t.tsv").string(), "--types", fixture("tiny_types.tsv")}, &out,
                  &err) == 0);
  CHECK(err.find("warning: 1 duplicate triple(s) collapsed") != std::string::npos);
  CHECK(out.find("duplicates collapsed: 1") != std::string::npos);

  write_file(dir / "names.tsv", read_file(fixture("drug_names.tsv")) + "Aspirin\tDB00009\n");
  REQUIRE(run_cli({"rc-train", "--mode", "text", "--instances", fixture("instances_train.jsonl"), "--embeddings",
                   fixture("none.tsv"), "--out", (dir / "rc.json").string()}) == 2);
  REQUIRE(run_cli({"rc-eval", "--params", (dir / "rc.json").string(), "--instances", fixture("instances_test.jsonl")},
                  &out, &err) == 2);
  write_file(dir / "emb.tsv", "DB00001 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5\n");
  REQUIRE(run_cli({"rc-train", "--mode", "text", "--instances", fixture("instances_train.jsonl"), "--epochs", "1",
                   "--embeddings", (dir / "emb.tsv").string(), "--names", (dir / "names.tsv").string(), "--out",
                   (dir / "rc.json").string(), "--log", (dir / "log.tsv").string()},
                  &out, &err) == 0);
  CHECK(err.find("warning: 1 surface form(s)") != std::string::npos);
}
