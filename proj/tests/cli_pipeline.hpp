#pragma once

// Runs the fixture pipeline through cli::run:
// kg-split, kge-train, kge-eval, kge-export, rc-train (fused), rc-eval, rc-predict.

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ddikg/cli.hpp"
#include "test_util.hpp"

namespace ddikg::testing {

struct PipelineResult {
  int failed_step = -1;  // index of the first step with a nonzero exit, or -1
  std::string failure;
  std::map<std::string, std::string> outputs;  // file name -> contents, plus stdout of report steps
};

inline int run_cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

inline PipelineResult run_pipeline(const std::filesystem::path& dir) {
  const std::filesystem::path fx = DDIKG_FIXTURES;
  const auto f = [&](const char* name) { return (fx / name).string(); };
  const auto w = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps = {
      {"split", {"kg-split", "--triples", f("biokg_triples.tsv"), "--types", f("biokg_types.tsv"), "--train", "0.8",
                 "--valid", "0.1", "--test", "0.1", "--seed", "3", "--out-dir", w("split")}},
      {"train", {"kge-train", "--model", "transe", "--triples", w("split/train.tsv"), "--types", f("biokg_types.tsv"),
                 "--dim", "8", "--lr", "0.01", "--epochs", "20", "--batch-size", "16", "--seed", "5", "--out",
                 w("kge.json"), "--log", w("kge_log.tsv")}},
      {"kge_eval.txt", {"kge-eval", "--params", w("kge.json"), "--test", w("split/test.tsv"), "--all",
                        f("biokg_triples.tsv"), "--filtered", "--kv", w("kge_eval.kv")}},
      {"export", {"kge-export", "--params", w("kge.json"), "--types", f("biokg_types.tsv"), "--out",
                  w("embeddings.tsv")}},
      {"rc", {"rc-train", "--mode", "fused", "--instances", f("instances_train.jsonl"), "--embeddings",
              w("embeddings.tsv"), "--names", f("drug_names.tsv"), "--wordvecs", f("wordvecs.txt"), "--epochs", "10",
              "--lr", "0.05", "--batch-size", "8", "--seed", "2", "--out", w("rc.json"), "--log", w("rc_log.tsv")}},
      {"rc_eval.txt", {"rc-eval", "--params", w("rc.json"), "--instances", f("instances_test.jsonl"), "--embeddings",
                       w("embeddings.tsv"), "--names", f("drug_names.tsv"), "--wordvecs", f("wordvecs.txt")}},
      {"predict", {"rc-predict", "--params", w("rc.json"), "--instances", f("instances_unlabeled.jsonl"),
                   "--embeddings", w("embeddings.tsv"), "--names", f("drug_names.tsv"), "--wordvecs",
                   f("wordvecs.txt"), "--out", w("predictions.tsv")}},
  };
  PipelineResult result;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& [name, args] = steps[i];
    std::string out, err;
    if (run_cli(args, &out, &err) != 0) {
      result.failed_step = static_cast<int>(i);
      result.failure = args.front() + ": " + err;
      return result;
    }
    if (name.find(".txt") != std::string::npos) result.outputs[name] = out;
  }
  for (const char* file : {"split/train.tsv", "split/valid.tsv", "split/test.tsv", "kge.json", "kge_log.tsv",
                           "kge_eval.kv", "embeddings.tsv", "rc.json", "rc_log.tsv", "predictions.tsv"}) {
    result.outputs[file] = read_file(dir / file);
  }
  return result;
}

}  // namespace ddikg::testing
