#include "ddikg/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ddikg/error.hpp"
#include "ddikg/kg.hpp"
#include "ddikg/kge.hpp"
#include "ddikg/kge_eval.hpp"
#include "ddikg/linker.hpp"
#include "ddikg/rc_head.hpp"
#include "ddikg/rc_io.hpp"
#include "ddikg/text.hpp"

namespace ddikg::cli {

namespace {

// `key = value` lines become `--key=value` arguments placed ahead of the
// command-line flags, so flags given explicitly win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (text::read_line(in, line)) {
      ++lineno;
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) throw ParseError(path, lineno, "expected `key = value`");
      const auto key = text::trim(t.substr(0, eq));
      const auto value = text::trim(t.substr(eq + 1));
      if (key.empty()) throw ParseError(path, lineno, "empty key");
      from_file.push_back("--" + std::string(key) + "=" + std::string(value));
    }
  }
  if (from_file.empty() || out.empty()) return out;
  // Insert right after the subcommand name.
  std::vector<std::string> merged{out.front()};
  merged.insert(merged.end(), from_file.begin(), from_file.end());
  merged.insert(merged.end(), out.begin() + 1, out.end());
  return merged;
}

struct LookupFiles {
  std::string embeddings;
  std::string names;
  std::string wordvecs;

  void add_options(CLI::App* app) {
    app->add_option("--embeddings", embeddings, "Drug KG embeddings (embeddings.tsv)");
    app->add_option("--names", names, "Drug lexicon (surface<TAB>entity_id)");
    app->add_option("--wordvecs", wordvecs, "Word vectors for unlinkable drugs (word2vec text format)");
  }

  std::unique_ptr<KgeLookup> build(std::ostream& err) const {
    if (embeddings.empty() && wordvecs.empty()) return nullptr;
    std::unordered_map<std::string, Vector> table;
    if (!embeddings.empty()) {
      for (auto& e : import_embeddings(std::filesystem::path(embeddings))) table.emplace(e.entity, std::move(e.vector));
    }
    std::optional<Lexicon> lexicon;
    if (!names.empty()) {
      lexicon = Lexicon::build(std::filesystem::path(names));
      if (lexicon->collisions() > 0) {
        err << "warning: " << lexicon->collisions() << " surface form(s) in '" << names
            << "' map to several ids; the first was kept\n";
      }
    }
    std::optional<FallbackTable> fallback;
    if (!wordvecs.empty()) fallback = FallbackTable::load(std::filesystem::path(wordvecs));
    return std::make_unique<KgeLookup>(std::move(table), std::move(lexicon), std::move(fallback));
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

KnowledgeGraph load_graph_logged(const std::string& triples, const std::string& types, std::ostream& err) {
  auto graph = load_graph(std::filesystem::path(triples), std::filesystem::path(types));
  if (graph.duplicates_collapsed() > 0) {
    err << "warning: " << graph.duplicates_collapsed() << " duplicate triple(s) collapsed\n";
  }
  return graph;
}

void echo_config(const CLI::App* sub, std::ostream& err) {
  err << "# " << sub->get_name() << " resolved configuration\n" << sub->config_to_str(true, false);
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph embeddings and KG-fused drug-drug interaction classification", "ddikg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // kg-stats
  std::string triples, types;
  auto* kg_stats = app.add_subcommand("kg-stats", "Print node/edge statistics of a knowledge graph");
  kg_stats->add_option("--triples", triples, "head<TAB>relation<TAB>tail file")->required();
  kg_stats->add_option("--types", types, "entity<TAB>kind file")->required();

  // kg-split
  double f_train = 0.8, f_valid = 0.1, f_test = 0.1;
  std::uint64_t split_seed = 0;
  std::string out_dir;
  auto* kg_split = app.add_subcommand("kg-split", "Split triples into train/valid/test files");
  kg_split->add_option("--triples", triples)->required();
  kg_split->add_option("--types", types)->required();
  kg_split->add_option("--train", f_train, "Train fraction")->capture_default_str();
  kg_split->add_option("--valid", f_valid, "Validation fraction")->capture_default_str();
  kg_split->add_option("--test", f_test, "Test fraction")->capture_default_str();
  kg_split->add_option("--seed", split_seed)->capture_default_str();
  kg_split->add_option("--out-dir", out_dir, "Directory receiving train.tsv, valid.tsv, test.tsv")->required();

  // kge-train
  KgeConfig kcfg;
  std::string model_name = "transe", norm_name = "l2", params_out, log_path;
  auto* kge_train = app.add_subcommand("kge-train", "Train a knowledge-graph embedding model");
  kge_train->add_option("--model", model_name, "transe|transr|rescal|distmult")
      ->check(CLI::IsMember({"transe", "transr", "rescal", "distmult"}, CLI::ignore_case))
      ->capture_default_str();
  kge_train->add_option("--triples", triples)->required();
  kge_train->add_option("--types", types)->required();
  kge_train->add_option("--dim", kcfg.dim, "Embedding dimension")->capture_default_str();
  kge_train->add_option("--rel-dim", kcfg.rel_dim, "TransR relation-space dimension (0: same as --dim)")
      ->capture_default_str();
  kge_train->add_option("--lr", kcfg.learning_rate, "SGD learning rate")->capture_default_str();
  kge_train->add_option("--epochs", kcfg.epochs)->capture_default_str();
  kge_train->add_option("--margin", kcfg.margin, "Margin of the ranking loss")->capture_default_str();
  kge_train->add_option("--negatives", kcfg.negatives, "Negatives per positive")->capture_default_str();
  kge_train->add_option("--norm", norm_name, "l1|l2 distance for translational models")
      ->check(CLI::IsMember({"l1", "l2"}, CLI::ignore_case))
      ->capture_default_str();
  kge_train->add_option("--batch-size", kcfg.batch_size)->capture_default_str();
  kge_train->add_option("--seed", kcfg.seed)->capture_default_str();
  kge_train->add_option("--out", params_out, "Parameter file to write")->required();
  kge_train->add_option("--log", log_path, "Training log (epoch<TAB>mean_loss); default stderr");

  // kge-eval
  std::string params_in, test_path, all_path, kv_path;
  bool filtered = false;
  auto* kge_eval = app.add_subcommand("kge-eval", "Link-prediction evaluation (MRR, Hits@k)");
  kge_eval->add_option("--params", params_in)->required();
  kge_eval->add_option("--test", test_path, "Test triples")->required();
  kge_eval->add_option("--all", all_path, "All known triples (for filtering)")->required();
  kge_eval->add_flag("--filtered", filtered, "Filter candidates that form known triples");
  kge_eval->add_option("--kv", kv_path, "Also write key=value report to this file");

  // kge-export
  std::string export_out;
  auto* kge_export = app.add_subcommand("kge-export", "Export drug embeddings to embeddings.tsv");
  kge_export->add_option("--params", params_in)->required();
  kge_export->add_option("--types", types)->required();
  kge_export->add_option("--out", export_out)->required();

  // rc-train / rc-eval / rc-predict
  RcTrainConfig rcfg;
  std::string mode_name = "text", instances, rc_out, rc_log;
  std::size_t max_seq_len = kDefaultMaxSeqLen;
  LookupFiles lookup_files;
  auto* rc_train = app.add_subcommand("rc-train", "Train the relation-classification head");
  rc_train->add_option("--mode", mode_name, "text|fused")
      ->check(CLI::IsMember({"text", "fused"}, CLI::ignore_case))
      ->capture_default_str();
  rc_train->add_option("--instances", instances, "instances.jsonl")->required();
  lookup_files.add_options(rc_train);
  rc_train->add_option("--epochs", rcfg.epochs)->capture_default_str();
  rc_train->add_option("--lr", rcfg.learning_rate)->capture_default_str();
  rc_train->add_option("--batch-size", rcfg.batch_size)->capture_default_str();
  rc_train->add_option("--fused-dim", rcfg.fused_dim, "Width of the KG fusion layer (0: KG dimension)")
      ->capture_default_str();
  rc_train->add_option("--seed", rcfg.seed)->capture_default_str();
  rc_train->add_option("--max-seq-len", max_seq_len)->capture_default_str();
  rc_train->add_option("--out", rc_out, "Parameter file to write")->required();
  rc_train->add_option("--log", rc_log, "Training log (epoch<TAB>mean_loss); default stderr");

  std::string eval_mode;
  auto* rc_eval = app.add_subcommand("rc-eval", "Per-class and macro F1 of a trained head");
  rc_eval->add_option("--params", params_in)->required();
  rc_eval->add_option("--instances", instances)->required();
  rc_eval->add_option("--mode", eval_mode, "text|fused (default: mode the head was trained in)")
      ->check(CLI::IsMember({"text", "fused"}, CLI::ignore_case));
  lookup_files.add_options(rc_eval);
  rc_eval->add_option("--max-seq-len", max_seq_len)->capture_default_str();
  rc_eval->add_option("--out", rc_out, "Write the report here instead of stdout");

  auto* rc_predict = app.add_subcommand("rc-predict", "Write predictions.tsv");
  rc_predict->add_option("--params", params_in)->required();
  rc_predict->add_option("--instances", instances)->required();
  rc_predict->add_option("--mode", eval_mode, "text|fused (default: mode the head was trained in)")
      ->check(CLI::IsMember({"text", "fused"}, CLI::ignore_case));
  lookup_files.add_options(rc_predict);
  rc_predict->add_option("--max-seq-len", max_seq_len)->capture_default_str();
  rc_predict->add_option("--out", rc_out, "Write predictions here instead of stdout");

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", "key = value file; command-line flags take precedence");
  }

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    echo_config(sub, err);

    if (sub == kg_stats) {
      const auto graph = load_graph_logged(triples, types, err);
      out << format_stats(stats(graph));
    } else if (sub == kg_split) {
      const auto graph = load_graph_logged(triples, types, err);
      const auto parts = split(graph, {f_train, f_valid, f_test}, split_seed);
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      for (const auto& [name, part] : {std::pair{"train.tsv", &parts.train}, std::pair{"valid.tsv", &parts.valid},
                                       std::pair{"test.tsv", &parts.test}}) {
        auto f = open_output((dir / name).string());
        write_triples(*part, f);
      }
      err << "split: train=" << parts.train.size() << " valid=" << parts.valid.size()
          << " test=" << parts.test.size() << '\n';
    } else if (sub == kge_train) {
      kcfg.model = parse_kge_model(model_name);
      kcfg.norm = parse_norm(norm_name);
      const auto graph = load_graph_logged(triples, types, err);
      std::ofstream log_file;
      KgeTrainHooks hooks;
      hooks.log = &err;
      if (!log_path.empty()) {
        log_file = open_output(log_path);
        hooks.log = &log_file;
      }
      KgeModelFile model{kcfg, train(graph, kcfg, hooks), graph.shared_vocab()};
      save_model(model, std::filesystem::path(params_out));
    } else if (sub == kge_eval) {
      const auto model = load_model(std::filesystem::path(params_in));
      const auto all = load_triples(std::filesystem::path(all_path), model.vocab);
      const auto test = load_triples(std::filesystem::path(test_path), model.vocab);
      const auto report = rank_triples(model.params, test, all, filtered ? RankMode::Filtered : RankMode::Raw);
      out << format_report(report);
      if (!kv_path.empty()) {
        auto f = open_output(kv_path);
        f << format_report_kv(report);
      }
    } else if (sub == kge_export) {
      const auto model = load_model(std::filesystem::path(params_in));
      std::ifstream types_in(types);
      if (!types_in) throw IoError("cannot open '" + types + "'");
      const auto vocab = load_vocabulary(types_in, types);
      std::vector<DrugEmbedding> drugs;
      for (EntityIndex e : vocab->entities_of_kind(EntityKind::Drug)) {
        const auto& id = vocab->entity_name(e);
        const EntityIndex idx = model.vocab->entity(id);
        if (model.vocab->entity_kind(idx) != EntityKind::Drug) {
          throw ValidationError("'" + id + "' is not a drug in the trained model");
        }
        const auto row = model.params.entities.row(idx);
        drugs.push_back({id, Vector(row.begin(), row.end())});
      }
      const auto n = export_embeddings(drugs, std::filesystem::path(export_out));
      err << "exported " << n << " drug embeddings\n";
    } else if (sub == rc_train) {
      rcfg.mode = parse_mode(mode_name);
      const auto data = read_instances(std::filesystem::path(instances), max_seq_len);
      const auto lookup = lookup_files.build(err);
      std::ofstream log_file;
      std::ostream* log = &err;
      if (!rc_log.empty()) {
        log_file = open_output(rc_log);
        log = &log_file;
      }
      RcModelFile model{rcfg.mode, train_rc(data.instances, rcfg, lookup.get(), log)};
      save_rc_model(model, std::filesystem::path(rc_out));
    } else if (sub == rc_eval || sub == rc_predict) {
      const auto model = load_rc_model(std::filesystem::path(params_in));
      const RcMode mode = eval_mode.empty() ? model.mode : parse_mode(eval_mode);
      const auto data = read_instances(std::filesystem::path(instances), max_seq_len);
      const auto lookup = lookup_files.build(err);
      std::ofstream file;
      std::ostream* sink = &out;
      if (!rc_out.empty()) {
        file = open_output(rc_out);
        sink = &file;
      }
      if (sub == rc_eval) {
        *sink << format_metrics(evaluate(data.instances, model.params, mode, lookup.get()));
      } else {
        write_predictions(data.instances, model.params, mode, lookup.get(), *sink);
      }
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace ddikg::cli
