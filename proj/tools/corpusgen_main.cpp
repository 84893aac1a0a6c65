// Command-line surface over the corpus toolkit. Subcommands mirror the
// pipeline stages: seed-gen builds and gates the seed corpus, review
// judges it, train fits the generator, generate decodes a corpus,
// evaluate scores one, pipeline runs every stage, diff compares two
// corpora. A key=value config file supplies defaults; flags override.
// Exit codes: 0 success, 2 non-convergence or diverged training,
// 3 validation/parse error, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corpusgen/errors.hpp"
#include "corpusgen/pipeline.hpp"
#include "corpusgen/rng.hpp"

namespace {

using namespace corpusgen;

// Flag values are collected as strings and funneled through the same
// key=value parser the config file uses, so both paths validate and
// behave identically.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

const char *key_help(const std::string &key) {
  if (key == "lexicon") return "lexicon file (.lex)";
  if (key == "templates") return "comma-separated template files (.tpl)";
  if (key == "rules") return "augmentation rules file (.rules)";
  if (key == "cycle_policy") return "full_product or round_robin";
  if (key == "cycle_count") return "sentences per template for round_robin";
  if (key == "scale_limit") return "seed corpus size cap";
  if (key == "min_seed_distinct_2") return "seed gate floor for distinct-2";
  if (key == "min_seed_coverage") return "seed gate floor for lexicon coverage";
  if (key == "seed_gate_retries") return "seed rebuilds before giving up";
  if (key == "augment_attempts") return "augmentation passes per sentence";
  if (key == "embed_dim") return "embedding width";
  if (key == "hidden_dim") return "encoder hidden width";
  if (key == "dec_hidden_dim") return "decoder hidden width";
  if (key == "logits_from") return "context or state_context";
  if (key == "learning_rate") return "SGD step size";
  if (key == "epochs") return "training epochs";
  if (key == "batch_size") return "pairs per update";
  if (key == "clip_norm") return "global gradient norm cap";
  if (key == "strategy") return "greedy, sample or beam";
  if (key == "temperature") return "sampling temperature";
  if (key == "beam_width") return "beam size";
  if (key == "max_len") return "generation length cap";
  if (key == "fresh_mr_count") return "unseen meanings to generate";
  if (key == "min_novelty") return "convergence floor for novelty";
  if (key == "min_validity") return "convergence floor for validity";
  if (key == "min_distinct_2") return "convergence floor for distinct-2";
  if (key == "max_outer_iterations") return "retraining rounds after the first";
  if (key == "temperature_delta") return "temperature raise per retry";
  if (key == "epochs_delta") return "extra epochs per retry";
  if (key == "rng_seed") return "root random seed";
  if (key == "out_dir") return "output directory";
  return "";
}

void add_config_flags(CLI::App *cmd, const std::shared_ptr<ConfigArgs> &args,
                      const std::vector<std::string> &keys) {
  cmd->add_option("--config", args->config_path,
                  "key=value defaults file; flags override");
  for (const std::string &key : keys) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [args, key](const std::string &value) {
          args->overrides.emplace_back(key, value);
        },
        key_help(key));
  }
}

PipelineConfig resolve_config(const ConfigArgs &args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = load_config_file(args.config_path);
  for (const auto &[key, value] : args.overrides)
    apply_config_entry(cfg, key, value);
  return cfg;
}

void require(bool ok, const std::string &msg) {
  if (!ok) throw ValidationError(msg);
}

void cmd_seed_gen(const ConfigArgs &args) {
  PipelineConfig cfg = resolve_config(args);
  validate_config(cfg);
  require(!cfg.out_dir.empty(), "seed-gen needs out_dir");
  LoadedResources res = load_resources(cfg);
  SplitRng root(cfg.rng_seed);
  std::vector<std::string> log;
  SeedCorpus seed =
      build_gated_seed(cfg, res, root.split("seed-corpus").seed(), &log);
  for (const std::string &line : log) std::cout << line << "\n";
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::string corpus_path = (fs::path(cfg.out_dir) / "seed.corpus").string();
  std::string report_path = (fs::path(cfg.out_dir) / "seed.report").string();
  save_corpus_file(seed, corpus_path);
  TokenCorpus tokens = token_corpus(seed);
  MetricsReport report = corpus_report(tokens, tokens, res.templates, res.lex);
  save_report_file(report, report_path);
  std::cout << "seed corpus: " << seed.items.size() << " sentences -> "
            << corpus_path << "\n"
            << serialize_report(report);
}

void cmd_review(const ConfigArgs &args, const std::string &corpus_path,
                const std::string &ledger_path, const std::string &script_path,
                bool accept_all, const std::string &out_path) {
  PipelineConfig cfg = resolve_config(args);
  require(!cfg.lexicon_path.empty(), "review needs a lexicon for glosses");
  Lexicon lex = load_lexicon_file(cfg.lexicon_path);
  SeedCorpus corpus = load_corpus_file(corpus_path);
  ReviewLedger existing = load_ledger_file(ledger_path);
  std::size_t before = existing.entries.size();
  ReviewLedger ledger;
  if (accept_all) {
    AcceptAllSource source;
    ledger = review_session(corpus, lex, source, std::move(existing),
                            ledger_path);
  } else if (!script_path.empty()) {
    ScriptedSource source = load_script_file(script_path);
    ledger = review_session(corpus, lex, source, std::move(existing),
                            ledger_path);
  } else {
    InteractiveSource source(std::cin, std::cout);
    ledger = review_session(corpus, lex, source, std::move(existing),
                            ledger_path);
  }
  SeedCorpus reviewed = apply_review(corpus, ledger);
  std::cout << "decisions this session: " << ledger.entries.size() - before
            << " (ledger total " << ledger.entries.size() << ")\n"
            << "accepted " << reviewed.count(ReviewStatus::accepted)
            << ", rejected " << reviewed.count(ReviewStatus::rejected)
            << ", unreviewed " << reviewed.count(ReviewStatus::unreviewed)
            << "\n";
  if (!out_path.empty()) {
    save_corpus_file(reviewed, out_path);
    std::cout << "reviewed corpus -> " << out_path << "\n";
  }
}

void cmd_train(const ConfigArgs &args, const std::string &corpus_path,
               const std::string &model_path, const std::string &loss_path) {
  PipelineConfig cfg = resolve_config(args);
  SeedCorpus corpus = load_corpus_file(corpus_path);
  std::vector<TrainingPair> pairs = export_training_pairs(corpus);
  std::vector<std::vector<std::string>> inputs, targets;
  for (const TrainingPair &p : pairs) {
    inputs.push_back(p.first);
    targets.push_back(p.second);
  }
  SplitRng root(cfg.rng_seed);
  NlgModel model =
      init_model(Vocab::build(inputs), Vocab::build(targets), cfg.model,
                 cfg.logits_from, root.split("model-init").seed());
  TrainHyper hyper;
  hyper.learning_rate = cfg.learning_rate;
  hyper.epochs = cfg.epochs;
  hyper.batch_size = cfg.batch_size;
  hyper.clip_norm = cfg.clip_norm;
  hyper.rng_seed = root.split("train", 0).seed();
  TrainResult result = train(model, pairs, hyper);
  save_model_file(result.model, model_path);
  if (!loss_path.empty()) save_loss_trace(result.loss_trace, loss_path);
  std::vector<EncodedPair> encoded = encode_pairs(result.model, pairs);
  std::printf("trained on %zu pairs for %d epochs\n", pairs.size(),
              cfg.epochs);
  if (!result.loss_trace.empty())
    std::printf("final loss %.6f\n", result.loss_trace.back());
  std::printf("teacher-forced token accuracy %.4f\n",
              token_accuracy(result.model, encoded));
  std::printf("model -> %s\n", model_path.c_str());
}

void cmd_generate(const ConfigArgs &args, const std::string &model_path,
                  const std::string &corpus_path, const std::string &out_path,
                  bool print_sentences) {
  PipelineConfig cfg = resolve_config(args);
  require(!cfg.lexicon_path.empty(), "generate needs a lexicon");
  require(!cfg.template_paths.empty(), "generate needs templates");
  LoadedResources res = load_resources(cfg);
  NlgModel model = load_model_file(model_path);
  SeedCorpus corpus = load_corpus_file(corpus_path);
  SplitRng root(cfg.rng_seed);
  SeedCorpus generated = generate_corpus(
      model, corpus, res, cfg, cfg.temperature,
      root.split("generate", 0).seed(), root.split("fresh-mr", 0).seed());
  save_corpus_file(generated, out_path);
  MetricsReport report = corpus_report(
      token_corpus(corpus), token_corpus(generated), res.templates, res.lex);
  std::cout << "generated " << generated.items.size() << " sentences -> "
            << out_path << "\n"
            << serialize_report(report);
  if (print_sentences) {
    for (const CorpusItem &item : generated.items)
      std::cout << item.sentence.surface << "\n";
  }
}

void cmd_evaluate(const ConfigArgs &args, const std::string &corpus_path,
                  const std::string &seed_path, const std::string &out_path) {
  PipelineConfig cfg = resolve_config(args);
  require(!cfg.lexicon_path.empty(), "evaluate needs a lexicon");
  require(!cfg.template_paths.empty(), "evaluate needs templates");
  LoadedResources res = load_resources(cfg);
  SeedCorpus corpus = load_corpus_file(corpus_path);
  TokenCorpus seed_tokens;
  if (!seed_path.empty()) seed_tokens = token_corpus(load_corpus_file(seed_path));
  MetricsReport report = corpus_report(seed_tokens, token_corpus(corpus),
                                       res.templates, res.lex);
  std::cout << serialize_report(report);
  if (seed_path.empty())
    std::cout << "# novelty_rate compared against an empty baseline; pass "
                 "--seed for a real one\n";
  if (!out_path.empty()) save_report_file(report, out_path);
}

void cmd_pipeline(const ConfigArgs &args, const std::string &script_path,
                  bool accept_all) {
  PipelineConfig cfg = resolve_config(args);
  std::unique_ptr<ReviewDecisionSource> source;
  if (accept_all) {
    source = std::make_unique<AcceptAllSource>();
  } else if (!script_path.empty()) {
    source = std::make_unique<ScriptedSource>(load_script_file(script_path));
  } else {
    source = std::make_unique<InteractiveSource>(std::cin, std::cout);
  }
  CorpusArtifact artifact = run_pipeline(cfg, *source);
  std::cout << "converged after " << artifact.iteration_log.size()
            << " generation round(s)\n"
            << "seed " << artifact.seed.items.size() << " sentences, generated "
            << artifact.generated.items.size() << "\n"
            << "model -> " << artifact.model_path << "\n"
            << serialize_report(artifact.report);
}

void cmd_diff(const std::string &a_path, const std::string &b_path,
              std::size_t max_listing) {
  SeedCorpus a = load_corpus_file(a_path);
  SeedCorpus b = load_corpus_file(b_path);
  CorpusDiff diff = diff_corpora(token_corpus(a), token_corpus(b));
  std::cout << format_diff(diff, a.language, max_listing);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"task-oriented corpus construction toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> resource_keys = {"lexicon", "templates",
                                                  "rules"};
  const std::vector<std::string> seed_keys = {
      "cycle_policy",      "cycle_count",       "scale_limit",
      "min_seed_distinct_2", "min_seed_coverage", "seed_gate_retries",
      "augment_attempts"};
  const std::vector<std::string> train_keys = {
      "embed_dim",  "hidden_dim", "dec_hidden_dim", "logits_from",
      "learning_rate", "epochs", "batch_size", "clip_norm"};
  const std::vector<std::string> gen_keys = {"strategy", "temperature",
                                             "beam_width", "max_len",
                                             "fresh_mr_count"};
  const std::vector<std::string> gate_keys = {
      "min_novelty", "min_validity", "min_distinct_2", "max_outer_iterations",
      "temperature_delta", "epochs_delta"};

  auto concat = [](std::initializer_list<std::vector<std::string>> lists) {
    std::vector<std::string> out;
    for (const auto &l : lists) out.insert(out.end(), l.begin(), l.end());
    return out;
  };

  int exit_code = 0;
  auto guard = [&exit_code](auto fn) {
    return [fn, &exit_code]() {
      try {
        fn();
      } catch (const corpusgen::ParseError &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 3;
      } catch (const corpusgen::ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 3;
      } catch (const corpusgen::IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 4;
      } catch (const corpusgen::NotConverged &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 2;
      } catch (const corpusgen::TrainingDiverged &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 2;
      } catch (const corpusgen::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 1;
      }
    };
  };

  // seed-gen
  {
    auto *cmd = app.add_subcommand("seed-gen",
                                   "build and scale-gate the seed corpus");
    auto args = std::make_shared<ConfigArgs>();
    add_config_flags(cmd, args,
                     concat({resource_keys, seed_keys, {"rng_seed", "out_dir"}}));
    cmd->callback(guard([args] { cmd_seed_gen(*args); }));
  }

  // review
  {
    auto *cmd = app.add_subcommand("review", "judge seed sentences");
    auto args = std::make_shared<ConfigArgs>();
    auto corpus = std::make_shared<std::string>();
    auto ledger = std::make_shared<std::string>();
    auto script = std::make_shared<std::string>();
    auto accept_all = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    add_config_flags(cmd, args, {"lexicon"});
    cmd->add_option("--corpus", *corpus, "corpus file to review")->required();
    cmd->add_option("--ledger", *ledger, "append-only decision ledger")
        ->required();
    auto *script_opt =
        cmd->add_option("--script", *script, "scripted decisions file");
    cmd->add_flag("--accept-all", *accept_all, "accept every pending item")
        ->excludes(script_opt);
    cmd->add_option("--out", *out, "write the reviewed corpus here");
    cmd->callback(guard([=] {
      cmd_review(*args, *corpus, *ledger, *script, *accept_all, *out);
    }));
  }

  // train
  {
    auto *cmd = app.add_subcommand("train", "fit the generator");
    auto args = std::make_shared<ConfigArgs>();
    auto corpus = std::make_shared<std::string>();
    auto model = std::make_shared<std::string>();
    auto loss = std::make_shared<std::string>();
    add_config_flags(cmd, args, concat({train_keys, {"rng_seed"}}));
    cmd->add_option("--corpus", *corpus, "reviewed corpus file")->required();
    cmd->add_option("--model-out", *model, "model file to write")->required();
    cmd->add_option("--loss-out", *loss, "loss trace file to write");
    cmd->callback(guard([=] { cmd_train(*args, *corpus, *model, *loss); }));
  }

  // generate
  {
    auto *cmd = app.add_subcommand("generate", "decode a corpus from a model");
    auto args = std::make_shared<ConfigArgs>();
    auto model = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto print = std::make_shared<bool>(false);
    add_config_flags(cmd, args,
                     concat({resource_keys, gen_keys, {"rng_seed"}}));
    cmd->add_option("--model", *model, "trained model file")->required();
    cmd->add_option("--corpus", *corpus, "corpus whose meanings to realize")
        ->required();
    cmd->add_option("--out", *out, "corpus file to write")->required();
    cmd->add_flag("--print", *print, "also print each sentence");
    cmd->callback(
        guard([=] { cmd_generate(*args, *model, *corpus, *out, *print); }));
  }

  // evaluate
  {
    auto *cmd = app.add_subcommand("evaluate", "score a corpus");
    auto args = std::make_shared<ConfigArgs>();
    auto corpus = std::make_shared<std::string>();
    auto seed = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    add_config_flags(cmd, args, resource_keys);
    cmd->add_option("--corpus", *corpus, "corpus file to score")->required();
    cmd->add_option("--seed", *seed, "novelty baseline corpus");
    cmd->add_option("--out", *out, "report file to write");
    cmd->callback(guard([=] { cmd_evaluate(*args, *corpus, *seed, *out); }));
  }

  // pipeline
  {
    auto *cmd = app.add_subcommand("pipeline", "run every stage end to end");
    auto args = std::make_shared<ConfigArgs>();
    auto script = std::make_shared<std::string>();
    auto accept_all = std::make_shared<bool>(false);
    add_config_flags(cmd, args,
                     concat({resource_keys, seed_keys, train_keys, gen_keys,
                             gate_keys, {"rng_seed", "out_dir"}}));
    auto *script_opt =
        cmd->add_option("--review-script", *script, "scripted decisions file");
    cmd->add_flag("--accept-all", *accept_all, "accept every seed sentence")
        ->excludes(script_opt);
    cmd->callback(guard([=] { cmd_pipeline(*args, *script, *accept_all); }));
  }

  // diff
  {
    auto *cmd = app.add_subcommand("diff", "compare two corpora as sets");
    auto a = std::make_shared<std::string>();
    auto b = std::make_shared<std::string>();
    auto max_listing = std::make_shared<std::size_t>(20);
    cmd->add_option("--a", *a, "first corpus file")->required();
    cmd->add_option("--b", *b, "second corpus file")->required();
    cmd->add_option("--max-listing", *max_listing,
                    "sentences to list per section");
    cmd->callback(guard([=] { cmd_diff(*a, *b, *max_listing); }));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 3;
  }
  return exit_code;
}
