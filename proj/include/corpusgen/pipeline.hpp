#ifndef CORPUSGEN_PIPELINE_HPP
#define CORPUSGEN_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "corpusgen/metrics.hpp"
#include "corpusgen/nlg_generate.hpp"
#include "corpusgen/nlg_model.hpp"
#include "corpusgen/nlg_train.hpp"
#include "corpusgen/seed_corpus.hpp"

namespace corpusgen {

// End-to-end corpus construction: load resources, expand and scale-gate
// the seed corpus, review it, train the generator, generate, and gate
// the result, retraining with a hotter sampler and more epochs until
// the thresholds hold or the iteration budget runs out. Every stage
// draws its randomness from one root seed, so a run is reproducible
// from its config alone.
//
// CONFIG FILE (.conf): `key=value` lines, # comments, keys as in
// serialize_config. `templates` is a comma-separated path list.
//
// RUN DIRECTORY: a run owns its output directory through a `.lock`
// file and writes seed.corpus, seed.report, review.ledger,
// seed_reviewed.corpus, per-iteration model_iter<k>.bin /
// loss_iter<k>.tsv / generated_iter<k>.corpus / report_iter<k>.report,
// final model.bin / loss.tsv / generated.corpus / generated.report,
// iterations.tsv, run.manifest, and FAILED when it did not converge.

struct PipelineConfig {
  std::string lexicon_path;
  std::vector<std::string> template_paths;
  std::string rules_path; // empty: no augmentation

  // seed construction and its scale gate
  CyclePolicy cycle_policy = CyclePolicy::full_product();
  std::size_t scale_limit = 200;
  double min_seed_distinct_2 = 0.0;
  double min_seed_coverage = 0.0;
  int seed_gate_retries = 3;
  int augment_attempts = 2;

  // model and training
  Hyper model;
  LogitsFrom logits_from = LogitsFrom::context;
  double learning_rate = 0.5;
  int epochs = 300;
  int batch_size = 8;
  double clip_norm = 5.0;

  // generation
  GenStrategy::Kind strategy = GenStrategy::Kind::sample;
  double temperature = 1.0;
  int beam_width = 2;
  int max_len = 30;
  std::size_t fresh_mr_count = 50;

  // convergence gate and its retry knobs
  double min_novelty = 0.0;
  double min_validity = 0.0;
  double min_distinct_2 = 0.0;
  int max_outer_iterations = 2;
  double temperature_delta = 0.25;
  int epochs_delta = 100;

  std::uint64_t rng_seed = 1;
  std::string out_dir;
};

PipelineConfig parse_config(std::istream &in);
PipelineConfig load_config_file(const std::string &path);
// One key=value assignment (config file line or CLI override).
void apply_config_entry(PipelineConfig &cfg, const std::string &key,
                        const std::string &value, int line = -1);
// Canonical key=value form. out_dir is excluded so the digest
// identifies the run content, not where it was written.
std::string serialize_config(const PipelineConfig &cfg);
std::string config_digest(const PipelineConfig &cfg);
void validate_config(const PipelineConfig &cfg);

struct LoadedResources {
  Lexicon lex;
  std::vector<Template> templates;
  AugmentationRuleSet rules;
  bool has_rules = false;
};

LoadedResources load_resources(const PipelineConfig &cfg);

// How the manual judgment reaches the pipeline. Answers come through
// an interface so tests and scripted runs stay headless and produce
// byte-identical results to a terminal session answering the same way.
struct ReviewItemView {
  std::string id;
  std::string surface;
  std::string gloss;
  std::string mr;        // "template=<id> slot=value ..." or empty
  std::size_t index = 0; // 1-based position among pending items
  std::size_t total = 0; // pending count
};

enum class ReviewAnswer { accept, reject, skip, quit };

class ReviewDecisionSource {
public:
  virtual ~ReviewDecisionSource() = default;
  // `note` starts empty; leave or fill it, it lands in the ledger.
  virtual ReviewAnswer decide(const ReviewItemView &item,
                              std::string &note) = 0;
};

class AcceptAllSource : public ReviewDecisionSource {
public:
  ReviewAnswer decide(const ReviewItemView &item, std::string &note) override;
};

// SCRIPT FILE (.review): one line per presented item,
//   accept|reject|skip|quit[<TAB>note]
// (single letters work too). An exhausted script quits; remaining
// items stay unreviewed.
class ScriptedSource : public ReviewDecisionSource {
public:
  struct Line {
    ReviewAnswer answer = ReviewAnswer::skip;
    std::string note;
  };

  explicit ScriptedSource(std::vector<Line> lines);
  ReviewAnswer decide(const ReviewItemView &item, std::string &note) override;

private:
  std::vector<Line> lines_;
  std::size_t next_ = 0;
};

ScriptedSource load_script_file(const std::string &path);

// Terminal prompt loop: shows progress, surface, gloss and MR, then
// reads a decision letter optionally followed by a note. EOF quits.
class InteractiveSource : public ReviewDecisionSource {
public:
  InteractiveSource(std::istream &in, std::ostream &out);
  ReviewAnswer decide(const ReviewItemView &item, std::string &note) override;

private:
  std::istream *in_;
  std::ostream *out_;
};

// Presents every item still unreviewed after replaying `existing` and
// returns that ledger extended with the new decisions, so an
// interrupted session resumes exactly where it stopped. When
// `append_path` is non-empty each new entry is appended there as it is
// made. Throws on an empty corpus.
ReviewLedger review_session(const SeedCorpus &corpus, const Lexicon &lex,
                            ReviewDecisionSource &source,
                            ReviewLedger existing = {},
                            const std::string &append_path = "");

// Steps 2-3: build the seed corpus, then rebuild with a halved or
// 1.5x-grown scale while bigram diversity or lexicon coverage miss
// their floors, up to seed_gate_retries rebuilds. Throws NotConverged
// when the budget runs out. `log` receives one line per attempt.
SeedCorpus build_gated_seed(const PipelineConfig &cfg,
                            const LoadedResources &res,
                            std::uint64_t rng_seed,
                            std::vector<std::string> *log = nullptr);

// Step 6: one sentence per distinct kept meaning of `source_corpus`
// plus up to fresh_mr_count meanings sampled uniformly from the
// template product but absent from the seed, decoded with cfg's
// strategy at `temperature`. Duplicate surface realizations collapse,
// so the result is a sentence set.
SeedCorpus generate_corpus(const NlgModel &m, const SeedCorpus &source_corpus,
                           const LoadedResources &res,
                           const PipelineConfig &cfg, double temperature,
                           std::uint64_t generate_seed,
                           std::uint64_t fresh_seed);

struct IterationRecord {
  int iteration = 0;
  int epochs_total = 0;
  double temperature = 0.0;
  MetricsReport report;
  bool converged = false;
};

struct CorpusArtifact {
  SeedCorpus seed; // post-review
  std::string model_path;
  SeedCorpus generated; // final generated corpus
  MetricsReport report; // final iteration's
  std::vector<IterationRecord> iteration_log;
};

// Steps 1-7. Persists all intermediate artifacts into cfg.out_dir and
// throws NotConverged (after persisting and writing FAILED) when the
// convergence gate still fails after max_outer_iterations retries.
CorpusArtifact run_pipeline(const PipelineConfig &cfg,
                            ReviewDecisionSource &source);

// Set comparison over token sequences, each listing sorted and
// duplicate-free.
struct CorpusDiff {
  TokenCorpus only_in_a;
  TokenCorpus only_in_b;
  TokenCorpus common;
};

CorpusDiff diff_corpora(const TokenCorpus &a, const TokenCorpus &b);
std::string format_diff(const CorpusDiff &diff, const std::string &lang,
                        std::size_t max_listing = 20);

} // namespace corpusgen

#endif
