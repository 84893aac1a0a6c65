#ifndef CORPUSGEN_SEED_CORPUS_HPP
#define CORPUSGEN_SEED_CORPUS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corpusgen/template_engine.hpp"

namespace corpusgen {

// Seed-corpus construction, scale control, manual review, and the
// training-pair export the generator trains on.
//
// CORPUS FILE (.corpus): one header line then one record per line.
//
//   #corpus v=1 provenance=<hex> version=<n> lang=<tag>
//   id<TAB>review<TAB>template<TAB>mr<TAB>tokens<TAB>note
//
// `mr` is the space-joined `slot=value` token form, `tokens` the
// space-joined sentence tokens (tokens never contain whitespace), and
// `note` escapes tab, newline and backslash as \t, \n, \\. Lines
// starting with # other than the header are skipped.
//
// LEDGER FILE (.ledger): append-only review decisions, replayed in
// file order with last-writer-wins.
//
//   item-id<TAB>decision<TAB>seq<TAB>note
//
// `seq` is a monotonically increasing sequence number standing in for
// a timestamp so replays are deterministic.

enum class ReviewStatus { unreviewed, accepted, rejected };

const char *to_string(ReviewStatus s);
std::optional<ReviewStatus> parse_review(const std::string &tag);

struct CorpusItem {
  std::string id; // content hash of the token sequence
  Sentence sentence;
  ReviewStatus review = ReviewStatus::unreviewed;
  std::string note;

  const MeaningRepresentation &mr() const; // throws when absent
};

struct SeedCorpus {
  std::vector<CorpusItem> items;
  std::string provenance; // generation-config digest, hex
  std::uint64_t version = 1;
  std::string language = "zh";

  const CorpusItem *find(const std::string &id) const;
  std::size_t count(ReviewStatus s) const;
};

enum class ReviewDecision { accept, reject };

const char *to_string(ReviewDecision d);
std::optional<ReviewDecision> parse_decision(const std::string &tag);

struct LedgerEntry {
  std::string item_id;
  ReviewDecision decision = ReviewDecision::accept;
  std::uint64_t seq = 0;
  std::string note;
};

struct ReviewLedger {
  std::vector<LedgerEntry> entries;

  std::uint64_t next_seq() const;
};

// Stable content id: hex digest of the token sequence.
std::string item_id_for(const std::vector<std::string> &tokens);

// Digest of everything that determines a build, stored as provenance.
std::string corpus_provenance(const std::vector<Template> &templates,
                              const Lexicon &lex, const CyclePolicy &policy,
                              std::size_t scale_limit, std::uint64_t rng_seed,
                              const AugmentationRuleSet *rules);

// Expands every template, optionally augments each sentence, drops
// duplicate token sequences, and caps the result at scale_limit with
// a seed-determined uniform sample (expansion order is preserved).
// Throws when the expansion is empty or scale_limit is 0.
SeedCorpus build_seed_corpus(const std::vector<Template> &templates,
                             const Lexicon &lex, const CyclePolicy &policy,
                             std::size_t scale_limit, std::uint64_t rng_seed,
                             const AugmentationRuleSet *rules = nullptr,
                             int augment_attempts = 2);

// Replays the ledger (last-writer-wins) onto a copy of the corpus and
// bumps its version. Unknown item ids are an error; items are only
// ever marked, never removed.
SeedCorpus apply_review(const SeedCorpus &corpus, const ReviewLedger &ledger);

using TrainingPair =
    std::pair<std::vector<std::string>, std::vector<std::string>>;

// (MR tokens, sentence tokens) for every non-rejected item, in corpus
// order. Throws when nothing is exportable.
std::vector<TrainingPair> export_training_pairs(const SeedCorpus &corpus);

std::string serialize_corpus(const SeedCorpus &corpus);
SeedCorpus load_corpus(std::istream &in);
SeedCorpus load_corpus_file(const std::string &path);
void save_corpus_file(const SeedCorpus &corpus, const std::string &path);

std::string serialize_ledger(const ReviewLedger &ledger);
ReviewLedger load_ledger(std::istream &in);
ReviewLedger load_ledger_file(const std::string &path); // missing file -> empty
void save_ledger_file(const ReviewLedger &ledger, const std::string &path);
void append_ledger_file(const LedgerEntry &entry, const std::string &path);

} // namespace corpusgen

#endif
