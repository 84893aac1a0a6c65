#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>

#include "corpusgen/errors.hpp"
#include "corpusgen/lexicon.hpp"
#include "corpusgen/seed_corpus.hpp"
#include "corpusgen/template_engine.hpp"

using namespace corpusgen;

namespace {

std::string data_path(const std::string &name) {
  return std::string(CORPUSGEN_DATA_DIR) + "/" + name;
}

struct Fixture {
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  std::vector<Template> templates =
      load_templates_file(data_path("templates.tpl"));
};

std::filesystem::path temp_file(const std::string &name) {
  return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("building twice with one seed gives identical corpora") {
  Fixture f;
  SeedCorpus a =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 60, 7);
  SeedCorpus b =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 60, 7);
  CHECK(serialize_corpus(a) == serialize_corpus(b));
  SeedCorpus c =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 60, 8);
  CHECK(serialize_corpus(a) != serialize_corpus(c));
}

TEST_CASE("the scale cap samples without breaking expansion order") {
  Fixture f;
  SeedCorpus capped =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 50, 3);
  CHECK(capped.items.size() == 50);

  SeedCorpus all = build_seed_corpus(f.templates, f.lex,
                                     CyclePolicy::full_product(), 100000, 3);
  // order in the sample equals relative order in the full expansion
  std::vector<std::size_t> positions;
  for (const CorpusItem &item : capped.items) {
    const CorpusItem *found = all.find(item.id);
    REQUIRE(found != nullptr);
    positions.push_back(
        static_cast<std::size_t>(found - all.items.data()));
  }
  CHECK(std::is_sorted(positions.begin(), positions.end()));
}

TEST_CASE("duplicate token sequences collapse to one item") {
  Fixture f;
  // two templates producing the same sentences
  std::istringstream two("a\t{who:subject} {want:predicate} 睡觉\n"
                         "b\t{who:subject} {want:predicate} 睡觉\n");
  std::vector<Template> ts = load_templates(two);
  SeedCorpus corpus =
      build_seed_corpus(ts, f.lex, CyclePolicy::full_product(), 1000, 1);
  CHECK(corpus.items.size() == 12);
  std::set<std::string> ids;
  for (const CorpusItem &item : corpus.items)
    CHECK(ids.insert(item.id).second);
}

TEST_CASE("item ids hash the token content only") {
  std::string id = item_id_for({"我", "想要", "睡觉"});
  CHECK(id == item_id_for({"我", "想要", "睡觉"}));
  CHECK(id != item_id_for({"我", "睡觉", "想要"}));
  CHECK(id != item_id_for({"我", "想要睡觉"})); // boundaries matter
  Fixture f;
  SeedCorpus corpus =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 30, 1);
  for (const CorpusItem &item : corpus.items)
    CHECK(item.id == item_id_for(item.sentence.tokens));
}

TEST_CASE("degenerate build requests are rejected") {
  Fixture f;
  CHECK_THROWS_AS(build_seed_corpus(f.templates, f.lex,
                                    CyclePolicy::full_product(), 0, 1),
                  ValidationError);
  std::vector<Template> none;
  CHECK_THROWS_AS(
      build_seed_corpus(none, f.lex, CyclePolicy::full_product(), 10, 1),
      ValidationError);
}

TEST_CASE("review replay is last-writer-wins and bumps the version") {
  Fixture f;
  SeedCorpus corpus =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 20, 5);
  const std::string target = corpus.items[3].id;

  ReviewLedger ledger;
  ledger.entries.push_back({target, ReviewDecision::accept, 1, "fine"});
  ledger.entries.push_back({corpus.items[0].id, ReviewDecision::reject, 2, ""});
  ledger.entries.push_back({target, ReviewDecision::reject, 3, "on reflection"});

  SeedCorpus reviewed = apply_review(corpus, ledger);
  CHECK(reviewed.version == corpus.version + 1);
  CHECK(reviewed.items.size() == corpus.items.size());
  CHECK(reviewed.find(target)->review == ReviewStatus::rejected);
  CHECK(reviewed.find(target)->note == "on reflection");
  CHECK(reviewed.find(corpus.items[0].id)->review == ReviewStatus::rejected);
  CHECK(reviewed.items[1].review == ReviewStatus::unreviewed);
  CHECK(reviewed.count(ReviewStatus::rejected) == 2);
  CHECK(reviewed.count(ReviewStatus::unreviewed) == corpus.items.size() - 2);

  // an empty ledger still bumps the version, nothing else changes
  SeedCorpus replayed = apply_review(corpus, ReviewLedger{});
  CHECK(replayed.version == corpus.version + 1);
  CHECK(replayed.count(ReviewStatus::unreviewed) == corpus.items.size());

  ReviewLedger unknown;
  unknown.entries.push_back({"feedfacefeedface", ReviewDecision::accept, 1, ""});
  CHECK_THROWS_AS(apply_review(corpus, unknown), ValidationError);
}

TEST_CASE("training pairs skip rejected items and keep unreviewed ones") {
  Fixture f;
  SeedCorpus corpus =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 10, 5);
  ReviewLedger ledger;
  ledger.entries.push_back({corpus.items[2].id, ReviewDecision::reject, 1, ""});
  ledger.entries.push_back({corpus.items[5].id, ReviewDecision::accept, 2, ""});
  SeedCorpus reviewed = apply_review(corpus, ledger);

  auto pairs = export_training_pairs(reviewed);
  CHECK(pairs.size() == 9);
  CHECK(pairs[0].first == mr_tokens(reviewed.items[0].mr()));
  CHECK(pairs[0].second == reviewed.items[0].sentence.tokens);
  for (const auto &[mr, target] : pairs)
    CHECK(target != corpus.items[2].sentence.tokens);

  // rejecting everything leaves nothing to train on
  ReviewLedger all;
  for (const CorpusItem &item : corpus.items)
    all.entries.push_back({item.id, ReviewDecision::reject, all.entries.size(),
                           ""});
  CHECK_THROWS_AS(export_training_pairs(apply_review(corpus, all)),
                  ValidationError);
}

TEST_CASE("corpus files survive save, load, save byte-identically") {
  Fixture f;
  SeedCorpus corpus =
      build_seed_corpus(f.templates, f.lex, CyclePolicy::full_product(), 40, 9);
  corpus.items[1].review = ReviewStatus::accepted;
  corpus.items[2].review = ReviewStatus::rejected;
  corpus.items[2].note = "tab\there \\ and\nnewline";

  std::string once = serialize_corpus(corpus);
  std::istringstream in(once);
  SeedCorpus back = load_corpus(in);
  CHECK(serialize_corpus(back) == once);
  CHECK(back.items.size() == corpus.items.size());
  CHECK(back.provenance == corpus.provenance);
  CHECK(back.version == corpus.version);
  CHECK(back.language == corpus.language);
  CHECK(back.items[2].note == corpus.items[2].note);
  CHECK(back.items[2].review == ReviewStatus::rejected);
  REQUIRE(back.items[2].sentence.mr.has_value());
  CHECK(back.items[2].mr().template_id == corpus.items[2].mr().template_id);
  CHECK(mr_tokens(back.items[2].mr()) == mr_tokens(corpus.items[2].mr()));

  auto path = temp_file("corpusgen_test_roundtrip.corpus");
  save_corpus_file(corpus, path.string());
  SeedCorpus from_disk = load_corpus_file(path.string());
  CHECK(serialize_corpus(from_disk) == once);
  std::filesystem::remove(path);
}

TEST_CASE("corpus parsing requires the header and sane records") {
  std::istringstream no_header("deadbeef\tunreviewed\tt\twho=我\t我\t\n");
  CHECK_THROWS_AS(load_corpus(no_header), ParseError);

  std::istringstream bad_review(
      "#corpus v=1 provenance=00 version=1 lang=zh\n"
      "deadbeef\tmaybe\tt\twho=我\t我 睡觉\t\n");
  CHECK_THROWS_AS(load_corpus(bad_review), ParseError);

  std::istringstream short_record(
      "#corpus v=1 provenance=00 version=1 lang=zh\n"
      "deadbeef\tunreviewed\tt\n");
  CHECK_THROWS_AS(load_corpus(short_record), ParseError);

  const std::string real_id = item_id_for({"我", "睡觉"});
  const std::string record =
      real_id + "\tunreviewed\tt\twho=我\t我 睡觉\t\n";
  std::istringstream dup_id("#corpus v=1 provenance=00 version=1 lang=zh\n" +
                            record + record);
  CHECK_THROWS_AS(load_corpus(dup_id), ParseError);

  std::istringstream wrong_id(
      "#corpus v=1 provenance=00 version=1 lang=zh\n"
      "deadbeef\tunreviewed\tt\twho=我\t我 睡觉\t\n");
  CHECK_THROWS_AS(load_corpus(wrong_id), ParseError);

  std::istringstream future("#corpus v=9 provenance=00 version=1 lang=zh\n" +
                            record);
  CHECK_THROWS_AS(load_corpus(future), ParseError);

  CHECK_THROWS_AS(load_corpus_file("/nonexistent/x.corpus"), IoError);
}

TEST_CASE("ledger files round-trip, append and default to empty") {
  ReviewLedger ledger;
  ledger.entries.push_back({"aa", ReviewDecision::accept, 1, "note one"});
  ledger.entries.push_back({"bb", ReviewDecision::reject, 2, "tab\tand\nline"});
  std::string once = serialize_ledger(ledger);
  std::istringstream in(once);
  ReviewLedger back = load_ledger(in);
  CHECK(serialize_ledger(back) == once);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].note == "tab\tand\nline");
  CHECK(back.next_seq() == 3);
  CHECK(ReviewLedger{}.next_seq() == 1);

  auto path = temp_file("corpusgen_test_append.ledger");
  std::filesystem::remove(path);
  CHECK(load_ledger_file(path.string()).entries.empty());
  append_ledger_file(ledger.entries[0], path.string());
  append_ledger_file(ledger.entries[1], path.string());
  ReviewLedger from_disk = load_ledger_file(path.string());
  CHECK(serialize_ledger(from_disk) == once);
  std::filesystem::remove(path);

  std::istringstream bad("aa\tping\t1\t\n");
  CHECK_THROWS_AS(load_ledger(bad), ParseError);
  std::istringstream bad_seq("aa\taccept\tlater\t\n");
  CHECK_THROWS_AS(load_ledger(bad_seq), ParseError);
}

TEST_CASE("provenance reacts to every build input") {
  Fixture f;
  AugmentationRuleSet rules = load_rules_file(data_path("augment.rules"));
  std::string base = corpus_provenance(f.templates, f.lex,
                                       CyclePolicy::full_product(), 50, 1,
                                       nullptr);
  CHECK(base ==
        corpus_provenance(f.templates, f.lex, CyclePolicy::full_product(), 50,
                          1, nullptr));
  CHECK(base != corpus_provenance(f.templates, f.lex,
                                  CyclePolicy::full_product(), 51, 1, nullptr));
  CHECK(base != corpus_provenance(f.templates, f.lex,
                                  CyclePolicy::full_product(), 50, 2, nullptr));
  CHECK(base != corpus_provenance(f.templates, f.lex,
                                  CyclePolicy::round_robin(50), 50, 1,
                                  nullptr));
  CHECK(base != corpus_provenance(f.templates, f.lex,
                                  CyclePolicy::full_product(), 50, 1, &rules));
}

TEST_CASE("augmented builds stay deduplicated and derivable") {
  Lexicon lex = load_lexicon_file(data_path("full.lex"));
  std::vector<Template> templates =
      load_templates_file(data_path("templates.tpl"));
  AugmentationRuleSet rules = load_rules_file(data_path("augment.rules"));
  SeedCorpus corpus = build_seed_corpus(
      templates, lex, CyclePolicy::full_product(), 250, 11, &rules, 2);
  CHECK(corpus.items.size() == 250);
  std::set<std::string> ids;
  bool any_modifier = false;
  for (const CorpusItem &item : corpus.items) {
    CHECK(ids.insert(item.id).second);
    CHECK(validate_sentence(item.sentence, templates, lex));
    for (const auto &[name, value] : item.mr().bindings)
      if (name.find('+') != std::string::npos) // an inserted-modifier binding
        any_modifier = true;
  }
  CHECK(any_modifier);
}
