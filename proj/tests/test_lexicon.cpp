#include <map>
#include <sstream>
#include <string>

#include <doctest.h>

#include "corpusgen/errors.hpp"
#include "corpusgen/lexicon.hpp"

using namespace corpusgen;

namespace {

std::string data_path(const std::string &name) {
  return std::string(CORPUSGEN_DATA_DIR) + "/" + name;
}

} // namespace

TEST_CASE("bundled daily-life lexicon has the exact category shape") {
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  const std::map<std::string, std::size_t> expected = {
      {"who", 4},  {"want", 3},       {"action", 5}, {"number", 4},
      {"coats", 17}, {"pants", 7},    {"shoes", 6},  {"decorators", 11},
      {"food", 31}, {"drink", 15},    {"location", 9}};
  CHECK(lex.categories().size() == expected.size());
  std::size_t total = 0;
  for (const auto &[name, count] : expected) {
    REQUIRE(lex.has_category(name));
    CHECK(lex.category_words(name).size() == count);
    total += count;
  }
  CHECK(total == 112);
  CHECK(lex.total_entries() == 112);
  CHECK(lex.language() == "zh");
}

TEST_CASE("entries keep surface, gloss and part of speech") {
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  const LexCategory &who = lex.category("who");
  CHECK(who.pos == PartOfSpeech::pronoun);
  CHECK(who.entries[0].surface == "我");
  CHECK(who.entries[0].gloss == "I");
  const LexEntry *found = lex.find_surface("外套");
  REQUIRE(found != nullptr);
  CHECK(found->gloss == "coat");
  CHECK(lex.find_surface("不存在的词") == nullptr);
}

TEST_CASE("unknown categories are an error") {
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  CHECK_FALSE(lex.has_category("ghosts"));
  CHECK_THROWS_AS(lex.category_words("ghosts"), ValidationError);
}

TEST_CASE("serialization round-trips byte-identically") {
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  std::string once = serialize_lexicon(lex);
  std::istringstream in(once);
  Lexicon back = load_lexicon(in);
  CHECK(serialize_lexicon(back) == once);
  CHECK(back.total_entries() == lex.total_entries());
  CHECK(back.language() == lex.language());
}

TEST_CASE("language directive is parsed and defaults to zh") {
  std::istringstream with_lang("@lang en\n[pets] pos=noun\ndog\tdog\n");
  CHECK(load_lexicon(with_lang).language() == "en");
  std::istringstream without("[pets] pos=noun\ndog\tdog\n");
  CHECK(load_lexicon(without).language() == "zh");
}

TEST_CASE("malformed files are rejected with line information") {
  std::istringstream dup_cat(
      "[a] pos=noun\nx\ty\n\n[a] pos=noun\nz\tw\n");
  CHECK_THROWS_AS(load_lexicon(dup_cat), ParseError);

  std::istringstream dup_surface("[a] pos=noun\nx\ty\nx\tz\n");
  CHECK_THROWS_AS(load_lexicon(dup_surface), ParseError);

  std::istringstream bad_pos("[a] pos=gerund\nx\ty\n");
  CHECK_THROWS_AS(load_lexicon(bad_pos), ParseError);

  std::istringstream entry_first("x\ty\n[a] pos=noun\n");
  CHECK_THROWS_AS(load_lexicon(entry_first), ParseError);

  std::istringstream empty_cat("[a] pos=noun\n\n[b] pos=noun\nx\ty\n");
  CHECK_THROWS_AS(load_lexicon(empty_cat), ParseError);

  try {
    std::istringstream again("[a] pos=noun\nx\ty\nx\tz\n");
    load_lexicon(again);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("missing files raise an I/O error") {
  CHECK_THROWS_AS(load_lexicon_file("/nonexistent/path.lex"), IoError);
}

TEST_CASE("validation reports mixed part-of-speech as a warning only") {
  Lexicon lex;
  LexCategory cat;
  cat.name = "mixed";
  cat.pos = PartOfSpeech::noun;
  cat.entries.push_back({"x", "", PartOfSpeech::noun});
  cat.entries.push_back({"y", "", PartOfSpeech::verb});
  lex.add_category(cat);
  ValidationReport report = validate_lexicon(lex);
  REQUIRE_FALSE(report.empty());
  for (const ValidationIssue &issue : report)
    CHECK(issue.severity == Severity::warning);
}

TEST_CASE("merging keeps both sides and rejects duplicate names") {
  Lexicon a = load_lexicon_file(data_path("figure1.lex"));
  Lexicon b = load_lexicon_file(data_path("augment.lex"));
  Lexicon merged = merge_lexicons(a, b);
  CHECK(merged.total_entries() == a.total_entries() + b.total_entries());
  CHECK(merged.categories().size() ==
        a.categories().size() + b.categories().size());
  CHECK(merged.language() == a.language());
  CHECK_THROWS_AS(merge_lexicons(a, a), ValidationError);
}

TEST_CASE("bundled merged lexicon equals the merge of its parts") {
  Lexicon full = load_lexicon_file(data_path("full.lex"));
  Lexicon merged = merge_lexicons(load_lexicon_file(data_path("figure1.lex")),
                                  load_lexicon_file(data_path("augment.lex")));
  CHECK(serialize_lexicon(full) == serialize_lexicon(merged));
}

TEST_CASE("adding a duplicate category is rejected") {
  Lexicon lex;
  LexCategory cat;
  cat.name = "a";
  cat.entries.push_back({"x", "", PartOfSpeech::noun});
  lex.add_category(cat);
  CHECK_THROWS_AS(lex.add_category(cat), ValidationError);
}
