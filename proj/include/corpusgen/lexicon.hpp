#ifndef CORPUSGEN_LEXICON_HPP
#define CORPUSGEN_LEXICON_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace corpusgen {

// Category-structured word lists, the raw material for all generation.
//
// FILE FORMAT (UTF-8 text, .lex):
//
//   @lang zh                     optional; zh joins surfaces without
//                                spaces, en with spaces (default zh)
//   # comment
//   [category-name] pos=<tag>    starts a category block
//   surface<TAB>gloss            one entry per line, gloss optional
//
// Blank lines separate blocks. Category names must be unique, word
// lists non-empty, and surface forms unique within their category.

enum class PartOfSpeech { noun, verb, adjective, quantifier, pronoun, other };

const char *to_string(PartOfSpeech pos);
std::optional<PartOfSpeech> parse_pos(const std::string &tag);

struct LexEntry {
  std::string surface;
  std::string gloss; // empty when absent; annotation only, never generated
  PartOfSpeech pos = PartOfSpeech::other;
};

struct LexCategory {
  std::string name;
  PartOfSpeech pos = PartOfSpeech::other;
  std::vector<LexEntry> entries;
};

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity;
  std::string message;
  std::string location; // "category" or "category/surface"
};

using ValidationReport = std::vector<ValidationIssue>;

class Lexicon {
public:
  const std::vector<LexCategory> &categories() const { return categories_; }
  const std::string &language() const { return language_; }
  void set_language(std::string lang) { language_ = std::move(lang); }

  bool has_category(const std::string &name) const;
  // File-order entries; unknown names are an error.
  const std::vector<LexEntry> &category_words(const std::string &name) const;
  const LexCategory &category(const std::string &name) const;

  // Appends a category; duplicate names are an error.
  void add_category(LexCategory cat);

  // First entry across categories whose surface matches, if any.
  // Used by gloss rendering for template literals.
  const LexEntry *find_surface(const std::string &surface) const;

  std::size_t total_entries() const;

private:
  std::vector<LexCategory> categories_;
  std::string language_ = "zh";
};

Lexicon load_lexicon(std::istream &in);
Lexicon load_lexicon_file(const std::string &path);

// Canonical form; load(serialize(lex)) == lex and serializing again is
// byte-identical.
std::string serialize_lexicon(const Lexicon &lex);
void save_lexicon_file(const Lexicon &lex, const std::string &path);

// Reports problems instead of throwing; empty report iff all invariants
// hold. Mixed part-of-speech inside a category is warning-level.
ValidationReport validate_lexicon(const Lexicon &lex);

// Disjoint union; duplicate category names are an error. Language tag
// comes from `a`.
Lexicon merge_lexicons(const Lexicon &a, const Lexicon &b);

} // namespace corpusgen

#endif
