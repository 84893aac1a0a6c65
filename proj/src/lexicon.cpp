#include "corpusgen/lexicon.hpp"

#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "corpusgen/errors.hpp"

namespace corpusgen {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

const char *to_string(PartOfSpeech pos) {
  switch (pos) {
  case PartOfSpeech::noun:
    return "noun";
  case PartOfSpeech::verb:
    return "verb";
  case PartOfSpeech::adjective:
    return "adjective";
  case PartOfSpeech::quantifier:
    return "quantifier";
  case PartOfSpeech::pronoun:
    return "pronoun";
  case PartOfSpeech::other:
    return "other";
  }
  return "other";
}

std::optional<PartOfSpeech> parse_pos(const std::string &tag) {
  if (tag == "noun")
    return PartOfSpeech::noun;
  if (tag == "verb")
    return PartOfSpeech::verb;
  if (tag == "adjective")
    return PartOfSpeech::adjective;
  if (tag == "quantifier")
    return PartOfSpeech::quantifier;
  if (tag == "pronoun")
    return PartOfSpeech::pronoun;
  if (tag == "other")
    return PartOfSpeech::other;
  return std::nullopt;
}

bool Lexicon::has_category(const std::string &name) const {
  for (const auto &c : categories_)
    if (c.name == name)
      return true;
  return false;
}

const LexCategory &Lexicon::category(const std::string &name) const {
  for (const auto &c : categories_)
    if (c.name == name)
      return c;
  throw ValidationError("unknown category: " + name);
}

const std::vector<LexEntry> &
Lexicon::category_words(const std::string &name) const {
  return category(name).entries;
}

void Lexicon::add_category(LexCategory cat) {
  if (has_category(cat.name))
    throw ValidationError("duplicate category: " + cat.name);
  categories_.push_back(std::move(cat));
}

const LexEntry *Lexicon::find_surface(const std::string &surface) const {
  for (const auto &c : categories_)
    for (const auto &e : c.entries)
      if (e.surface == surface)
        return &e;
  return nullptr;
}

std::size_t Lexicon::total_entries() const {
  std::size_t n = 0;
  for (const auto &c : categories_)
    n += c.entries.size();
  return n;
}

Lexicon load_lexicon(std::istream &in) {
  Lexicon lex;
  LexCategory current;
  bool in_block = false;
  std::string line;
  int lineno = 0;

  auto flush = [&]() {
    if (!in_block)
      return;
    if (current.entries.empty())
      throw ParseError("empty category: " + current.name);
    lex.add_category(std::move(current));
    current = LexCategory{};
    in_block = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) {
      continue; // block boundaries are driven by headers, blanks are noise
    }
    if (t[0] == '#')
      continue;
    if (t.rfind("@lang", 0) == 0) {
      std::string lang = trim(t.substr(5));
      if (lang.empty())
        throw ParseError("@lang needs a value", lineno);
      lex.set_language(lang);
      continue;
    }
    if (t[0] == '[') {
      std::size_t close = t.find(']');
      if (close == std::string::npos)
        throw ParseError("unterminated category header", lineno);
      std::string name = trim(t.substr(1, close - 1));
      if (name.empty())
        throw ParseError("empty category name", lineno);
      std::string rest = trim(t.substr(close + 1));
      if (rest.rfind("pos=", 0) != 0)
        throw ParseError("category header needs pos=<tag>", lineno);
      auto pos = parse_pos(trim(rest.substr(4)));
      if (!pos)
        throw ParseError("unknown pos tag: " + rest.substr(4), lineno);
      flush();
      if (lex.has_category(name))
        throw ParseError("duplicate category: " + name, lineno);
      current.name = name;
      current.pos = *pos;
      in_block = true;
      continue;
    }
    if (!in_block)
      throw ParseError("entry before any category header", lineno);
    std::string surface, gloss;
    std::size_t tab = t.find('\t');
    if (tab == std::string::npos) {
      surface = t;
    } else {
      surface = trim(t.substr(0, tab));
      gloss = trim(t.substr(tab + 1));
    }
    if (surface.empty())
      throw ParseError("empty surface form", lineno);
    for (const auto &e : current.entries)
      if (e.surface == surface)
        throw ParseError("duplicate surface '" + surface + "' in category " +
                             current.name,
                         lineno);
    current.entries.push_back(LexEntry{surface, gloss, current.pos});
  }
  flush();
  if (lex.categories().empty())
    throw ParseError("lexicon has no categories");
  return lex;
}

Lexicon load_lexicon_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open lexicon file: " + path);
  return load_lexicon(in);
}

std::string serialize_lexicon(const Lexicon &lex) {
  std::ostringstream out;
  out << "@lang " << lex.language() << "\n";
  for (const auto &c : lex.categories()) {
    out << "\n[" << c.name << "] pos=" << to_string(c.pos) << "\n";
    for (const auto &e : c.entries) {
      out << e.surface;
      if (!e.gloss.empty())
        out << "\t" << e.gloss;
      out << "\n";
    }
  }
  return out.str();
}

void save_lexicon_file(const Lexicon &lex, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write lexicon file: " + path);
  out << serialize_lexicon(lex);
  if (!out)
    throw IoError("write failed: " + path);
}

ValidationReport validate_lexicon(const Lexicon &lex) {
  ValidationReport report;
  std::set<std::string> names;
  for (const auto &c : lex.categories()) {
    if (c.name.empty())
      report.push_back({Severity::error, "empty category name", c.name});
    if (!names.insert(c.name).second)
      report.push_back({Severity::error, "duplicate category name", c.name});
    if (c.entries.empty())
      report.push_back({Severity::error, "category has no entries", c.name});
    std::set<std::string> surfaces;
    for (const auto &e : c.entries) {
      if (e.surface.empty())
        report.push_back({Severity::error, "empty surface form", c.name});
      if (e.surface.find('\n') != std::string::npos ||
          e.surface.find('\r') != std::string::npos)
        report.push_back(
            {Severity::error, "surface contains a line break", c.name});
      if (!surfaces.insert(e.surface).second)
        report.push_back({Severity::error,
                          "duplicate surface '" + e.surface + "'",
                          c.name + "/" + e.surface});
      if (e.pos != c.pos)
        report.push_back({Severity::warning,
                          "part of speech differs from category tag",
                          c.name + "/" + e.surface});
    }
  }
  return report;
}

Lexicon merge_lexicons(const Lexicon &a, const Lexicon &b) {
  Lexicon out;
  out.set_language(a.language());
  for (const auto &c : a.categories())
    out.add_category(c);
  for (const auto &c : b.categories())
    out.add_category(c); // add_category rejects duplicates
  return out;
}

} // namespace corpusgen
