#include "corpusgen/template_engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"

namespace corpusgen {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string tokens_key(const std::vector<std::string> &tokens) {
  std::string key;
  for (const auto &t : tokens) {
    key += t;
    key += '\x1f';
  }
  return key;
}

} // namespace

const char *to_string(SlotRole role) {
  switch (role) {
  case SlotRole::subject:
    return "subject";
  case SlotRole::predicate:
    return "predicate";
  case SlotRole::object:
    return "object";
  case SlotRole::quantifier:
    return "quantifier";
  case SlotRole::adjective:
    return "adjective";
  }
  return "object";
}

std::optional<SlotRole> parse_role(const std::string &tag) {
  if (tag == "subject")
    return SlotRole::subject;
  if (tag == "predicate")
    return SlotRole::predicate;
  if (tag == "object")
    return SlotRole::object;
  if (tag == "quantifier")
    return SlotRole::quantifier;
  if (tag == "adjective")
    return SlotRole::adjective;
  return std::nullopt;
}

const Slot *Template::find_slot(const std::string &name) const {
  for (const auto &s : slots)
    if (s.name == name)
      return &s;
  return nullptr;
}

const std::string *
MeaningRepresentation::binding(const std::string &name) const {
  for (const auto &[k, v] : bindings)
    if (k == name)
      return &v;
  return nullptr;
}

std::string join_tokens(const std::vector<std::string> &tokens,
                        const std::string &lang) {
  std::string out;
  bool spaced = lang != "zh";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (spaced && i > 0)
      out += ' ';
    out += tokens[i];
  }
  return out;
}

Sentence make_sentence(std::vector<std::string> tokens,
                       const std::string &lang,
                       std::optional<MeaningRepresentation> mr) {
  Sentence s;
  s.surface = join_tokens(tokens, lang);
  s.tokens = std::move(tokens);
  s.mr = std::move(mr);
  return s;
}

std::vector<std::string> mr_tokens(const MeaningRepresentation &mr) {
  std::vector<std::string> out;
  out.reserve(mr.bindings.size());
  for (const auto &[name, value] : mr.bindings)
    out.push_back(name + "=" + value);
  return out;
}

Template parse_template(const std::string &source) {
  Template t;
  std::string pattern = source;
  // optional leading "id<TAB>"
  std::size_t tab = source.find('\t');
  if (tab != std::string::npos) {
    std::string head = source.substr(0, tab);
    if (head.find('{') == std::string::npos) {
      t.id = trim(head);
      pattern = source.substr(tab + 1);
    }
  }

  std::size_t i = 0;
  const std::size_t n = pattern.size();
  while (i < n) {
    if (std::isspace(static_cast<unsigned char>(pattern[i]))) {
      ++i;
      continue;
    }
    if (pattern[i] == '{') {
      std::size_t close = pattern.find('}', i);
      if (close == std::string::npos)
        throw ParseError("unterminated slot at position " + std::to_string(i));
      std::string body = pattern.substr(i + 1, close - i - 1);
      bool optional = false;
      if (!body.empty() && body.back() == '?') {
        optional = true;
        body.pop_back();
      }
      std::size_t colon = body.find(':');
      if (colon == std::string::npos)
        throw ParseError("slot needs {category:role} at position " +
                         std::to_string(i));
      std::string category = trim(body.substr(0, colon));
      std::string role_tag = trim(body.substr(colon + 1));
      if (category.empty())
        throw ParseError("empty slot category at position " +
                         std::to_string(i));
      auto role = parse_role(role_tag);
      if (!role)
        throw ParseError("unknown role tag '" + role_tag + "' at position " +
                         std::to_string(i));
      if (t.find_slot(category))
        throw ParseError("duplicate slot name: " + category);
      Slot slot;
      slot.name = category;
      slot.category = category;
      slot.optional = optional;
      slot.role = *role;
      Template::Element el;
      el.is_slot = true;
      el.slot_index = static_cast<int>(t.slots.size());
      t.slots.push_back(std::move(slot));
      t.elements.push_back(std::move(el));
      i = close + 1;
      continue;
    }
    if (pattern[i] == '}')
      throw ParseError("stray '}' at position " + std::to_string(i));
    std::size_t end = i;
    while (end < n && !std::isspace(static_cast<unsigned char>(pattern[end])) &&
           pattern[end] != '{' && pattern[end] != '}')
      ++end;
    Template::Element el;
    el.literal = pattern.substr(i, end - i);
    t.elements.push_back(std::move(el));
    i = end;
  }
  if (t.slots.empty())
    throw ParseError("template has no slots");
  return t;
}

std::string pretty_print(const Template &t) {
  std::string out;
  if (!t.id.empty()) {
    out += t.id;
    out += '\t';
  }
  bool first = true;
  for (const auto &el : t.elements) {
    if (!first)
      out += ' ';
    first = false;
    if (el.is_slot) {
      const Slot &s = t.slots[static_cast<std::size_t>(el.slot_index)];
      out += '{' + s.category + ':' + to_string(s.role) +
             (s.optional ? "?}" : "}");
    } else {
      out += el.literal;
    }
  }
  return out;
}

std::vector<Template> load_templates(std::istream &in) {
  std::vector<Template> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    Template tpl;
    try {
      tpl = parse_template(line);
    } catch (const ParseError &e) {
      throw ParseError(std::string(e.what()), lineno);
    }
    if (tpl.id.empty())
      tpl.id = "t" + std::to_string(out.size() + 1);
    if (!ids.insert(tpl.id).second)
      throw ParseError("duplicate template id: " + tpl.id, lineno);
    out.push_back(std::move(tpl));
  }
  if (out.empty())
    throw ParseError("no templates in input");
  return out;
}

std::vector<Template> load_templates_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open template file: " + path);
  return load_templates(in);
}

std::string serialize_templates(const std::vector<Template> &ts) {
  std::string out;
  for (const auto &t : ts) {
    out += pretty_print(t);
    out += '\n';
  }
  return out;
}

void save_templates_file(const std::vector<Template> &ts,
                         const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write template file: " + path);
  out << serialize_templates(ts);
  if (!out)
    throw IoError("write failed: " + path);
}

namespace {

struct ResolvedSlot {
  const Slot *slot;
  const std::vector<LexEntry> *entries;
};

std::vector<ResolvedSlot> resolve_required(const Template &t,
                                           const Lexicon &lex) {
  std::vector<ResolvedSlot> out;
  for (const auto &s : t.slots) {
    if (s.optional)
      continue;
    if (!lex.has_category(s.category))
      throw ValidationError("template " + t.id + ": unresolved category '" +
                            s.category + "'");
    const auto &entries = lex.category_words(s.category);
    if (entries.empty())
      throw ValidationError("template " + t.id + ": empty category '" +
                            s.category + "'");
    out.push_back({&s, &entries});
  }
  return out;
}

void emit_pair(const Template &t, const Lexicon &lex,
               const std::vector<ResolvedSlot> &req,
               const std::vector<std::size_t> &pick,
               const std::function<void(MeaningRepresentation, Sentence)> &sink) {
  MeaningRepresentation mr;
  mr.template_id = t.id;
  std::vector<std::string> tokens;
  for (const auto &el : t.elements) {
    if (!el.is_slot) {
      tokens.push_back(el.literal);
      continue;
    }
    const Slot &slot = t.slots[static_cast<std::size_t>(el.slot_index)];
    if (slot.optional)
      continue;
    // locate this slot's position among the required slots
    for (std::size_t i = 0; i < req.size(); ++i) {
      if (req[i].slot == &slot) {
        const std::string &surface = (*req[i].entries)[pick[i]].surface;
        mr.bindings.emplace_back(slot.name, surface);
        tokens.push_back(surface);
        break;
      }
    }
  }
  Sentence s = make_sentence(std::move(tokens), lex.language(), mr);
  sink(std::move(mr), std::move(s));
}

} // namespace

std::uint64_t expansion_count(const Template &t, const Lexicon &lex) {
  std::uint64_t total = 1;
  for (const auto &rs : resolve_required(t, lex))
    total *= rs.entries->size();
  return total;
}

void expand_template(
    const Template &t, const Lexicon &lex, const CyclePolicy &policy,
    const std::function<void(MeaningRepresentation, Sentence)> &sink) {
  auto req = resolve_required(t, lex);
  if (req.empty())
    throw ValidationError("template " + t.id + ": no required slots");
  std::vector<std::size_t> pick(req.size(), 0);

  if (policy.kind == CyclePolicy::Kind::full_product) {
    for (;;) {
      emit_pair(t, lex, req, pick, sink);
      // odometer, rightmost fastest
      std::size_t i = req.size();
      for (;;) {
        if (i == 0)
          return;
        --i;
        if (++pick[i] < req[i].entries->size())
          break;
        pick[i] = 0;
      }
    }
  }

  for (std::uint64_t j = 0; j < policy.count; ++j) {
    for (std::size_t i = 0; i < req.size(); ++i)
      pick[i] = static_cast<std::size_t>(j % req[i].entries->size());
    emit_pair(t, lex, req, pick, sink);
  }
}

std::vector<std::pair<MeaningRepresentation, Sentence>>
expand_template(const Template &t, const Lexicon &lex,
                const CyclePolicy &policy) {
  std::vector<std::pair<MeaningRepresentation, Sentence>> out;
  expand_template(t, lex, policy,
                  [&out](MeaningRepresentation mr, Sentence s) {
                    out.emplace_back(std::move(mr), std::move(s));
                  });
  return out;
}

std::vector<const AugmentationRule *>
AugmentationRuleSet::rules_for(const std::string &noun_category) const {
  std::vector<const AugmentationRule *> out;
  for (const auto &r : rules)
    if (r.noun_category == noun_category)
      out.push_back(&r);
  return out;
}

AugmentationRuleSet load_rules(std::istream &in) {
  AugmentationRuleSet set;
  std::string line;
  int lineno = 0;
  std::set<std::pair<std::string, std::string>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = t.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(trim(t.substr(start)));
        break;
      }
      fields.push_back(trim(t.substr(start, tab - start)));
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw ParseError("rule needs noun-category<TAB>insert-category<TAB>"
                       "probability",
                       lineno);
    AugmentationRule r;
    r.noun_category = fields[0];
    r.insert_category = fields[1];
    try {
      r.probability = std::stod(fields[2]);
    } catch (const std::exception &) {
      throw ParseError("bad probability: " + fields[2], lineno);
    }
    if (r.probability < 0.0 || r.probability > 1.0)
      throw ParseError("probability out of [0,1]: " + fields[2], lineno);
    if (!seen.insert({r.noun_category, r.insert_category}).second)
      throw ParseError("duplicate rule " + r.noun_category + " -> " +
                           r.insert_category,
                       lineno);
    set.rules.push_back(std::move(r));
  }
  return set;
}

AugmentationRuleSet load_rules_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open rules file: " + path);
  return load_rules(in);
}

namespace {

// Token index of each MR binding, recovered by a left-to-right scan.
// Binding order matches surface order for every template-produced
// sentence, so the scan is unambiguous even with repeated surfaces.
std::vector<std::size_t> binding_positions(const Sentence &s) {
  if (!s.mr)
    throw ValidationError("sentence has no meaning representation");
  std::vector<std::size_t> out;
  std::size_t cursor = 0;
  for (const auto &[name, value] : s.mr->bindings) {
    bool found = false;
    for (std::size_t i = cursor; i < s.tokens.size(); ++i) {
      if (s.tokens[i] == value) {
        out.push_back(i);
        cursor = i + 1;
        found = true;
        break;
      }
    }
    if (!found)
      throw ValidationError("binding " + name + "=" + value +
                            " not present in sentence tokens");
  }
  return out;
}

struct Insertion {
  const AugmentationRule *rule;
  const LexEntry *entry;
};

// Rule targets: (binding index, rule) pairs in binding order then rule
// file order.
struct AugTarget {
  std::size_t binding_idx;
  const AugmentationRule *rule;
};

std::vector<AugTarget> applicable_targets(const Sentence &s,
                                          const Lexicon &lex,
                                          const AugmentationRuleSet &rules) {
  std::vector<AugTarget> out;
  if (!s.mr)
    return out;
  for (std::size_t b = 0; b < s.mr->bindings.size(); ++b) {
    const std::string &slot_name = s.mr->bindings[b].first;
    if (!lex.has_category(slot_name))
      continue; // augmentation slots and such
    const LexCategory &cat = lex.category(slot_name);
    if (cat.pos != PartOfSpeech::noun)
      continue;
    for (const AugmentationRule *r : rules.rules_for(slot_name))
      out.push_back({b, r});
  }
  return out;
}

const LexCategory &insert_category(const Lexicon &lex,
                                   const AugmentationRule &rule) {
  if (!lex.has_category(rule.insert_category))
    throw ValidationError("augmentation rule references unknown category '" +
                          rule.insert_category + "'");
  return lex.category(rule.insert_category);
}

Sentence build_variant(
    const Sentence &s, const Lexicon &lex,
    const std::vector<std::pair<std::size_t, std::vector<Insertion>>> &ins) {
  auto positions = binding_positions(s);
  MeaningRepresentation mr = *s.mr;
  // walk bindings from last to first so earlier indices stay valid
  std::vector<std::string> new_tokens = s.tokens;
  for (auto it = ins.rbegin(); it != ins.rend(); ++it) {
    const std::size_t b = it->first;
    const auto &list = it->second;
    const std::size_t tok_pos = positions[b];
    // emission order: last applied rule lands leftmost
    std::vector<std::string> prefix_tokens;
    std::vector<std::pair<std::string, std::string>> prefix_bindings;
    for (auto rit = list.rbegin(); rit != list.rend(); ++rit) {
      prefix_tokens.push_back(rit->entry->surface);
      prefix_bindings.emplace_back(mr.bindings[b].first + "+" +
                                       rit->rule->insert_category,
                                   rit->entry->surface);
    }
    new_tokens.insert(new_tokens.begin() + static_cast<std::ptrdiff_t>(tok_pos),
                      prefix_tokens.begin(), prefix_tokens.end());
    mr.bindings.insert(mr.bindings.begin() + static_cast<std::ptrdiff_t>(b),
                       prefix_bindings.begin(), prefix_bindings.end());
  }
  return make_sentence(std::move(new_tokens), lex.language(), std::move(mr));
}

} // namespace

std::vector<Sentence> augment_sentence(const Sentence &s, const Lexicon &lex,
                                       const AugmentationRuleSet &rules,
                                       std::uint64_t rng_seed, int attempts) {
  std::vector<Sentence> out{s};
  auto targets = applicable_targets(s, lex, rules);
  if (targets.empty())
    return out;

  std::set<std::string> seen{tokens_key(s.tokens)};
  SplitRng rng(rng_seed);
  for (int a = 0; a < attempts; ++a) {
    std::vector<std::pair<std::size_t, std::vector<Insertion>>> plan;
    bool any = false;
    for (const auto &tgt : targets) {
      const bool fire = rng.next_double() < tgt.rule->probability;
      if (!fire)
        continue;
      const LexCategory &cat = insert_category(lex, *tgt.rule);
      const LexEntry &entry =
          cat.entries[static_cast<std::size_t>(rng.next_below(cat.entries.size()))];
      if (plan.empty() || plan.back().first != tgt.binding_idx)
        plan.push_back({tgt.binding_idx, {}});
      plan.back().second.push_back({tgt.rule, &entry});
      any = true;
    }
    if (!any)
      continue;
    Sentence v = build_variant(s, lex, plan);
    if (seen.insert(tokens_key(v.tokens)).second)
      out.push_back(std::move(v));
  }
  return out;
}

std::vector<Sentence> augment_enumerate(const Sentence &s, const Lexicon &lex,
                                        const AugmentationRuleSet &rules) {
  std::vector<Sentence> out{s};
  auto targets = applicable_targets(s, lex, rules);
  if (targets.empty())
    return out;

  std::vector<const LexCategory *> cats;
  std::uint64_t total = 1;
  for (const auto &tgt : targets) {
    const LexCategory &cat = insert_category(lex, *tgt.rule);
    cats.push_back(&cat);
    total *= cat.entries.size() + 1;
    if (total > 1000000)
      throw ValidationError("augment_enumerate: closure too large");
  }

  std::set<std::string> seen{tokens_key(s.tokens)};
  std::vector<std::size_t> digit(targets.size(), 0); // 0 = skip
  for (std::uint64_t step = 1; step < total; ++step) {
    // odometer, rightmost fastest
    std::size_t i = targets.size();
    for (;;) {
      --i;
      if (++digit[i] <= cats[i]->entries.size())
        break;
      digit[i] = 0;
      if (i == 0)
        break;
    }
    std::vector<std::pair<std::size_t, std::vector<Insertion>>> plan;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (digit[k] == 0)
        continue;
      const LexEntry &entry = cats[k]->entries[digit[k] - 1];
      if (plan.empty() || plan.back().first != targets[k].binding_idx)
        plan.push_back({targets[k].binding_idx, {}});
      plan.back().second.push_back({targets[k].rule, &entry});
    }
    if (plan.empty())
      continue;
    Sentence v = build_variant(s, lex, plan);
    if (seen.insert(tokens_key(v.tokens)).second)
      out.push_back(std::move(v));
  }
  return out;
}

namespace {

bool in_category(const Lexicon &lex, const std::string &category,
                 const std::string &token) {
  for (const auto &e : lex.category_words(category))
    if (e.surface == token)
      return true;
  return false;
}

// Any quantifier- or adjective-class word may sit in front of a noun
// filling; this is the derivability closure of the augmentation step.
bool is_modifier_token(const Lexicon &lex, const std::string &token) {
  for (const auto &c : lex.categories()) {
    if (c.pos != PartOfSpeech::quantifier && c.pos != PartOfSpeech::adjective)
      continue;
    for (const auto &e : c.entries)
      if (e.surface == token)
        return true;
  }
  return false;
}

bool match_from(const std::vector<std::string> &tokens, std::size_t pos,
                const Template &t, std::size_t ei, const Lexicon &lex) {
  if (ei == t.elements.size())
    return pos == tokens.size();
  const auto &el = t.elements[ei];
  if (!el.is_slot) {
    return pos < tokens.size() && tokens[pos] == el.literal &&
           match_from(tokens, pos + 1, t, ei + 1, lex);
  }
  const Slot &slot = t.slots[static_cast<std::size_t>(el.slot_index)];
  if (slot.optional && match_from(tokens, pos, t, ei + 1, lex))
    return true;
  if (!lex.has_category(slot.category))
    return false;
  const bool noun_slot = lex.category(slot.category).pos == PartOfSpeech::noun;
  std::size_t cur = pos;
  for (;;) {
    if (cur < tokens.size() && in_category(lex, slot.category, tokens[cur]) &&
        match_from(tokens, cur + 1, t, ei + 1, lex))
      return true;
    if (noun_slot && cur < tokens.size() &&
        is_modifier_token(lex, tokens[cur])) {
      ++cur; // consume one modifier and retry
      continue;
    }
    return false;
  }
}

} // namespace

bool validate_sentence(const Sentence &s, const std::vector<Template> &ts,
                       const Lexicon &lex) {
  if (s.tokens.empty())
    return false;
  for (const auto &t : ts)
    if (match_from(s.tokens, 0, t, 0, lex))
      return true;
  return false;
}

namespace {

bool starts_with(const std::string &s, const char *prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string first_word(const std::string &s) {
  std::size_t sp = s.find(' ');
  return sp == std::string::npos ? s : s.substr(0, sp);
}

bool is_modal(const std::string &word) {
  static const char *modals[] = {"would", "will",   "can",  "may",
                                 "must",  "should", "could", "might"};
  for (const char *m : modals)
    if (word == m)
      return true;
  return false;
}

std::string third_person(const std::string &verb) {
  std::size_t sp = verb.find(' ');
  std::string head = sp == std::string::npos ? verb : verb.substr(0, sp);
  std::string tail = sp == std::string::npos ? "" : verb.substr(sp);
  auto ends_with = [&head](const char *suf) {
    std::string s(suf);
    return head.size() >= s.size() &&
           head.compare(head.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with("s") || ends_with("x") || ends_with("z") || ends_with("ch") ||
      ends_with("sh") || ends_with("o")) {
    head += "es";
  } else if (head.size() >= 2 && head.back() == 'y' &&
             std::string("aeiou").find(head[head.size() - 2]) ==
                 std::string::npos) {
    head.pop_back();
    head += "ies";
  } else {
    head += "s";
  }
  return head + tail;
}

} // namespace

std::string render_gloss(const Sentence &s, const Lexicon &lex) {
  struct Piece {
    std::string text;
    PartOfSpeech pos;
  };
  std::vector<Piece> pieces;
  std::vector<std::string> pending_with;
  bool prev_verb = false;
  int first_verb = -1;
  for (const auto &tok : s.tokens) {
    const LexEntry *entry = lex.find_surface(tok);
    std::string gloss =
        entry && !entry->gloss.empty() ? entry->gloss : tok;
    PartOfSpeech pos = entry ? entry->pos : PartOfSpeech::other;
    if (starts_with(gloss, "with ")) {
      pending_with.push_back(gloss);
      continue;
    }
    if (pos == PartOfSpeech::verb && prev_verb)
      pieces.push_back({"to", PartOfSpeech::other});
    if (pos == PartOfSpeech::verb && first_verb < 0)
      first_verb = static_cast<int>(pieces.size());
    pieces.push_back({gloss, pos});
    if (pos == PartOfSpeech::noun) {
      for (auto &w : pending_with)
        pieces.push_back({std::move(w), PartOfSpeech::other});
      pending_with.clear();
    }
    prev_verb = pos == PartOfSpeech::verb;
  }
  for (auto &w : pending_with)
    pieces.push_back({std::move(w), PartOfSpeech::other});

  if (!pieces.empty() && first_verb > 0) {
    const std::string &subject = pieces[0].text;
    if (subject == "he" || subject == "she" || subject == "it" ||
        subject == "He" || subject == "She" || subject == "It") {
      std::string &verb = pieces[static_cast<std::size_t>(first_verb)].text;
      if (!is_modal(first_word(verb)))
        verb = third_person(verb);
    }
  }

  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0)
      out += ' ';
    out += pieces[i].text;
  }
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z')
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

} // namespace corpusgen
