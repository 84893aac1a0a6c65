#ifndef CORPUSGEN_TEMPLATE_ENGINE_HPP
#define CORPUSGEN_TEMPLATE_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "corpusgen/lexicon.hpp"

namespace corpusgen {

// Slotted sentence patterns and their expansion against a lexicon.
//
// TEMPLATE DSL (one template per line in .tpl files, # comments):
//
//   id<TAB>{who:subject} {want:predicate} 穿戴 {coats:object}
//
// A pattern is whitespace-separated elements. `{category:role}` is a
// required slot (append `?` before `}` for an optional one); anything
// else is a literal token. Roles: subject, predicate, object,
// quantifier, adjective. The slot name is its category name, so a
// category may appear at most once per template.

enum class SlotRole { subject, predicate, object, quantifier, adjective };

const char *to_string(SlotRole role);
std::optional<SlotRole> parse_role(const std::string &tag);

struct Slot {
  std::string name;     // equal to category in this DSL
  std::string category; // resolved against the lexicon at expansion time
  bool optional = false;
  SlotRole role = SlotRole::object;
};

struct Template {
  struct Element {
    bool is_slot = false;
    std::string literal; // when !is_slot
    int slot_index = -1; // when is_slot
  };

  std::string id;
  std::vector<Slot> slots;
  std::vector<Element> elements;

  const Slot *find_slot(const std::string &name) const;
};

// One concrete slot filling: the "data" side of data-to-text.
struct MeaningRepresentation {
  std::string template_id;
  // slot name -> chosen surface, in surface order
  std::vector<std::pair<std::string, std::string>> bindings;

  const std::string *binding(const std::string &name) const;
};

struct Sentence {
  std::vector<std::string> tokens;
  std::string surface;
  std::optional<MeaningRepresentation> mr;
};

std::string join_tokens(const std::vector<std::string> &tokens,
                        const std::string &lang);
Sentence make_sentence(std::vector<std::string> tokens,
                       const std::string &lang,
                       std::optional<MeaningRepresentation> mr);

// Flat `slot=value` token form of an MR, the encoder-side input.
std::vector<std::string> mr_tokens(const MeaningRepresentation &mr);

Template parse_template(const std::string &source);
std::string pretty_print(const Template &t);
std::vector<Template> load_templates(std::istream &in);
std::vector<Template> load_templates_file(const std::string &path);
std::string serialize_templates(const std::vector<Template> &ts);
void save_templates_file(const std::vector<Template> &ts,
                         const std::string &path);

struct CyclePolicy {
  enum class Kind { full_product, round_robin };
  Kind kind = Kind::full_product;
  std::uint64_t count = 0; // round_robin only

  static CyclePolicy full_product() { return {Kind::full_product, 0}; }
  static CyclePolicy round_robin(std::uint64_t n) {
    return {Kind::round_robin, n};
  }
};

// Expansion fills every required slot (optional slots are skipped).
// full_product yields the Cartesian product of the required slots'
// categories in lexicographic order, rightmost slot fastest;
// round_robin yields `count` sentences advancing every category in
// lockstep. Pairs arrive through `sink` in deterministic order.
void expand_template(
    const Template &t, const Lexicon &lex, const CyclePolicy &policy,
    const std::function<void(MeaningRepresentation, Sentence)> &sink);

std::vector<std::pair<MeaningRepresentation, Sentence>>
expand_template(const Template &t, const Lexicon &lex,
                const CyclePolicy &policy);

// Product of required-slot category sizes (full_product yield count).
std::uint64_t expansion_count(const Template &t, const Lexicon &lex);

// Noun modifiers: each rule optionally inserts one word of
// insert_category in front of a noun bound to noun_category.
//
// RULES FILE (.rules): noun-category<TAB>insert-category<TAB>probability
struct AugmentationRule {
  std::string noun_category;
  std::string insert_category;
  double probability = 0.0;
};

struct AugmentationRuleSet {
  std::vector<AugmentationRule> rules;

  std::vector<const AugmentationRule *>
  rules_for(const std::string &noun_category) const;
};

AugmentationRuleSet load_rules(std::istream &in);
AugmentationRuleSet load_rules_file(const std::string &path);

// Stochastic variants of `s`: `attempts` passes over the applicable
// rules, each firing with its configured probability and drawing a
// uniform word. Element 0 is always the original; output is
// deduplicated and deterministic for a fixed seed. Successive
// insertions on the same noun stack leftward, so the last rule applied
// ends up leftmost. A sentence with no noun binding comes back alone.
std::vector<Sentence> augment_sentence(const Sentence &s, const Lexicon &lex,
                                       const AugmentationRuleSet &rules,
                                       std::uint64_t rng_seed,
                                       int attempts = 3);

// Every rule-subset x word-choice combination (original first). Used
// where full coverage matters more than sampling; size is the product
// of (1 + category size) over applicable rules.
std::vector<Sentence> augment_enumerate(const Sentence &s, const Lexicon &lex,
                                        const AugmentationRuleSet &rules);

// True iff the token sequence is derivable from one of the templates,
// allowing optional slots to be absent and allowing quantifier- or
// adjective-class tokens in front of noun-class slot fillings.
bool validate_sentence(const Sentence &s, const std::vector<Template> &ts,
                       const Lexicon &lex);

// Best-effort English rendering from glosses, for review screens and
// gloss-level checks: inserts "to" between adjacent verbs, applies
// third-person -s to the leading verb (modals exempt), floats
// "with ..." glosses behind the noun they modify, capitalizes the
// first word. Tokens without a gloss render as themselves.
std::string render_gloss(const Sentence &s, const Lexicon &lex);

} // namespace corpusgen

#endif
