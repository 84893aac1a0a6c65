#include "corpusgen/seed_corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

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

std::string escape_note(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '\\':
      out += "\\\\";
      break;
    case '\t':
      out += "\\t";
      break;
    case '\n':
      out += "\\n";
      break;
    default:
      out += c;
    }
  }
  return out;
}

std::string unescape_note(const std::string &s, int lineno) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 == s.size())
      throw ParseError("dangling escape in note", lineno);
    ++i;
    switch (s[i]) {
    case '\\':
      out += '\\';
      break;
    case 't':
      out += '\t';
      break;
    case 'n':
      out += '\n';
      break;
    default:
      throw ParseError("bad escape in note", lineno);
    }
  }
  return out;
}

std::vector<std::string> split_tab(const std::string &s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = s.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string> split_space(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok)
    out.push_back(tok);
  return out;
}

std::string join_space(const std::vector<std::string> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ' ';
    out += v[i];
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

} // namespace

const char *to_string(ReviewStatus s) {
  switch (s) {
  case ReviewStatus::unreviewed:
    return "unreviewed";
  case ReviewStatus::accepted:
    return "accepted";
  case ReviewStatus::rejected:
    return "rejected";
  }
  return "unreviewed";
}

std::optional<ReviewStatus> parse_review(const std::string &tag) {
  if (tag == "unreviewed")
    return ReviewStatus::unreviewed;
  if (tag == "accepted")
    return ReviewStatus::accepted;
  if (tag == "rejected")
    return ReviewStatus::rejected;
  return std::nullopt;
}

const char *to_string(ReviewDecision d) {
  return d == ReviewDecision::accept ? "accept" : "reject";
}

std::optional<ReviewDecision> parse_decision(const std::string &tag) {
  if (tag == "accept")
    return ReviewDecision::accept;
  if (tag == "reject")
    return ReviewDecision::reject;
  return std::nullopt;
}

const MeaningRepresentation &CorpusItem::mr() const {
  if (!sentence.mr)
    throw ValidationError("corpus item " + id +
                          " has no meaning representation");
  return *sentence.mr;
}

const CorpusItem *SeedCorpus::find(const std::string &id) const {
  for (const auto &it : items)
    if (it.id == id)
      return &it;
  return nullptr;
}

std::size_t SeedCorpus::count(ReviewStatus s) const {
  std::size_t n = 0;
  for (const auto &it : items)
    if (it.review == s)
      ++n;
  return n;
}

std::uint64_t ReviewLedger::next_seq() const {
  std::uint64_t maxv = 0;
  for (const auto &e : entries)
    maxv = std::max(maxv, e.seq);
  return maxv + 1;
}

std::string item_id_for(const std::vector<std::string> &tokens) {
  std::string key;
  for (const auto &t : tokens) {
    key += t;
    key += '\x1f';
  }
  return hex64(fnv1a64(key));
}

std::string corpus_provenance(const std::vector<Template> &templates,
                              const Lexicon &lex, const CyclePolicy &policy,
                              std::size_t scale_limit, std::uint64_t rng_seed,
                              const AugmentationRuleSet *rules) {
  std::string blob = serialize_templates(templates);
  blob += '\x1e';
  blob += serialize_lexicon(lex);
  blob += '\x1e';
  blob += policy.kind == CyclePolicy::Kind::full_product ? "full_product"
                                                         : "round_robin";
  blob += ':' + std::to_string(policy.count);
  blob += '\x1e';
  blob += std::to_string(scale_limit);
  blob += '\x1e';
  blob += std::to_string(rng_seed);
  blob += '\x1e';
  if (rules) {
    for (const auto &r : rules->rules) {
      blob += r.noun_category + '\t' + r.insert_category + '\t' +
              std::to_string(r.probability) + '\n';
    }
  }
  return hex64(fnv1a64(blob));
}

SeedCorpus build_seed_corpus(const std::vector<Template> &templates,
                             const Lexicon &lex, const CyclePolicy &policy,
                             std::size_t scale_limit, std::uint64_t rng_seed,
                             const AugmentationRuleSet *rules,
                             int augment_attempts) {
  if (scale_limit == 0)
    throw ValidationError("scale_limit must be at least 1");
  if (templates.empty())
    throw ValidationError("no templates to expand");

  SplitRng root(rng_seed);
  std::vector<CorpusItem> pool;
  std::set<std::string> seen;
  std::uint64_t sentence_index = 0;

  auto take = [&](Sentence s) {
    std::string id = item_id_for(s.tokens);
    std::string key;
    for (const auto &t : s.tokens) {
      key += t;
      key += '\x1f';
    }
    if (!seen.insert(key).second)
      return;
    CorpusItem item;
    item.id = std::move(id);
    item.sentence = std::move(s);
    pool.push_back(std::move(item));
  };

  for (const auto &t : templates) {
    expand_template(t, lex, policy,
                    [&](MeaningRepresentation, Sentence s) {
                      if (rules && !rules->rules.empty()) {
                        auto variants =
                            augment_sentence(s, lex, *rules,
                                             root.split("augment",
                                                        sentence_index)
                                                 .seed(),
                                             augment_attempts);
                        for (auto &v : variants)
                          take(std::move(v));
                      } else {
                        take(std::move(s));
                      }
                      ++sentence_index;
                    });
  }

  if (pool.empty())
    throw ValidationError("template expansion produced no sentences");

  if (pool.size() > scale_limit) {
    // uniform sample without replacement; keep expansion order
    SplitRng sampler = root.split("seed-sample");
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      idx[i] = i;
    for (std::size_t i = 0; i < scale_limit; ++i) {
      std::size_t j =
          i + static_cast<std::size_t>(sampler.next_below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(scale_limit);
    std::sort(idx.begin(), idx.end());
    std::vector<CorpusItem> kept;
    kept.reserve(scale_limit);
    for (std::size_t i : idx)
      kept.push_back(std::move(pool[i]));
    pool = std::move(kept);
  }

  SeedCorpus corpus;
  corpus.items = std::move(pool);
  corpus.provenance =
      corpus_provenance(templates, lex, policy, scale_limit, rng_seed, rules);
  corpus.version = 1;
  corpus.language = lex.language();
  return corpus;
}

SeedCorpus apply_review(const SeedCorpus &corpus, const ReviewLedger &ledger) {
  SeedCorpus out = corpus;
  for (const auto &e : ledger.entries) {
    bool found = false;
    for (auto &item : out.items) {
      if (item.id != e.item_id)
        continue;
      item.review = e.decision == ReviewDecision::accept
                        ? ReviewStatus::accepted
                        : ReviewStatus::rejected;
      if (!e.note.empty())
        item.note = e.note;
      found = true;
      break;
    }
    if (!found)
      throw ValidationError("review ledger references unknown item " +
                            e.item_id);
  }
  ++out.version;
  return out;
}

std::vector<TrainingPair> export_training_pairs(const SeedCorpus &corpus) {
  std::vector<TrainingPair> out;
  for (const auto &item : corpus.items) {
    if (item.review == ReviewStatus::rejected)
      continue;
    out.emplace_back(mr_tokens(item.mr()), item.sentence.tokens);
  }
  if (out.empty())
    throw ValidationError("no exportable items: everything is rejected");
  return out;
}

std::string serialize_corpus(const SeedCorpus &corpus) {
  std::string out = "#corpus v=1 provenance=" + corpus.provenance +
                    " version=" + std::to_string(corpus.version) +
                    " lang=" + corpus.language + "\n";
  for (const auto &item : corpus.items) {
    const MeaningRepresentation &mr = item.mr();
    out += item.id;
    out += '\t';
    out += to_string(item.review);
    out += '\t';
    out += mr.template_id;
    out += '\t';
    out += join_space(mr_tokens(mr));
    out += '\t';
    out += join_space(item.sentence.tokens);
    out += '\t';
    out += escape_note(item.note);
    out += '\n';
  }
  return out;
}

SeedCorpus load_corpus(std::istream &in) {
  SeedCorpus corpus;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::set<std::string> keys;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line[0] == '#') {
      if (!header_seen && line.rfind("#corpus ", 0) == 0) {
        header_seen = true;
        std::istringstream iss(line.substr(8));
        std::string field;
        while (iss >> field) {
          std::size_t eq = field.find('=');
          if (eq == std::string::npos)
            throw ParseError("bad corpus header field: " + field, lineno);
          std::string k = field.substr(0, eq), v = field.substr(eq + 1);
          if (k == "v") {
            if (v != "1")
              throw ParseError("unsupported corpus format version " + v,
                               lineno);
          } else if (k == "provenance") {
            corpus.provenance = v;
          } else if (k == "version") {
            corpus.version = std::stoull(v);
          } else if (k == "lang") {
            corpus.language = v;
          } else {
            throw ParseError("unknown corpus header field: " + k, lineno);
          }
        }
      }
      continue;
    }
    if (!header_seen)
      throw ParseError("corpus record before #corpus header", lineno);
    auto fields = split_tab(line);
    if (fields.size() != 6)
      throw ParseError("corpus record needs 6 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    CorpusItem item;
    item.id = trim(fields[0]);
    auto review = parse_review(trim(fields[1]));
    if (!review)
      throw ParseError("bad review state: " + fields[1], lineno);
    item.review = *review;
    MeaningRepresentation mr;
    mr.template_id = trim(fields[2]);
    for (const auto &tok : split_space(fields[3])) {
      std::size_t eq = tok.find('=');
      if (eq == std::string::npos)
        throw ParseError("bad mr token (needs slot=value): " + tok, lineno);
      mr.bindings.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    auto tokens = split_space(fields[4]);
    if (tokens.empty())
      throw ParseError("corpus record has no tokens", lineno);
    item.note = unescape_note(fields[5], lineno);
    std::string expect = item_id_for(tokens);
    if (item.id != expect)
      throw ParseError("item id " + item.id + " does not match tokens (" +
                           expect + ")",
                       lineno);
    std::string key;
    for (const auto &t : tokens) {
      key += t;
      key += '\x1f';
    }
    if (!keys.insert(key).second)
      throw ParseError("duplicate token sequence for item " + item.id, lineno);
    item.sentence = make_sentence(std::move(tokens), corpus.language, mr);
    corpus.items.push_back(std::move(item));
  }
  if (!header_seen)
    throw ParseError("missing #corpus header");
  return corpus;
}

SeedCorpus load_corpus_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open corpus file: " + path);
  return load_corpus(in);
}

void save_corpus_file(const SeedCorpus &corpus, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write corpus file: " + path);
  out << serialize_corpus(corpus);
  if (!out)
    throw IoError("write failed: " + path);
}

std::string serialize_ledger(const ReviewLedger &ledger) {
  std::string out;
  for (const auto &e : ledger.entries) {
    out += e.item_id;
    out += '\t';
    out += to_string(e.decision);
    out += '\t';
    out += std::to_string(e.seq);
    out += '\t';
    out += escape_note(e.note);
    out += '\n';
  }
  return out;
}

ReviewLedger load_ledger(std::istream &in) {
  ReviewLedger ledger;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    auto fields = split_tab(line);
    if (fields.size() != 4)
      throw ParseError("ledger entry needs 4 tab-separated fields", lineno);
    LedgerEntry e;
    e.item_id = trim(fields[0]);
    auto d = parse_decision(trim(fields[1]));
    if (!d)
      throw ParseError("bad ledger decision: " + fields[1], lineno);
    e.decision = *d;
    try {
      e.seq = std::stoull(fields[2]);
    } catch (const std::exception &) {
      throw ParseError("bad ledger sequence number: " + fields[2], lineno);
    }
    e.note = unescape_note(fields[3], lineno);
    ledger.entries.push_back(std::move(e));
  }
  return ledger;
}

ReviewLedger load_ledger_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return ReviewLedger{};
  return load_ledger(in);
}

void save_ledger_file(const ReviewLedger &ledger, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write ledger file: " + path);
  out << serialize_ledger(ledger);
  if (!out)
    throw IoError("write failed: " + path);
}

void append_ledger_file(const LedgerEntry &entry, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out)
    throw IoError("cannot append to ledger file: " + path);
  ReviewLedger one;
  one.entries.push_back(entry);
  out << serialize_ledger(one);
  if (!out)
    throw IoError("append failed: " + path);
}

} // namespace corpusgen
