#include "corpusgen/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "corpusgen/errors.hpp"

namespace corpusgen {

namespace {

// Tokens never contain whitespace, so \x1f joining is collision-free.
std::string sequence_key(const std::vector<std::string> &tokens,
                         std::size_t begin, std::size_t count) {
  std::string key;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) key.push_back('\x1f');
    key += tokens[begin + i];
  }
  return key;
}

std::string sequence_key(const std::vector<std::string> &tokens) {
  return sequence_key(tokens, 0, tokens.size());
}

} // namespace

TokenCorpus token_corpus(const SeedCorpus &corpus) {
  TokenCorpus out;
  out.reserve(corpus.items.size());
  for (const CorpusItem &item : corpus.items) out.push_back(item.sentence.tokens);
  return out;
}

double distinct_n(const TokenCorpus &corpus, std::size_t n) {
  if (n < 1) throw ValidationError("distinct_n needs n >= 1");
  std::unordered_set<std::string> unique;
  std::size_t total = 0;
  for (const auto &tokens : corpus) {
    if (tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      unique.insert(sequence_key(tokens, i, n));
      ++total;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double novelty_rate(const TokenCorpus &generated, const TokenCorpus &seed) {
  if (generated.empty()) return 0.0;
  std::unordered_set<std::string> seen;
  for (const auto &tokens : seed) seen.insert(sequence_key(tokens));
  std::size_t novel = 0;
  for (const auto &tokens : generated) {
    if (!seen.count(sequence_key(tokens))) ++novel;
  }
  return static_cast<double>(novel) / static_cast<double>(generated.size());
}

double validity_rate(const TokenCorpus &corpus,
                     const std::vector<Template> &templates,
                     const Lexicon &lex) {
  if (corpus.empty()) return 1.0;
  std::size_t valid = 0;
  for (const auto &tokens : corpus) {
    Sentence s;
    s.tokens = tokens;
    if (validate_sentence(s, templates, lex)) ++valid;
  }
  return static_cast<double>(valid) / static_cast<double>(corpus.size());
}

double vocab_coverage(const TokenCorpus &corpus, const Lexicon &lex) {
  if (lex.total_entries() == 0) return 1.0;
  std::unordered_set<std::string> tokens;
  for (const auto &sentence : corpus) tokens.insert(sentence.begin(), sentence.end());
  std::size_t covered = 0;
  for (const LexCategory &cat : lex.categories()) {
    for (const LexEntry &entry : cat.entries) {
      if (tokens.count(entry.surface)) ++covered;
    }
  }
  return static_cast<double>(covered) /
         static_cast<double>(lex.total_entries());
}

MetricsReport corpus_report(const TokenCorpus &seed,
                            const TokenCorpus &generated,
                            const std::vector<Template> &templates,
                            const Lexicon &lex) {
  MetricsReport r;
  r.distinct_1 = distinct_n(generated, 1);
  r.distinct_2 = distinct_n(generated, 2);
  r.novelty_rate = novelty_rate(generated, seed);
  r.validity_rate = validity_rate(generated, templates, lex);
  r.vocab_coverage = vocab_coverage(generated, lex);
  r.corpus_size = generated.size();
  return r;
}

std::string serialize_report(const MetricsReport &r) {
  std::ostringstream out;
  out.precision(17);
  out << "distinct_1=" << r.distinct_1 << "\n"
      << "distinct_2=" << r.distinct_2 << "\n"
      << "novelty_rate=" << r.novelty_rate << "\n"
      << "validity_rate=" << r.validity_rate << "\n"
      << "vocab_coverage=" << r.vocab_coverage << "\n"
      << "corpus_size=" << r.corpus_size << "\n";
  return out.str();
}

MetricsReport parse_report(const std::string &text) {
  MetricsReport r;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("report line has no '='", line_no);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    try {
      if (key == "corpus_size") {
        r.corpus_size = static_cast<std::size_t>(std::stoull(value));
      } else {
        double v = std::stod(value);
        if (key == "distinct_1") r.distinct_1 = v;
        else if (key == "distinct_2") r.distinct_2 = v;
        else if (key == "novelty_rate") r.novelty_rate = v;
        else if (key == "validity_rate") r.validity_rate = v;
        else if (key == "vocab_coverage") r.vocab_coverage = v;
        else throw ParseError("unknown report key: " + key, line_no);
      }
    } catch (const std::invalid_argument &) {
      throw ParseError("bad report value for " + key + ": " + value, line_no);
    } catch (const std::out_of_range &) {
      throw ParseError("report value out of range for " + key, line_no);
    }
    saw_any = true;
  }
  if (!saw_any) throw ParseError("empty report");
  return r;
}

MetricsReport load_report_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report(buf.str());
}

void save_report_file(const MetricsReport &r, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report file: " + path);
  out << serialize_report(r);
  if (!out) throw IoError("failed writing report file: " + path);
}

} // namespace corpusgen
