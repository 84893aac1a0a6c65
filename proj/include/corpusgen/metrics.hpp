#ifndef CORPUSGEN_METRICS_HPP
#define CORPUSGEN_METRICS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "corpusgen/seed_corpus.hpp"

namespace corpusgen {

// Corpus-level diversity and quality scores. These drive the scale
// gate after seed construction and the convergence gate after each
// generation round; all of them are pure and order-invariant.
//
// REPORT FILE (.report): one `key=value` line per field, doubles with
// 17 significant digits so a written report reloads exactly.

using TokenCorpus = std::vector<std::vector<std::string>>;

struct MetricsReport {
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
  double novelty_rate = 0.0;
  double validity_rate = 0.0;
  double vocab_coverage = 0.0;
  std::size_t corpus_size = 0;
};

// Token sequences in item order.
TokenCorpus token_corpus(const SeedCorpus &corpus);

// Unique token n-grams / total token n-grams across the corpus.
// 0 when the corpus yields no n-grams at all.
double distinct_n(const TokenCorpus &corpus, std::size_t n);

// Fraction of generated sentences whose token sequence never occurs
// in the seed corpus. 0 when nothing was generated.
double novelty_rate(const TokenCorpus &generated, const TokenCorpus &seed);

// Fraction of sentences derivable from the templates. 1 for an empty
// corpus: nothing is invalid.
double validity_rate(const TokenCorpus &corpus,
                     const std::vector<Template> &templates,
                     const Lexicon &lex);

// Fraction of lexicon surfaces appearing as a token somewhere in the
// corpus. 1 for an empty lexicon: nothing is missing.
double vocab_coverage(const TokenCorpus &corpus, const Lexicon &lex);

// Diversity, novelty and validity of `generated`, with `seed` as the
// novelty baseline.
MetricsReport corpus_report(const TokenCorpus &seed,
                            const TokenCorpus &generated,
                            const std::vector<Template> &templates,
                            const Lexicon &lex);

std::string serialize_report(const MetricsReport &r);
MetricsReport parse_report(const std::string &text);
MetricsReport load_report_file(const std::string &path);
void save_report_file(const MetricsReport &r, const std::string &path);

} // namespace corpusgen

#endif
