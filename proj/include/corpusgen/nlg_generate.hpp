#ifndef CORPUSGEN_NLG_GENERATE_HPP
#define CORPUSGEN_NLG_GENERATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "corpusgen/nlg_model.hpp"

namespace corpusgen {

// Autoregressive decoding strategies over a trained model. All three
// are deterministic (sampling under its fixed seed). PAD and BOS are
// never emitted: the decoding policy skips them; the model's
// distribution itself is left untouched.

struct GenStrategy {
  enum class Kind { greedy, sample, beam };
  Kind kind = Kind::greedy;
  double temperature = 1.0;   // sample only, > 0
  std::uint64_t rng_seed = 0; // sample only
  int beam_width = 1;         // beam only, >= 1

  static GenStrategy greedy() { return {}; }
  static GenStrategy sample(double temperature, std::uint64_t rng_seed) {
    GenStrategy s;
    s.kind = Kind::sample;
    s.temperature = temperature;
    s.rng_seed = rng_seed;
    return s;
  }
  static GenStrategy beam(int width) {
    GenStrategy s;
    s.kind = Kind::beam;
    s.beam_width = width;
    return s;
  }
};

struct GeneratedSentence {
  std::vector<std::string> tokens; // no BOS/EOS framing
  std::vector<int> token_ids;
  bool truncated = false; // max_len hit before EOS
  double log_prob = 0.0;  // cumulative log p of emitted tokens + EOS
};

// Decodes from BOS until EOS or max_len tokens. Truncation is flagged,
// never an error. Beam search returns the finished hypothesis with the
// highest cumulative log probability (no length normalization) and
// falls back to the best unfinished one when nothing finished.
GeneratedSentence generate(const NlgModel &m,
                           const std::vector<std::string> &mr_tokens,
                           const GenStrategy &strategy, int max_len);

} // namespace corpusgen

#endif
