#include "corpusgen/nlg_generate.hpp"

#include <algorithm>
#include <cmath>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"

namespace corpusgen {

namespace {

bool banned(int id) { return id == Vocab::pad_id || id == Vocab::bos_id; }

int argmax_allowed(const Vec &dist) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(dist.size()); ++j) {
    if (banned(j))
      continue;
    if (best < 0 || dist[static_cast<std::size_t>(j)] >
                        dist[static_cast<std::size_t>(best)])
      best = j;
  }
  return best;
}

// Temperature-scaled draw over the allowed tokens, in id order.
int sample_allowed(const Vec &dist, double temperature, SplitRng &rng) {
  Vec logits;
  std::vector<int> ids;
  for (int j = 0; j < static_cast<int>(dist.size()); ++j) {
    if (banned(j))
      continue;
    ids.push_back(j);
    logits.push_back(std::log(std::max(dist[static_cast<std::size_t>(j)],
                                       1e-300)) /
                     temperature);
  }
  Vec p = softmax(logits);
  const double draw = rng.next_double();
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (draw < acc)
      return ids[k];
  }
  return ids.back();
}

GeneratedSentence finish(const NlgModel &m, std::vector<int> ids,
                         double log_prob, bool truncated) {
  GeneratedSentence out;
  out.token_ids = std::move(ids);
  out.tokens = m.vocab_out.decode(out.token_ids);
  out.log_prob = log_prob;
  out.truncated = truncated;
  return out;
}

GeneratedSentence decode_single(const NlgModel &m, const std::vector<Vec> &enc,
                                const GenStrategy &strategy, int max_len) {
  SplitRng rng(strategy.rng_seed);
  LstmState state = LstmState::zero(m.hyper.dec_hidden_dim);
  int prev = Vocab::bos_id;
  std::vector<int> ids;
  double log_prob = 0.0;
  for (int step = 0; step < max_len; ++step) {
    DecodeOut d = decode_step(m, prev, state, enc);
    int next = strategy.kind == GenStrategy::Kind::greedy
                   ? argmax_allowed(d.dist)
                   : sample_allowed(d.dist, strategy.temperature, rng);
    log_prob += std::log(
        std::max(d.dist[static_cast<std::size_t>(next)], 1e-300));
    if (next == Vocab::eos_id)
      return finish(m, std::move(ids), log_prob, false);
    ids.push_back(next);
    state = d.state;
    prev = next;
  }
  return finish(m, std::move(ids), log_prob, true);
}

struct Hypothesis {
  std::vector<int> ids;
  LstmState state;
  double log_prob = 0.0;
  bool finished = false;
};

GeneratedSentence decode_beam(const NlgModel &m, const std::vector<Vec> &enc,
                              int width, int max_len) {
  std::vector<Hypothesis> beam{
      {{}, LstmState::zero(m.hyper.dec_hidden_dim), 0.0, false}};
  for (int step = 0; step < max_len; ++step) {
    bool any_open = false;
    std::vector<Hypothesis> candidates;
    for (const auto &h : beam) {
      if (h.finished) {
        candidates.push_back(h);
        continue;
      }
      any_open = true;
      const int prev = h.ids.empty() ? Vocab::bos_id : h.ids.back();
      DecodeOut d = decode_step(m, prev, h.state, enc);
      for (int j = 0; j < static_cast<int>(d.dist.size()); ++j) {
        if (banned(j))
          continue;
        Hypothesis next;
        next.ids = h.ids;
        next.log_prob =
            h.log_prob +
            std::log(std::max(d.dist[static_cast<std::size_t>(j)], 1e-300));
        if (j == Vocab::eos_id) {
          next.finished = true;
          next.state = h.state; // unused once finished
        } else {
          next.ids.push_back(j);
          next.state = d.state;
        }
        candidates.push_back(std::move(next));
      }
    }
    if (!any_open)
      break;
    // higher log prob first; ties resolved by shorter-then-smaller ids
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hypothesis &a, const Hypothesis &b) {
                       if (a.log_prob != b.log_prob)
                         return a.log_prob > b.log_prob;
                       return a.ids < b.ids;
                     });
    if (static_cast<int>(candidates.size()) > width)
      candidates.resize(static_cast<std::size_t>(width));
    beam = std::move(candidates);
  }
  const Hypothesis *best_done = nullptr;
  const Hypothesis *best_open = nullptr;
  for (const auto &h : beam) {
    auto *&slot = h.finished ? best_done : best_open;
    if (!slot || h.log_prob > slot->log_prob)
      slot = &h;
  }
  if (best_done)
    return finish(m, best_done->ids, best_done->log_prob, false);
  return finish(m, best_open->ids, best_open->log_prob, true);
}

} // namespace

GeneratedSentence generate(const NlgModel &m,
                           const std::vector<std::string> &mr_tokens,
                           const GenStrategy &strategy, int max_len) {
  if (max_len < 1)
    throw ValidationError("max_len must be at least 1");
  if (mr_tokens.empty())
    throw ValidationError("generate: empty meaning representation");
  if (strategy.kind == GenStrategy::Kind::sample && strategy.temperature <= 0.0)
    throw ValidationError("sampling temperature must be positive");
  if (strategy.kind == GenStrategy::Kind::beam && strategy.beam_width < 1)
    throw ValidationError("beam width must be at least 1");

  auto enc = encode(m, m.vocab_in.encode(mr_tokens));
  if (strategy.kind == GenStrategy::Kind::beam)
    return decode_beam(m, enc, strategy.beam_width, max_len);
  return decode_single(m, enc, strategy, max_len);
}

} // namespace corpusgen
