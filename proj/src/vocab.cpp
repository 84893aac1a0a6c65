#include "corpusgen/vocab.hpp"

#include <algorithm>
#include <set>

#include "corpusgen/errors.hpp"

namespace corpusgen {

namespace {
const char *kReserved[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocab::Vocab() {
  for (const char *t : kReserved)
    tokens_.push_back(t);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>> &sequences) {
  std::set<std::string> uniq;
  for (const auto &seq : sequences)
    for (const auto &tok : seq)
      uniq.insert(tok);
  for (const char *t : kReserved)
    uniq.erase(t);
  Vocab v;
  v.tokens_.insert(v.tokens_.end(), uniq.begin(), uniq.end());
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 4)
    throw ValidationError("vocab needs at least the four reserved tokens");
  for (int i = 0; i < 4; ++i)
    if (tokens[static_cast<std::size_t>(i)] != kReserved[i])
      throw ValidationError("vocab reserved token mismatch at id " +
                            std::to_string(i));
  std::set<std::string> uniq(tokens.begin(), tokens.end());
  if (uniq.size() != tokens.size())
    throw ValidationError("vocab token list has duplicates");
  Vocab v;
  v.tokens_ = std::move(tokens);
  return v;
}

bool Vocab::contains(const std::string &token) const {
  return std::find(tokens_.begin(), tokens_.end(), token) != tokens_.end();
}

int Vocab::id(const std::string &token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  return it == tokens_.end() ? unk_id
                             : static_cast<int>(it - tokens_.begin());
}

int Vocab::require_id(const std::string &token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end())
    throw ValidationError("token not in vocab: " + token);
  return static_cast<int>(it - tokens_.begin());
}

const std::string &Vocab::token(int id) const {
  if (id < 0 || id >= size())
    throw ValidationError("vocab id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string> &tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens)
    out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int> &ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids)
    out.push_back(token(i));
  return out;
}

} // namespace corpusgen
